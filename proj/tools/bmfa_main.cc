// Copyright (c) 2026 The BMFA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// bmfa: data generation, feature extraction, training, embedding
// extraction, scoring, evaluation, gradient checking and strategy
// comparison for BMFA speaker embeddings.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bmfa/config.h"
#include "bmfa/error.h"
#include "bmfa/gradcheck.h"
#include "bmfa/parallel.h"
#include "bmfa/pipeline.h"

namespace {

struct Overrides {
  std::string config_path;
  int threads = 0;
  std::optional<uint64_t> seed;
  std::optional<int> steps;
  std::optional<std::string> strategy;
  std::optional<std::string> fusion;
  std::optional<int> lowest_stage;
};

// Config file (or defaults) with command-line flags applied on top.
bmfa::RunConfig ResolveConfig(const Overrides& o) {
  bmfa::RunConfig c = o.config_path.empty()
                          ? bmfa::ParseConfig("{}")
                          : bmfa::LoadConfig(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.steps) c.train.steps = *o.steps;
  if (o.strategy || o.fusion) {
    const std::string strategy = o.strategy.value_or(c.model.id.StrategyName());
    const std::string fusion = o.fusion.value_or(
        strategy == "baseline" ? "none"
        : c.model.id.fusion    ? bmfa::ToString(*c.model.id.fusion)
                               : "afm");
    c.model.id = bmfa::StrategyId::Parse(strategy, fusion);
  }
  if (o.lowest_stage) c.model.lowest_stage = *o.lowest_stage;
  c.Finalize();
  return c;
}

void ApplyThreads(int flag) {
  int n = 1;
  if (const char* env = std::getenv("BMFA_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      throw bmfa::InvalidInput(std::string("BMFA_THREADS is not an integer: ") +
                               env);
    }
  }
  if (flag > 0) n = flag;
  BMFA_REQUIRE(n >= 1, "thread count must be >= 1");
  bmfa::SetNumThreads(n);
}

void PrintGradChecks(const std::vector<bmfa::GradCheckReport>& reports) {
  std::printf("%-32s %12s %7s %6s %6s %6s %8s\n", "op", "max_rel_err",
              "result", "coords", "kinks", "noise", "sec");
  for (const auto& r : reports) {
    std::printf("%-32s %12.3e %7s %6d %6d %6d %8.3f\n", r.op.c_str(),
                r.max_rel_error, r.pass ? "PASS" : "FAIL", r.coords,
                r.unresolved, r.noise_limited, r.seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BMFA speaker embedding toolkit"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "JSON run config")
      ->check(CLI::ExistingFile);
  app.add_option("--threads", o.threads,
                 "worker threads (default BMFA_THREADS or 1)");

  std::string out, manifest, checkpoint, embeddings, trials, scores, data;
  std::optional<uint64_t> data_seed;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic corpus");
  gen->add_option("--out", out, "corpus directory")->required();
  gen->add_option("--data-seed", data_seed, "override data.seed");

  auto* feats =
      app.add_subcommand("extract-features", "fbank features from wav files");
  feats->add_option("--manifest", manifest, "utt speaker wav-path list")
      ->required();
  feats->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train one model");
  train->add_option("--data", manifest, "feature manifest")->required();
  train->add_option("--out", out, "run directory")->required();

  auto* extract = app.add_subcommand("extract", "embed every utterance");
  extract->add_option("--checkpoint", checkpoint)->required();
  extract->add_option("--manifest", manifest, "feature manifest")->required();
  extract->add_option("--out", out, "embedding file")->required();

  auto* score = app.add_subcommand("score", "cosine-score a trial list");
  score->add_option("--embeddings", embeddings)->required();
  score->add_option("--trials", trials)->required();
  score->add_option("--out", out, "score file")->required();

  auto* eval = app.add_subcommand("eval", "EER and minDCF of a score file");
  eval->add_option("--scores", scores)->required();

  std::string filter;
  uint64_t gc_seed = 7;
  double corrupt = 0;
  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--filter", filter, "run ops whose id contains this");
  gradcheck->add_option("--seed", gc_seed, "probe seed");
  gradcheck->add_option("--corrupt", corrupt,
                        "scale analytic gradients by 1+x (negative control)");
  gradcheck->add_flag_callback("--list", [] {
    for (const auto& op : bmfa::GradCheckOps()) std::printf("%s\n", op.c_str());
    std::exit(0);
  });

  auto* compare = app.add_subcommand("compare", "train and score the grid");
  compare->add_option("--data", data, "corpus directory")->required();
  compare->add_option("--out", out, "output directory")->required();

  for (auto* cmd : {train, compare}) {
    cmd->add_option("--seed", o.seed, "override train.seed");
    cmd->add_option("--steps", o.steps, "override train.steps");
  }
  train->add_option("--strategy", o.strategy, "override model.strategy");
  train->add_option("--fusion", o.fusion, "override model.fusion");
  train->add_option("--lowest-stage", o.lowest_stage,
                    "override model.lowest_stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    ApplyThreads(o.threads);
    if (*gradcheck) {
      bmfa::GradCheckOptions options;
      options.corrupt = corrupt;
      const auto reports = bmfa::RunGradChecks(filter, gc_seed, options);
      BMFA_REQUIRE(!reports.empty(), "gradcheck: no op matches '" + filter + "'");
      PrintGradChecks(reports);
      int failed = 0;
      for (const auto& r : reports) failed += r.pass ? 0 : 1;
      std::printf("%d/%zu passed\n", int(reports.size()) - failed,
                  reports.size());
      return failed == 0 ? 0 : 2;
    }
    if (*score) {
      bmfa::ScoreFile(embeddings, trials, out);
      return 0;
    }
    bmfa::RunConfig config = ResolveConfig(o);
    if (*gen) {
      if (data_seed) config.data.seed = *data_seed;
      bmfa::GenData(config, out);
    } else if (*feats) {
      bmfa::ExtractFeatureFiles(config, manifest, out);
    } else if (*train) {
      const bmfa::TrainedModel m = bmfa::TrainModel(config, manifest, out);
      if (!m.curve.empty()) {
        const auto& last = m.curve.back();
        std::printf("step %d loss %.6f accuracy %.4f\n", last.step, last.loss,
                    last.accuracy);
      }
    } else if (*extract) {
      bmfa::ExtractEmbeddingFile(config, checkpoint, manifest, out);
    } else if (*eval) {
      const bmfa::DetMetrics m = bmfa::EvalScores(config, scores);
      std::printf("EER %.4f (%.2f%%) threshold %.6f minDCF %.4f trials %d\n",
                  m.eer, 100.0 * m.eer, m.threshold_at_eer, m.min_dcf,
                  m.trials);
    } else if (*compare) {
      std::printf("%s", bmfa::FormatCompareTable(
                            bmfa::Compare(config, data, out))
                            .c_str());
    }
    return 0;
  } catch (const bmfa::InvalidInput& e) {
    std::fprintf(stderr, "bmfa: %s\n", e.what());
    return 1;
  } catch (const bmfa::NumericError& e) {
    std::fprintf(stderr, "bmfa: numeric error: %s\n", e.what());
    return 2;
  } catch (const bmfa::FormatError& e) {
    std::fprintf(stderr, "bmfa: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bmfa: %s\n", e.what());
    return 2;
  }
}
