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

#include "bmfa/text_format.h"

#include <sstream>

#include "bmfa/error.h"

namespace bmfa {

void WriteTextHeader(std::ostream& os, const std::string& kind) {
  os << "#bmfa " << kind << ' ' << kTextFormatVersion << '\n';
}

bool SkipTextLine(const std::string& line, const std::string& kind,
                  const std::string& path) {
  const size_t first = line.find_first_not_of(" \t\r");
  if (first == std::string::npos) return true;
  if (line[first] != '#') return false;
  std::istringstream ss(line.substr(first));
  std::string tag, found;
  int version = 0;
  ss >> tag;
  if (tag != "#bmfa") return true;
  if (!(ss >> found >> version)) {
    throw FormatError(path + ": malformed header '" + line + "'");
  }
  if (found != kind) {
    throw FormatError(path + ": expected a " + kind + " file, found " + found);
  }
  if (version > kTextFormatVersion || version < 1) {
    throw FormatError(path + ": unsupported " + kind + " format version " +
                      std::to_string(version));
  }
  return true;
}

}  // namespace bmfa
