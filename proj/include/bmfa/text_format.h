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

#ifndef BMFA_TEXT_FORMAT_H_
#define BMFA_TEXT_FORMAT_H_

#include <ostream>
#include <string>

namespace bmfa {

inline constexpr int kTextFormatVersion = 1;

// Text files written here open with "#bmfa <kind> <version>". Any other
// line starting with '#' is a comment. Files without a header are read as
// the current version.
void WriteTextHeader(std::ostream& os, const std::string& kind);

// True if the line holds no record: blank, comment or header. Throws
// FormatError for a header of another kind or of a newer version.
bool SkipTextLine(const std::string& line, const std::string& kind,
                  const std::string& path);

}  // namespace bmfa

#endif  // BMFA_TEXT_FORMAT_H_
