// Copyright 2026 The Distal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

namespace distal {

// Writes to `<path>.tmp` and renames over `path`, so readers never observe a
// half-written file. Parent directories are created.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Fixed-precision decimal formatting independent of stream state and locale.
std::string format_double(double value, int digits = 17);

}  // namespace distal
