// Copyright 2026 The Emojinize Authors
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

#include <filesystem>
#include <string>
#include <string_view>

namespace emojinize::detail {

/// Whole file as bytes. Throws Error(IoError).
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, creating parent
/// directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Appends `contents` with a single write under a process-wide lock.
void append_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace emojinize::detail
