#pragma once

#include <cstdint>
#include <string>

namespace flq {

// Runs one CLI command; returns the process exit code.
// 0 success, 2 config error, 3 capacity error, 4 search budget exceeded.
int run_cli(int argc, const char* const* argv);

// Write content to path atomically (temp file in the same directory, then
// rename); no partial artifacts survive a failure.
void atomic_write(const std::string& path, const std::string& content);

} // namespace flq
