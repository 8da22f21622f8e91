#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace yuepipe {

struct CommandResult {
  int exit_code = -1;  // -1 when the process did not exit normally
  bool timed_out = false;
  bool spawn_failed = false;
  std::string out;
  std::string err;
  std::string error_message;

  bool ok() const noexcept { return !timed_out && !spawn_failed && exit_code == 0; }
};

/// Runs argv[0] (searched on PATH), feeds `input` to its stdin, collects
/// stdout/stderr. The child is killed once `timeout` elapses.
CommandResult run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout);

}  // namespace yuepipe
