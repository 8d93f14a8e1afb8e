#pragma once

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>

namespace intentkit {

struct ProcessResult {
  int exit_code = -1;  // -1 when terminated by a signal
  int term_signal = 0;
  std::string out;
  std::string err;
  std::int64_t peak_rss_bytes = 0;  // from wait4(); covers waited-for descendants
  std::chrono::nanoseconds first_byte{0};
  std::chrono::nanoseconds total{0};
};

struct SpawnHooks {
  std::function<void(pid_t)> on_spawn;
  std::function<void(pid_t, std::int64_t)> on_exit;
};

// Runs `/bin/sh -c command` in its own process group with stdin at /dev/null.
// On timeout the whole group is killed and BackendError{Timeout} is thrown.
ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout,
                        const SpawnHooks* hooks = nullptr);

// A long-running `/bin/sh -c command` (for example an inference server) in its
// own process group, output discarded. The destructor sends SIGTERM to the
// group, waits up to `grace`, then SIGKILLs it.
class BackgroundProcess {
 public:
  explicit BackgroundProcess(const std::string& command,
                             std::chrono::milliseconds grace = std::chrono::milliseconds(2000));
  BackgroundProcess(const BackgroundProcess&) = delete;
  BackgroundProcess& operator=(const BackgroundProcess&) = delete;
  ~BackgroundProcess();

  pid_t pid() const { return pid_; }
  // False once the shell has exited; reaps it on first observation.
  bool running();

 private:
  pid_t pid_ = -1;
  bool reaped_ = false;
  std::chrono::milliseconds grace_;
};

}  // namespace intentkit
