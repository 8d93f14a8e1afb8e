#include "intentkit/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "intentkit/backends.hpp"

extern char** environ;

namespace intentkit {

namespace {

using Clock = std::chrono::steady_clock;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    reset(o.release());
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

void make_pipe(Fd& read_end, Fd& write_end) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw BackendError(BackendError::Kind::TransportError,
                       std::string("pipe: ") + std::strerror(errno));
  }
  read_end.reset(fds[0]);
  write_end.reset(fds[1]);
}

struct SpawnAttr {
  posix_spawnattr_t attr;
  posix_spawn_file_actions_t actions;
  SpawnAttr() {
    posix_spawnattr_init(&attr);
    posix_spawn_file_actions_init(&actions);
  }
  ~SpawnAttr() {
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
  }
};

}  // namespace

ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout,
                        const SpawnHooks* hooks) {
  Fd out_r, out_w, err_r, err_w;
  make_pipe(out_r, out_w);
  make_pipe(err_r, err_w);

  SpawnAttr sp;
  sigset_t empty, defaults;
  sigemptyset(&empty);
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  posix_spawnattr_setsigmask(&sp.attr, &empty);
  posix_spawnattr_setsigdefault(&sp.attr, &defaults);
  posix_spawnattr_setpgroup(&sp.attr, 0);
  posix_spawnattr_setflags(&sp.attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGMASK |
                                         POSIX_SPAWN_SETSIGDEF);
  posix_spawn_file_actions_addopen(&sp.actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&sp.actions, out_w.get(), 1);
  posix_spawn_file_actions_adddup2(&sp.actions, err_w.get(), 2);

  std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};

  const auto start = Clock::now();
  const auto deadline = start + timeout;
  pid_t pid = -1;
  if (const int rc = ::posix_spawn(&pid, "/bin/sh", &sp.actions, &sp.attr, argv, environ); rc != 0) {
    throw BackendError(BackendError::Kind::TransportError,
                       std::string("posix_spawn: ") + std::strerror(rc));
  }
  out_w.reset();
  err_w.reset();
  if (hooks && hooks->on_spawn) hooks->on_spawn(pid);

  ProcessResult result;
  bool got_first_byte = false;
  auto kill_and_throw = [&] {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (hooks && hooks->on_exit) hooks->on_exit(pid, 0);
    throw BackendError(BackendError::Kind::Timeout,
                       "command timed out after " + std::to_string(timeout.count()) + " ms");
  };

  char buf[65536];
  while (out_r.get() >= 0 || err_r.get() >= 0) {
    const auto now = Clock::now();
    if (now >= deadline) kill_and_throw();
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd fds[2];
    nfds_t n = 0;
    Fd* owners[2];
    for (Fd* fd : {&out_r, &err_r}) {
      if (fd->get() < 0) continue;
      fds[n] = {fd->get(), POLLIN, 0};
      owners[n++] = fd;
    }
    const int rc = ::poll(fds, n, static_cast<int>(std::max<long long>(remaining, 1)));
    if (rc < 0 && errno != EINTR) {
      kill_and_throw();
    }
    for (nfds_t i = 0; i < n && rc > 0; ++i) {
      if ((fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
      const ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
      if (got > 0) {
        if (owners[i] == &out_r) {
          if (!got_first_byte) {
            result.first_byte = Clock::now() - start;
            got_first_byte = true;
          }
          result.out.append(buf, static_cast<std::size_t>(got));
        } else {
          result.err.append(buf, static_cast<std::size_t>(got));
        }
      } else if (got == 0 || errno != EINTR) {
        owners[i]->reset();
      }
    }
  }

  int status = 0;
  rusage usage{};
  for (;;) {
    const pid_t w = ::wait4(pid, &status, WNOHANG, &usage);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) break;
    if (Clock::now() >= deadline) kill_and_throw();
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  result.total = Clock::now() - start;
  if (!got_first_byte) result.first_byte = result.total;
  result.peak_rss_bytes = static_cast<std::int64_t>(usage.ru_maxrss) * 1024;
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.term_signal = WTERMSIG(status);
  }
  if (hooks && hooks->on_exit) hooks->on_exit(pid, result.peak_rss_bytes);
  return result;
}

BackgroundProcess::BackgroundProcess(const std::string& command, std::chrono::milliseconds grace)
    : grace_(grace) {
  SpawnAttr sp;
  sigset_t empty, defaults;
  sigemptyset(&empty);
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  posix_spawnattr_setsigmask(&sp.attr, &empty);
  posix_spawnattr_setsigdefault(&sp.attr, &defaults);
  posix_spawnattr_setpgroup(&sp.attr, 0);
  posix_spawnattr_setflags(&sp.attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGMASK |
                                         POSIX_SPAWN_SETSIGDEF);
  posix_spawn_file_actions_addopen(&sp.actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&sp.actions, 1, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&sp.actions, 2, "/dev/null", O_WRONLY, 0);
  std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  if (const int rc = ::posix_spawn(&pid_, "/bin/sh", &sp.actions, &sp.attr, argv, environ); rc != 0) {
    throw BackendError(BackendError::Kind::TransportError,
                       std::string("posix_spawn: ") + std::strerror(rc));
  }
}

bool BackgroundProcess::running() {
  if (reaped_) return false;
  int status = 0;
  if (::waitpid(pid_, &status, WNOHANG) == pid_) reaped_ = true;
  return !reaped_;
}

BackgroundProcess::~BackgroundProcess() {
  if (pid_ <= 0) return;
  ::kill(-pid_, SIGTERM);
  const auto deadline = Clock::now() + grace_;
  while (running() && Clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(-pid_, SIGKILL);
  if (!reaped_) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

}  // namespace intentkit
