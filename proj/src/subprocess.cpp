#include "perfforge/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "perfforge/errors.hpp"

namespace perfforge::subprocess {

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe(fds) != 0) throw EnvironmentError("pipe() failed");
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  int read_end() const { return fds[0]; }
  int write_end() const { return fds[1]; }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace

RunResult run(const RunSpec& spec) {
  if (spec.argv.empty()) throw EnvironmentError("empty argv");

  Pipe in, out, err;
  // exec failure is reported through a CLOEXEC pipe so a bad binary path is
  // distinguished from the child's own exit codes
  Pipe exec_status;
  ::fcntl(exec_status.write_end(), F_SETFD, FD_CLOEXEC);

  const auto started = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw EnvironmentError("fork() failed");

  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in.read_end(), STDIN_FILENO);
    ::dup2(out.write_end(), STDOUT_FILENO);
    ::dup2(err.write_end(), STDERR_FILENO);
    in.close_write();
    out.close_read();
    err.close_read();
    exec_status.close_read();
    if (!spec.cwd.empty() && ::chdir(spec.cwd.c_str()) != 0) {
      char msg = 'c';
      ssize_t ignored = ::write(exec_status.write_end(), &msg, 1);
      (void)ignored;
      ::_exit(127);
    }
    std::vector<char*> argv;
    argv.reserve(spec.argv.size() + 1);
    for (const std::string& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    char msg = 'e';
    ssize_t ignored = ::write(exec_status.write_end(), &msg, 1);
    (void)ignored;
    ::_exit(127);
  }

  ::setpgid(pid, pid);  // raced with the child; both calls are harmless
  in.close_read();
  out.close_write();
  err.close_write();
  exec_status.close_write();

  set_nonblocking(in.write_end());
  set_nonblocking(out.read_end());
  set_nonblocking(err.read_end());

  RunResult result;
  std::size_t stdin_written = 0;
  bool stdin_open = !spec.stdin_bytes.empty();
  if (!stdin_open) in.close_write();

  bool exec_failed = false;
  bool child_exited = false;
  int wait_status = 0;
  bool killed = false;
  auto exit_seen = started;

  const auto deadline =
      spec.timeout_seconds > 0
          ? started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(spec.timeout_seconds))
          : std::chrono::steady_clock::time_point::max();

  auto append_capped = [&](std::string& dst, const char* buf, std::size_t n) {
    const std::size_t room = spec.max_output_bytes > dst.size()
                                 ? spec.max_output_bytes - dst.size()
                                 : 0;
    if (n > room) {
      result.output_truncated = true;
      n = room;
    }
    dst.append(buf, n);
  };

  char buf[1 << 16];
  while (true) {
    struct pollfd pfds[4];
    int nfds = 0;
    int idx_out = -1, idx_err = -1, idx_in = -1, idx_exec = -1;
    if (out.read_end() >= 0) {
      idx_out = nfds;
      pfds[nfds++] = {out.read_end(), POLLIN, 0};
    }
    if (err.read_end() >= 0) {
      idx_err = nfds;
      pfds[nfds++] = {err.read_end(), POLLIN, 0};
    }
    if (exec_status.read_end() >= 0) {
      idx_exec = nfds;
      pfds[nfds++] = {exec_status.read_end(), POLLIN, 0};
    }
    if (stdin_open && in.write_end() >= 0) {
      idx_in = nfds;
      pfds[nfds++] = {in.write_end(), POLLOUT, 0};
    }

    if (!child_exited) {
      int r = ::waitpid(pid, &wait_status, WNOHANG);
      if (r == pid) {
        child_exited = true;
        exit_seen = std::chrono::steady_clock::now();
      }
    }
    if (child_exited && idx_out < 0 && idx_err < 0 && idx_exec < 0) break;

    const auto now = std::chrono::steady_clock::now();
    if (!child_exited && now >= deadline && !killed) {
      result.timed_out = true;
      killed = true;
      ::kill(-pid, SIGKILL);
    }

    if (nfds == 0) {
      // child still running with every pipe closed; nothing to poll
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      continue;
    }
    int pr = ::poll(pfds, static_cast<nfds_t>(nfds), 2);
    if (pr < 0 && errno != EINTR) break;

    if (idx_out >= 0 && (pfds[idx_out].revents & (POLLIN | POLLHUP))) {
      ssize_t n = ::read(out.read_end(), buf, sizeof(buf));
      if (n > 0) {
        append_capped(result.stdout_bytes, buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        out.close_read();
      }
    }
    if (idx_err >= 0 && (pfds[idx_err].revents & (POLLIN | POLLHUP))) {
      ssize_t n = ::read(err.read_end(), buf, sizeof(buf));
      if (n > 0) {
        append_capped(result.stderr_bytes, buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        err.close_read();
      }
    }
    if (idx_exec >= 0 && (pfds[idx_exec].revents & (POLLIN | POLLHUP))) {
      ssize_t n = ::read(exec_status.read_end(), buf, sizeof(buf));
      if (n > 0) exec_failed = true;
      if (n >= 0 || (errno != EAGAIN && errno != EINTR)) exec_status.close_read();
    }
    if (idx_in >= 0 && (pfds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      if (pfds[idx_in].revents & (POLLERR | POLLHUP)) {
        in.close_write();
        stdin_open = false;
      } else {
        ssize_t n = ::write(in.write_end(), spec.stdin_bytes.data() + stdin_written,
                            spec.stdin_bytes.size() - stdin_written);
        if (n > 0) {
          stdin_written += static_cast<std::size_t>(n);
          if (stdin_written == spec.stdin_bytes.size()) {
            in.close_write();
            stdin_open = false;
          }
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          in.close_write();
          stdin_open = false;
        }
      }
    }
  }

  if (!child_exited) {
    ::waitpid(pid, &wait_status, 0);
    exit_seen = std::chrono::steady_clock::now();
  }
  result.wall_seconds = std::chrono::duration<double>(exit_seen - started).count();

  if (exec_failed) {
    throw EnvironmentError("cannot execute '" + spec.argv[0] + "'");
  }
  if (WIFEXITED(wait_status)) {
    result.exit_code = WEXITSTATUS(wait_status);
  } else if (WIFSIGNALED(wait_status)) {
    result.exit_code = -WTERMSIG(wait_status);
  }
  return result;
}

}  // namespace perfforge::subprocess
