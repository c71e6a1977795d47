// SPDX-License-Identifier: Apache-2.0
#include "clawenv/process.hpp"

#include "clawenv/errors.hpp"

#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace clawenv {

namespace {

using Clock = std::chrono::steady_clock;

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw Error("pipe failed: " + std::string(std::strerror(errno)));
  }
};

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

int spawn(const std::vector<std::string>& argv, const ProcessOptions& opts, int in_fd, int out_fd, int err_fd,
          int close_in_child[3]) {
  if (argv.empty()) throw Error("empty command");
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  std::vector<std::string> env_strings;
  for (char** e = environ; *e; ++e) {
    std::string_view entry(*e);
    if (!opts.env.count(std::string(entry.substr(0, entry.find('='))))) env_strings.emplace_back(entry);
  }
  for (const auto& [k, v] : opts.env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& e : env_strings) envp.push_back(e.data());
  envp.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_fd, STDIN_FILENO);
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    for (int i = 0; i < 3; ++i) {
      if (close_in_child[i] >= 0) ::close(close_in_child[i]);
    }
    if (!opts.cwd.empty() && ::chdir(opts.cwd.c_str()) != 0) _exit(126);
    ::execvpe(args[0], args.data(), envp.data());
    _exit(127);
  }
  return pid;
}

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opts) {
  Pipe in, out, err;
  int close_child[3] = {in.fd[1], out.fd[0], err.fd[0]};
  const int pid = spawn(argv, opts, in.fd[0], out.fd[1], err.fd[1], close_child);
  close_fd(in.fd[0]);
  close_fd(out.fd[1]);
  close_fd(err.fd[1]);

  ProcessResult res;
  std::size_t written = 0;
  if (opts.stdin_data.empty()) close_fd(in.fd[1]);
  else ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);
  ::signal(SIGPIPE, SIG_IGN);

  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(opts.timeout_s));
  while (out.fd[0] >= 0 || err.fd[0] >= 0) {
    std::vector<pollfd> fds;
    if (out.fd[0] >= 0) fds.push_back({out.fd[0], POLLIN, 0});
    if (err.fd[0] >= 0) fds.push_back({err.fd[0], POLLIN, 0});
    if (in.fd[1] >= 0) fds.push_back({in.fd[1], POLLOUT, 0});
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) {
      res.timed_out = true;
      break;
    }
    if (::poll(fds.data(), fds.size(), static_cast<int>(std::min<long long>(left, 100))) < 0 && errno != EINTR) break;
    for (const auto& p : fds) {
      if (!p.revents) continue;
      if (p.fd == in.fd[1]) {
        ssize_t n = ::write(in.fd[1], opts.stdin_data.data() + written, opts.stdin_data.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 || written >= opts.stdin_data.size()) close_fd(in.fd[1]);
        continue;
      }
      char buf[4096];
      ssize_t n = ::read(p.fd, buf, sizeof buf);
      std::string& sink = p.fd == out.fd[0] ? res.out : res.err;
      if (n > 0) {
        sink.append(buf, static_cast<std::size_t>(n));
      } else {
        if (p.fd == out.fd[0]) close_fd(out.fd[0]);
        else close_fd(err.fd[0]);
      }
    }
  }
  close_fd(in.fd[1]);
  close_fd(out.fd[0]);
  close_fd(err.fd[0]);
  int status = 0;
  if (res.timed_out) {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    res.exit_code = -1;
    return res;
  }
  ::waitpid(pid, &status, 0);
  res.exit_code = decode_status(status);
  return res;
}

ProcessResult run_shell(const std::string& command, const ProcessOptions& opts) {
  return run_process({"/bin/sh", "-c", command}, opts);
}

ChildProcess::ChildProcess(const std::vector<std::string>& argv, const ProcessOptions& opts) {
  Pipe in, out;
  const int devnull = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  int close_child[3] = {in.fd[1], out.fd[0], -1};
  pid_ = spawn(argv, opts, in.fd[0], out.fd[1], devnull >= 0 ? devnull : STDERR_FILENO, close_child);
  if (devnull >= 0) ::close(devnull);
  ::close(in.fd[0]);
  ::close(out.fd[1]);
  in_fd_ = in.fd[1];
  out_fd_ = out.fd[0];
  ::signal(SIGPIPE, SIG_IGN);
}

ChildProcess::~ChildProcess() { finish(0.5); }

bool ChildProcess::write_line(const std::string& line) {
  if (in_fd_ < 0) return false;
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
    if (n <= 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> ChildProcess::read_line(double timeout_s) {
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (eof_ || out_fd_ < 0) return std::nullopt;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) return std::nullopt;
    pollfd p{out_fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left)) <= 0) continue;
    char buf[4096];
    ssize_t n = ::read(out_fd_, buf, sizeof buf);
    if (n > 0) buffer_.append(buf, static_cast<std::size_t>(n));
    else if (n == 0 || errno != EINTR) eof_ = true;
  }
}

void ChildProcess::close_stdin() { close_fd(in_fd_); }

int ChildProcess::finish(double timeout_s) {
  if (pid_ < 0) return -1;
  close_fd(in_fd_);
  int status = 0;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
  int code = -1;
  while (true) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      code = decode_status(status);
      break;
    }
    if (Clock::now() >= deadline) {
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      break;
    }
    ::usleep(10000);
  }
  close_fd(out_fd_);
  pid_ = -1;
  return code;
}

TempDir::TempDir(const std::string& prefix) {
  std::string tmpl = (std::filesystem::temp_directory_path() / (prefix + "-XXXXXX")).string();
  if (!::mkdtemp(tmpl.data())) throw Error("mkdtemp failed: " + std::string(std::strerror(errno)));
  path_ = tmpl;
}

TempDir::~TempDir() {
  if (!owned_) return;
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path TempDir::release() {
  owned_ = false;
  return path_;
}

}  // namespace clawenv
