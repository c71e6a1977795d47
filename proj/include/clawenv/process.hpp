// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clawenv {

struct ProcessOptions {
  std::filesystem::path cwd;
  std::map<std::string, std::string> env;  // added to the inherited environment
  std::string stdin_data;
  double timeout_s = 60.0;
};

struct ProcessResult {
  int exit_code = -1;  // -1 when killed or not started
  bool timed_out = false;
  std::string out;
  std::string err;
};

/// Runs argv to completion (killing the process group on timeout).
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opts = {});
ProcessResult run_shell(const std::string& command, const ProcessOptions& opts = {});

/// A child with line-oriented stdin/stdout pipes.
class ChildProcess {
public:
  ChildProcess(const std::vector<std::string>& argv, const ProcessOptions& opts = {});
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  bool write_line(const std::string& line);
  /// Next stdout line without the newline; nullopt on EOF or timeout.
  std::optional<std::string> read_line(double timeout_s);
  void close_stdin();
  /// Waits for exit up to timeout, then kills. Returns the exit code or -1.
  int finish(double timeout_s = 2.0);

private:
  int pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

/// A fresh directory under the system temp dir, removed on destruction unless released.
class TempDir {
public:
  explicit TempDir(const std::string& prefix = "clawenv");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path release();

private:
  std::filesystem::path path_;
  bool owned_ = true;
};

}  // namespace clawenv
