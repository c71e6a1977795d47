// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace clawenv {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed task document. `where` is a field locator, `line` is 1-based or 0 when unknown.
class ParseError : public Error {
public:
  ParseError(std::string where, int line, const std::string& what)
      : Error(format(where, line, what)), where_(std::move(where)), line_(line) {}

  const std::string& where() const noexcept { return where_; }
  int line() const noexcept { return line_; }

private:
  static std::string format(const std::string& where, int line, const std::string& what) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!where.empty()) out += where + ": ";
    return out + what;
  }

  std::string where_;
  int line_;
};

class ClassificationError : public Error {
public:
  using Error::Error;
};

class StartError : public Error {
public:
  using Error::Error;
};

class SandboxError : public Error {
public:
  using Error::Error;
};

class EgressDenied : public Error {
public:
  using Error::Error;
};

class GenerationError : public Error {
public:
  using Error::Error;
};

class FixtureError : public Error {
public:
  using Error::Error;
};

}  // namespace clawenv
