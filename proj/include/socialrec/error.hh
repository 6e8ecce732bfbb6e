// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace socialrec {

// Malformed or inconsistent input data. Carries the offending file and line
// when the error comes from a loader.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
  DataError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_ = 0;
};

// A caller broke an operation's precondition (e.g. f not in F(u)).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace socialrec
