// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <sys/types.h>

namespace lstc {

// A long-lived helper process spoken to with one JSON document per line.
// Requests on one handle are serialized.
class LineProcess {
 public:
  explicit LineProcess(std::string command);  // run through /bin/sh -c
  ~LineProcess();

  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  // Writes `line` plus '\n', returns the next output line (without '\n').
  // Throws lstc::Error if the process has exited or the pipe broke.
  std::string request(const std::string& line);

  const std::string& command() const { return command_; }

 private:
  std::optional<std::string> read_line();

  std::string command_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

}  // namespace lstc
