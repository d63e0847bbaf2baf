// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lstc/log.hpp"
#include "lstc/text.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(LSTC_TEST_DATA) + "/" + name; }
inline std::string bin_path(const std::string& name) { return std::string(LSTC_TEST_BIN) + "/" + name; }

inline std::u32string U(const std::string& s) { return lstc::utf8_to_units(s); }
inline std::string S(std::u32string_view s) { return lstc::units_to_utf8(s); }

// Collects warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningCapture() {
    lstc::set_warning_sink([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { lstc::set_warning_sink(nullptr); }
};

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lstc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
