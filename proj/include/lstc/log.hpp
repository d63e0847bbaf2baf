// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>

namespace lstc {

using WarningSink = std::function<void(const std::string&)>;

// Without a sink (or after set_warning_sink(nullptr)) warnings go to stderr.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace lstc
