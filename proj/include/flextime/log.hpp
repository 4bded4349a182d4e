// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>

namespace flextime {

using WarningSink = std::function<void(const std::string&)>;

/// Route library warnings somewhere else (default: stderr). Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);

void warn(const std::string& message);

}  // namespace flextime
