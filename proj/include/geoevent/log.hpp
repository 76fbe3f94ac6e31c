#pragma once

#include <functional>
#include <string_view>

namespace geoevent {

using WarningSink = std::function<void(std::string_view)>;

/// Emits a warning through the installed sink (stderr by default).
void warn(std::string_view message);

/// Replaces the warning sink; returns the previous one. Pass an empty
/// function to silence warnings.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace geoevent
