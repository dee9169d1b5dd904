#pragma once

#include <fmt/format.h>

#include <cstdio>
#include <string>
#include <utility>

namespace cdal {

enum class LogLevel { off = 0, info = 1, trace = 2 };

/// Level read once from CDAL_LOG (off|info|trace); defaults to off.
LogLevel log_level();

namespace detail {
void write_log(const char* tag, const std::string& msg);
}

template <typename... Args>
void log_info(fmt::format_string<Args...> f, Args&&... args) {
    if (log_level() >= LogLevel::info)
        detail::write_log("info", fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void log_trace(fmt::format_string<Args...> f, Args&&... args) {
    if (log_level() >= LogLevel::trace)
        detail::write_log("trace", fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace cdal
