#include "cdal/log.hpp"

#include <cstdlib>
#include <string_view>

namespace cdal {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("CDAL_LOG");
        if (env == nullptr) return LogLevel::off;
        const std::string_view v(env);
        if (v == "trace") return LogLevel::trace;
        if (v == "info") return LogLevel::info;
        return LogLevel::off;
    }();
    return level;
}

namespace detail {
void write_log(const char* tag, const std::string& msg) {
    std::fprintf(stderr, "[cdal:%s] %s\n", tag, msg.c_str());
}
}  // namespace detail

}  // namespace cdal
