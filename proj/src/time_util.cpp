#include "matef/time_util.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>

namespace matef {

std::string format_rfc3339(UnixSeconds at) {
    std::time_t t = static_cast<std::time_t>(at);
    std::tm parts{};
    gmtime_r(&t, &parts);
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  parts.tm_year + 1900, parts.tm_mon + 1, parts.tm_mday,
                  parts.tm_hour, parts.tm_min, parts.tm_sec);
    return buffer;
}

std::optional<UnixSeconds> parse_rfc3339(std::string_view text) {
    if (text.size() != 20 || text[10] != 'T' || text[19] != 'Z')
        return std::nullopt;
    int year, month, day, hour, minute, second;
    char t, z;
    std::string buffer(text);
    if (std::sscanf(buffer.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%c",
                    &year, &month, &day, &t, &hour, &minute, &second, &z) != 8)
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31 ||
        hour > 23 || minute > 59 || second > 60)
        return std::nullopt;
    std::tm parts{};
    parts.tm_year = year - 1900;
    parts.tm_mon = month - 1;
    parts.tm_mday = day;
    parts.tm_hour = hour;
    parts.tm_min = minute;
    parts.tm_sec = second;
    std::time_t t_utc = timegm(&parts);
    if (t_utc == static_cast<std::time_t>(-1))
        return std::nullopt;
    // Reject non-canonical dates like Feb 30 that timegm normalizes away.
    if (format_rfc3339(static_cast<UnixSeconds>(t_utc)) != text)
        return std::nullopt;
    return static_cast<UnixSeconds>(t_utc);
}

UnixSeconds SystemClock::now() const {
    return static_cast<UnixSeconds>(std::time(nullptr));
}

std::unique_ptr<Clock> default_clock() {
    if (const char* frozen = std::getenv("MATEF_FROZEN_TIME")) {
        if (auto at = parse_rfc3339(frozen))
            return std::make_unique<FixedClock>(*at);
    }
    return std::make_unique<SystemClock>();
}

} // namespace matef
