#include "psya/rng.hpp"

#include "psya/clock.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <limits>
#include <sstream>

namespace psya {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return lo + static_cast<std::int64_t>(x % span);
}

std::string Rng::save_state() const {
    std::ostringstream os;
    os << seed_ << ' ' << engine_;
    return os.str();
}

void Rng::load_state(const std::string& state) {
    std::istringstream is(state);
    is >> seed_ >> engine_;
}

std::string Clock::format(Tick t) const {
    const int m = minute_of_day(t);
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", m / 60, m % 60);
    return buf;
}

std::string Clock::hhmm(int minute) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
    return buf;
}

std::optional<Tick> Clock::parse(std::string_view s, std::int64_t day) const {
    // Accepts H:MM / HH:MM, optionally followed by am/pm.
    std::size_t i = 0;
    while (i < s.size() && !std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    int hh = 0, digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && digits < 2) {
        hh = hh * 10 + (s[i] - '0');
        ++i;
        ++digits;
    }
    if (digits == 0 || i >= s.size() || s[i] != ':') return std::nullopt;
    ++i;
    if (i + 2 > s.size() || !std::isdigit(static_cast<unsigned char>(s[i])) ||
        !std::isdigit(static_cast<unsigned char>(s[i + 1])))
        return std::nullopt;
    const int mm = (s[i] - '0') * 10 + (s[i + 1] - '0');
    i += 2;
    std::string rest;
    for (; i < s.size(); ++i) rest.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    const auto suffix = rest.find_first_not_of(' ');
    if (suffix != std::string::npos) {
        if (rest.compare(suffix, 2, "pm") == 0 && hh < 12) hh += 12;
        if (rest.compare(suffix, 2, "am") == 0 && hh == 12) hh = 0;
    }
    if (hh > 24 || mm > 59) return std::nullopt;
    int minute = hh * 60 + mm;
    minute = std::clamp(minute, day_start_minute, day_end_minute - tick_minutes);
    return day_start(day) + (minute - day_start_minute) / tick_minutes;
}

}  // namespace psya
