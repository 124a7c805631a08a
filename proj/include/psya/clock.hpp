#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace psya {

/// Simulation time is counted in ticks since the start of day 0's window.
using Tick = std::int64_t;

/// Maps ticks onto wall-clock minutes of a repeating daily window.
///
/// The window starts at `day_start_minute` and ends (exclusive) at
/// `day_end_minute`; time outside the window is not simulated. With the
/// defaults (06:00 to 24:00, 15-minute ticks) a day is 72 ticks.
struct Clock {
    int tick_minutes = 15;
    int day_start_minute = 6 * 60;
    int day_end_minute = 24 * 60;

    int ticks_per_day() const { return (day_end_minute - day_start_minute) / tick_minutes; }
    double hours_per_tick() const { return tick_minutes / 60.0; }

    std::int64_t day_of(Tick t) const { return t / ticks_per_day(); }
    Tick day_start(std::int64_t day) const { return day * ticks_per_day(); }

    /// Minute of the day (0..1439+) at the start of tick `t`.
    int minute_of_day(Tick t) const {
        return day_start_minute + static_cast<int>(t % ticks_per_day()) * tick_minutes;
    }

    /// "HH:MM" of the tick start; midnight prints as 24:00.
    std::string format(Tick t) const;

    /// Like format(), but a tick on a day boundary reads as the end of the previous window.
    std::string format_end(Tick t) const {
        if (t > 0 && t % ticks_per_day() == 0) return hhmm(day_end_minute);
        return format(t);
    }
    static std::string hhmm(int minute);

    /// Tick at "HH:MM" on `day`, clamped into the window. nullopt when unparseable.
    std::optional<Tick> parse(std::string_view hhmm, std::int64_t day) const;

    bool divides_day() const {
        return tick_minutes > 0 && day_end_minute > day_start_minute &&
               (day_end_minute - day_start_minute) % tick_minutes == 0;
    }
};

}  // namespace psya
