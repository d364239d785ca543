#pragma once

#include <cstdint>
#include <string>

namespace skyroute {

// Unix timestamp (UTC seconds). All dataset timestamps are UTC; no local
// time or leap-second handling anywhere.
using Timestamp = std::int64_t;

constexpr Timestamp kSecondsPerHour = 3600;
constexpr Timestamp kSecondsPerDay = 86400;

// Floor to the containing hour (weather records are hourly).
constexpr Timestamp floor_hour(Timestamp t) {
    return (t >= 0) ? t - t % kSecondsPerHour
                    : t - ((t % kSecondsPerHour + kSecondsPerHour) % kSecondsPerHour);
}

Timestamp timestamp_from_civil(int year, int month, int day,
                               int hour = 0, int minute = 0, int second = 0);

void civil_from_timestamp(Timestamp t, int& year, int& month, int& day,
                          int& hour, int& minute, int& second);

// "2017-11-01T01:02:45Z"
std::string format_iso8601(Timestamp t);

// Accepts "YYYY-MM-DDTHH:MM:SS[Z]", "YYYY-MM-DD HH:MM:SS" and the
// seconds-less "YYYY-MM-DDTHH:MM". Throws skyroute::Error on anything else.
Timestamp parse_iso8601(const std::string& s);

// Minutes as a double offset applied to a timestamp, rounded to seconds.
Timestamp add_minutes(Timestamp t, double minutes);

} // namespace skyroute
