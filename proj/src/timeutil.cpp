#include "skyroute/timeutil.hpp"

#include "skyroute/errors.hpp"

#include <cmath>
#include <cstdio>

namespace skyroute {

namespace {

// Howard Hinnant's civil-date algorithms (public domain); avoids timegm and
// any dependence on the host timezone database.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

} // namespace

Timestamp timestamp_from_civil(int year, int month, int day, int hour, int minute, int second) {
    return days_from_civil(year, month, day) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

void civil_from_timestamp(Timestamp t, int& year, int& month, int& day,
                          int& hour, int& minute, int& second) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t rem = t % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    civil_from_days(days, year, month, day);
    hour = static_cast<int>(rem / 3600);
    minute = static_cast<int>((rem / 60) % 60);
    second = static_cast<int>(rem % 60);
}

std::string format_iso8601(Timestamp t) {
    int y, mo, d, h, mi, s;
    civil_from_timestamp(t, y, mo, d, h, mi, s);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, mo, d, h, mi, s);
    return buf;
}

Timestamp parse_iso8601(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (n < 6 || (sep != 'T' && sep != ' '))
        throw Error("invalid timestamp '" + s + "' (expected YYYY-MM-DDTHH:MM[:SS][Z])");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        sec < 0 || sec > 60)
        throw Error("timestamp field out of range in '" + s + "'");
    return timestamp_from_civil(y, mo, d, h, mi, sec);
}

Timestamp add_minutes(Timestamp t, double minutes) {
    return t + static_cast<Timestamp>(std::llround(minutes * 60.0));
}

} // namespace skyroute
