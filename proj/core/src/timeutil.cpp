#include "tdm/timeutil.hpp"

#include <cstdio>

#include "tdm/error.hpp"

namespace tdm {

// Civil <-> day-count conversions after Howard Hinnant's chrono algorithms.
Day days_from_civil(const CivilDate& cd) {
    int y = cd.year;
    const unsigned m = cd.month;
    const unsigned d = cd.day;
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<Day>(era * 146097 + static_cast<int>(doe) - 719468);
}

CivilDate civil_from_days(Day z) {
    std::int64_t zz = static_cast<std::int64_t>(z) + 719468;
    const std::int64_t era = (zz >= 0 ? zz : zz - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(zz - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

Day day_of(UnixTime ts) {
    std::int64_t d = ts / 86400;
    if (ts % 86400 < 0) --d;
    return static_cast<Day>(d);
}

namespace {

bool all_digits(std::string_view s) {
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return !s.empty();
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

}  // namespace

UnixTime parse_timestamp(std::string_view iso) {
    // YYYY-MM-DDThh:mm:ssZ, 20 chars exactly.
    if (iso.size() != 20 || iso[4] != '-' || iso[7] != '-' || iso[10] != 'T' ||
        iso[13] != ':' || iso[16] != ':' || iso[19] != 'Z' ||
        !all_digits(iso.substr(0, 4)) || !all_digits(iso.substr(5, 2)) ||
        !all_digits(iso.substr(8, 2)) || !all_digits(iso.substr(11, 2)) ||
        !all_digits(iso.substr(14, 2)) || !all_digits(iso.substr(17, 2))) {
        throw ParseError("bad timestamp '" + std::string(iso) + "', expected YYYY-MM-DDThh:mm:ssZ");
    }
    const int year = to_int(iso.substr(0, 4));
    const unsigned month = static_cast<unsigned>(to_int(iso.substr(5, 2)));
    const unsigned day = static_cast<unsigned>(to_int(iso.substr(8, 2)));
    const int hh = to_int(iso.substr(11, 2));
    const int mm = to_int(iso.substr(14, 2));
    const int ss = to_int(iso.substr(17, 2));
    if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
        throw ParseError("out-of-range timestamp field in '" + std::string(iso) + "'");
    const Day days = days_from_civil(CivilDate{year, month, day});
    return static_cast<UnixTime>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(UnixTime ts) {
    const Day d = day_of(ts);
    const CivilDate cd = civil_from_days(d);
    std::int64_t rem = ts - static_cast<UnixTime>(d) * 86400;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", cd.year, cd.month, cd.day,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::string format_day(Day d) {
    const CivilDate cd = civil_from_days(d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", cd.year, cd.month, cd.day);
    return buf;
}

}  // namespace tdm
