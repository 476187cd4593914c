#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tdm {

// Seconds since the Unix epoch, UTC.
using UnixTime = std::int64_t;

// Days since 1970-01-01, UTC calendar.
using Day = std::int32_t;

struct CivilDate {
    int year;
    unsigned month;  // 1..12
    unsigned day;    // 1..31
};

Day days_from_civil(const CivilDate& cd);
CivilDate civil_from_days(Day z);

// UTC calendar day containing the instant (floor division for pre-epoch times).
Day day_of(UnixTime ts);

// Strict "YYYY-MM-DDThh:mm:ssZ". Throws ParseError otherwise.
UnixTime parse_timestamp(std::string_view iso);

std::string format_timestamp(UnixTime ts);
std::string format_day(Day d);  // "YYYY-MM-DD"

}  // namespace tdm
