#pragma once

#include <cstdint>
#include <string>

#include "sigdet/errors.hpp"

namespace sigdet {

// Day-indexed time axis: day 0 is the start of year 1, years are fixed
// 365-day blocks. All formulas depend only on day differences, so there is
// no calendar logic anywhere.
struct TimeAxis {
    int32_t horizon_days = 3650;
    int32_t year_length_days = 365;

    int32_t years() const { return horizon_days / year_length_days; }
    int32_t year_of(int32_t day) const { return day / year_length_days; }
    bool in_range(int32_t day) const { return day >= 0 && day <= horizon_days; }

    friend bool operator==(const TimeAxis&, const TimeAxis&) = default;
};

// Splits [0, horizon] into m equal consecutive subintervals. The closing
// day (day == horizon_days) folds into the last subinterval so that every
// in-range day has a defined slot.
struct SubintervalGrid {
    int32_t m = 10;
    int32_t length_days = 365;

    static SubintervalGrid over(const TimeAxis& axis, int32_t m) {
        if (m < 1)
            throw ConfigError("subinterval count m must be >= 1, got " + std::to_string(m));
        if (axis.horizon_days % m != 0)
            throw ConfigError("horizon of " + std::to_string(axis.horizon_days) +
                              " days is not divisible into m = " + std::to_string(m) +
                              " subintervals");
        return SubintervalGrid{m, axis.horizon_days / m};
    }

    int32_t index_of(int32_t day) const {
        int32_t i = day / length_days;
        return i >= m ? m - 1 : i;
    }
    int32_t begin_day(int32_t i) const { return i * length_days; }
    int32_t end_day(int32_t i) const { return (i + 1) * length_days - 1; }
};

}  // namespace sigdet
