#pragma once

#include <cstdint>
#include <string>

#include "sigdet/errors.hpp"

namespace sigdet {

// Shape of the lag-weight function, independent of the window width so the
// same shape can be re-instantiated for randomized windows.
struct KernelShape {
    double w0 = 0.2;             // weight at lag 0
    int32_t peak_start_day = 6;  // plateau start
    int32_t peak_end_day = 10;   // plateau end

    friend bool operator==(const KernelShape&, const KernelShape&) = default;
};

// Piecewise-linear lag weight on [0, delta]: rises from w0 at lag 0 to 1.0
// at peak_start_day, holds 1.0 through peak_end_day, then falls linearly to
// 0 at lag == delta. Zero outside [0, delta].
struct WeightKernel {
    double w0 = 0.2;
    int32_t peak_start_day = 6;
    int32_t peak_end_day = 10;
    int32_t delta = 40;

    static WeightKernel make(const KernelShape& shape, int32_t delta) {
        if (shape.w0 < 0.0 || shape.w0 > 1.0)
            throw ConfigError("kernel w0 must be in [0, 1]");
        if (shape.peak_start_day < 0 || shape.peak_start_day > shape.peak_end_day)
            throw ConfigError("kernel peak must satisfy 0 <= peak_start <= peak_end");
        if (shape.peak_end_day > delta)
            throw ConfigError("kernel peak_end_day " + std::to_string(shape.peak_end_day) +
                              " exceeds window delta " + std::to_string(delta));
        return WeightKernel{shape.w0, shape.peak_start_day, shape.peak_end_day, delta};
    }

    double weight(int32_t lag) const {
        if (lag < 0 || lag > delta) return 0.0;
        if (lag < peak_start_day)
            return w0 + (1.0 - w0) * double(lag) / double(peak_start_day);
        if (lag <= peak_end_day) return 1.0;
        return double(delta - lag) / double(delta - peak_end_day);
    }

    friend bool operator==(const WeightKernel&, const WeightKernel&) = default;
};

}  // namespace sigdet
