#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

#include "deconviv/errors.hpp"

namespace deconviv {

// One observation row is (y, x, w1, w2): outcome, regressor, and the two
// error-laden measurements of the latent instrument w*.
struct Sample {
    std::vector<double> y, x, w1, w2;
    std::size_t size() const { return y.size(); }
};

// Throws EmptySample when n < 2 or the columns disagree in length, and
// MalformedCsv when any entry is non-finite.
inline void validate(const Sample& s) {
    const std::size_t n = s.y.size();
    if (s.x.size() != n || s.w1.size() != n || s.w2.size() != n)
        throw EmptySample("sample columns have unequal lengths");
    if (n < 2)
        throw EmptySample("sample needs at least 2 observations, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i]) ||
            !std::isfinite(s.w1[i]) || !std::isfinite(s.w2[i]))
            throw MalformedCsv("non-finite value in sample at row " + std::to_string(i));
}

} // namespace deconviv
