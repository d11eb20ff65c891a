/*
   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <span>

#include "error.hpp"

namespace enhdiff {

/// Moments of a sample, accumulated in index order.
struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;        ///< unbiased (n-1 denominator); 0 when n < 2
    double standard_error = 0.0;  ///< of the mean
    double variance_se = 0.0;     ///< of the unbiased variance, from the 4th central moment
};

inline SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n < 2) return s;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : xs) {
        const double d = x - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    const auto n = static_cast<double>(s.n);
    s.variance = m2 / (n - 1.0);
    if (s.variance < 0.0) s.variance = 0.0;
    s.standard_error = std::sqrt(s.variance / n);
    const double mu2 = m2 / n;
    const double mu4 = m4 / n;
    s.variance_se = std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / n);
    return s;
}

/// Ordinary least squares y = intercept + slope x.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    double slope_stderr = 0.0;
    /// Two-sided 95% Student-t half-width of the slope.
    double slope_ci_halfwidth = 0.0;
    std::size_t n = 0;
};

/// Two-sided 97.5% quantile of Student's t with `dof` degrees of freedom.
inline double student_t975(std::size_t dof) {
    static constexpr double table[] = {0.0,    12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                       2.365,  2.306,  2.262, 2.228, 2.201, 2.179, 2.160,
                                       2.145,  2.131,  2.120, 2.110, 2.101, 2.093, 2.086,
                                       2.080,  2.074,  2.069, 2.064, 2.060, 2.056, 2.052,
                                       2.048,  2.045,  2.042};
    if (dof == 0) return std::numeric_limits<double>::infinity();
    if (dof < std::size(table)) return table[dof];
    return 1.959964 + 2.4 / static_cast<double>(dof);
}

inline LinearFit ols_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ConfigError("ols_fit: size mismatch");
    if (xs.size() < 2) throw ConfigError("ols_fit: need at least 2 points");
    LinearFit f;
    f.n = xs.size();
    const auto n = static_cast<double>(f.n);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw ConfigError("ols_fit: abscissae are all equal");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        const double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss += r * r;
    }
    f.residual_rms = std::sqrt(ss / n);
    if (f.n > 2) {
        f.slope_stderr = std::sqrt(ss / (n - 2.0) / sxx);
        f.slope_ci_halfwidth = student_t975(f.n - 2) * f.slope_stderr;
    } else {
        f.slope_stderr = std::numeric_limits<double>::infinity();
        f.slope_ci_halfwidth = std::numeric_limits<double>::infinity();
    }
    return f;
}

}  // namespace enhdiff
