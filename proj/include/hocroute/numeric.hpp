#pragma once

#include <span>
#include <string>

namespace hocroute {

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Sample standard deviation over sqrt(n); 0 for fewer than two values.
double standard_error(std::span<const double> values);

/// Standard error of the mean of a[i] - b[i].
double paired_standard_error(std::span<const double> a, std::span<const double> b);

/// Shortest decimal text that parses back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double value);

}  // namespace hocroute
