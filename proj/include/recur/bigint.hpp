#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace recur {

using BigInt = boost::multiprecision::cpp_int;

/// 10^100, the largest magnitude any sequence value may take.
const BigInt& magnitude_limit();

inline constexpr double kRealMagnitudeLimit = 1e100;

/// Quotient rounded toward negative infinity. Divisor must be nonzero.
BigInt floor_div(const BigInt& a, const BigInt& b);

/// Remainder with the sign of the divisor (a == floor_div(a,b)*b + floor_mod(a,b)).
BigInt floor_mod(const BigInt& a, const BigInt& b);

bool exceeds_limit(const BigInt& x);

double to_double(const BigInt& x);

std::string to_string(const BigInt& x);

/// Parses an optionally signed decimal literal; rejects anything else.
std::optional<BigInt> parse_bigint(std::string_view text);

}  // namespace recur
