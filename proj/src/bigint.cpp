#include "recur/bigint.hpp"

#include <cctype>

namespace recur {

const BigInt& magnitude_limit() {
  static const BigInt limit = boost::multiprecision::pow(BigInt(10), 100);
  return limit;
}

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q;
  BigInt r;
  boost::multiprecision::divide_qr(a, b, q, r);
  if (!r.is_zero() && ((r.sign() < 0) != (b.sign() < 0))) {
    --q;
  }
  return q;
}

BigInt floor_mod(const BigInt& a, const BigInt& b) {
  BigInt r = a % b;
  if (!r.is_zero() && ((r.sign() < 0) != (b.sign() < 0))) {
    r += b;
  }
  return r;
}

bool exceeds_limit(const BigInt& x) {
  return boost::multiprecision::abs(x) > magnitude_limit();
}

double to_double(const BigInt& x) { return x.convert_to<double>(); }

std::string to_string(const BigInt& x) { return x.str(); }

std::optional<BigInt> parse_bigint(std::string_view text) {
  if (text.empty()) {
    return std::nullopt;
  }
  std::size_t i = 0;
  bool negative = false;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  if (i == text.size()) {
    return std::nullopt;
  }
  BigInt value = 0;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      return std::nullopt;
    }
    value *= 10;
    value += c - '0';
  }
  if (negative) {
    value = -value;
  }
  return value;
}

}  // namespace recur
