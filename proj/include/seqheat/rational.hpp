#pragma once

#include <boost/rational.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "seqheat/errors.hpp"

namespace seqheat {

/// Exact energy value. Always in lowest terms with a positive denominator.
using Rational = boost::rational<std::int64_t>;

namespace detail {

inline std::int64_t parse_int64(std::string_view s, std::string_view whole) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("malformed rational '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace detail

/// Parses "num/den", "num", or a plain decimal such as "-0.25" exactly.
inline Rational parse_rational(std::string_view text) {
  const std::string_view whole = text;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto num = detail::parse_int64(text.substr(0, slash), whole);
    const auto den = detail::parse_int64(text.substr(slash + 1), whole);
    if (den == 0) throw ConfigError("zero denominator in '" + std::string(whole) + "'");
    return Rational(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view ip = text.substr(0, dot);
    std::string_view fp = text.substr(dot + 1);
    if (fp.empty() || fp.size() > 17 || fp.front() == '-' || fp.front() == '+') {
      throw ConfigError("malformed rational '" + std::string(whole) + "'");
    }
    bool negative = !ip.empty() && ip.front() == '-';
    if (negative || (!ip.empty() && ip.front() == '+')) ip.remove_prefix(1);
    const std::int64_t ipart = ip.empty() ? 0 : detail::parse_int64(ip, whole);
    const std::int64_t fpart = detail::parse_int64(fp, whole);
    std::int64_t scale = 1;
    for (std::size_t k = 0; k < fp.size(); ++k) scale *= 10;
    Rational r = Rational(ipart) + Rational(fpart, scale);
    return negative ? -r : r;
  }
  return Rational(detail::parse_int64(text, whole));
}

/// "num/den", or just "num" when the denominator is 1.
inline std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline double to_double(const Rational& r) {
  return boost::rational_cast<double>(r);
}

/// Decimal rendering with 12 significant digits.
inline std::string format_decimal12(const Rational& r) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", to_double(r));
  std::string s = buf;
  if (s == "-0") s = "0";
  return s;
}

}  // namespace seqheat
