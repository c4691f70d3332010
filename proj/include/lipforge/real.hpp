#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/mpfr.hpp>

namespace lipforge {

/// Every recoverable failure in the library surfaces as this exception; the
/// message is the user-facing diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arbitrary-precision real. Fresh values take the working precision; results
/// of arithmetic take the largest precision among their operands.
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

using Rational = boost::multiprecision::cpp_rational;

/// Extra bits kept beyond the magnitude ratio of a probe scale.
inline constexpr long kGuardBits = 96;

inline long precision_of(const Real& x) { return static_cast<long>(mpfr_get_prec(x.backend().data())); }

inline long working_bits() {
  const Real probe;
  return precision_of(probe);
}

inline unsigned digits10_for_bits(long bits) {
  return static_cast<unsigned>(std::ceil(static_cast<double>(bits) * 0.30102999566398120)) + 1;
}

/// Raises the working precision to at least `bits` for the lifetime of the
/// scope. Never lowers it, and never writes the global setting when the
/// current precision already suffices, so nested scopes inside a parallel
/// fan-out stay read-only.
class PrecisionScope {
 public:
  explicit PrecisionScope(long bits) : saved_(Real::default_precision()) {
    if (bits > working_bits()) {
      Real::default_precision(digits10_for_bits(bits));
      changed_ = true;
    }
  }
  ~PrecisionScope() {
    if (changed_) Real::default_precision(saved_);
  }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_;
  bool changed_ = false;
};

/// Copy of x rounded to the working precision (plain copies keep x's own).
inline Real promote(const Real& x) {
  Real y;
  mpfr_set(y.backend().data(), x.backend().data(), MPFR_RNDN);
  return y;
}

/// Copy of x rounded to exactly `bits`, without touching the global setting;
/// safe inside parallel fan-outs.
inline Real with_bits(const Real& x, long bits) {
  Real y;
  mpfr_set_prec(y.backend().data(), static_cast<mpfr_prec_t>(bits));
  mpfr_set(y.backend().data(), x.backend().data(), MPFR_RNDN);
  return y;
}

inline bool is_finite(const Real& x) { return mpfr_number_p(x.backend().data()) != 0; }

inline Real infinity() { return Real(std::numeric_limits<double>::infinity()); }

/// Binary exponent e with |x| = m·2^e, 0.5 ≤ m < 1. Zero maps to the minimum long.
inline long binary_exponent(const Real& x) {
  if (mpfr_zero_p(x.backend().data()) || !is_finite(x)) return std::numeric_limits<long>::min();
  return static_cast<long>(mpfr_get_exp(x.backend().data()));
}

/// Precision needed to resolve offsets of size `scale` around points of size
/// `magnitude` with kGuardBits to spare.
inline long bits_for_scale(const Real& scale, const Real& magnitude = Real(1)) {
  const long base = working_bits();
  const long es = binary_exponent(scale);
  if (es == std::numeric_limits<long>::min()) return base;
  const long em = std::max(1L, binary_exponent(magnitude));
  return std::max(base, em - es + kGuardBits);
}

/// Shortest decimal string that reads back to exactly `x` at x's own precision.
inline std::string to_decimal(const Real& x) {
  mpfr_srcptr p = x.backend().data();
  if (mpfr_nan_p(p)) return "nan";
  if (mpfr_inf_p(p)) return mpfr_signbit(p) ? "-inf" : "inf";
  if (mpfr_zero_p(p)) return mpfr_signbit(p) ? "-0" : "0";
  mpfr_exp_t exp10 = 0;
  char* raw = mpfr_get_str(nullptr, &exp10, 10, 0, p, MPFR_RNDN);
  std::string digits(raw);
  mpfr_free_str(raw);
  std::string out;
  if (digits.front() == '-') {
    out.push_back('-');
    digits.erase(0, 1);
  }
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  out.push_back(digits.front());
  if (digits.size() > 1) {
    out.push_back('.');
    out.append(digits, 1, std::string::npos);
  }
  const long e = static_cast<long>(exp10) - 1;
  if (e != 0) out += "e" + std::to_string(e);
  return out;
}

/// Fixed significant-digit rendering for reports and CSV (not round-trip).
inline std::string to_display(const Real& x, int digits = 17) {
  if (mpfr_zero_p(x.backend().data())) return "0";
  return x.str(digits, std::ios_base::scientific);
}

/// Parses a decimal numeral at exactly `bits` of precision.
inline Real parse_real(std::string_view text, long bits) {
  std::string s(text);
  const auto first = s.find_first_not_of(" \t");
  const auto last = s.find_last_not_of(" \t");
  if (first == std::string::npos) throw Error("malformed numeral: empty");
  s = s.substr(first, last - first + 1);
  Real r;
  mpfr_set_prec(r.backend().data(), static_cast<mpfr_prec_t>(bits));
  if (mpfr_set_str(r.backend().data(), s.c_str(), 10, MPFR_RNDN) != 0)
    throw Error("malformed numeral: '" + s + "'");
  return r;
}

inline Real parse_real(std::string_view text) { return parse_real(text, working_bits()); }

/// Parses a decimal literal ("0.05", "-1.5e-3", "3/8") exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw Error("malformed numeral: empty");
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const Rational num = parse_rational(s.substr(0, slash));
    const Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw Error("malformed numeral: zero denominator");
    return num / den;
  }
  std::size_t i = 0;
  bool negative = false;
  if (s[i] == '+' || s[i] == '-') negative = s[i++] == '-';
  boost::multiprecision::cpp_int mantissa = 0;
  long scale = 0;
  bool any_digit = false;
  bool fraction = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      any_digit = true;
      if (fraction) --scale;
    } else if (c == '.' && !fraction) {
      fraction = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw Error("malformed numeral: '" + s + "'");
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw Error("malformed numeral: '" + s + "'");
    try {
      std::size_t used = 0;
      scale += std::stol(s.substr(i + 1), &used);
      if (i + 1 + used != s.size()) throw Error("malformed numeral: '" + s + "'");
    } catch (const std::logic_error&) {
      throw Error("malformed numeral: '" + s + "'");
    }
  }
  Rational value(mantissa);
  const boost::multiprecision::cpp_int ten = 10;
  if (scale > 0) value *= Rational(boost::multiprecision::pow(ten, static_cast<unsigned>(scale)));
  if (scale < 0) value /= Rational(boost::multiprecision::pow(ten, static_cast<unsigned>(-scale)));
  return negative ? Rational(-value) : value;
}

/// Correctly rounded conversion at the working precision.
inline Real to_real(const Rational& q) {
  return Real(boost::multiprecision::numerator(q)) / Real(boost::multiprecision::denominator(q));
}

inline Real pow2(long e) {
  Real r(1);
  mpfr_mul_2si(r.backend().data(), r.backend().data(), e, MPFR_RNDN);
  return r;
}

}  // namespace lipforge
