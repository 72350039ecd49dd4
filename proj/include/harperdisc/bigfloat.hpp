#ifndef HARPERDISC_BIGFLOAT_HPP
#define HARPERDISC_BIGFLOAT_HPP

// Extended-precision real scalar backed by MPFR.
//
// Every value carries its own precision. Binary operations round to the
// larger precision of the two operands; unary functions keep the precision
// of their argument. There is no global default precision, so values built
// on different threads never interact through hidden state.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

#include "harperdisc/errors.hpp"

namespace harperdisc {

/// Binary precision of a BigFloat, in bits. Never below 53.
class Precision {
 public:
  static constexpr long kMinBits = 53;

  constexpr explicit Precision(long bits) : bits_(bits) {
    if (bits < kMinBits) {
      throw DomainError("precision_bits must be >= 53, got " + std::to_string(bits));
    }
  }

  constexpr long bits() const { return bits_; }

  /// Roughly the number of significant decimal digits carried.
  constexpr int decimal_digits() const {
    return static_cast<int>((bits_ * 30103 + 99999) / 100000);
  }

  /// Same precision with `extra` guard bits.
  constexpr Precision plus(long extra) const { return Precision(bits_ + extra); }

  friend constexpr auto operator<=>(Precision, Precision) = default;

 private:
  long bits_;
};

constexpr Precision max(Precision a, Precision b) { return a.bits() >= b.bits() ? a : b; }

/// Default working precision for computations parameterized by Q.
constexpr Precision working_precision(long q) { return Precision(std::max<long>(128, 4 * q)); }

template <class T>
concept Arithmetic = std::integral<T> || std::floating_point<T>;

class BigFloat {
 public:
  BigFloat() : BigFloat(0.0, Precision(Precision::kMinBits)) {}

  template <Arithmetic T>
  BigFloat(T value, Precision prec) {
    mpfr_init2(v_, prec.bits());
    assign(value);
  }

  template <Arithmetic T>
  explicit BigFloat(T value) : BigFloat(value, Precision(Precision::kMinBits)) {}

  /// Uninitialised value of the given precision (set to zero).
  explicit BigFloat(Precision prec) : BigFloat(0L, prec) {}

  BigFloat(const BigFloat& other) {
    mpfr_init2(v_, mpfr_get_prec(other.v_));
    mpfr_set(v_, other.v_, MPFR_RNDN);
  }

  BigFloat(BigFloat&& other) noexcept {
    mpfr_init2(v_, Precision::kMinBits);
    mpfr_swap(v_, other.v_);
  }

  /// Copy of `other` rounded to `prec`.
  BigFloat(const BigFloat& other, Precision prec) {
    mpfr_init2(v_, prec.bits());
    mpfr_set(v_, other.v_, MPFR_RNDN);
  }

  BigFloat& operator=(const BigFloat& other) {
    if (this != &other) {
      mpfr_set_prec(v_, mpfr_get_prec(other.v_));
      mpfr_set(v_, other.v_, MPFR_RNDN);
    }
    return *this;
  }

  BigFloat& operator=(BigFloat&& other) noexcept {
    mpfr_swap(v_, other.v_);
    return *this;
  }

  ~BigFloat() { mpfr_clear(v_); }

  /// Parses a decimal string ("1.5", "-2e-30", "inf" is rejected).
  static BigFloat parse(std::string_view text, Precision prec) {
    BigFloat out(prec);
    std::string buf(text);
    if (buf.empty() || mpfr_set_str(out.v_, buf.c_str(), 10, MPFR_RNDN) != 0 || !out.isfinite()) {
      throw DomainError("not a finite decimal number: '" + buf + "'");
    }
    return out;
  }

  /// 2^exponent exactly.
  static BigFloat pow2(long exponent, Precision prec) {
    BigFloat out(1L, prec);
    mpfr_mul_2si(out.v_, out.v_, exponent, MPFR_RNDN);
    return out;
  }

  Precision precision() const { return Precision(static_cast<long>(mpfr_get_prec(v_))); }

  BigFloat rounded(Precision prec) const { return BigFloat(*this, prec); }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long to_long() const { return mpfr_get_si(v_, MPFR_RNDN); }

  bool isfinite() const { return mpfr_number_p(v_) != 0; }
  bool isnan() const { return mpfr_nan_p(v_) != 0; }
  bool iszero() const { return mpfr_zero_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }

  /// Binary exponent e with value = m * 2^e, 1/2 <= |m| < 1. Zero maps to LONG_MIN.
  long exponent() const {
    if (iszero() || !isfinite()) return std::numeric_limits<long>::min();
    return mpfr_get_exp(v_);
  }

  /// Scientific notation with `digits` significant digits, e.g. "-1.2345e-07".
  std::string to_string(int digits) const {
    if (isnan()) return "nan";
    if (mpfr_inf_p(v_)) return sign() < 0 ? "-inf" : "inf";
    digits = std::max(digits, 2);
    if (iszero()) return std::string("0.") + std::string(digits - 1, '0') + "e+00";
    mpfr_exp_t exp10 = 0;
    char* raw = mpfr_get_str(nullptr, &exp10, 10, static_cast<size_t>(digits), v_, MPFR_RNDN);
    std::string mant(raw);
    mpfr_free_str(raw);
    std::string out;
    if (mant.front() == '-') {
      out.push_back('-');
      mant.erase(mant.begin());
    }
    out.push_back(mant[0]);
    out.push_back('.');
    out.append(mant, 1, std::string::npos);
    long e = static_cast<long>(exp10) - 1;
    out.push_back('e');
    out.push_back(e < 0 ? '-' : '+');
    std::string es = std::to_string(std::labs(e));
    if (es.size() < 2) es.insert(es.begin(), '0');
    out += es;
    return out;
  }

  mpfr_srcptr get() const { return v_; }
  mpfr_ptr raw() { return v_; }

  BigFloat operator-() const {
    BigFloat out(precision());
    mpfr_neg(out.v_, v_, MPFR_RNDN);
    return out;
  }

  BigFloat& operator+=(const BigFloat& o) { return widen(o), mpfr_add(v_, v_, o.v_, MPFR_RNDN), *this; }
  BigFloat& operator-=(const BigFloat& o) { return widen(o), mpfr_sub(v_, v_, o.v_, MPFR_RNDN), *this; }
  BigFloat& operator*=(const BigFloat& o) { return widen(o), mpfr_mul(v_, v_, o.v_, MPFR_RNDN), *this; }
  BigFloat& operator/=(const BigFloat& o) { return widen(o), mpfr_div(v_, v_, o.v_, MPFR_RNDN), *this; }

  template <Arithmetic T>
  BigFloat& operator+=(T o) {
    if constexpr (std::integral<T>) mpfr_add_si(v_, v_, static_cast<long>(o), MPFR_RNDN);
    else mpfr_add_d(v_, v_, static_cast<double>(o), MPFR_RNDN);
    return *this;
  }
  template <Arithmetic T>
  BigFloat& operator-=(T o) {
    if constexpr (std::integral<T>) mpfr_sub_si(v_, v_, static_cast<long>(o), MPFR_RNDN);
    else mpfr_sub_d(v_, v_, static_cast<double>(o), MPFR_RNDN);
    return *this;
  }
  template <Arithmetic T>
  BigFloat& operator*=(T o) {
    if constexpr (std::integral<T>) mpfr_mul_si(v_, v_, static_cast<long>(o), MPFR_RNDN);
    else mpfr_mul_d(v_, v_, static_cast<double>(o), MPFR_RNDN);
    return *this;
  }
  template <Arithmetic T>
  BigFloat& operator/=(T o) {
    if constexpr (std::integral<T>) mpfr_div_si(v_, v_, static_cast<long>(o), MPFR_RNDN);
    else mpfr_div_d(v_, v_, static_cast<double>(o), MPFR_RNDN);
    return *this;
  }

  friend BigFloat operator+(BigFloat a, const BigFloat& b) { return a += b; }
  friend BigFloat operator-(BigFloat a, const BigFloat& b) { return a -= b; }
  friend BigFloat operator*(BigFloat a, const BigFloat& b) { return a *= b; }
  friend BigFloat operator/(BigFloat a, const BigFloat& b) { return a /= b; }

  template <Arithmetic T>
  friend BigFloat operator+(BigFloat a, T b) { return a += b; }
  template <Arithmetic T>
  friend BigFloat operator+(T a, BigFloat b) { return b += a; }
  template <Arithmetic T>
  friend BigFloat operator-(BigFloat a, T b) { return a -= b; }
  template <Arithmetic T>
  friend BigFloat operator-(T a, const BigFloat& b) {
    BigFloat out(b.precision());
    if constexpr (std::integral<T>) mpfr_si_sub(out.v_, static_cast<long>(a), b.v_, MPFR_RNDN);
    else mpfr_d_sub(out.v_, static_cast<double>(a), b.v_, MPFR_RNDN);
    return out;
  }
  template <Arithmetic T>
  friend BigFloat operator*(BigFloat a, T b) { return a *= b; }
  template <Arithmetic T>
  friend BigFloat operator*(T a, BigFloat b) { return b *= a; }
  template <Arithmetic T>
  friend BigFloat operator/(BigFloat a, T b) { return a /= b; }
  template <Arithmetic T>
  friend BigFloat operator/(T a, const BigFloat& b) {
    BigFloat out(b.precision());
    if constexpr (std::integral<T>) mpfr_si_div(out.v_, static_cast<long>(a), b.v_, MPFR_RNDN);
    else mpfr_d_div(out.v_, static_cast<double>(a), b.v_, MPFR_RNDN);
    return out;
  }

  friend bool operator==(const BigFloat& a, const BigFloat& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const BigFloat& a, const BigFloat& b) {
    if (a.isnan() || b.isnan()) return std::partial_ordering::unordered;
    int c = mpfr_cmp(a.v_, b.v_);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }

  template <Arithmetic T>
  friend bool operator==(const BigFloat& a, T b) { return compare(a, b) == 0 && !a.isnan(); }
  template <Arithmetic T>
  friend std::partial_ordering operator<=>(const BigFloat& a, T b) {
    if (a.isnan()) return std::partial_ordering::unordered;
    if constexpr (std::floating_point<T>) {
      if (std::isnan(b)) return std::partial_ordering::unordered;
    }
    int c = compare(a, b);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }

  friend std::ostream& operator<<(std::ostream& os, const BigFloat& x) {
    return os << x.to_string(static_cast<int>(std::min<long>(x.precision().decimal_digits(), 40)));
  }

  friend void swap(BigFloat& a, BigFloat& b) noexcept { mpfr_swap(a.v_, b.v_); }

 private:
  template <Arithmetic T>
  void assign(T value) {
    if constexpr (std::integral<T>) mpfr_set_si(v_, static_cast<long>(value), MPFR_RNDN);
    else mpfr_set_d(v_, static_cast<double>(value), MPFR_RNDN);
  }

  template <Arithmetic T>
  static int compare(const BigFloat& a, T b) {
    if constexpr (std::integral<T>) return mpfr_cmp_si(a.v_, static_cast<long>(b));
    else return mpfr_cmp_d(a.v_, static_cast<double>(b));
  }

  // Raise our precision to o's, keeping the value.
  void widen(const BigFloat& o) {
    if (mpfr_get_prec(o.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(o.v_), MPFR_RNDN);
  }

  mpfr_t v_;
};

// ---- elementary functions -------------------------------------------------

namespace detail {
template <int (*Fn)(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t)>
BigFloat unary(const BigFloat& x) {
  BigFloat out(x.precision());
  Fn(out.raw(), x.get(), MPFR_RNDN);
  return out;
}
}  // namespace detail

inline BigFloat abs(const BigFloat& x) { return detail::unary<mpfr_abs>(x); }
inline BigFloat sqrt(const BigFloat& x) { return detail::unary<mpfr_sqrt>(x); }
inline BigFloat sqr(const BigFloat& x) { return detail::unary<mpfr_sqr>(x); }
inline BigFloat exp(const BigFloat& x) { return detail::unary<mpfr_exp>(x); }
inline BigFloat log(const BigFloat& x) { return detail::unary<mpfr_log>(x); }
inline BigFloat log1p(const BigFloat& x) { return detail::unary<mpfr_log1p>(x); }
inline BigFloat sin(const BigFloat& x) { return detail::unary<mpfr_sin>(x); }
inline BigFloat cos(const BigFloat& x) { return detail::unary<mpfr_cos>(x); }
inline BigFloat tan(const BigFloat& x) { return detail::unary<mpfr_tan>(x); }
inline BigFloat cot(const BigFloat& x) { return detail::unary<mpfr_cot>(x); }
inline BigFloat asin(const BigFloat& x) { return detail::unary<mpfr_asin>(x); }
inline BigFloat acos(const BigFloat& x) { return detail::unary<mpfr_acos>(x); }
inline BigFloat atan(const BigFloat& x) { return detail::unary<mpfr_atan>(x); }
inline BigFloat cosh(const BigFloat& x) { return detail::unary<mpfr_cosh>(x); }
inline BigFloat sinh(const BigFloat& x) { return detail::unary<mpfr_sinh>(x); }
inline BigFloat acosh(const BigFloat& x) { return detail::unary<mpfr_acosh>(x); }
inline BigFloat floor(const BigFloat& x) {
  BigFloat out(x.precision());
  mpfr_floor(out.raw(), x.get());
  return out;
}

inline BigFloat atan2(const BigFloat& y, const BigFloat& x) {
  BigFloat out(max(y.precision(), x.precision()));
  mpfr_atan2(out.raw(), y.get(), x.get(), MPFR_RNDN);
  return out;
}

inline BigFloat pow(const BigFloat& x, const BigFloat& y) {
  BigFloat out(max(x.precision(), y.precision()));
  mpfr_pow(out.raw(), x.get(), y.get(), MPFR_RNDN);
  return out;
}

inline BigFloat pow(const BigFloat& x, long n) {
  BigFloat out(x.precision());
  mpfr_pow_si(out.raw(), x.get(), n, MPFR_RNDN);
  return out;
}

/// x * 2^n, exact.
inline BigFloat ldexp(const BigFloat& x, long n) {
  BigFloat out(x.precision());
  mpfr_mul_2si(out.raw(), x.get(), n, MPFR_RNDN);
  return out;
}

inline BigFloat min(const BigFloat& a, const BigFloat& b) { return b < a ? b : a; }
inline BigFloat max(const BigFloat& a, const BigFloat& b) { return a < b ? b : a; }

inline BigFloat pi(Precision prec) {
  BigFloat out(prec);
  mpfr_const_pi(out.raw(), MPFR_RNDN);
  return out;
}

inline BigFloat ln2(Precision prec) {
  BigFloat out(prec);
  mpfr_const_log2(out.raw(), MPFR_RNDN);
  return out;
}

/// sin(pi * num / den) with the integer argument reduced exactly first.
inline BigFloat sin_pi_rational(long num, long den, Precision prec) {
  long period = 2 * den;
  long m = num % period;
  if (m < 0) m += period;
  BigFloat arg = pi(prec.plus(8)) * m / den;
  return sin(arg).rounded(prec);
}

inline BigFloat cos_pi_rational(long num, long den, Precision prec) {
  return sin_pi_rational(2 * num + den, 2 * den, prec);
}

}  // namespace harperdisc

#endif  // HARPERDISC_BIGFLOAT_HPP
