#ifndef HARPERDISC_SPECFUN_HPP
#define HARPERDISC_SPECFUN_HPP

// Special functions used by the asymptotic formulas: log-gamma and squared
// gamma ratios, the phase of Gamma(1/2+iy), the complete elliptic integral K,
// Catalan's and Euler's constants, and the Euler-type constants eta(b).

#include <gmpxx.h>

#include <cmath>
#include <mutex>
#include <vector>

#include "harperdisc/bigfloat.hpp"
#include "harperdisc/numerics.hpp"

namespace harperdisc {

namespace detail {

/// Exact Bernoulli numbers B_0..B_n (B_1 = -1/2), grown on demand and never
/// modified once computed.
inline mpq_class bernoulli(int n) {
  static std::mutex mu;
  static std::vector<mpq_class> table{mpq_class(1)};
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<int>(table.size()) <= n) {
    int m = static_cast<int>(table.size());
    if (m > 1 && m % 2 == 1) {
      table.emplace_back(0);
      continue;
    }
    // B_m = -1/(m+1) * sum_{k<m} C(m+1,k) B_k
    mpz_class binom = 1;  // C(m+1, 0)
    mpq_class acc = 0;
    for (int k = 0; k < m; ++k) {
      if (!(k > 1 && k % 2 == 1)) acc += mpq_class(binom) * table[k];
      binom = binom * (m + 1 - k) / (k + 1);
    }
    mpq_class bm = -acc / (m + 1);
    bm.canonicalize();
    table.push_back(bm);
  }
  return table[n];
}

inline BigFloat to_bigfloat(const mpq_class& q, Precision prec) {
  BigFloat out(prec);
  mpfr_set_q(out.raw(), q.get_mpq_t(), MPFR_RNDN);
  return out;
}

inline BigFloat bernoulli_b(int n, Precision prec) { return to_bigfloat(bernoulli(n), prec); }

/// Bernoulli polynomial B_n(x) = sum_k C(n,k) B_k x^(n-k).
inline BigFloat bernoulli_poly(int n, const BigFloat& x) {
  Precision prec = x.precision();
  BigFloat sum(prec);
  mpz_class binom = 1;
  for (int k = 0; k <= n; ++k) {
    mpq_class bk = bernoulli(k);
    if (bk != 0) sum += to_bigfloat(bk * binom, prec) * pow(x, n - k);
    binom = binom * (n - k) / (k + 1);
  }
  return sum;
}

inline bool is_nonpositive_integer(const BigFloat& x) { return x <= 0 && floor(x) == x; }

/// Shift target for Stirling's series at a working precision.
inline long stirling_shift(Precision work) { return std::max<long>(20, work.bits() / 4); }

struct Complex {
  BigFloat re, im;
};

inline Complex cmul(const Complex& a, const Complex& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

inline Complex cinv(const Complex& a) {
  BigFloat d = a.re * a.re + a.im * a.im;
  return {a.re / d, -a.im / d};
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline BigFloat log_gamma(const BigFloat& x) {
  if (!(x > 0)) throw DomainError("log_gamma: argument must be positive, got " + x.to_string(10));
  Precision prec = x.precision();
  Precision work = prec.plus(32);
  BigFloat z = x.rounded(work);
  const long target = detail::stirling_shift(work);

  // Shift up with Gamma(z) = Gamma(z+m) / (z (z+1) ... (z+m-1)).
  BigFloat shift_product(1L, work);
  while (z < target) {
    shift_product *= z;
    z += 1;
  }

  BigFloat two_pi = 2 * pi(work);
  BigFloat result = (z - 0.5) * log(z) - z + log(two_pi) / 2;
  BigFloat inv = 1 / z;
  BigFloat inv_sq = inv * inv;
  BigFloat power = inv;  // z^(1-2k)
  BigFloat threshold = ldexp(abs(result) + 1, -work.bits());
  BigFloat previous(work);
  for (int k = 1; k < 2000; ++k) {
    BigFloat term = detail::bernoulli_b(2 * k, work) * power / (2 * k * (2 * k - 1));
    if (k > 1 && abs(term) > abs(previous)) break;  // asymptotic series turned
    result += term;
    if (abs(term) < threshold) break;
    previous = term;
    power *= inv_sq;
  }
  result -= log(shift_product);
  return result.rounded(prec);
}

/// ln|Gamma(x)| for any real x that is not a pole.
inline BigFloat log_abs_gamma(const BigFloat& x) {
  if (detail::is_nonpositive_integer(x)) {
    throw DomainError("gamma has a pole at " + x.to_string(10));
  }
  if (x > 0) return log_gamma(x);
  // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
  Precision work = x.precision().plus(16);
  BigFloat xw = x.rounded(work);
  BigFloat pw = pi(work);
  BigFloat value = log(pw) - log(abs(sin(pw * xw))) - log_gamma(1 - xw);
  return value.rounded(x.precision());
}

/// Gamma(a)^2 / Gamma(b)^2 for a, b > 0.
inline BigFloat gamma_ratio_sq(const BigFloat& a, const BigFloat& b) {
  if (!(a > 0) || !(b > 0)) {
    throw DomainError("gamma_ratio_sq: arguments must be positive (a=" + a.to_string(8) + ", b=" + b.to_string(8) +
                      ")");
  }
  Precision prec = max(a.precision(), b.precision());
  Precision work = prec.plus(16);
  BigFloat value = exp(2 * (log_gamma(a.rounded(work)) - log_gamma(b.rounded(work))));
  return value.rounded(prec);
}

/// Gamma(a)^2 / Gamma(b)^2 for any real a, b away from the poles of Gamma.
/// Squares are positive, so the reflection formula carries over directly.
inline BigFloat gamma_ratio_sq_reflected(const BigFloat& a, const BigFloat& b) {
  if (a > 0 && b > 0) return gamma_ratio_sq(a, b);
  Precision prec = max(a.precision(), b.precision());
  Precision work = prec.plus(16);
  BigFloat value = exp(2 * (log_abs_gamma(a.rounded(work)) - log_abs_gamma(b.rounded(work))));
  return value.rounded(prec);
}

/// Continuous branch of arg Gamma(1/2 + iy), zero at y = 0 and odd in y.
inline BigFloat arg_gamma_half_plus_iy(const BigFloat& y) {
  Precision prec = y.precision();
  Precision work = prec.plus(32);
  BigFloat yw = y.rounded(work);
  const long shift = detail::stirling_shift(work);

  // arg Gamma(z) = arg Gamma(z+N) - sum_k arg(z+k); every z+k has positive
  // real part, so atan2 stays on one continuous branch.
  BigFloat shifted_sum(work);
  for (long k = 0; k < shift; ++k) shifted_sum += atan2(yw, BigFloat(k, work) + 0.5);

  detail::Complex w{BigFloat(shift, work) + 0.5, yw};
  BigFloat modulus_log = log(w.re * w.re + w.im * w.im) / 2;
  BigFloat arg_w = atan2(w.im, w.re);
  BigFloat result = (w.re - 0.5) * arg_w + w.im * modulus_log - w.im;

  detail::Complex inv = detail::cinv(w);
  detail::Complex inv_sq = detail::cmul(inv, inv);
  detail::Complex power = inv;
  BigFloat threshold = ldexp(abs(result) + 1, -work.bits());
  BigFloat previous(work);
  for (int k = 1; k < 2000; ++k) {
    BigFloat term = detail::bernoulli_b(2 * k, work) * power.im / (2 * k * (2 * k - 1));
    BigFloat bound = detail::bernoulli_b(2 * k, work) / (2 * k * (2 * k - 1)) *
                     sqrt(power.re * power.re + power.im * power.im);
    if (k > 1 && abs(bound) > abs(previous)) break;
    result += term;
    if (abs(bound) < threshold) break;
    previous = bound;
    power = detail::cmul(power, inv_sq);
  }
  result -= shifted_sum;
  return result.rounded(prec);
}

/// Arithmetic-geometric mean of two nonnegative numbers.
inline BigFloat agm(BigFloat a, BigFloat g) {
  Precision prec = max(a.precision(), g.precision());
  a = a.rounded(prec);
  g = g.rounded(prec);
  if (a.iszero() || g.iszero()) return BigFloat(prec);
  BigFloat tol = BigFloat::pow2(-(prec.bits() - 4), prec);
  for (int i = 0; i < 200 && abs(a - g) > tol * a; ++i) {
    BigFloat next = (a + g) / 2;
    g = sqrt(a * g);
    a = std::move(next);
  }
  return (a + g) / 2;
}

/// Complete elliptic integral of the first kind, K(k) = int_0^{pi/2}
/// (1 - k^2 sin^2 u)^{-1/2} du, taking the modulus k (not the parameter k^2).
inline BigFloat elliptic_k(const BigFloat& modulus) {
  if (modulus < 0 || !(modulus < 1)) {
    throw DomainError("elliptic_k: modulus must lie in [0,1), got " + modulus.to_string(10));
  }
  Precision prec = modulus.precision();
  Precision work = prec.plus(16);
  BigFloat k = modulus.rounded(work);
  BigFloat kc = sqrt((1 - k) * (1 + k));
  return (pi(work) / (2 * agm(BigFloat(1L, work), kc))).rounded(prec);
}

/// Complementary integral K'(lambda) = K(sqrt(1 - lambda^2)) for lambda in
/// (0,1]; evaluated as pi / (2 agm(1, lambda)) so small lambda stays accurate.
inline BigFloat elliptic_k_prime(const BigFloat& lambda) {
  if (!(lambda > 0) || lambda > 1) {
    throw DomainError("elliptic_k_prime: argument must lie in (0,1], got " + lambda.to_string(10));
  }
  Precision prec = lambda.precision();
  Precision work = prec.plus(16);
  return (pi(work) / (2 * agm(BigFloat(1L, work), lambda.rounded(work)))).rounded(prec);
}

/// Catalan's constant beta(2) = sum_k (-1)^k / (2k+1)^2, summed with the
/// Cohen-Rodriguez Villegas-Zagier acceleration (error ~ 5.83^-n).
inline BigFloat catalan(Precision prec) {
  Precision work = prec.plus(32);
  const long n = static_cast<long>(std::ceil((work.bits() + 8) / 2.5431066063272239)) + 2;
  BigFloat d = pow(3 + sqrt(BigFloat(8L, work)), n);
  d = (d + 1 / d) / 2;
  BigFloat b(-1L, work);
  BigFloat c = -d;
  BigFloat s(work);
  for (long k = 0; k < n; ++k) {
    c = b - c;
    BigFloat denom(2 * k + 1, work);
    s += c / (denom * denom);
    b = b * ((k + n) * static_cast<double>(k - n)) / ((k + 0.5) * (k + 1));
  }
  return (s / d).rounded(prec);
}

/// Euler's constant from the Euler-Maclaurin expansion of H_M - ln M.
inline BigFloat euler_gamma(Precision prec) {
  Precision work = prec.plus(32);
  const long m = std::max<long>(16, work.bits() / 4);
  BigFloat harmonic(work);
  for (long k = m; k >= 1; --k) harmonic += BigFloat(1L, work) / k;
  BigFloat mw(m, work);
  BigFloat value = harmonic - log(mw) - 1 / (2 * mw);
  BigFloat inv_sq = 1 / (mw * mw);
  BigFloat power = inv_sq;
  BigFloat threshold = BigFloat::pow2(-work.bits(), work);
  for (int j = 1; j < 4000; ++j) {
    BigFloat term = detail::bernoulli_b(2 * j, work) * power / (2 * j);
    value += term;
    if (abs(term) < threshold) break;
    power *= inv_sq;
  }
  return value.rounded(prec);
}

/// eta(b) = lim_M ( sum_{k=1}^M Gamma^2(k+b+1/2)/Gamma^2(k+b+1) - ln M ).
struct EtaConstant {
  BigFloat b;
  BigFloat value;
  BigFloat tail_error_bound;
  long cutoff_M = 0;
};

namespace detail {

inline constexpr int kEtaSeriesTerms = 32;
inline constexpr int kEtaEulerMaclaurinTerms = 12;

/// Coefficients e_1..e_n of Gamma^2(w+alpha)/Gamma^2(w+beta) = sum e_n w^-n
/// (large w), for alpha - beta = -1/2, from the Bernoulli-polynomial form of
/// Stirling's series for ln Gamma(w+a) - ln Gamma(w+b).
inline std::vector<BigFloat> eta_summand_series(const BigFloat& alpha, const BigFloat& beta, int terms) {
  Precision prec = max(alpha.precision(), beta.precision());
  std::vector<BigFloat> g(terms, BigFloat(prec));
  for (int n = 1; n < terms; ++n) {
    BigFloat diff = bernoulli_poly(n + 1, alpha) - bernoulli_poly(n + 1, beta);
    g[n] = 2 * diff / (static_cast<long>(n) * (n + 1));
    if (n % 2 == 0) g[n] = -g[n];
  }
  // exp of the power series sum g_n u^n.
  std::vector<BigFloat> h(terms, BigFloat(prec));
  h[0] = BigFloat(1L, prec);
  for (int n = 1; n < terms; ++n) {
    BigFloat acc(prec);
    for (int j = 1; j <= n; ++j) acc += j * g[j] * h[n - j];
    h[n] = acc / n;
  }
  // f(w) = w^-1 * sum h_n w^-n, so e_{n+1} = h_n; index e by power.
  std::vector<BigFloat> e(terms + 1, BigFloat(prec));
  for (int n = 0; n < terms; ++n) e[n + 1] = h[n];
  return e;
}

/// Summand Gamma^2(k+alpha)/Gamma^2(k+beta); zero when Gamma(k+beta) has a pole.
inline BigFloat eta_summand(long k, const BigFloat& alpha, const BigFloat& beta) {
  BigFloat num = alpha + k;
  BigFloat den = beta + k;
  if (is_nonpositive_integer(den)) return BigFloat(num.precision());
  return gamma_ratio_sq_reflected(num, den);
}

}  // namespace detail

/// eta(b) from a partial sum to cutoff M plus the Euler-Maclaurin tail of the
/// asymptotic expansion of the summand. Fails for b + 1/2 a nonpositive
/// half-integer offset (a summand hits a pole of Gamma).
inline EtaConstant eta_const_at_cutoff(const BigFloat& b, long cutoff, Precision prec) {
  if (cutoff < 2) throw DomainError("eta_const: cutoff must be >= 2");
  Precision work = prec.plus(32 + static_cast<long>(std::log2(static_cast<double>(cutoff))));
  BigFloat bw = b.rounded(work);
  BigFloat alpha = bw + 0.5;
  BigFloat beta = bw + 1;
  for (long k = 1; k <= cutoff; ++k) {
    if (detail::is_nonpositive_integer(alpha + k)) {
      throw DomainError("eta_const: summand has a pole at k=" + std::to_string(k) + " for b=" + b.to_string(10));
    }
    if (alpha + k > 0) break;
  }

  BigFloat partial(work);
  BigFloat term = detail::eta_summand(1, alpha, beta);
  for (long k = 1; k <= cutoff; ++k) {
    if (k > 1) {
      BigFloat prev_den = beta + (k - 1);
      if (term.iszero() || prev_den.iszero()) {
        term = detail::eta_summand(k, alpha, beta);
      } else {
        BigFloat ratio = (alpha + (k - 1)) / prev_den;
        term *= ratio * ratio;
      }
    }
    partial += term;
  }

  const int terms = detail::kEtaSeriesTerms;
  const int em_terms = detail::kEtaEulerMaclaurinTerms;
  std::vector<BigFloat> e = detail::eta_summand_series(alpha, beta, terms);
  BigFloat m(cutoff, work);
  BigFloat inv_m = 1 / m;

  // int_M^inf (f(w) - 1/w) dw = sum_{n>=2} e_n M^(1-n) / (n-1)
  BigFloat integral(work), last_integral(work);
  BigFloat power = inv_m;  // M^(1-n) for n=2
  for (int n = 2; n <= terms; ++n) {
    last_integral = e[n] * power / (n - 1);
    integral += last_integral;
    power *= inv_m;
  }

  // f^(k)(M) = sum_n e_n (-1)^k (n)_k M^(-n-k), (n)_k the rising factorial.
  auto derivative = [&](int order, BigFloat* last) {
    BigFloat sum(work);
    BigFloat mpow = pow(inv_m, order + 1);  // M^(-n-order) for n=1
    for (int n = 1; n <= terms; ++n) {
      BigFloat rising(1L, work);
      for (int i = 0; i < order; ++i) rising *= (n + i);
      BigFloat t = e[n] * rising * mpow;
      if (order % 2 == 1) t = -t;
      sum += t;
      if (last != nullptr) *last = t;
      mpow *= inv_m;
    }
    return sum;
  };

  BigFloat em_sum(work), last_em(work), worst_series_tail(work);
  BigFloat factorial(1L, work);
  for (int j = 1; j <= em_terms; ++j) {
    factorial *= (2 * j - 1) * (2 * j);
    BigFloat series_last(work);
    BigFloat deriv = derivative(2 * j - 1, &series_last);
    BigFloat coeff = detail::bernoulli_b(2 * j, work) / factorial;
    last_em = coeff * deriv;
    em_sum += last_em;
    worst_series_tail = max(worst_series_tail, abs(coeff * series_last));
  }

  BigFloat f_at_m = detail::eta_summand(cutoff, alpha, beta);
  BigFloat value = partial - log(m) + integral - f_at_m / 2 - em_sum;

  BigFloat roundoff = ldexp(abs(partial) + log(m) + 1, -(work.bits() - 8)) * cutoff;
  BigFloat bound = 2 * (abs(last_integral) + abs(last_em) + worst_series_tail) + roundoff;
  return EtaConstant{b.rounded(prec), value.rounded(prec), bound.rounded(prec), cutoff};
}

/// eta(b) to absolute error target_err, doubling the cutoff until the tail
/// bound is met.
inline EtaConstant eta_const(const BigFloat& b, const BigFloat& target_err) {
  if (!(target_err > 0)) throw DomainError("eta_const: target_err must be positive");
  Precision prec = max(b.precision(), Precision(bits_for_tolerance(target_err) + 16));
  double magnitude = std::abs(b.to_double());
  long cutoff = std::max<long>(32, static_cast<long>(std::ceil(8 * (magnitude + 1))));
  for (; cutoff <= (1L << 22); cutoff *= 2) {
    EtaConstant c = eta_const_at_cutoff(b, cutoff, prec);
    if (c.tail_error_bound <= target_err) return c;
  }
  throw NonConvergence("eta_const: tail bound above " + target_err.to_string(4) + " for b=" + b.to_string(10));
}

}  // namespace harperdisc

#endif  // HARPERDISC_SPECFUN_HPP
