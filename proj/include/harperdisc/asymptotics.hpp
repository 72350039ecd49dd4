#ifndef HARPERDISC_ASYMPTOTICS_HPP
#define HARPERDISC_ASYMPTOTICS_HPP

// Large-Q asymptotics of the discriminant: Sigma'(0) for fixed P, the two
// uniform regimes of Sigma(x) at P = 1, the density of states, and the band
// width sums that follow from them.

#include <string>
#include <vector>

#include "harperdisc/bigfloat.hpp"
#include "harperdisc/exactdisc.hpp"
#include "harperdisc/numerics.hpp"
#include "harperdisc/specfun.hpp"

namespace harperdisc {

struct AsymptoticReport {
  FluxRatio flux;
  BigFloat exact;
  BigFloat asymptotic;
  BigFloat abs_error;
  BigFloat rel_error;  // abs_error / max(1, |exact|)
};

inline AsymptoticReport make_report(const FluxRatio& flux, BigFloat exact, BigFloat asymptotic) {
  AsymptoticReport r{flux, std::move(exact), std::move(asymptotic), {}, {}};
  r.abs_error = abs(r.exact - r.asymptotic);
  r.rel_error = r.abs_error / max(BigFloat(1L, r.exact.precision()), abs(r.exact));
  return r;
}

struct MuNu {
  BigFloat lambda;
  BigFloat mu;
  BigFloat nu;
};

namespace detail {

inline BigFloat rational(long num, long den, Precision prec) { return BigFloat(num, prec) / den; }

}  // namespace detail

/// A_{2k} ~ 2 gamma Gamma^2(1 - ks/2P) / Gamma^2(1/2 - ks/2P).
inline BigFloat approx_A_even(const FluxRatio& flux, long k) {
  if (!flux.odd()) throw ParityError("approx_A_even needs odd Q");
  Precision prec = flux.precision();
  BigFloat shift = detail::rational(k * flux.s, 2 * flux.P, prec);
  return 2 * flux.gamma * gamma_ratio_sq_reflected(1 - shift, BigFloat(0.5, prec) - shift);
}

/// A_{2k-1} ~ Gamma^2(ks/2P) / (2 gamma Gamma^2(1/2 + ks/2P)).
inline BigFloat approx_A_odd(const FluxRatio& flux, long k) {
  if (!flux.odd()) throw ParityError("approx_A_odd needs odd Q");
  Precision prec = flux.precision();
  BigFloat shift = detail::rational(k * flux.s, 2 * flux.P, prec);
  return gamma_ratio_sq_reflected(shift, BigFloat(0.5, prec) + shift) / (2 * flux.gamma);
}

/// prod_{i=1}^{t} cot^2(pi s i / 2P), the weight of the t-th block.
inline BigFloat cot_sq_weight(long P, long s, long t, Precision prec) {
  BigFloat w(1L, prec);
  for (long i = 1; i <= t; ++i) {
    w *= sqr(cos_pi_rational(s * i, 2 * P, prec) / sin_pi_rational(s * i, 2 * P, prec));
  }
  return w;
}

/// Coefficient of (2/pi) ln Q in Sigma'(0) / ((-1)^((Q-1)/2) Q) for the
/// residue class s: sum_{t<P} prod_{i<=t} cot^2(pi s i / 2P).
inline BigFloat leading_coefficient(long P, long s, Precision prec) {
  BigFloat total(prec);
  for (long t = 0; t < P; ++t) total += cot_sq_weight(P, s, t, prec);
  return total;
}

/// Sigma'(0) as Q -> infinity at fixed P:
///   (-1)^((Q-1)/2) Q { (1/pi) sum_t w_t [ 2 ln(Q / pi P) + eta(-st/2P) + eta((s-1)/2 - st/2P)
///                                          + Gamma^2(s/2 - st/2P) / Gamma^2((s+1)/2 - st/2P) ]
///                      + 1 + (1/pi) sum_{m=1}^{(s-1)/2} Gamma^2(m - 1/2) / Gamma^2(m) }
inline BigFloat sigma_prime_zero_asym(const FluxRatio& flux) {
  if (!flux.odd()) throw ParityError("sigma_prime_zero_asym needs odd Q");
  if (flux.r < 1) throw DecompositionError("sigma_prime_zero_asym needs Q > s");
  const long P = flux.P, Q = flux.Q, s = flux.s;
  Precision prec = flux.precision();
  Precision work = prec.plus(16);
  BigFloat pw = pi(work);
  BigFloat eta_tol = BigFloat::pow2(-work.bits(), work);
  BigFloat two_log = 2 * log(BigFloat(Q, work) / (pw * P));

  BigFloat blocks(work);
  for (long t = 0; t < P; ++t) {
    BigFloat shift = detail::rational(s * t, 2 * P, work);
    BigFloat b1 = -shift;
    BigFloat b2 = detail::rational(s - 1, 2, work) - shift;
    BigFloat term(work);
    try {
      term = two_log + eta_const(b1, eta_tol).value + eta_const(b2, eta_tol).value +
             gamma_ratio_sq_reflected(detail::rational(s, 2, work) - shift, detail::rational(s + 1, 2, work) - shift);
    } catch (const DomainError& e) {
      throw DomainError("sigma_prime_zero_asym: P=" + std::to_string(P) + " s=" + std::to_string(s) +
                        " t=" + std::to_string(t) + ": " + e.what());
    }
    blocks += cot_sq_weight(P, s, t, work) * term;
  }

  BigFloat trailing(work);
  for (long m = 1; m <= (s - 1) / 2; ++m) {
    trailing += gamma_ratio_sq(BigFloat(m, work) - BigFloat(0.5, work), BigFloat(m, work));
  }
  BigFloat value = flux.parity_sign() * Q * (blocks / pw + 1 + trailing / pw);
  return value.rounded(prec);
}

/// ln 16 + C - pi, the value of eta(0).
inline BigFloat eta_zero_closed_form(Precision prec) {
  Precision work = prec.plus(16);
  BigFloat v = 4 * ln2(work) + euler_gamma(work) - pi(work);
  return v.rounded(prec);
}

/// Sigma'(0) ~ (2/pi) (-1)^((Q-1)/2) Q (ln(Q/pi) + eta(0) + pi) at P = 1.
inline BigFloat sigma_prime_zero_asym_p1(long Q, Precision prec) {
  if (Q < 1 || Q % 2 == 0) throw ParityError("sigma_prime_zero_asym_p1 needs odd Q");
  Precision work = prec.plus(16);
  BigFloat pw = pi(work);
  int sign = ((Q - 1) / 2) % 2 == 0 ? 1 : -1;
  BigFloat eta0 = eta_const(BigFloat(0L, work), BigFloat::pow2(-work.bits(), work)).value;
  BigFloat value = 2 / pw * sign * Q * (log(BigFloat(Q, work) / pw) + eta0 + pw);
  return value.rounded(prec);
}

/// Sigma(x) for |x| << 1 at P = 1, lambda = x/4:
///   4 cosh(lambda Q) cos((2 lambda Q / pi) ln(4Q/pi) - 2 arg Gamma(1/2 + i lambda Q / pi) - pi Q / 2).
inline BigFloat uniform_center(long Q, const BigFloat& x) {
  if (Q < 1 || Q % 2 == 0) throw ParityError("uniform_center needs odd Q");
  Precision prec = x.precision();
  Precision work = prec.plus(16);
  BigFloat pw = pi(work);
  BigFloat lq = x.rounded(work) * Q / 4;
  BigFloat phase = 2 * lq / pw * log(4 * BigFloat(Q, work) / pw) - 2 * arg_gamma_half_plus_iy(lq / pw) -
                   pw * (Q % 4) / 2;  // pi Q / 2 reduced mod 2 pi
  BigFloat value = 4 * cosh(lq) * cos(phase);
  return value.rounded(prec);
}

/// mu(lambda) = int_{t0}^{1/2} arccosh(2 lambda - cos 2 pi t) dt and
/// nu(lambda) = int_0^{t0} arccos(2 lambda - cos 2 pi t) dt, t0 = arccos(2 lambda - 1) / 2 pi.
/// Both integrands have a square-root branch point at t0.
inline MuNu mu_nu(const BigFloat& lambda, const BigFloat& tol) {
  if (!(lambda > 0) || !(lambda < 1)) throw DomainError("mu_nu: lambda must lie in (0, 1), got " + lambda.to_string(10));
  Precision prec = max(lambda.precision(), Precision(bits_for_tolerance(tol)));
  Precision work = prec.plus(16);
  BigFloat lw = lambda.rounded(work);
  BigFloat two_pi = 2 * pi(work);
  BigFloat t0 = acos(2 * lw - 1) / two_pi;
  BigFloat one(1L, work);
  QuadratureSpec spec{tol / 4};
  spec.endpoint_rule = EndpointRule::sqrt_singularity;

  auto mu_integrand = [&](const BigFloat& t) { return acosh(max(2 * lw - cos(two_pi * t), one)); };
  auto nu_integrand = [&](const BigFloat& t) { return acos(min(2 * lw - cos(two_pi * t), one)); };
  BigFloat mu = integrate(mu_integrand, t0, BigFloat(0.5, work), spec);
  BigFloat nu = integrate(nu_integrand, BigFloat(0L, work), t0, spec);
  return MuNu{lambda, mu.rounded(prec), nu.rounded(prec)};
}

inline MuNu mu_nu(const BigFloat& lambda) {
  Precision p = lambda.precision();
  return mu_nu(lambda, BigFloat::pow2(-(p.bits() - 8), p));
}

/// Sigma(x) ~ 2 e^{2 Q mu} cos(2 Q nu) for xQ >> 1 at P = 1, lambda = |x|/4,
/// with Sigma(-x) = (-1)^Q Sigma(x).
inline BigFloat uniform_away(long Q, const BigFloat& x) {
  if (Q < 1) throw DomainError("uniform_away needs Q >= 1");
  if (!(abs(x) < 4)) throw DomainError("uniform_away: need |x| < 4, got " + x.to_string(10));
  if (x.iszero()) throw DomainError("uniform_away: x = 0 lies in the central regime");
  Precision prec = x.precision();
  Precision work = prec.plus(16 + static_cast<long>(std::log2(static_cast<double>(Q)) + 1));
  MuNu mn = mu_nu(abs(x).rounded(work) / 4);
  BigFloat value = 2 * exp(2 * Q * mn.mu) * cos(2 * Q * mn.nu);
  if (x.sign() < 0 && Q % 2 == 1) value = -value;
  return value.rounded(prec);
}

/// Density of states rho(x) = K'(|x|/4) / (2 pi^2); it integrates to 1 over (-4, 4).
inline BigFloat dos(const BigFloat& x) {
  if (!(abs(x) < 4)) throw DomainError("dos: need |x| < 4, got " + x.to_string(10));
  if (x.iszero()) throw SingularityError("dos: logarithmic singularity at x = 0");
  Precision prec = x.precision();
  Precision work = prec.plus(16);
  BigFloat value = elliptic_k_prime(abs(x.rounded(work)) / 4) / (2 * sqr(pi(work)));
  return value.rounded(prec);
}

/// arcsin(1 / cosh t) = 2 arctan(e^{-|t|}), the form without cancellation near t = 0.
inline BigFloat arcsin_sech(const BigFloat& t) { return 2 * atan(exp(-abs(t))); }

/// delta(t) = (4 pi / (Q ln Q)) arcsin(1 / cosh t), width of the bands near t = lambda Q.
inline BigFloat central_band_width_asym(long Q, const BigFloat& t) {
  if (Q < 3) throw DomainError("central_band_width_asym needs Q >= 3");
  Precision prec = t.precision();
  Precision work = prec.plus(16);
  BigFloat value = 4 * pi(work) / (Q * log(BigFloat(Q, work))) * arcsin_sech(t.rounded(work));
  return value.rounded(prec);
}

/// W ~ 32 beta(2) / (pi Q).
inline BigFloat thouless_w(long Q, Precision prec) {
  if (Q < 3) throw DomainError("thouless_w needs Q >= 3");
  Precision work = prec.plus(16);
  BigFloat value = 32 * catalan(work) / (pi(work) * Q);
  return value.rounded(prec);
}

/// int_0^inf arcsin^d(1 / cosh t) dt, truncated at T where the tail bound
/// 2^d e^{-dT} / d falls below tol/2.
inline BigFloat arcsin_sech_power_integral(const BigFloat& d, const BigFloat& tol) {
  if (!(d > 0) || d > 1) throw DomainError("exponent d must lie in (0, 1], got " + d.to_string(10));
  Precision prec = max(d.precision(), Precision(bits_for_tolerance(tol)));
  Precision work = prec.plus(16);
  BigFloat dw = d.rounded(work);
  // e^{-dT} 2^d / d <= tol/2  =>  T >= (ln(2^{d+1} / (d tol))) / d
  BigFloat cutoff = floor(log(pow(BigFloat(2L, work), dw + 1) / (dw * tol.rounded(work))) / dw) + 1;
  QuadratureSpec spec{tol / 2};
  auto f = [&](const BigFloat& t) { return pow(arcsin_sech(t), dw); };
  return integrate(f, BigFloat(0L, work), cutoff, spec).rounded(prec);
}

/// W(d) ~ (4^{1+d} / pi^{2-d}) / (Q^d ln^{d-1} Q) * int_0^inf arcsin^d(1/cosh t) dt.
inline BigFloat w_d_asym(long Q, const BigFloat& d) {
  if (Q < 3) throw DomainError("w_d_asym needs Q >= 3");
  if (!(d > 0) || d > 1) throw DomainError("w_d_asym: d must lie in (0, 1], got " + d.to_string(10));
  Precision prec = d.precision();
  Precision work = prec.plus(16);
  BigFloat dw = d.rounded(work);
  BigFloat integral = arcsin_sech_power_integral(dw, BigFloat::pow2(-(prec.bits() - 8), work));
  BigFloat lq = log(BigFloat(Q, work));
  BigFloat value = pow(BigFloat(4L, work), 1 + dw) / pow(pi(work), 2 - dw) /
                   (pow(BigFloat(Q, work), dw) * pow(lq, dw - 1)) * integral;
  return value.rounded(prec);
}

}  // namespace harperdisc

#endif  // HARPERDISC_ASYMPTOTICS_HPP
