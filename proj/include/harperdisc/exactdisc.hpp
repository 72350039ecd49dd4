#ifndef HARPERDISC_EXACTDISC_HPP
#define HARPERDISC_EXACTDISC_HPP

// The discriminant Sigma(x) of Harper's equation at flux P/Q, evaluated to
// working precision.
//
// For odd Q, Sigma(x) = -det(L - xI) where L is the Q x Q tridiagonal matrix
// with zero diagonal and off-diagonal entries 2 sin(pi P k / Q), k = 1..Q-1.
// For either parity, Sigma(x) = tr M(x, theta) + 2 cos(Q theta) where M is the
// one-period transfer matrix of
//     psi_{n+1} + psi_{n-1} + 2 cos(2 pi n P/Q + theta) psi_n = x psi_n.
// The sign of the trace term was fixed against the determinant at odd Q and
// needs no parity-dependent factor.

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "harperdisc/bigfloat.hpp"
#include "harperdisc/numerics.hpp"

namespace harperdisc {

/// The commensurability parameter P/Q and the quantities derived from it.
/// For odd Q, Q = 4 P r + s with s odd in [1, 4P-1].
struct FluxRatio {
  long P = 1;
  long Q = 1;
  BigFloat gamma;  // pi P / Q
  long s = 0;      // zero for even Q
  long r = 0;

  bool odd() const { return Q % 2 == 1; }
  Precision precision() const { return gamma.precision(); }
  /// (-1)^((Q-1)/2) for odd Q.
  int parity_sign() const { return ((Q - 1) / 2) % 2 == 0 ? 1 : -1; }
};

inline FluxRatio make_flux(long P, long Q, Precision prec) {
  if (P < 1 || Q < 1) {
    throw DomainError("flux P/Q needs positive integers, got " + std::to_string(P) + "/" + std::to_string(Q));
  }
  if (std::gcd(P, Q) != 1) {
    throw NotCoprime("P=" + std::to_string(P) + " and Q=" + std::to_string(Q) + " are not coprime");
  }
  FluxRatio f;
  f.P = P;
  f.Q = Q;
  f.gamma = pi(prec.plus(8)) * P / Q;
  f.gamma = f.gamma.rounded(prec);
  if (Q % 2 == 1) {
    f.s = Q % (4 * P);
    f.r = Q / (4 * P);
  }
  return f;
}

enum class Route { determinant, transfer_matrix };

inline const char* route_name(Route r) { return r == Route::determinant ? "determinant" : "transfer"; }

struct DiscriminantValue {
  BigFloat x;
  BigFloat sigma;
  BigFloat sigma_prime;
  Route route = Route::determinant;
};

/// Off-diagonal data of L plus the cached potential for the default phase.
/// Immutable once built; evaluate from as many threads as you like.
class DiscriminantModel {
 public:
  const FluxRatio& flux() const { return flux_; }
  long Q() const { return flux_.Q; }
  long P() const { return flux_.P; }
  Precision precision() const { return precision_; }
  std::span<const BigFloat> offdiag() const { return offdiag_; }
  std::span<const BigFloat> offdiag_sq() const { return offdiag_sq_; }
  /// 2 cos(2 pi P n / Q + theta*) for n = 1..Q at theta* = pi / (2Q).
  std::span<const BigFloat> default_potential() const { return potential_; }
  const BigFloat& default_theta() const { return theta_; }
  /// |prod_{k=1}^{(Q-1)/2} (2 sin(2 pi P k / Q))^2 - Q| for odd Q; zero for even Q.
  const BigFloat& identity_residual() const { return residual_; }

  friend DiscriminantModel build_model(long P, long Q, Precision prec);

 private:
  DiscriminantModel(FluxRatio flux, Precision prec) : flux_(std::move(flux)), precision_(prec) {}

  FluxRatio flux_;
  Precision precision_;
  std::vector<BigFloat> offdiag_;
  std::vector<BigFloat> offdiag_sq_;
  std::vector<BigFloat> potential_;
  BigFloat theta_;
  BigFloat residual_;
};

inline DiscriminantModel build_model(long P, long Q, Precision prec) {
  DiscriminantModel m(make_flux(P, Q, prec), prec);
  m.offdiag_.reserve(Q > 0 ? Q - 1 : 0);
  for (long k = 1; k < Q; ++k) {
    BigFloat v = 2 * sin_pi_rational(P * k, Q, prec);
    m.offdiag_sq_.push_back(v * v);
    m.offdiag_.push_back(std::move(v));
  }

  m.theta_ = pi(prec) / (2 * Q);
  // 2 cos(pi (4 P n + 1) / (2Q))
  for (long n = 1; n <= Q; ++n) m.potential_.push_back(2 * cos_pi_rational(4 * P * n + 1, 2 * Q, prec));

  m.residual_ = BigFloat(prec);
  if (Q % 2 == 1) {
    BigFloat product(1L, prec.plus(16));
    for (long k = 1; k <= (Q - 1) / 2; ++k) product *= m.offdiag_sq_[2 * k - 1];
    m.residual_ = abs(product - Q).rounded(prec);
    if (m.residual_ > BigFloat::pow2(-prec.bits() / 2, prec)) {
      throw PrecisionTooLow("sine-product identity residual " + m.residual_.to_string(4) + " at " +
                            std::to_string(prec.bits()) + " bits");
    }
  }
  return m;
}

/// Sigma(x) = -det(L - xI) and its derivative, from the three-term recurrence
/// for the leading minors differentiated alongside. MPFR keeps a separate
/// exponent per value, so the e^{O(Q)} growth of the minors cannot overflow.
namespace detail {

/// det(xI - L) and its derivative for any Q. This equals Sigma for both
/// parities: -det(L - xI) for odd Q, +det(L - xI) for even Q.
inline DiscriminantValue char_poly(const DiscriminantModel& model, const BigFloat& x) {
  Precision prec = max(model.precision(), x.precision());
  BigFloat xw = x.rounded(prec);
  BigFloat d_prev(1L, prec), d_cur = -xw;    // D_0, D_1
  BigFloat dd_prev(0L, prec), dd_cur(-1L, prec);
  auto sq = model.offdiag_sq();
  BigFloat tmp(prec), dtmp(prec);
  for (long k = 2; k <= model.Q(); ++k) {
    const BigFloat& b2 = sq[k - 2];
    // D_k = -x D_{k-1} - b^2 D_{k-2};  D'_k = -D_{k-1} - x D'_{k-1} - b^2 D'_{k-2}
    dtmp = -d_cur - xw * dd_cur - b2 * dd_prev;
    tmp = -xw * d_cur - b2 * d_prev;
    d_prev = std::move(d_cur);
    d_cur = std::move(tmp);
    dd_prev = std::move(dd_cur);
    dd_cur = std::move(dtmp);
    tmp = BigFloat(prec);
    dtmp = BigFloat(prec);
  }
  if (model.Q() % 2 == 1) {
    d_cur = -d_cur;
    dd_cur = -dd_cur;
  }
  return DiscriminantValue{xw, std::move(d_cur), std::move(dd_cur), Route::determinant};
}

}  // namespace detail

inline DiscriminantValue sigma_det(const DiscriminantModel& model, const BigFloat& x) {
  if (!model.flux().odd()) {
    throw ParityError("sigma_det needs odd Q (got Q=" + std::to_string(model.Q()) + "); use sigma_transfer");
  }
  return detail::char_poly(model, x);
}

namespace detail {

inline DiscriminantValue transfer_product(const DiscriminantModel& model, const BigFloat& x,
                                          std::span<const BigFloat> potential, const BigFloat& cos_q_theta) {
  Precision prec = max(model.precision(), x.precision());
  BigFloat xw = x.rounded(prec);
  // M = [[a, b], [c, d]] and its x-derivative.
  BigFloat a(1L, prec), b(0L, prec), c(0L, prec), d(1L, prec);
  BigFloat da(0L, prec), db(0L, prec), dc(0L, prec), dd(0L, prec);
  for (const BigFloat& v : potential) {
    BigFloat diag = xw - v;
    // T = [[diag, -1], [1, 0]],  dT/dx = [[1, 0], [0, 0]]
    BigFloat na = diag * a - c, nb = diag * b - d;
    BigFloat nda = a + diag * da - dc, ndb = b + diag * db - dd;
    c = std::move(a);
    d = std::move(b);
    dc = std::move(da);
    dd = std::move(db);
    a = std::move(na);
    b = std::move(nb);
    da = std::move(nda);
    db = std::move(ndb);
  }
  return DiscriminantValue{xw, a + d + 2 * cos_q_theta, da + dd, Route::transfer_matrix};
}

}  // namespace detail

/// Sigma(x) through the transfer matrix over one period at phase theta.
inline DiscriminantValue sigma_transfer(const DiscriminantModel& model, const BigFloat& x, const BigFloat& theta) {
  Precision prec = max(model.precision(), theta.precision());
  const long P = model.P(), Q = model.Q();
  BigFloat pw = pi(prec.plus(8));
  BigFloat th = theta.rounded(prec.plus(8));
  std::vector<BigFloat> potential;
  potential.reserve(Q);
  for (long n = 1; n <= Q; ++n) {
    long m = (2 * P * n) % (2 * Q);  // reduce 2 pi P n / Q exactly
    potential.push_back((2 * cos(pw * m / Q + th)).rounded(prec));
  }
  BigFloat cos_q_theta = cos(Q * th).rounded(prec);
  return detail::transfer_product(model, x, potential, cos_q_theta);
}

/// Sigma(x) through the transfer matrix at the default phase theta* = pi/(2Q),
/// where cos(Q theta*) = 0.
inline DiscriminantValue sigma_transfer(const DiscriminantModel& model, const BigFloat& x) {
  return detail::transfer_product(model, x, model.default_potential(), BigFloat(model.precision()));
}

/// Determinant route for odd Q, transfer route otherwise.
inline DiscriminantValue sigma(const DiscriminantModel& model, const BigFloat& x) {
  return model.flux().odd() ? sigma_det(model, x) : sigma_transfer(model, x);
}

/// Sigma'(0) = (-1)^((Q-1)/2) Q (1 + S), S = sum_k prod_{j<=k} sin^2((2j-1) gamma) / sin^2(2j gamma).
inline BigFloat sigma_prime_zero_exact(const FluxRatio& flux) {
  if (!flux.odd()) throw ParityError("sigma_prime_zero_exact needs odd Q");
  Precision prec = flux.precision();
  Precision work = prec.plus(16);
  BigFloat sum(work), product(1L, work);
  for (long k = 1; k <= (flux.Q - 1) / 2; ++k) {
    BigFloat num = sin_pi_rational((2 * k - 1) * flux.P, flux.Q, work);
    BigFloat den = sin_pi_rational(2 * k * flux.P, flux.Q, work);
    product *= sqr(num / den);
    sum += product;
  }
  BigFloat value = flux.parity_sign() * flux.Q * (1 + sum);
  return value.rounded(prec);
}

namespace detail {

inline void require_decomposition(const FluxRatio& flux) {
  if (!flux.odd()) throw ParityError("Q must be odd for the Q = 4Pr + s decomposition");
  if (flux.r < 1) {
    throw DecompositionError("need Q > s for the regrouped sum (P=" + std::to_string(flux.P) +
                             ", Q=" + std::to_string(flux.Q) + ", s=" + std::to_string(flux.s) + ")");
  }
}

/// sin^2(pi a / Q) / sin^2(pi b / Q)
inline BigFloat sine_sq_ratio(long a, long b, long q, Precision prec) {
  return sqr(sin_pi_rational(a, q, prec) / sin_pi_rational(b, q, prec));
}

}  // namespace detail

/// A_{2k} = prod_{j=1}^{r} sin^2((2j-1-ks/P) gamma) / sin^2((2j-ks/P) gamma), k = 0..P-1.
inline BigFloat a_even_exact(const FluxRatio& flux, long k) {
  detail::require_decomposition(flux);
  if (k < 0 || k > flux.P - 1) throw DomainError("a_even_exact: k must lie in [0, P-1]");
  Precision work = flux.precision().plus(16);
  BigFloat product(1L, work);
  const long P = flux.P, s = flux.s;
  for (long j = 1; j <= flux.r; ++j) {
    product *= detail::sine_sq_ratio((2 * j - 1) * P - k * s, 2 * j * P - k * s, flux.Q, work);
  }
  return product.rounded(flux.precision());
}

/// A_{2k-1} = prod_{j=1}^{r} sin^2((2j-1+ks/P) gamma) / sin^2((2j-2+ks/P) gamma), k = 1..P.
inline BigFloat a_odd_exact(const FluxRatio& flux, long k) {
  detail::require_decomposition(flux);
  if (k < 1 || k > flux.P) throw DomainError("a_odd_exact: k must lie in [1, P]");
  Precision work = flux.precision().plus(16);
  BigFloat product(1L, work);
  const long P = flux.P, s = flux.s;
  for (long j = 1; j <= flux.r; ++j) {
    product *= detail::sine_sq_ratio((2 * j - 1) * P + k * s, (2 * j - 2) * P + k * s, flux.Q, work);
  }
  return product.rounded(flux.precision());
}

/// S evaluated through its regrouping into blocks of r = (Q-s)/4P factors:
///   S = sum_{t<P} (A_0..A_{2t-1}) { sum_{m<=r} ( prod_{j<=m} R_t(j) + A_{2t} A_{2t+1} prod_{j<=m} R'_t(j) )
///                                    + A_{2t} (A_{2t+1} - 1) }
///       + (A_0..A_{2P-1}) sum_{m<=(s-1)/2} prod_{j<=m} sin^2((2j-1-s) gamma) / sin^2((2j-s) gamma)
/// This is an exact identity with the direct sum in sigma_prime_zero_exact.
inline BigFloat s_regrouped(const FluxRatio& flux) {
  detail::require_decomposition(flux);
  Precision prec = flux.precision();
  Precision work = prec.plus(16);
  const long P = flux.P, Q = flux.Q, s = flux.s, r = flux.r;

  std::vector<BigFloat> a_factors;  // A_0 .. A_{2P-1}
  for (long i = 0; i < 2 * P; ++i) {
    a_factors.push_back(i % 2 == 0 ? a_even_exact(flux, i / 2).rounded(work)
                                   : a_odd_exact(flux, (i + 1) / 2).rounded(work));
  }

  BigFloat total(work);
  BigFloat prefix(1L, work);  // A_0 ... A_{2t-1}
  for (long t = 0; t < P; ++t) {
    BigFloat inner(work);
    BigFloat first(1L, work), second(1L, work);
    const BigFloat pair = a_factors[2 * t] * a_factors[2 * t + 1];
    for (long m = 1; m <= r; ++m) {
      first *= detail::sine_sq_ratio((2 * m - 1) * P - t * s, 2 * m * P - t * s, Q, work);
      second *= detail::sine_sq_ratio((2 * m - 2) * P + (t + 1) * s, (2 * m - 1) * P + (t + 1) * s, Q, work);
      inner += first + pair * second;
    }
    inner += a_factors[2 * t] * (a_factors[2 * t + 1] - 1);
    total += prefix * inner;
    prefix *= pair;
  }

  BigFloat trailing(work), running(1L, work);
  for (long m = 1; m <= (s - 1) / 2; ++m) {
    running *= detail::sine_sq_ratio((2 * m - 1 - s) * P, (2 * m - s) * P, Q, work);
    trailing += running;
  }
  total += prefix * trailing;
  return total.rounded(prec);
}

/// Number of eigenvalues of L strictly below x (Sturm count from the LDL^T
/// pivots of L - xI).
inline long sturm_count(const DiscriminantModel& model, const BigFloat& x) {
  Precision prec = max(model.precision(), x.precision());
  BigFloat xw = x.rounded(prec);
  BigFloat tiny = BigFloat::pow2(-prec.bits(), prec) * (abs(xw) + 4);
  BigFloat pivot = -xw;
  if (pivot.iszero()) pivot = -tiny;
  long count = pivot.sign() < 0 ? 1 : 0;
  auto sq = model.offdiag_sq();
  for (long k = 1; k < model.Q(); ++k) {
    pivot = -xw - sq[k - 1] / pivot;
    if (pivot.iszero()) pivot = -tiny;
    if (pivot.sign() < 0) ++count;
  }
  return count;
}

namespace detail {

/// Refines an interval holding exactly one eigenvalue of L.
inline BigFloat refine_zero(const DiscriminantModel& model, BigFloat lo, BigFloat hi, const BigFloat& tol) {
  auto fdf = [&](const BigFloat& x) {
    DiscriminantValue v = char_poly(model, x);
    return std::make_pair(std::move(v.sigma), std::move(v.sigma_prime));
  };
  try {
    return bracket_root_newton(fdf, lo, hi, tol).midpoint();
  } catch (const NoBracket&) {
  } catch (const NonConvergence&) {
  }
  // The determinant lost its sign to rounding; Sturm counts stay reliable.
  long below = sturm_count(model, lo);
  while (hi - lo > tol) {
    BigFloat mid = (lo + hi) / 2;
    if (sturm_count(model, mid) > below) hi = mid;
    else lo = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace detail

namespace detail {

/// The Q eigenvalues of L in increasing order, each isolated by Sturm-count
/// bisection and then refined to `tol`. Works for either parity of Q.
inline std::vector<BigFloat> eigenvalues(const DiscriminantModel& model, const BigFloat& tol) {
  Precision prec = model.precision();
  struct Cell {
    BigFloat lo, hi;
    long below_lo, below_hi;
  };
  std::vector<BigFloat> zeros;
  zeros.reserve(model.Q());
  // Gershgorin: every eigenvalue lies in [-4, 4].
  std::vector<Cell> stack;
  stack.push_back(Cell{BigFloat(-4.25, prec), BigFloat(4.25, prec), 0, model.Q()});
  while (!stack.empty()) {
    Cell c = std::move(stack.back());
    stack.pop_back();
    long inside = c.below_hi - c.below_lo;
    if (inside == 0) continue;
    if (inside == 1) {
      zeros.push_back(refine_zero(model, c.lo, c.hi, tol));
      continue;
    }
    if (c.hi - c.lo <= tol) {
      for (long i = 0; i < inside; ++i) zeros.push_back((c.lo + c.hi) / 2);
      continue;
    }
    BigFloat mid = (c.lo + c.hi) / 2;
    long below_mid = sturm_count(model, mid);
    // Push the upper half first so lower zeros come out first.
    stack.push_back(Cell{mid, c.hi, below_mid, c.below_hi});
    stack.push_back(Cell{std::move(c.lo), std::move(mid), c.below_lo, below_mid});
  }
  std::sort(zeros.begin(), zeros.end(), [](const BigFloat& a, const BigFloat& b) { return a < b; });
  return zeros;
}

}  // namespace detail

/// The Q real zeros of Sigma (eigenvalues of L) in increasing order.
inline std::vector<BigFloat> zeros_of_sigma(const DiscriminantModel& model, const BigFloat& tol) {
  if (!model.flux().odd()) throw ParityError("zeros_of_sigma needs odd Q");
  return detail::eigenvalues(model, tol);
}

inline std::vector<BigFloat> zeros_of_sigma(const DiscriminantModel& model) {
  return zeros_of_sigma(model, BigFloat::pow2(-model.precision().bits() / 2, model.precision()));
}

/// sum_k 1/|Sigma'(x_k)| over the zeros of Sigma; equals 1/Q.
/// A zero error d perturbs each term by O(Q d), so the zeros are refined well
/// past the default enclosure width.
inline BigFloat last_wilkinson_sum(const DiscriminantModel& model) {
  const long bits = model.precision().bits();
  std::vector<BigFloat> zeros = zeros_of_sigma(model, BigFloat::pow2(-(bits - bits / 8), model.precision()));
  BigFloat sum(model.precision());
  for (const BigFloat& z : zeros) sum += 1 / abs(sigma_det(model, z).sigma_prime);
  return sum;
}

}  // namespace harperdisc

#endif  // HARPERDISC_EXACTDISC_HPP
