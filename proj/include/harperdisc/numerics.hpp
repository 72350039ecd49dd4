#ifndef HARPERDISC_NUMERICS_HPP
#define HARPERDISC_NUMERICS_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <utility>
#include <vector>

#include "harperdisc/bigfloat.hpp"

namespace harperdisc {

enum class EndpointRule { plain, sqrt_singularity };

struct QuadratureSpec {
  BigFloat abs_tol;
  int max_subdivisions = 4000;
  EndpointRule endpoint_rule = EndpointRule::plain;
  /// Gauss-Legendre points per panel; 0 picks one from the working precision.
  int panel_order = 0;

  void validate() const {
    if (!(abs_tol > 0)) throw DomainError("quadrature abs_tol must be positive");
    if (max_subdivisions < 1) throw DomainError("quadrature max_subdivisions must be >= 1");
    if (panel_order < 0 || panel_order == 1) throw DomainError("quadrature panel_order must be 0 or >= 2");
  }
};

/// Bits needed to represent an absolute tolerance with some headroom.
inline long bits_for_tolerance(const BigFloat& tol) {
  if (!(tol > 0)) return Precision::kMinBits;
  long e = tol.exponent();
  return std::max<long>(Precision::kMinBits, 24 - e);
}

namespace detail {

struct GaussLegendreRule {
  std::vector<BigFloat> nodes;    // on [-1,1]
  std::vector<BigFloat> weights;
};

inline GaussLegendreRule make_gauss_legendre(int n, Precision prec) {
  Precision work = prec.plus(16);
  GaussLegendreRule rule;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  const BigFloat pi_w = pi(work);
  const BigFloat tol = BigFloat::pow2(-(work.bits() - 8), work);
  for (int i = 1; i <= n; ++i) {
    BigFloat x = cos(pi_w * (4 * i - 1) / (4 * n + 2));
    BigFloat dp(work);
    for (int iter = 0; iter < 200; ++iter) {
      // Legendre recurrence for P_n and its derivative.
      BigFloat p0(1L, work), p1 = x;
      for (int k = 2; k <= n; ++k) {
        BigFloat p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = std::move(p1);
        p1 = std::move(p2);
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      BigFloat dx = p1 / dp;
      x -= dx;
      if (abs(dx) < tol) break;
    }
    // Recompute the derivative at the converged node.
    BigFloat p0(1L, work), p1 = x;
    for (int k = 2; k <= n; ++k) {
      BigFloat p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = std::move(p1);
      p1 = std::move(p2);
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    BigFloat w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes.push_back(x.rounded(prec));
    rule.weights.push_back(w.rounded(prec));
  }
  return rule;
}

/// Rules are built once per (order, precision) and shared read-only.
inline std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n, Precision prec) {
  static std::mutex mu;
  static std::map<std::pair<int, long>, std::shared_ptr<const GaussLegendreRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, prec.bits());
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const GaussLegendreRule>(make_gauss_legendre(n, prec));
  cache.emplace(key, rule);
  return rule;
}

template <class F>
BigFloat gauss_panel(F& f, const GaussLegendreRule& rule, const BigFloat& a, const BigFloat& b) {
  BigFloat half = (b - a) / 2;
  BigFloat center = (a + b) / 2;
  BigFloat sum(half.precision());
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(center + half * rule.nodes[i]);
  }
  return sum * half;
}

struct Panel {
  BigFloat lo, hi, coarse, left, right, err;
  BigFloat value() const { return left + right; }
};

struct PanelWorse {
  bool operator()(const Panel& a, const Panel& b) const { return a.err < b.err; }
};

template <class F>
BigFloat integrate_adaptive(F& f, const BigFloat& a, const BigFloat& b, const BigFloat& abs_tol,
                            int max_subdivisions, int order, Precision prec) {
  auto rule = gauss_legendre(order, prec);
  auto make_panel = [&](const BigFloat& lo, const BigFloat& hi, BigFloat coarse) {
    BigFloat mid = (lo + hi) / 2;
    Panel p{lo, hi, std::move(coarse), gauss_panel(f, *rule, lo, mid), gauss_panel(f, *rule, mid, hi),
            BigFloat(prec)};
    p.err = abs(p.coarse - p.value());
    return p;
  };

  std::priority_queue<Panel, std::vector<Panel>, PanelWorse> queue;
  queue.push(make_panel(a, b, gauss_panel(f, *rule, a, b)));
  BigFloat total_err = queue.top().err;
  int splits = 0;
  while (total_err > abs_tol) {
    if (splits >= max_subdivisions) {
      throw NonConvergence("integrate: error estimate " + total_err.to_string(4) + " above tolerance " +
                           abs_tol.to_string(4) + " after " + std::to_string(splits) + " subdivisions");
    }
    Panel worst = queue.top();
    queue.pop();
    BigFloat mid = (worst.lo + worst.hi) / 2;
    Panel l = make_panel(worst.lo, mid, worst.left);
    Panel r = make_panel(mid, worst.hi, worst.right);
    total_err += l.err + r.err - worst.err;
    queue.push(std::move(l));
    queue.push(std::move(r));
    ++splits;
    // Re-sum occasionally so cancellation in the running total cannot stall us.
    if (splits % 64 == 0) {
      auto copy = queue;
      BigFloat fresh(prec);
      while (!copy.empty()) {
        fresh += copy.top().err;
        copy.pop();
      }
      total_err = fresh;
    }
  }
  BigFloat sum(prec);
  while (!queue.empty()) {
    sum += queue.top().value();
    queue.pop();
  }
  return sum;
}

}  // namespace detail

/// Working precision for a quadrature: enough bits to resolve abs_tol, never
/// less than the precision of the limits.
inline Precision quadrature_precision(const BigFloat& a, const BigFloat& b, const QuadratureSpec& spec) {
  long bits = std::max({a.precision().bits(), b.precision().bits(), bits_for_tolerance(spec.abs_tol)});
  return Precision(bits);
}

/// Adaptive Gauss-Legendre integration of f over [a,b] to an absolute
/// tolerance. With EndpointRule::sqrt_singularity each half of the interval is
/// mapped through t = endpoint +/- u^2, which removes inverse-square-root
/// singularities and square-root branch points at either end.
template <class F>
BigFloat integrate(F&& f, const BigFloat& a, const BigFloat& b, const QuadratureSpec& spec) {
  spec.validate();
  if (!(a < b)) throw DomainError("integrate: need a < b");
  Precision prec = quadrature_precision(a, b, spec);
  int order = spec.panel_order > 0 ? spec.panel_order
                                   : static_cast<int>(std::clamp<long>(prec.bits() / 6, 12, 80));
  BigFloat lo = a.rounded(prec), hi = b.rounded(prec);
  BigFloat tol = spec.abs_tol.rounded(prec);

  if (spec.endpoint_rule == EndpointRule::plain) {
    auto g = [&](const BigFloat& t) { return f(t); };
    return detail::integrate_adaptive(g, lo, hi, tol, spec.max_subdivisions, order, prec);
  }

  BigFloat mid = (lo + hi) / 2;
  BigFloat half_tol = tol / 2;
  auto from_lo = [&](const BigFloat& u) { return 2 * u * f(lo + u * u); };
  auto from_hi = [&](const BigFloat& u) { return 2 * u * f(hi - u * u); };
  BigFloat zero(prec);
  BigFloat span = sqrt(mid - lo);
  BigFloat left = detail::integrate_adaptive(from_lo, zero, span, half_tol, spec.max_subdivisions, order, prec);
  BigFloat right = detail::integrate_adaptive(from_hi, zero, sqrt(hi - mid), half_tol, spec.max_subdivisions,
                                              order, prec);
  return left + right;
}

/// Closed interval known to contain a sign change of the target function.
struct RootEnclosure {
  BigFloat lo;
  BigFloat hi;
  int evaluations = 0;

  BigFloat midpoint() const { return (lo + hi) / 2; }
  BigFloat width() const { return hi - lo; }
};

namespace detail {

inline Precision root_precision(const BigFloat& lo, const BigFloat& hi, const BigFloat& tol) {
  return max(max(lo.precision(), hi.precision()), tol.precision());
}

inline void check_root_args(const BigFloat& lo, const BigFloat& hi, const BigFloat& tol) {
  if (!(tol > 0)) throw DomainError("find_root: tol must be positive");
  if (!(lo < hi)) throw DomainError("find_root: need lo < hi");
}

inline int sign_of(const BigFloat& v) { return v.sign() > 0 ? 1 : (v.sign() < 0 ? -1 : 0); }

}  // namespace detail

/// Shrinks [lo,hi] around a sign change of f until its width is at most tol.
/// Illinois-modified regula falsi, falling back to bisection whenever the
/// interval fails to halve, so convergence is never slower than bisection.
template <class F>
RootEnclosure bracket_root(F&& f, BigFloat lo, BigFloat hi, const BigFloat& tol) {
  detail::check_root_args(lo, hi, tol);
  Precision prec = detail::root_precision(lo, hi, tol);
  lo = lo.rounded(prec);
  hi = hi.rounded(prec);
  BigFloat flo = f(lo), fhi = f(hi);
  RootEnclosure out{lo, hi, 2};
  int slo = detail::sign_of(flo), shi = detail::sign_of(fhi);
  if (slo * shi >= 0) {
    throw NoBracket("find_root: f(lo) and f(hi) do not differ in sign (f(lo)=" + flo.to_string(6) +
                    ", f(hi)=" + fhi.to_string(6) + ")");
  }

  const long max_iter = 4 * prec.bits() + 200;
  int retained = 0;       // which end survived the last step: -1 lo, +1 hi
  int slow_steps = 0;
  for (long iter = 0; out.hi - out.lo > tol; ++iter) {
    if (iter > max_iter) throw NonConvergence("find_root: iteration limit reached");
    BigFloat width = out.hi - out.lo;
    BigFloat c(prec);
    if (slow_steps >= 2) {
      c = out.midpoint();
      slow_steps = 0;
    } else {
      c = (out.lo * fhi - out.hi * flo) / (fhi - flo);
      // Keep the probe at least tol/2 inside, which also closes the far side
      // once the interpolant has converged onto an endpoint.
      BigFloat margin = min(tol / 2, width / 4);
      if (!(c > out.lo + margin)) c = out.lo + margin;
      if (!(c < out.hi - margin)) c = out.hi - margin;
    }
    BigFloat fc = f(c);
    ++out.evaluations;
    int sc = detail::sign_of(fc);
    if (sc == 0) {
      out.lo = c;
      out.hi = c;
      break;
    }
    if (sc == slo) {
      out.lo = c;
      flo = fc;
      if (retained == 1) fhi /= 2;
      retained = 1;
    } else {
      out.hi = c;
      fhi = fc;
      if (retained == -1) flo /= 2;
      retained = -1;
    }
    if (out.hi - out.lo > width / 2) ++slow_steps;
    else slow_steps = 0;
  }
  return out;
}

template <class F>
BigFloat find_root(F&& f, const BigFloat& lo, const BigFloat& hi, const BigFloat& tol) {
  return bracket_root(std::forward<F>(f), lo, hi, tol).midpoint();
}

/// Safeguarded Newton iteration on a bracket. `fdf(x)` returns the pair
/// (f(x), f'(x)). Newton steps that leave the bracket or fail to halve it are
/// replaced by bisection; near convergence the step is straddled by two probes
/// so the returned interval still certifies the sign change.
template <class FDF>
RootEnclosure bracket_root_newton(FDF&& fdf, BigFloat lo, BigFloat hi, const BigFloat& tol) {
  detail::check_root_args(lo, hi, tol);
  Precision prec = detail::root_precision(lo, hi, tol);
  lo = lo.rounded(prec);
  hi = hi.rounded(prec);
  auto [flo, dlo] = fdf(lo);
  auto [fhi, dhi] = fdf(hi);
  RootEnclosure out{lo, hi, 2};
  int slo = detail::sign_of(flo), shi = detail::sign_of(fhi);
  if (slo * shi >= 0) {
    throw NoBracket("find_root: f(lo) and f(hi) do not differ in sign (f(lo)=" + flo.to_string(6) +
                    ", f(hi)=" + fhi.to_string(6) + ")");
  }

  BigFloat x = abs(flo) < abs(fhi) ? lo : hi;
  BigFloat fx = abs(flo) < abs(fhi) ? flo : fhi;
  BigFloat dfx = abs(flo) < abs(fhi) ? dlo : dhi;

  auto absorb = [&](const BigFloat& at, const BigFloat& value) {
    int s = detail::sign_of(value);
    if (s == 0) {
      out.lo = at;
      out.hi = at;
      return true;
    }
    if (s == slo) out.lo = at;
    else out.hi = at;
    return false;
  };

  const long max_iter = 4 * prec.bits() + 200;
  BigFloat step = out.width();
  BigFloat prev_step = step * 2;
  for (long iter = 0; out.hi - out.lo > tol; ++iter) {
    if (iter > max_iter) throw NonConvergence("find_root: iteration limit reached");
    BigFloat next(prec);
    BigFloat quarter = tol / 4;
    bool use_bisection = dfx.iszero();
    bool converged = false;
    if (!use_bisection) {
      next = x - fx / dfx;
      converged = abs(next - x) < quarter && next >= out.lo && next <= out.hi;
      // Bisect when Newton leaves the bracket or is not converging quickly.
      use_bisection = !converged &&
                      (!(next > out.lo && next < out.hi) || abs(2 * (next - x)) > abs(prev_step));
    }
    prev_step = step;
    if (use_bisection) {
      next = out.midpoint();
      step = out.width() / 2;
    } else {
      step = abs(next - x);
    }

    if (converged) {
      // Straddle the converged Newton point to pin both sides at once.
      BigFloat a = max(out.lo, next - quarter);
      BigFloat b = min(out.hi, next + quarter);
      auto [fa, da] = fdf(a);
      auto [fb, db] = fdf(b);
      out.evaluations += 2;
      if (absorb(a, fa)) break;
      if (absorb(b, fb)) break;
      bool a_better = abs(fa) < abs(fb);
      x = a_better ? a : b;
      fx = a_better ? fa : fb;
      dfx = a_better ? da : db;
      step = out.width();
      prev_step = step * 2;
      continue;
    }
    auto [fn, dn] = fdf(next);
    ++out.evaluations;
    if (absorb(next, fn)) break;
    x = std::move(next);
    fx = std::move(fn);
    dfx = std::move(dn);
  }
  return out;
}

}  // namespace harperdisc

#endif  // HARPERDISC_NUMERICS_HPP
