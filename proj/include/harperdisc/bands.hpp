#ifndef HARPERDISC_BANDS_HPP
#define HARPERDISC_BANDS_HPP

// Band structure at rational flux: the spectrum is the preimage of [-4, 4]
// under Sigma, a union of Q closed intervals. Each band contains exactly one
// zero of Sigma and Sigma is monotone across it, so its edges are the
// solutions of Sigma = -4 and Sigma = +4 on either side of that zero.

#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harperdisc/asymptotics.hpp"
#include "harperdisc/bigfloat.hpp"
#include "harperdisc/exactdisc.hpp"
#include "harperdisc/numerics.hpp"
#include "harperdisc/parallel.hpp"

namespace harperdisc {

struct Band {
  BigFloat lo;
  BigFloat hi;
  long index = 0;  // 1..Q, increasing in energy
  long cluster_id = 0;
  BigFloat width;

  BigFloat center() const { return (lo + hi) / 2; }
};

struct SpectrumSummary {
  FluxRatio flux;
  std::vector<Band> bands;
  BigFloat total_width;
  BigFloat centermost_width;
  std::map<double, BigFloat> w_d;
  Precision precision{Precision::kMinBits};  // precision that produced the bands
  BigFloat edge_tol;
  int escalations = 0;
  bool clusters_bimodal = true;
};

struct BandOptions {
  std::optional<BigFloat> edge_tol;   // default 2^{-floor(3p/4)} at the starting precision
  std::optional<long> max_precision;  // default HARPERDISC_MAX_PRECISION, else 16 Q
  unsigned workers = default_workers();
};

inline BigFloat default_edge_tol(Precision p) { return BigFloat::pow2(-(3 * p.bits() / 4), p); }

/// Precision ceiling for escalation: the HARPERDISC_MAX_PRECISION environment
/// variable when set, otherwise 16 Q bits.
inline long max_precision_bits(long Q) {
  if (const char* env = std::getenv("HARPERDISC_MAX_PRECISION"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < Precision::kMinBits) {
      throw DomainError(std::string("HARPERDISC_MAX_PRECISION must be an integer >= 53, got '") + env + "'");
    }
    return v;
  }
  return 16 * Q;
}

inline const std::vector<double>& default_hausdorff_exponents() {
  static const std::vector<double> ds{0.25, 0.5, 0.75, 1.0};
  return ds;
}

/// W(d) = sum_i width_i^d.
inline BigFloat hausdorff_wd(const SpectrumSummary& summary, const BigFloat& d) {
  if (!(d > 0) || d > 1) throw DomainError("hausdorff_wd: d must lie in (0, 1], got " + d.to_string(10));
  Precision prec = max(summary.precision, d.precision());
  BigFloat total(prec);
  for (const Band& b : summary.bands) total += pow(b.width.rounded(prec), d.rounded(prec));
  return total;
}

namespace detail {

struct ClusterAssignment {
  std::vector<long> ids;
  bool bimodal = true;
};

/// Gap sizes vary by orders of magnitude across the spectrum, so each gap is
/// judged against a local scale from the gaps within 2P positions of it:
/// wider than 5x that scale separates clusters. About one gap in P is wide and
/// the P-1 gaps inside a cluster differ among themselves, so the scale is the
/// (2P-3)/(2P) quantile, the middle of the largest intra-cluster gaps. The split counts as clean when the
/// smallest wide ratio is at least twice the largest narrow ratio.
inline ClusterAssignment assign_clusters(const std::vector<Band>& bands, long P) {
  ClusterAssignment out;
  const size_t n = bands.size();
  out.ids.assign(n, 0);
  if (n == 0) return out;
  if (P == 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) out.ids[i] = static_cast<long>(i) + 1;
    return out;
  }
  std::vector<BigFloat> gaps;
  for (size_t i = 0; i + 1 < n; ++i) {
    gaps.push_back(max(bands[i + 1].lo - bands[i].hi, BigFloat(bands[i].hi.precision())));
  }
  const long m = static_cast<long>(gaps.size());
  std::optional<BigFloat> widest_narrow, narrowest_wide;
  long id = 1;
  out.ids[0] = id;
  for (long i = 0; i < m; ++i) {
    long a = std::max(0L, i - 2 * P), b = std::min(m - 1, i + 2 * P);
    std::vector<BigFloat> window(gaps.begin() + a, gaps.begin() + b + 1);
    const size_t q = (window.size() - 1) * (2 * P - 3) / (2 * P);
    std::nth_element(window.begin(), window.begin() + q, window.end(),
                     [](const BigFloat& x, const BigFloat& y) { return x < y; });
    const BigFloat& scale = window[q];
    BigFloat ratio = scale.iszero() ? BigFloat::pow2(1L << 20, scale.precision()) : gaps[i] / scale;
    if (ratio > 5) {
      ++id;
      if (!narrowest_wide || ratio < *narrowest_wide) narrowest_wide = ratio;
    } else if (!widest_narrow || ratio > *widest_narrow) {
      widest_narrow = ratio;
    }
    out.ids[i + 1] = id;
  }
  out.bimodal = narrowest_wide.has_value() && (!widest_narrow || *narrowest_wide >= 2 * *widest_narrow);
  return out;
}

inline long centermost_index(long Q) { return Q % 2 == 1 ? (Q + 1) / 2 : Q / 2; }

/// Sigma and Sigma' on the route appropriate for the parity of Q.
inline std::pair<BigFloat, BigFloat> sigma_pair(const DiscriminantModel& model, const BigFloat& x) {
  DiscriminantValue v = sigma(model, x);
  return {std::move(v.sigma), std::move(v.sigma_prime)};
}

/// Edge between zero z and critical point c (either order) where Sigma = 4 * sign(Sigma(c)).
inline BigFloat edge_between(const DiscriminantModel& model, const BigFloat& z, const BigFloat& c, int level_sign,
                             const BigFloat& tol) {
  auto fdf = [&](const BigFloat& x) {
    auto [s, d] = sigma_pair(model, x);
    return std::make_pair(s - 4 * level_sign, std::move(d));
  };
  const BigFloat& lo = z < c ? z : c;
  const BigFloat& hi = z < c ? c : z;
  try {
    return bracket_root_newton(fdf, lo, hi, tol).midpoint();
  } catch (const NoBracket& e) {
    throw EdgeNotFound(std::string("edge bracket failed: ") + e.what());
  } catch (const NonConvergence& e) {
    throw EdgeNotFound(std::string("edge refinement failed: ") + e.what());
  }
}

struct GapData {
  BigFloat critical;  // maximum of |Sigma| between consecutive zeros
  int level_sign = 0;
  bool closed = false;  // |Sigma| reaches 4 but not beyond: touching bands
};

inline GapData locate_gap(const DiscriminantModel& model, const BigFloat& z_left, const BigFloat& z_right,
                          const BigFloat& tol) {
  Precision prec = model.precision();
  GapData g;
  if (!model.flux().odd() && z_left.sign() < 0 && z_right.sign() > 0) {
    // Sigma is even for even Q, so the middle extremum sits exactly at 0.
    g.critical = BigFloat(prec);
  } else {
    auto dsigma = [&](const BigFloat& x) { return sigma_pair(model, x).second; };
    try {
      g.critical = bracket_root(dsigma, z_left, z_right, tol).midpoint();
    } catch (const NoBracket& e) {
      throw EdgeNotFound(std::string("no critical point between consecutive zeros: ") + e.what());
    }
  }
  BigFloat value = sigma_pair(model, g.critical).first;
  g.level_sign = value.sign() > 0 ? 1 : -1;
  BigFloat excess = abs(value) - 4;
  BigFloat touch_tol = BigFloat::pow2(-prec.bits() / 2, prec);
  if (abs(excess) <= touch_tol) {
    g.closed = true;
  } else if (excess.sign() < 0) {
    throw EdgeNotFound("|Sigma| stays below 4 between zeros; precision too low");
  }
  return g;
}

inline std::vector<Band> bands_at(const DiscriminantModel& model, const BigFloat& edge_tol, unsigned workers) {
  const long Q = model.Q();
  Precision prec = model.precision();
  BigFloat tol = edge_tol.rounded(prec);
  // Bands near |x| = 4 can be far narrower than the requested edge tolerance,
  // so everything is refined to at least 2^{-3p/4}; edge_tol only tightens.
  BigFloat inner_tol = min(tol, BigFloat::pow2(-(3 * prec.bits() / 4), prec));
  std::vector<BigFloat> zeros = eigenvalues(model, inner_tol);  // zeros of Sigma for either parity
  if (static_cast<long>(zeros.size()) != Q) throw EdgeNotFound("expected Q zeros of Sigma");

  std::vector<GapData> gaps(Q > 0 ? Q - 1 : 0);
  parallel_for(gaps.size(), [&](size_t k) { gaps[k] = locate_gap(model, zeros[k], zeros[k + 1], inner_tol); }, workers);

  std::vector<Band> bands(Q);
  parallel_for(
      static_cast<size_t>(Q),
      [&](size_t k) {
        Band& b = bands[k];
        b.index = static_cast<long>(k) + 1;
        if (k == 0) {
          BigFloat outside(-4.5, prec);
          int level = sigma_pair(model, outside).first.sign() > 0 ? 1 : -1;
          b.lo = edge_between(model, zeros[k], outside, level, inner_tol);
        } else if (gaps[k - 1].closed) {
          b.lo = gaps[k - 1].critical;
        } else {
          b.lo = edge_between(model, zeros[k], gaps[k - 1].critical, gaps[k - 1].level_sign, inner_tol);
        }
        if (k + 1 == static_cast<size_t>(Q)) {
          BigFloat outside(4.5, prec);
          int level = sigma_pair(model, outside).first.sign() > 0 ? 1 : -1;
          b.hi = edge_between(model, zeros[k], outside, level, inner_tol);
        } else if (gaps[k].closed) {
          b.hi = gaps[k].critical;
        } else {
          b.hi = edge_between(model, zeros[k], gaps[k].critical, gaps[k].level_sign, inner_tol);
        }
        b.width = b.hi - b.lo;
      },
      workers);

  for (long k = 0; k < Q; ++k) {
    const Band& b = bands[k];
    if (!(b.lo < zeros[k]) || !(zeros[k] < b.hi)) throw EdgeNotFound("band " + std::to_string(k + 1) + " does not contain its zero");
    if (!(b.width > 0)) throw EdgeNotFound("band " + std::to_string(k + 1) + " has collapsed to a point");
    if (k > 0 && bands[k - 1].hi > b.lo) throw EdgeNotFound("bands " + std::to_string(k) + " and " + std::to_string(k + 1) + " overlap");
    if (k > 0 && !gaps[k - 1].closed && !(bands[k - 1].hi < b.lo)) throw EdgeNotFound("open gap collapsed");
  }
  // Sigma' changes sign from each band to the next.
  for (long k = 1; k < Q; ++k) {
    int prev = sigma_pair(model, zeros[k - 1]).second.sign();
    int cur = sigma_pair(model, zeros[k]).second.sign();
    if (prev * cur >= 0) throw EdgeNotFound("Sigma' fails to alternate at consecutive zeros");
  }
  return bands;
}

}  // namespace detail

/// All Q bands, escalating precision (doubling, model rebuilt) when an edge
/// cannot be bracketed or the band ordering checks fail.
inline SpectrumSummary compute_bands(const DiscriminantModel& model, const BandOptions& options = {}) {
  const long P = model.P(), Q = model.Q();
  BigFloat edge_tol = options.edge_tol ? *options.edge_tol : default_edge_tol(model.precision());
  if (!(edge_tol > 0)) throw DomainError("compute_bands: edge_tol must be positive");
  long cap = std::max(options.max_precision ? *options.max_precision : max_precision_bits(Q), model.precision().bits());

  SpectrumSummary summary;
  std::optional<DiscriminantModel> rebuilt;
  const DiscriminantModel* current = &model;
  std::string last_failure;
  for (int attempt = 0;; ++attempt) {
    try {
      summary.bands = detail::bands_at(*current, edge_tol, options.workers);
      summary.escalations = attempt;
      break;
    } catch (const EdgeNotFound& e) {
      last_failure = e.what();
    } catch (const PrecisionTooLow& e) {
      last_failure = e.what();
    }
    long next = 2 * current->precision().bits();
    if (next > cap) {
      throw EdgeNotFound("P=" + std::to_string(P) + " Q=" + std::to_string(Q) + ": " + last_failure + " (gave up at " +
                         std::to_string(current->precision().bits()) + " bits, cap " + std::to_string(cap) + ")");
    }
    rebuilt.emplace(build_model(P, Q, Precision(next)));
    current = &*rebuilt;
  }

  summary.flux = current->flux();
  summary.precision = current->precision();
  summary.edge_tol = edge_tol;
  detail::ClusterAssignment clusters = detail::assign_clusters(summary.bands, P);
  for (size_t i = 0; i < summary.bands.size(); ++i) summary.bands[i].cluster_id = clusters.ids[i];
  summary.clusters_bimodal = clusters.bimodal;

  summary.total_width = BigFloat(summary.precision);
  for (const Band& b : summary.bands) summary.total_width += b.width;
  summary.centermost_width = summary.bands[detail::centermost_index(Q) - 1].width;
  for (double d : default_hausdorff_exponents()) summary.w_d[d] = hausdorff_wd(summary, BigFloat(d, summary.precision));
  return summary;
}

inline SpectrumSummary compute_bands(const DiscriminantModel& model, const BigFloat& edge_tol) {
  BandOptions options;
  options.edge_tol = edge_tol;
  return compute_bands(model, options);
}

/// Bands at the default working precision max(128, 4Q).
inline SpectrumSummary compute_bands(long P, long Q, const BandOptions& options = {}) {
  return compute_bands(build_model(P, Q, working_precision(Q)), options);
}

struct CentermostReport {
  BigFloat width;
  BigFloat bound;            // 8 / |Sigma'(0)|
  BigFloat bound_ratio;      // width / bound
  BigFloat max_abs_sigma_prime;
  BigFloat mean_value_product;  // width * max |Sigma'| >= 8
};

/// Centermost band width against 8 / |Sigma'(0)|. The maximum of |Sigma'| on
/// the band comes from a grid followed by golden-section refinement.
inline CentermostReport centermost_lower_bound_report(const SpectrumSummary& summary, const DiscriminantModel& model) {
  if (!model.flux().odd()) throw ParityError("centermost_lower_bound_report needs odd Q");
  Precision prec = max(summary.precision, model.precision());
  const Band& band = summary.bands[detail::centermost_index(model.Q()) - 1];
  CentermostReport r;
  r.width = band.width.rounded(prec);
  r.bound = 8 / abs(sigma_prime_zero_exact(model.flux()));
  r.bound_ratio = r.width / r.bound;

  auto slope = [&](const BigFloat& x) { return abs(sigma_det(model, x).sigma_prime); };
  const int grid = 64;
  BigFloat step = r.width / grid;
  int best = 0;
  BigFloat best_value = slope(band.lo);
  for (int i = 1; i <= grid; ++i) {
    BigFloat v = slope(band.lo + step * i);
    if (v > best_value) {
      best_value = std::move(v);
      best = i;
    }
  }
  BigFloat a = band.lo + step * std::max(0, best - 1), b = band.lo + step * std::min(grid, best + 1);
  const BigFloat ratio = (sqrt(BigFloat(5L, prec)) - 1) / 2;
  for (int iter = 0; iter < 80; ++iter) {
    BigFloat c = b - ratio * (b - a), d = a + ratio * (b - a);
    if (slope(c) > slope(d)) b = std::move(d);
    else a = std::move(c);
  }
  r.max_abs_sigma_prime = max(best_value, slope((a + b) / 2));
  r.mean_value_product = r.width * r.max_abs_sigma_prime;
  return r;
}

struct ClusterStat {
  long cluster_id = 0;
  long band_count = 0;
  BigFloat span;         // hi of last band - lo of first band
  BigFloat gap_to_next;  // zero for the last cluster
  bool central = false;  // contains x = 0 (odd Q) or touches it (even Q)
};

/// Per-cluster counts. Throws ClusteringAmbiguous when the gaps do not split
/// cleanly into narrow and wide.
inline std::vector<ClusterStat> cluster_stats(const SpectrumSummary& summary) {
  if (!summary.clusters_bimodal) {
    throw ClusteringAmbiguous("gap distribution is not bimodal at P=" + std::to_string(summary.flux.P) +
                              ", Q=" + std::to_string(summary.flux.Q));
  }
  std::vector<ClusterStat> out;
  for (const Band& b : summary.bands) {
    if (out.empty() || out.back().cluster_id != b.cluster_id) out.push_back(ClusterStat{b.cluster_id});
    ++out.back().band_count;
    if (b.lo <= 0 && b.hi >= 0) out.back().central = true;
  }
  size_t first = 0;
  for (size_t c = 0; c < out.size(); ++c) {
    size_t last = first + out[c].band_count - 1;
    out[c].span = summary.bands[last].hi - summary.bands[first].lo;
    out[c].gap_to_next = last + 1 < summary.bands.size() ? summary.bands[last + 1].lo - summary.bands[last].hi
                                                         : BigFloat(summary.precision);
    first = last + 1;
  }
  return out;
}

struct DensityCheck {
  long counted = 0;
  BigFloat predicted;
};

/// Band centers in [lo, hi] against Q * int_lo^hi rho. rho integrates to 1
/// over (-4, 4), so the prediction for the whole axis is exactly Q.
inline DensityCheck band_density_check(const SpectrumSummary& summary, const BigFloat& lo, const BigFloat& hi) {
  if (!(lo < hi)) throw DomainError("band_density_check: need lo < hi");
  if (lo < -4 || hi > 4) throw DomainError("band_density_check: window must lie in [-4, 4]");
  Precision prec = Precision(std::min<long>(summary.precision.bits(), 256));
  DensityCheck out;
  for (const Band& b : summary.bands) {
    BigFloat c = b.center();
    if (c >= lo && c <= hi) ++out.counted;
  }
  QuadratureSpec spec{BigFloat::pow2(-(prec.bits() / 2), prec)};
  spec.endpoint_rule = EndpointRule::sqrt_singularity;
  auto rho = [](const BigFloat& x) { return dos(x); };
  BigFloat a = lo.rounded(prec), b = hi.rounded(prec);
  BigFloat integral(prec);
  if (a < 0 && b > 0) {
    integral = integrate(rho, a, BigFloat(prec), spec) + integrate(rho, BigFloat(prec), b, spec);
  } else {
    integral = integrate(rho, a, b, spec);
  }
  out.predicted = summary.flux.Q * integral;
  return out;
}

}  // namespace harperdisc

#endif  // HARPERDISC_BANDS_HPP
