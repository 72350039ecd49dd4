#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "harperdisc/bands.hpp"
#include "oracles.hpp"

using namespace harperdisc;

namespace {

const Precision kP128{128};

const SpectrumSummary& cached(long P, long Q) {
  static std::map<std::pair<long, long>, SpectrumSummary> cache;
  auto it = cache.find({P, Q});
  if (it == cache.end()) it = cache.emplace(std::make_pair(P, Q), compute_bands(P, Q)).first;
  return it->second;
}

}  // namespace

TEST(Bands, SingleBandAtQ1) {
  const SpectrumSummary& s = cached(1, 1);
  ASSERT_EQ(s.bands.size(), 1u);
  EXPECT_LT(abs(s.bands[0].lo + 4).to_double(), 1e-30);
  EXPECT_LT(abs(s.bands[0].hi - 4).to_double(), 1e-30);
  EXPECT_LT(abs(s.total_width - 8).to_double(), 1e-30);
}

TEST(Bands, CubicFactorization) {
  // |x^3 - 6x| <= 4: x^3 - 6x + 4 = (x - 2)(x^2 + 2x - 2), x^3 - 6x - 4 = (x + 2)(x^2 - 2x - 2).
  const SpectrumSummary& s = cached(1, 3);
  ASSERT_EQ(s.bands.size(), 3u);
  BigFloat r3 = sqrt(BigFloat(3L, kP128));
  std::vector<std::pair<BigFloat, BigFloat>> want{{-1 - r3, BigFloat(-2L, kP128)}, {1 - r3, r3 - 1}, {BigFloat(2L, kP128), 1 + r3}};
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT(abs(s.bands[i].lo - want[i].first).to_double(), 1e-25) << i;
    EXPECT_LT(abs(s.bands[i].hi - want[i].second).to_double(), 1e-25) << i;
  }
  EXPECT_LT(abs(s.centermost_width - 2 * (r3 - 1)).to_double(), 1e-25);
  EXPECT_NEAR(s.centermost_width.to_double(), 1.4641016, 1e-7);
  EXPECT_LT(abs(s.total_width - 4 * (r3 - 1)).to_double(), 1e-25);
}

TEST(Bands, EvenQTouchAtZero) {
  for (auto [P, Q] : {std::pair{1L, 2L}, {1L, 4L}, {3L, 8L}, {5L, 12L}}) {
    const SpectrumSummary& s = cached(P, Q);
    ASSERT_EQ(static_cast<long>(s.bands.size()), Q);
    const Band& left = s.bands[Q / 2 - 1];
    const Band& right = s.bands[Q / 2];
    EXPECT_TRUE(left.hi.iszero()) << P << "/" << Q;
    EXPECT_TRUE(right.lo.iszero()) << P << "/" << Q;
    for (long k = 0; k + 1 < Q; ++k) {
      if (k + 1 != Q / 2) EXPECT_LT(s.bands[k].hi, s.bands[k + 1].lo);
    }
  }
  // Q = 2: Sigma = x^2 - 4, bands [-2 sqrt 2, 0] and [0, 2 sqrt 2].
  EXPECT_LT(abs(cached(1, 2).bands[1].hi - 2 * sqrt(BigFloat(2L, kP128))).to_double(), 1e-25);
}

TEST(Bands, EvenQNearlyDegenerateClusters) {
  // Small P/Q with even Q: bands inside the outer clusters nearly coincide, so
  // their zeros are far closer than any practical uniform grid spacing.
  for (auto [P, Q] : {std::pair{3L, 28L}, {3L, 40L}, {17L, 36L}, {19L, 40L}}) {
    const SpectrumSummary& s = cached(P, Q);
    ASSERT_EQ(static_cast<long>(s.bands.size()), Q) << P << "/" << Q;
    for (long k = 0; k + 1 < Q; ++k) {
      EXPECT_LT(s.bands[k].lo, s.bands[k].hi);
      EXPECT_LE(s.bands[k].hi, s.bands[k + 1].lo);
    }
    EXPECT_TRUE(s.bands[Q / 2 - 1].hi.iszero());
    EXPECT_TRUE(s.bands[Q / 2].lo.iszero());
  }
}

TEST(Bands, StructuralInvariants) {
  std::mt19937 rng(8);
  std::vector<std::pair<long, long>> cases{{1, 5}, {2, 7}, {3, 11}, {1, 21}, {5, 27}, {2, 9}, {7, 16}, {1, 10}};
  while (cases.size() < 16) {
    long Q = std::uniform_int_distribution<long>(3, 45)(rng);
    long P = std::uniform_int_distribution<long>(1, Q - 1)(rng);
    if (std::gcd(P, Q) == 1) cases.emplace_back(P, Q);
  }
  for (auto [P, Q] : cases) {
    const SpectrumSummary& s = cached(P, Q);
    DiscriminantModel m = build_model(P, Q, s.precision);
    ASSERT_EQ(static_cast<long>(s.bands.size()), Q) << P << "/" << Q;
    BigFloat sum(s.precision);
    for (long k = 0; k < Q; ++k) {
      const Band& b = s.bands[k];
      EXPECT_EQ(b.index, k + 1);
      EXPECT_LT(b.lo, b.hi);
      EXPECT_GE(b.lo, -4);
      EXPECT_LE(b.hi, 4);
      EXPECT_LE(abs(b.width - (b.hi - b.lo)).to_double(), 0.0);
      sum += b.width;
      for (const BigFloat* e : {&b.lo, &b.hi}) {
        DiscriminantValue v = sigma(m, *e);
        EXPECT_LE(abs(abs(v.sigma) - 4), 4 * s.edge_tol * max(BigFloat(1L, s.precision), abs(v.sigma_prime)))
            << P << "/" << Q << " band " << k + 1;
      }
      // Sigma' keeps one sign inside the band.
      int sign = 0;
      for (int i = 1; i < 16; ++i) {
        BigFloat x = b.lo + b.width * i / 16;
        int si = sigma(m, x).sigma_prime.sign();
        if (sign == 0) sign = si;
        EXPECT_EQ(si, sign) << P << "/" << Q << " band " << k + 1;
      }
      // Mirror symmetry.
      const Band& mirror = s.bands[Q - 1 - k];
      EXPECT_LE(abs(b.lo + mirror.hi), 8 * s.edge_tol) << P << "/" << Q;
    }
    EXPECT_LE(abs(sum - s.total_width), s.edge_tol);
  }
}

TEST(Bands, ZerosInterlace) {
  for (auto [P, Q] : {std::pair{1L, 15L}, {4L, 23L}, {6L, 35L}}) {
    const SpectrumSummary& s = cached(P, Q);
    DiscriminantModel m = build_model(P, Q, s.precision);
    std::vector<BigFloat> z = zeros_of_sigma(m);
    for (long k = 0; k < Q; ++k) {
      EXPECT_LT(s.bands[k].lo, z[k]);
      EXPECT_LT(z[k], s.bands[k].hi);
    }
  }
}

TEST(Bands, AgreesWithExplicitEdgeTolerance) {
  DiscriminantModel m = build_model(2, 11, Precision(256));
  SpectrumSummary coarse = compute_bands(m, BigFloat::pow2(-60, Precision(256)));
  SpectrumSummary fine = compute_bands(m, BigFloat::pow2(-200, Precision(256)));
  for (size_t k = 0; k < coarse.bands.size(); ++k) {
    EXPECT_LT(abs(coarse.bands[k].lo - fine.bands[k].lo).to_double(), 1e-17);
    EXPECT_LT(abs(coarse.bands[k].hi - fine.bands[k].hi).to_double(), 1e-17);
  }
  EXPECT_THROW(compute_bands(m, BigFloat(0L, kP128)), DomainError);
}

TEST(Bands, EscalatesFromLowPrecision) {
  // 64 bits cannot resolve bands of width ~e^{-2 Q mu} at Q = 61.
  DiscriminantModel m = build_model(1, 61, Precision(64));
  BandOptions options;
  options.edge_tol = BigFloat::pow2(-40, Precision(64));
  SpectrumSummary s = compute_bands(m, options);
  EXPECT_GT(s.escalations, 0);
  EXPECT_GT(s.precision.bits(), 64);
  EXPECT_EQ(s.bands.size(), 61u);

  BandOptions capped = options;
  capped.max_precision = 64;
  EXPECT_THROW(compute_bands(m, capped), EdgeNotFound);
}

TEST(Bands, PrecisionCapFromEnvironment) {
  setenv("HARPERDISC_MAX_PRECISION", "777", 1);
  EXPECT_EQ(max_precision_bits(31), 777);
  setenv("HARPERDISC_MAX_PRECISION", "abc", 1);
  EXPECT_THROW(max_precision_bits(31), DomainError);
  unsetenv("HARPERDISC_MAX_PRECISION");
  EXPECT_EQ(max_precision_bits(31), 16 * 31);
}

TEST(Bands, ParallelMatchesSerial) {
  DiscriminantModel m = build_model(3, 29, working_precision(29));
  BandOptions serial;
  serial.workers = 1;
  BandOptions pooled;
  pooled.workers = 4;
  SpectrumSummary a = compute_bands(m, serial), b = compute_bands(m, pooled);
  for (size_t k = 0; k < a.bands.size(); ++k) {
    EXPECT_TRUE(a.bands[k].lo == b.bands[k].lo);
    EXPECT_TRUE(a.bands[k].hi == b.bands[k].hi);
  }
}

TEST(Centermost, CubicReport) {
  DiscriminantModel m = build_model(1, 3, kP128);
  CentermostReport r = centermost_lower_bound_report(cached(1, 3), m);
  BigFloat r3 = sqrt(BigFloat(3L, kP128));
  EXPECT_LT(abs(r.width - 2 * (r3 - 1)).to_double(), 1e-25);
  EXPECT_LT(abs(r.bound - BigFloat(4L, kP128) / 3).to_double(), 1e-30);
  EXPECT_NEAR(r.bound_ratio.to_double(), 1.098, 1e-3);
  EXPECT_NEAR(r.max_abs_sigma_prime.to_double(), 6.0, 1e-12);
}

TEST(Centermost, MeanValueBound) {
  for (auto [P, Q] : {std::pair{1L, 5L}, {2L, 7L}, {3L, 11L}, {1L, 21L}, {5L, 27L}, {4L, 23L}, {1L, 41L}}) {
    DiscriminantModel m = build_model(P, Q, working_precision(Q));
    CentermostReport r = centermost_lower_bound_report(cached(P, Q), m);
    EXPECT_GE(r.mean_value_product, 8 * (1 - BigFloat::pow2(-40, kP128))) << P << "/" << Q;
    EXPECT_GT(r.bound_ratio, 0) << P << "/" << Q;
  }
  EXPECT_THROW(centermost_lower_bound_report(cached(1, 4), build_model(1, 4, kP128)), ParityError);
}

TEST(Clusters, SingletonsAtP1) {
  std::vector<ClusterStat> stats = cluster_stats(cached(1, 21));
  ASSERT_EQ(stats.size(), 21u);
  for (const ClusterStat& c : stats) EXPECT_EQ(c.band_count, 1);
  EXPECT_EQ(std::count_if(stats.begin(), stats.end(), [](const ClusterStat& c) { return c.central; }), 1);
}

TEST(Clusters, P3Q41) {
  std::vector<ClusterStat> stats = cluster_stats(cached(3, 41));
  long central = 0;
  for (const ClusterStat& c : stats) {
    if (c.central) central = c.band_count;
    else EXPECT_EQ(c.band_count, 3) << "cluster " << c.cluster_id;
  }
  EXPECT_EQ(central, 5);
}

TEST(Clusters, OuterClustersHoldPBands) {
  // Away from the centre every cluster has P bands; the central cluster holds
  // s bands, or s + 2kP when its innermost neighbours are not resolved.
  for (auto [P, Q] : {std::pair{3L, 43L}, {3L, 101L}, {5L, 161L}, {2L, 35L}, {7L, 99L}}) {
    const SpectrumSummary& s = cached(P, Q);
    if (!s.clusters_bimodal) {
      EXPECT_THROW(cluster_stats(s), ClusteringAmbiguous);
      continue;
    }
    std::vector<ClusterStat> stats = cluster_stats(s);
    for (const ClusterStat& c : stats) {
      if (c.central) EXPECT_EQ((c.band_count - s.flux.s) % (2 * P), 0) << P << "/" << Q;
      else EXPECT_EQ(c.band_count, P) << P << "/" << Q << " cluster " << c.cluster_id;
    }
  }
}

// Either the split is flagged as ambiguous or the central cluster has s = 1 band.
TEST(Clusters, P2Q33) {
  const SpectrumSummary& s = cached(2, 33);
  ASSERT_EQ(s.flux.s, 1);
  if (!s.clusters_bimodal) {
    EXPECT_THROW(cluster_stats(s), ClusteringAmbiguous);
    return;
  }
  for (const ClusterStat& c : cluster_stats(s)) EXPECT_EQ(c.band_count, c.central ? 1 : 2) << c.cluster_id;
}

TEST(Clusters, SpanAndGapBookkeeping) {
  const SpectrumSummary& s = cached(3, 41);
  std::vector<ClusterStat> stats = cluster_stats(s);
  BigFloat covered(s.precision);
  for (const ClusterStat& c : stats) covered += c.span + c.gap_to_next;
  EXPECT_LT(abs(covered - (s.bands.back().hi - s.bands.front().lo)).to_double(), 1e-25);
  EXPECT_TRUE(stats.back().gap_to_next.iszero());
}

TEST(Hausdorff, Definitions) {
  const SpectrumSummary& s = cached(1, 41);
  EXPECT_LT(abs(hausdorff_wd(s, BigFloat(1L, kP128)) - s.total_width).to_double(), 1e-30);
  EXPECT_NEAR(hausdorff_wd(s, BigFloat(1e-9, kP128)).to_double(), 41.0, 1e-4);
  EXPECT_LT(abs(s.w_d.at(0.5) - hausdorff_wd(s, BigFloat(0.5, kP128))).to_double(), 1e-30);
  EXPECT_THROW(hausdorff_wd(s, BigFloat(0L, kP128)), DomainError);
  EXPECT_THROW(hausdorff_wd(s, BigFloat(1.01, kP128)), DomainError);
}

TEST(Hausdorff, DecreasesWithQ) {
  BigFloat d(0.5, kP128);
  BigFloat a = hausdorff_wd(cached(1, 21), d), b = hausdorff_wd(cached(1, 41), d), c = hausdorff_wd(cached(1, 101), d);
  EXPECT_GT(a, b);
  EXPECT_GT(b, c);
}

TEST(Density, FullAxisAndMirrors) {
  const SpectrumSummary& s = cached(1, 101);
  DensityCheck full = band_density_check(s, BigFloat(-4L, kP128), BigFloat(4L, kP128));
  EXPECT_EQ(full.counted, 101);
  EXPECT_NEAR(full.predicted.to_double(), 101.0, 1e-9);
  DensityCheck right = band_density_check(s, BigFloat(0.5, kP128), BigFloat(1.5, kP128));
  DensityCheck left = band_density_check(s, BigFloat(-1.5, kP128), BigFloat(-0.5, kP128));
  EXPECT_EQ(right.counted, left.counted);
  EXPECT_LT(abs(right.predicted - left.predicted).to_double(), 1e-15);
  EXPECT_LE(std::abs(right.counted - right.predicted.to_double()), 2.0);
  EXPECT_THROW(band_density_check(s, BigFloat(1L, kP128), BigFloat(0.5, kP128)), DomainError);
}
