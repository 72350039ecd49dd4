#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "harperdisc/cli.hpp"

using namespace harperdisc;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "harperdisc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Table csv(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

BigFloat cell(const Table& t, size_t row, const std::string& col, Precision prec = Precision(256)) {
  return BigFloat::parse(t.rows.at(row).at(t.column(col)), prec);
}

/// Sets an environment variable for the lifetime of the guard.
class EnvGuard {
 public:
  EnvGuard(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    setenv(name, value, 1);
  }
  ~EnvGuard() {
    if (old_) setenv(name_, old_->c_str(), 1);
    else unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / ("harperdisc_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CliDisc, Examples) {
  Result r = run({"disc", "eval", "--p", "1", "--q", "3", "--x", "1.0", "--x", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  EXPECT_EQ(t.schema, "disc/1");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_LT(abs(cell(t, 0, "sigma") + 5).to_double(), 1e-35);
  EXPECT_LT(abs(cell(t, 0, "sigma_prime") + 3).to_double(), 1e-35);
  EXPECT_TRUE(cell(t, 1, "sigma").iszero());
  EXPECT_LT(abs(cell(t, 1, "sigma_prime") + 6).to_double(), 1e-35);
  EXPECT_EQ(t.rows[0][t.column("route")], "determinant");

  Result even = run({"disc", "eval", "--p", "1", "--q", "4", "--x", "0", "--route", "transfer"});
  ASSERT_EQ(even.code, 0) << even.err;
  Table te = csv(even.out);
  EXPECT_LT(abs(abs(cell(te, 0, "sigma")) - 4).to_double(), 1e-35);
  EXPECT_EQ(te.rows[0][te.column("route")], "transfer");
}

TEST(CliDisc, DigitsFollowPrecision) {
  Result r = run({"--precision-bits", "200", "disc", "eval", "--p", "2", "--q", "5", "--x", "0.3"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  EXPECT_EQ(t.notes.at("digits"), "61");  // ceil(200 * 0.301)
  std::string sigma = t.rows[0][t.column("sigma")];
  // d.ddd...e+XX with 61 significant digits
  EXPECT_EQ(sigma.find('e') - sigma.find('.') - 1, 60u) << sigma;
}

TEST(CliExitCodes, ValidationIsTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"bands", "--p", "1"}).code, 2);
  EXPECT_EQ(run({"--precision-bits", "40", "bands", "--p", "1", "--q", "3"}).code, 2);
  EXPECT_EQ(run({"bands", "--p", "2", "--q", "4"}).code, 2);
  EXPECT_EQ(run({"--format", "xml", "bands", "--p", "1", "--q", "3"}).code, 2);
  EXPECT_EQ(run({"--svg", "bands", "--p", "1", "--q", "3"}).code, 2);
  EXPECT_EQ(run({"--edge-tol", "-1", "bands", "--p", "1", "--q", "3"}).code, 2);
  EXPECT_EQ(run({"disc", "eval", "--p", "1", "--q", "4", "--x", "0", "--route", "determinant"}).code, 2);
  EXPECT_EQ(run({"disc", "eval", "--p", "1", "--q", "3", "--x", "abc"}).code, 2);
  EXPECT_EQ(run({"dprime", "--p", "1", "--q", "4"}).code, 2);
  EXPECT_EQ(run({"dprime", "--p", "1", "--q", "41,5"}).code, 2);
  EXPECT_EQ(run({"butterfly", "--n", "0"}).code, 2);
  EXPECT_EQ(run({"butterfly", "--n", "100", "--max-n", "50"}).code, 2);

  Result msg = run({"--precision-bits", "40", "bands", "--p", "1", "--q", "3"});
  EXPECT_NE(msg.err.find("--precision-bits"), std::string::npos) << msg.err;
}

TEST(CliExitCodes, HelpIsZero) {
  Result r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("butterfly"), std::string::npos);
}

TEST(CliExitCodes, NumericFailureIsThree) {
  EnvGuard cap("HARPERDISC_MAX_PRECISION", "64");
  Result r = run({"--precision-bits", "64", "bands", "--p", "1", "--q", "61"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("gave up"), std::string::npos) << r.err;
}

TEST(CliDprime, P1DecayAndSummary) {
  Result r = run({"dprime", "--p", "1", "--q", "5,41,101,401"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  EXPECT_EQ(t.schema, "dprime/1");
  ASSERT_EQ(t.rows.size(), 5u);
  for (size_t i = 1; i < 4; ++i) EXPECT_LT(cell(t, i, "abs_error"), cell(t, i - 1, "abs_error")) << i;
  EXPECT_EQ(t.rows[4][t.column("kind")], "summary");
  EXPECT_EQ(t.rows[4][t.column("decreasing")], "true");
}

TEST(CliDprime, CubicAndDecomposition) {
  Result q3 = run({"dprime", "--p", "1", "--q", "3"});
  ASSERT_EQ(q3.code, 0) << q3.err;
  EXPECT_LT(abs(cell(csv(q3.out), 0, "exact") + 6).to_double(), 1e-35);

  Result r = run({"dprime", "--p", "2", "--q", "9,11,13,15"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  std::vector<std::string> want{"1", "3", "5", "7"};
  for (size_t i = 0; i < 4; ++i) EXPECT_EQ(t.rows[i][t.column("s")], want[i]);
  // One summary row per s, each with a single point.
  EXPECT_EQ(t.rows.size(), 8u);
  EXPECT_EQ(t.rows[7][t.column("decreasing")], "n/a");

  // Q below 4P has no Q = 4Pr + s decomposition with r >= 1.
  EXPECT_EQ(run({"dprime", "--p", "2", "--q", "5"}).code, 2);
}

TEST(CliBands, CubicRows) {
  Result r = run({"bands", "--p", "1", "--q", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  EXPECT_EQ(t.schema, "bands/1");
  ASSERT_EQ(t.rows.size(), 3u);
  BigFloat edge = sqrt(BigFloat(3L, Precision(256))) - 1;
  double tol = std::stod(t.notes.at("certified_abs_tol"));
  EXPECT_LT(abs(cell(t, 1, "lo") + edge).to_double(), tol);
  EXPECT_LT(abs(cell(t, 1, "hi") - edge).to_double(), tol);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"index", "lo", "hi", "width", "cluster_id"}));
}

TEST(CliBands, RowCountIsQ) {
  for (auto [P, Q] : {std::pair{1L, 1L}, {1L, 2L}, {2L, 7L}, {3L, 10L}, {5L, 17L}}) {
    Result r = run({"bands", "--p", std::to_string(P), "--q", std::to_string(Q)});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(static_cast<long>(csv(r.out).rows.size()), Q) << P << "/" << Q;
  }
}

TEST(CliBands, ClusterGroupsP3Q41) {
  Result r = run({"bands", "--p", "3", "--q", "41"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  std::vector<long> sizes;
  std::string last;
  for (const auto& row : t.rows) {
    const std::string& id = row[t.column("cluster_id")];
    if (sizes.empty() || id != last) sizes.push_back(0);
    ++sizes.back();
    last = id;
  }
  ASSERT_EQ(sizes.size() % 2, 1u);
  for (size_t i = 0; i < sizes.size(); ++i) EXPECT_EQ(sizes[i], i == sizes.size() / 2 ? 5 : 3) << i;
}

TEST(CliRoundTrip, CsvAndJsonReproduceValues) {
  const long P = 2, Q = 21;
  SpectrumSummary s = compute_bands(P, Q);
  int digits = digits_for_bits(s.precision.bits());
  fs::path dir = scratch_dir();
  for (std::string format : {"csv", "json"}) {
    fs::path file = dir / ("bands." + format);
    Result r = run({"--format", format, "--out", file.string(), "bands", "--p", "2", "--q", "21"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(file);
    Table t = format == "csv" ? read_csv(in) : read_json(in);
    EXPECT_EQ(t.schema, "bands/1");
    EXPECT_EQ(t.notes.at("digits"), std::to_string(digits));
    ASSERT_EQ(static_cast<long>(t.rows.size()), Q);
    for (long k = 0; k < Q; ++k) {
      const Band& b = s.bands[k];
      EXPECT_TRUE(round_trips(b.lo, t.rows[k][t.column("lo")], digits)) << format << " " << k;
      EXPECT_TRUE(round_trips(b.hi, t.rows[k][t.column("hi")], digits)) << format << " " << k;
      EXPECT_TRUE(round_trips(b.width, t.rows[k][t.column("width")], digits)) << format << " " << k;
      EXPECT_EQ(t.rows[k][t.column("cluster_id")], std::to_string(b.cluster_id));
    }
  }
  // JSON carries the config echo and tool version.
  auto doc = nlohmann::json::parse(slurp(dir / "bands.json"));
  EXPECT_EQ(doc["meta"]["tool"], "harperdisc");
  EXPECT_EQ(doc["meta"]["command"], "bands");
  EXPECT_TRUE(doc["meta"].contains("version"));
  EXPECT_TRUE(doc["rows"].is_array());
  fs::remove_all(dir);
}

TEST(CliRoundTrip, TableSerializationProperty) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> mant(-1, 1);
  std::uniform_int_distribution<long> ex(-300, 300);
  for (long bits : {64L, 128L, 333L}) {
    Precision prec(bits);
    int digits = digits_for_bits(bits);
    Table t{"prop/1", {"a", "b"}, {}, {{"digits", std::to_string(digits)}}};
    std::vector<BigFloat> values;
    for (int i = 0; i < 40; ++i) {
      BigFloat v = BigFloat(mant(rng), prec) * pow(BigFloat(2L, prec), ex(rng));
      values.push_back(v);
      t.add_row({format_value(v, digits), std::to_string(i)});
    }
    std::stringstream c, j;
    write_csv(t, c);
    write_json(t, nlohmann::ordered_json::object(), j);
    for (Table back : {read_csv(c), read_json(j)}) {
      ASSERT_EQ(back.rows.size(), values.size());
      EXPECT_EQ(back.columns, t.columns);
      EXPECT_EQ(back.notes, t.notes);
      for (size_t i = 0; i < values.size(); ++i) EXPECT_TRUE(round_trips(values[i], back.rows[i][0], digits));
    }
  }
}

TEST(CliSvg, PureAddOn) {
  fs::path dir = scratch_dir();
  fs::path plain = dir / "plain.csv", with = dir / "with.csv";
  ASSERT_EQ(run({"--out", plain.string(), "bands", "--p", "3", "--q", "13"}).code, 0);
  ASSERT_EQ(run({"--out", with.string(), "--svg", "bands", "--p", "3", "--q", "13"}).code, 0);
  EXPECT_EQ(slurp(plain), slurp(with));
  EXPECT_FALSE(fs::exists(dir / "plain.svg"));
  std::string svg = slurp(dir / "with.svg");
  EXPECT_NE(svg.find("viewBox=\"0 0 1000 600\""), std::string::npos);
  EXPECT_NE(svg.find("<line"), std::string::npos);

  fs::path bf = dir / "bf.json";
  ASSERT_EQ(run({"--format", "json", "--out", bf.string(), "--svg", "butterfly", "--n", "4"}).code, 0);
  EXPECT_NE(slurp(dir / "bf.svg").find("viewBox=\"0 0 1000 600\""), std::string::npos);
  EXPECT_EQ(run({"--out", (dir / "x.csv").string(), "--svg", "dprime", "--p", "1", "--q", "5"}).code, 2);
  fs::remove_all(dir);
}

TEST(CliButterfly, N5Enumeration) {
  Result r = run({"butterfly", "--n", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  EXPECT_EQ(t.schema, "butterfly/1");
  std::vector<std::pair<long, long>> pairs;
  long total_q = 0;
  for (const auto& row : t.rows) {
    std::pair<long, long> pq{std::stol(row[t.column("P")]), std::stol(row[t.column("Q")])};
    if (pairs.empty() || pairs.back() != pq) {
      pairs.push_back(pq);
      total_q += pq.second;
    }
  }
  std::vector<std::pair<long, long>> want{{1, 1}, {1, 2}, {1, 3}, {2, 3}, {1, 4}, {3, 4}, {1, 5}, {2, 5}, {3, 5}, {4, 5}};
  EXPECT_EQ(pairs, want);
  EXPECT_EQ(static_cast<long>(t.rows.size()), total_q);
  EXPECT_EQ(total_q, 37);
  for (size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_GE(cell(t, i, "lo"), -4);
    EXPECT_LE(cell(t, i, "hi"), 4);
    EXPECT_LT(cell(t, i, "lo"), cell(t, i, "hi"));
  }
}

TEST(CliButterfly, MirrorSymmetryAtN5) {
  Result r = run({"butterfly", "--n", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  // Each side is certified to 2^{-96} at the default 128 bits.
  const double tol = 2 * std::ldexp(1.0, -96);
  std::map<std::pair<long, long>, std::vector<std::pair<BigFloat, BigFloat>>> bands;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    std::pair<long, long> pq{std::stol(t.rows[i][t.column("P")]), std::stol(t.rows[i][t.column("Q")])};
    bands[pq].emplace_back(cell(t, i, "lo"), cell(t, i, "hi"));
  }
  int compared = 0;
  for (const auto& [pq, list] : bands) {
    auto [P, Q] = pq;
    if (Q < 3 || 2 * P > Q) continue;
    const auto& mirror = bands.at({Q - P, Q});
    ASSERT_EQ(list.size(), mirror.size());
    for (size_t k = 0; k < list.size(); ++k) {
      EXPECT_LT(abs(list[k].first - mirror[k].first).to_double(), tol) << P << "/" << Q;
      EXPECT_LT(abs(list[k].second - mirror[k].second).to_double(), tol) << P << "/" << Q;
    }
    ++compared;
  }
  EXPECT_EQ(compared, 4);  // 1/3, 1/4, 1/5, 2/5
}

TEST(CliButterfly, DeterministicAcrossWorkerCounts) {
  Result one = run({"--workers", "1", "butterfly", "--n", "9"});
  Result many = run({"--workers", "4", "butterfly", "--n", "9"});
  ASSERT_EQ(one.code, 0);
  ASSERT_EQ(many.code, 0);
  EXPECT_EQ(one.out, many.out);
}

TEST(CliButterfly, FailedPairsAreLoggedAndSweepContinues) {
  // At a 64-bit cap the narrowest bands from Q = 32 on cannot be resolved.
  EnvGuard cap("HARPERDISC_MAX_PRECISION", "64");
  Result r = run({"--precision-bits", "64", "butterfly", "--n", "32"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("P=1 Q=32 failed"), std::string::npos) << r.err;
  Table t = csv(r.out);
  EXPECT_NE(t.notes.at("failed_pairs"), "0");
  std::set<long> qs;
  for (const auto& row : t.rows) qs.insert(std::stol(row[t.column("Q")]));
  for (long q = 1; q <= 31; ++q) EXPECT_TRUE(qs.count(q)) << q;
}

TEST(CliHausdorff, ColumnsAndTrend) {
  Result r = run({"hausdorff", "--q", "21,41", "--d", "0.5,1"});
  ASSERT_EQ(r.code, 0) << r.err;
  Table t = csv(r.out);
  EXPECT_EQ(t.schema, "hausdorff/1");
  ASSERT_EQ(t.rows.size(), 6u);  // 2 Q x 2 d, then one summary row per d
  SpectrumSummary s41 = compute_bands(1, 41);
  // d = 1 is the total bandwidth.
  EXPECT_LT(abs(cell(t, 3, "exact") - s41.total_width).to_double(), 1e-30);
  EXPECT_GT(cell(t, 3, "asym"), 0);
  EXPECT_EQ(t.rows[4][t.column("decreasing")], "true");
  EXPECT_EQ(t.rows[5][t.column("decreasing")], "true");
}

TEST(CliHausdorff, RejectsNonPositiveExponent) {
  Result r = run({"hausdorff", "--q", "21", "--d", "0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--d"), std::string::npos);
  EXPECT_EQ(run({"hausdorff", "--q", "21", "--d", "1.5"}).code, 2);
  EXPECT_EQ(run({"hausdorff", "--q", "41,21", "--d", "0.5"}).code, 2);
}
