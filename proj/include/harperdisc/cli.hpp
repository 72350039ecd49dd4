#ifndef HARPERDISC_CLI_HPP
#define HARPERDISC_CLI_HPP

#include <harperdisc/asymptotics.hpp>
#include <harperdisc/bands.hpp>
#include <harperdisc/exactdisc.hpp>
#include <harperdisc/parallel.hpp>
#include <harperdisc/report.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#ifndef HARPERDISC_VERSION
#define HARPERDISC_VERSION "0.0.0"
#endif

namespace harperdisc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

enum class Command { disc_eval, dprime, bands, butterfly, hausdorff };
enum class OutputFormat { csv, json };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::disc_eval: return "disc eval";
    case Command::dprime: return "dprime";
    case Command::bands: return "bands";
    case Command::butterfly: return "butterfly";
    case Command::hausdorff: return "hausdorff";
  }
  return "?";
}

struct RunConfig {
  Command command = Command::bands;
  long P = 1;
  std::vector<long> Q;
  std::optional<long> precision_bits;
  std::string edge_tol;  // decimal string; empty means the library default
  OutputFormat output_format = OutputFormat::csv;
  std::string output_path;  // empty means stdout
  bool emit_svg = false;
  // command-specific
  std::vector<std::string> x;
  std::string route = "auto";
  long N = 0;
  long max_N = 64;
  std::vector<std::string> d;
  unsigned workers = default_workers();
};

/// Raised for bad flag values; carries the flag name in its message.
class UsageError : public DomainError {
 public:
  using DomainError::DomainError;
};

namespace detail {

inline std::string bool_cell(bool v) { return v ? "true" : "false"; }

inline Precision precision_or(const RunConfig& c, Precision fallback) {
  return c.precision_bits ? Precision(*c.precision_bits) : fallback;
}

inline std::optional<BigFloat> edge_tol(const RunConfig& c, Precision prec) {
  if (c.edge_tol.empty()) return std::nullopt;
  BigFloat tol = BigFloat::parse(c.edge_tol, prec);
  if (!(tol > 0)) throw UsageError("--edge-tol must be positive, got '" + c.edge_tol + "'");
  return tol;
}

inline nlohmann::ordered_json meta(const RunConfig& c) {
  nlohmann::ordered_json m;
  m["tool"] = "harperdisc";
  m["version"] = HARPERDISC_VERSION;
  m["command"] = command_name(c.command);
  m["P"] = c.P;
  m["Q"] = c.Q;
  if (c.precision_bits) m["precision_bits"] = *c.precision_bits;
  if (!c.edge_tol.empty()) m["edge_tol"] = c.edge_tol;
  m["format"] = c.output_format == OutputFormat::csv ? "csv" : "json";
  if (!c.output_path.empty()) m["out"] = c.output_path;
  m["svg"] = c.emit_svg;
  if (!c.x.empty()) m["x"] = c.x;
  if (c.command == Command::disc_eval) m["route"] = c.route;
  if (c.command == Command::butterfly) m["N"] = c.N;
  if (!c.d.empty()) m["d"] = c.d;
  return m;
}

inline std::string svg_path(const RunConfig& c) {
  return std::filesystem::path(c.output_path).replace_extension(".svg").string();
}

inline void emit(const RunConfig& c, const Table& t, std::ostream& out) {
  auto write = [&](std::ostream& os) {
    if (c.output_format == OutputFormat::csv) write_csv(t, os);
    else write_json(t, meta(c), os);
  };
  if (c.output_path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(c.output_path);
  if (!file) throw UsageError("--out: cannot open '" + c.output_path + "' for writing");
  write(file);
}

inline void emit_svg(const RunConfig& c, const SvgCanvas& svg) {
  std::ofstream file(svg_path(c));
  if (!file) throw UsageError("--svg: cannot open '" + svg_path(c) + "' for writing");
  svg.write(file);
}

inline void validate(const RunConfig& c) {
  if (c.precision_bits && *c.precision_bits < Precision::kMinBits) {
    throw UsageError("--precision-bits must be >= 53, got " + std::to_string(*c.precision_bits));
  }
  if (c.emit_svg && c.output_path.empty()) throw UsageError("--svg needs --out to name the data file");
  if (c.emit_svg && c.command != Command::bands && c.command != Command::butterfly) {
    throw UsageError("--svg is available for bands and butterfly only");
  }
  if (c.P < 1) throw UsageError("--p must be positive, got " + std::to_string(c.P));
  for (long q : c.Q) {
    if (q < 1) throw UsageError("--q entries must be positive, got " + std::to_string(q));
    if (std::gcd(c.P, q) != 1) {
      throw UsageError("--q " + std::to_string(q) + " is not coprime to --p " + std::to_string(c.P));
    }
  }
  if (!c.edge_tol.empty()) edge_tol(c, Precision(128));
}

inline void require_single_q(const RunConfig& c) {
  if (c.Q.size() != 1) throw UsageError("--q takes exactly one value for " + std::string(command_name(c.command)));
}

inline void require_increasing(const std::vector<long>& qs) {
  for (size_t i = 1; i < qs.size(); ++i) {
    if (qs[i] <= qs[i - 1]) throw UsageError("--q list must be strictly increasing");
  }
}

/// Band table shared by `bands`; one row per band.
inline Table band_table(const SpectrumSummary& s) {
  Table t{"bands/1", {"index", "lo", "hi", "width", "cluster_id"}, {}, {}};
  int digits = digits_for_bits(s.precision.bits());
  t.notes["precision_bits"] = std::to_string(s.precision.bits());
  t.notes["digits"] = std::to_string(digits);
  t.notes["certified_abs_tol"] = s.edge_tol.to_string(3);
  t.notes["certified_digits"] = std::to_string(certified_digits(s.edge_tol));
  for (const Band& b : s.bands) {
    t.add_row({std::to_string(b.index), format_value(b.lo, digits), format_value(b.hi, digits),
               format_value(b.width, digits), std::to_string(b.cluster_id)});
  }
  return t;
}

}  // namespace detail

inline int cmd_disc_eval(const RunConfig& c, std::ostream& out) {
  detail::require_single_q(c);
  if (c.x.empty()) throw UsageError("--x is required");
  if (c.route != "auto" && c.route != "determinant" && c.route != "transfer") {
    throw UsageError("--route must be auto, determinant or transfer, got '" + c.route + "'");
  }
  const long Q = c.Q.front();
  if (c.route == "determinant" && Q % 2 == 0) throw UsageError("--route determinant needs odd --q");
  Precision prec = detail::precision_or(c, Precision(128));
  std::vector<BigFloat> xs;
  for (const auto& s : c.x) {
    try {
      xs.push_back(BigFloat::parse(s, prec));
    } catch (const DomainError&) {
      throw UsageError("--x: not a finite decimal number: '" + s + "'");
    }
  }
  DiscriminantModel model = build_model(c.P, Q, prec);
  Table t{"disc/1", {"x", "sigma", "sigma_prime", "route"}, {}, {}};
  int digits = digits_for_bits(prec.bits());
  t.notes["precision_bits"] = std::to_string(prec.bits());
  t.notes["digits"] = std::to_string(digits);
  for (const BigFloat& x : xs) {
    DiscriminantValue v = c.route == "determinant" ? sigma_det(model, x)
                          : c.route == "transfer"  ? sigma_transfer(model, x)
                                                   : sigma(model, x);
    t.add_row({format_value(x, digits), format_value(v.sigma, digits), format_value(v.sigma_prime, digits),
               route_name(v.route)});
  }
  detail::emit(c, t, out);
  return kExitOk;
}

inline int cmd_dprime_table(const RunConfig& c, std::ostream& out) {
  if (c.Q.empty()) throw UsageError("--q needs at least one value");
  detail::require_increasing(c.Q);
  for (long q : c.Q) {
    if (q % 2 == 0) throw UsageError("--q entries must be odd for dprime, got " + std::to_string(q));
  }
  Precision prec = detail::precision_or(c, Precision(128));
  int digits = digits_for_bits(prec.bits());
  Table t{"dprime/1", {"kind", "P", "Q", "s", "exact", "asym", "abs_error", "rel_error", "decreasing"}, {}, {}};
  t.notes["precision_bits"] = std::to_string(prec.bits());
  t.notes["digits"] = std::to_string(digits);

  std::vector<AsymptoticReport> reports(c.Q.size(), AsymptoticReport{});
  parallel_for(
      c.Q.size(),
      [&](size_t i) {
        FluxRatio flux = make_flux(c.P, c.Q[i], prec);
        BigFloat asym = c.P == 1 ? sigma_prime_zero_asym_p1(flux.Q, prec) : sigma_prime_zero_asym(flux);
        reports[i] = make_report(flux, sigma_prime_zero_exact(flux), std::move(asym));
      },
      c.workers);

  std::map<long, std::vector<const AsymptoticReport*>> by_s;
  for (const auto& r : reports) {
    t.add_row({"data", std::to_string(r.flux.P), std::to_string(r.flux.Q), std::to_string(r.flux.s),
               format_value(r.exact, digits), format_value(r.asymptotic, digits), format_value(r.abs_error, digits),
               format_value(r.rel_error, digits), ""});
    by_s[r.flux.s].push_back(&r);
  }
  // One trailing summary row per s: does abs_error decrease strictly along Q?
  for (const auto& [s, seq] : by_s) {
    std::string flag = "n/a";
    if (seq.size() >= 2) {
      bool dec = true;
      for (size_t i = 1; i < seq.size(); ++i) dec = dec && seq[i]->abs_error < seq[i - 1]->abs_error;
      flag = detail::bool_cell(dec);
    }
    t.add_row({"summary", std::to_string(c.P), "", std::to_string(s), "", "", "", "", flag});
  }
  detail::emit(c, t, out);
  return kExitOk;
}

inline int cmd_bands(const RunConfig& c, std::ostream& out) {
  detail::require_single_q(c);
  const long Q = c.Q.front();
  Precision prec = detail::precision_or(c, working_precision(Q));
  BandOptions opts;
  opts.edge_tol = detail::edge_tol(c, prec);
  opts.workers = c.workers;
  SpectrumSummary s = compute_bands(build_model(c.P, Q, prec), opts);
  Table t = detail::band_table(s);
  t.notes["escalations"] = std::to_string(s.escalations);
  t.notes["clusters_bimodal"] = detail::bool_cell(s.clusters_bimodal);
  detail::emit(c, t, out);
  if (c.emit_svg) {
    SvgCanvas svg;
    const double y = SvgCanvas::kHeight / 2;
    svg.axis(y + 40);
    svg.text(20, 30, "P/Q = " + std::to_string(c.P) + "/" + std::to_string(Q));
    for (const Band& b : s.bands) {
      svg.segment(b.lo.to_double(), b.hi.to_double(), y, 24, b.cluster_id % 2 ? "#1f4e9c" : "#c0392b");
    }
    detail::emit_svg(c, svg);
  }
  return kExitOk;
}

/// Coprime pairs with Q <= N, P in [1, Q) (plus 1/1), sorted by Q then P.
inline std::vector<std::pair<long, long>> butterfly_pairs(long N) {
  std::vector<std::pair<long, long>> pairs;
  for (long q = 1; q <= N; ++q) {
    for (long p = 1; p <= std::max(1L, q - 1); ++p) {
      if (std::gcd(p, q) == 1) pairs.emplace_back(p, q);
    }
  }
  return pairs;
}

inline int cmd_butterfly(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.N < 1) throw UsageError("--n must be >= 1, got " + std::to_string(c.N));
  if (c.N > c.max_N) {
    throw UsageError("--n " + std::to_string(c.N) + " exceeds --max-n " + std::to_string(c.max_N));
  }
  auto pairs = butterfly_pairs(c.N);
  std::vector<std::optional<SpectrumSummary>> results(pairs.size());
  std::vector<std::string> failures(pairs.size());
  // Each pair runs single-threaded; the pool spreads pairs over workers.
  parallel_for(
      pairs.size(),
      [&](size_t i) {
        auto [p, q] = pairs[i];
        try {
          Precision prec = detail::precision_or(c, working_precision(q));
          BandOptions opts;
          opts.edge_tol = detail::edge_tol(c, prec);
          opts.workers = 1;
          results[i] = compute_bands(build_model(p, q, prec), opts);
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      },
      c.workers);

  Table t{"butterfly/1", {"P", "Q", "band_index", "lo", "hi"}, {}, {}};
  t.notes["N"] = std::to_string(c.N);
  t.notes["pairs"] = std::to_string(pairs.size());
  long failed = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto [p, q] = pairs[i];
    if (!results[i]) {
      ++failed;
      err << "butterfly: P=" << p << " Q=" << q << " failed: " << failures[i] << '\n';
      continue;
    }
    int digits = digits_for_bits(results[i]->precision.bits());
    for (const Band& b : results[i]->bands) {
      t.add_row({std::to_string(p), std::to_string(q), std::to_string(b.index), format_value(b.lo, digits),
                 format_value(b.hi, digits)});
    }
  }
  t.notes["failed_pairs"] = std::to_string(failed);
  detail::emit(c, t, out);
  if (c.emit_svg) {
    SvgCanvas svg;
    const double top = 20, bottom = SvgCanvas::kHeight - 40;
    svg.axis(bottom);
    for (size_t i = 0; i < pairs.size(); ++i) {
      if (!results[i]) continue;
      double alpha = static_cast<double>(pairs[i].first) / static_cast<double>(pairs[i].second);
      double y = bottom - alpha * (bottom - top);
      for (const Band& b : results[i]->bands) svg.segment(b.lo.to_double(), b.hi.to_double(), y, 2, "#1f4e9c");
    }
    detail::emit_svg(c, svg);
  }
  return failed == 0 ? kExitOk : kExitNumeric;
}

inline int cmd_hausdorff(const RunConfig& c, std::ostream& out) {
  if (c.Q.empty()) throw UsageError("--q needs at least one value");
  detail::require_increasing(c.Q);
  if (c.d.empty()) throw UsageError("--d needs at least one value");
  const Precision dprec(128);
  std::vector<BigFloat> ds;
  for (const auto& s : c.d) {
    BigFloat d(dprec);
    try {
      d = BigFloat::parse(s, dprec);
    } catch (const DomainError&) {
      throw UsageError("--d: not a finite decimal number: '" + s + "'");
    }
    if (!(d > 0) || d > 1) throw UsageError("--d entries must lie in (0, 1], got '" + s + "'");
    ds.push_back(std::move(d));
  }
  for (long q : c.Q) {
    if (q < 3) throw UsageError("--q entries must be >= 3 for hausdorff, got " + std::to_string(q));
  }

  Table t{"hausdorff/1", {"kind", "Q", "d", "exact", "asym", "decreasing"}, {}, {}};
  // exact[q][d]
  std::vector<std::vector<BigFloat>> exact(c.Q.size());
  int digits = 0;
  for (size_t qi = 0; qi < c.Q.size(); ++qi) {
    const long Q = c.Q[qi];
    Precision prec = detail::precision_or(c, working_precision(Q));
    BandOptions opts;
    opts.edge_tol = detail::edge_tol(c, prec);
    opts.workers = c.workers;
    SpectrumSummary s = compute_bands(build_model(c.P, Q, prec), opts);
    digits = std::max(digits, digits_for_bits(dprec.bits()));
    for (size_t di = 0; di < ds.size(); ++di) {
      BigFloat w = hausdorff_wd(s, ds[di].rounded(s.precision));
      BigFloat asym = w_d_asym(Q, ds[di]);
      t.add_row({"data", std::to_string(Q), c.d[di], format_value(w, digits), format_value(asym, digits), ""});
      exact[qi].push_back(std::move(w));
    }
  }
  for (size_t di = 0; di < ds.size(); ++di) {
    std::string flag = "n/a";
    if (c.Q.size() >= 2) {
      bool dec = true;
      for (size_t qi = 1; qi < c.Q.size(); ++qi) dec = dec && exact[qi][di] < exact[qi - 1][di];
      flag = detail::bool_cell(dec);
    }
    t.add_row({"summary", "", c.d[di], "", "", flag});
  }
  t.notes["digits"] = std::to_string(digits);
  detail::emit(c, t, out);
  return kExitOk;
}

inline int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
  switch (c.command) {
    case Command::disc_eval: return cmd_disc_eval(c, out);
    case Command::dprime: return cmd_dprime_table(c, out);
    case Command::bands: return cmd_bands(c, out);
    case Command::butterfly: return cmd_butterfly(c, out, err);
    case Command::hausdorff: return cmd_hausdorff(c, out);
  }
  return kExitUsage;
}

/// Full command line: parse, validate, run. Never throws; returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig c;
  std::string format = "csv";
  long precision_bits = 0;

  CLI::App app{"Discriminant, bands and asymptotics of Harper's equation at rational flux P/Q", "harperdisc"};
  app.set_version_flag("--version", HARPERDISC_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  auto* prec_opt = app.add_option("--precision-bits", precision_bits, "working precision in bits (>= 53)");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", c.output_path, "output file (default: stdout)");
  app.add_flag("--svg", c.emit_svg, "also write an SVG plot next to --out");
  app.add_option("--edge-tol", c.edge_tol, "absolute band-edge tolerance, e.g. 1e-40");
  app.add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);

  auto* disc = app.add_subcommand("disc", "evaluate the discriminant");
  disc->require_subcommand(1);
  disc->fallthrough();
  auto* eval = disc->add_subcommand("eval", "Sigma and Sigma' at the given energies");
  eval->add_option("--p", c.P, "numerator P")->required();
  eval->add_option("--q", c.Q, "denominator Q")->required()->expected(1);
  eval->add_option("--x", c.x, "energies (repeatable)")->required();
  eval->add_option("--route", c.route, "auto, determinant or transfer");

  auto* dprime = app.add_subcommand("dprime", "exact vs asymptotic Sigma'(0) table");
  dprime->add_option("--p", c.P, "numerator P")->required();
  dprime->add_option("--q", c.Q, "odd denominators, increasing")->required()->delimiter(',');

  auto* bands = app.add_subcommand("bands", "band edges at one P/Q");
  bands->add_option("--p", c.P, "numerator P")->required();
  bands->add_option("--q", c.Q, "denominator Q")->required()->expected(1);

  auto* butterfly = app.add_subcommand("butterfly", "bands for every coprime P/Q with Q <= N");
  butterfly->add_option("--n", c.N, "largest denominator")->required();
  butterfly->add_option("--max-n", c.max_N, "refuse sweeps beyond this N");

  auto* hausdorff = app.add_subcommand("hausdorff", "W(d) from exact bands against the asymptotic form");
  hausdorff->add_option("--p", c.P, "numerator P (default 1)");
  hausdorff->add_option("--q", c.Q, "denominators, increasing")->required()->delimiter(',');
  hausdorff->add_option("--d", c.d, "exponents in (0, 1]")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*prec_opt) c.precision_bits = precision_bits;
  c.output_format = format == "json" ? OutputFormat::json : OutputFormat::csv;
  if (*disc) c.command = Command::disc_eval;
  else if (*dprime) c.command = Command::dprime;
  else if (*bands) c.command = Command::bands;
  else if (*butterfly) c.command = Command::butterfly;
  else c.command = Command::hausdorff;

  try {
    detail::validate(c);
    return dispatch(c, out, err);
  } catch (const Error& e) {
    err << "harperdisc " << command_name(c.command) << ": " << e.what() << '\n';
    return is_validation_error(e) ? kExitUsage : kExitNumeric;
  } catch (const std::exception& e) {
    err << "harperdisc " << command_name(c.command) << ": " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace harperdisc::cli

#endif  // HARPERDISC_CLI_HPP
