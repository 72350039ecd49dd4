#ifndef HARPERDISC_REPORT_HPP
#define HARPERDISC_REPORT_HPP

#include <harperdisc/bigfloat.hpp>
#include <harperdisc/errors.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace harperdisc {

/// Decimal digits printed for a value carried at `bits` of precision.
inline int digits_for_bits(long bits) { return static_cast<int>(std::ceil(static_cast<double>(bits) * 0.301)); }

/// Digits that a tolerance certifies relative to a magnitude of order one.
inline int certified_digits(const BigFloat& tol) {
  if (tol.sign() <= 0) return 0;
  return std::max(0, static_cast<int>(std::floor(-std::log10(2.0) * static_cast<double>(tol.exponent()))));
}

/// A versioned table: fixed column order, every cell already formatted.
/// Numeric cells use scientific notation with an explicit exponent.
struct Table {
  std::string schema;  // e.g. "bands/1"
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> notes;  // emitted as "#key=value" lines in CSV

  void add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) {
      throw DomainError("row has " + std::to_string(row.size()) + " cells, schema has " +
                        std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
  }

  size_t column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DomainError("no column '" + name + "'");
    return static_cast<size_t>(it - columns.begin());
  }
};

inline std::string format_value(const BigFloat& v, int digits) { return v.to_string(digits); }

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

/// CSV layout: "#schema=<name>;columns=<c1|c2|...>", then "#key=value" notes,
/// then the header line and the data rows. Cells never contain commas.
inline void write_csv(const Table& t, std::ostream& out) {
  out << "#schema=" << t.schema << ";columns=" << join(t.columns, '|') << '\n';
  for (const auto& [k, v] : t.notes) out << '#' << k << '=' << v << '\n';
  out << join(t.columns, ',') << '\n';
  for (const auto& row : t.rows) out << join(row, ',') << '\n';
}

inline Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      std::string value = line.substr(eq + 1);
      if (key == "schema") {
        t.schema = value.substr(0, value.find(';'));
      } else {
        t.notes[key] = value;
      }
      continue;
    }
    if (!header) {
      t.columns = split(line, ',');
      header = true;
      continue;
    }
    t.add_row(split(line, ','));
  }
  if (t.schema.empty()) throw DomainError("CSV lacks a #schema= line");
  if (!header) throw DomainError("CSV lacks a header line");
  return t;
}

/// JSON layout: {"meta": {...}, "rows": [{"col": "cell", ...}, ...]}. The
/// schema, the column order and the notes live inside meta.
inline nlohmann::ordered_json to_json(const Table& t, const nlohmann::ordered_json& meta) {
  nlohmann::ordered_json doc;
  doc["meta"] = meta;
  doc["meta"]["schema"] = t.schema;
  doc["meta"]["columns"] = t.columns;
  for (const auto& [k, v] : t.notes) doc["meta"]["notes"][k] = v;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = row[i];
    doc["rows"].push_back(std::move(r));
  }
  return doc;
}

inline void write_json(const Table& t, const nlohmann::ordered_json& meta, std::ostream& out) {
  out << to_json(t, meta).dump(2) << '\n';
}

inline Table read_json(std::istream& in) {
  auto doc = nlohmann::ordered_json::parse(in);
  Table t;
  t.schema = doc.at("meta").at("schema").get<std::string>();
  t.columns = doc.at("meta").at("columns").get<std::vector<std::string>>();
  if (doc["meta"].contains("notes")) {
    for (const auto& [k, v] : doc["meta"]["notes"].items()) t.notes[k] = v.get<std::string>();
  }
  for (const auto& r : doc.at("rows")) {
    std::vector<std::string> row;
    for (const auto& c : t.columns) row.push_back(r.at(c).get<std::string>());
    t.add_row(std::move(row));
  }
  return t;
}

/// True when `printed` parses back to `value` within one unit in the last
/// printed digit.
inline bool round_trips(const BigFloat& value, const std::string& printed, int digits) {
  BigFloat back = BigFloat::parse(printed, value.precision());
  if (value.iszero()) return back.iszero();
  BigFloat rel = abs(back - value) / abs(value);
  return rel <= BigFloat(10L, value.precision()) * pow(BigFloat(10L, value.precision()), -static_cast<long>(digits));
}

/// Minimal SVG canvas: 1000 x 600 viewbox, energy in [-4, 4] across.
class SvgCanvas {
 public:
  static constexpr double kWidth = 1000;
  static constexpr double kHeight = 600;

  static double energy_to_x(double e) { return (e + 4.0) / 8.0 * kWidth; }

  void segment(double e_lo, double e_hi, double y, double thickness, const std::string& color) {
    double x0 = energy_to_x(e_lo);
    double x1 = std::max(energy_to_x(e_hi), x0 + 0.5);  // keep hairline bands visible
    body_ << "<line x1=\"" << x0 << "\" y1=\"" << y << "\" x2=\"" << x1 << "\" y2=\"" << y
          << "\" stroke=\"" << color << "\" stroke-width=\"" << thickness << "\"/>\n";
  }

  void text(double x, double y, const std::string& s) {
    body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"14\" font-family=\"sans-serif\">" << s
          << "</text>\n";
  }

  void axis(double y) {
    body_ << "<line x1=\"0\" y1=\"" << y << "\" x2=\"" << kWidth << "\" y2=\"" << y
          << "\" stroke=\"#999\" stroke-width=\"1\"/>\n";
    for (int e = -4; e <= 4; ++e) text(std::clamp(energy_to_x(e) - 6, 2.0, kWidth - 20), y + 18, std::to_string(e));
  }

  void write(std::ostream& out) const {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" width=\""
        << kWidth << "\" height=\"" << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
  }

 private:
  std::ostringstream body_;
};

}  // namespace harperdisc

#endif  // HARPERDISC_REPORT_HPP
