#include "xgen/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

namespace {

std::string header_row(const std::vector<std::string>& generators) {
  std::string out = "detector";
  for (const auto& g : generators) out += "," + csv_field(g);
  return out + "\n";
}

// Splits one RFC 4180 record (no embedded line breaks).
std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string tenths(long long t) {
  const long long a = std::llabs(t);
  return std::to_string(a / 10) + "." + std::to_string(a % 10);
}

}  // namespace

std::string percent2(double fraction) { return format_fixed(fraction * 100.0, 2); }

std::string heatmap_csv(const AccGapMatrix& gaps) {
  std::string out = header_row(gaps.generators);
  for (std::size_t m = 0; m < gaps.generators.size(); ++m) {
    out += csv_field(gaps.generators[m]);
    for (std::size_t n = 0; n < gaps.generators.size(); ++n) {
      out += "," + percent2(gaps.mean_gap(m, n));
    }
    out += "\n";
  }
  return out;
}

std::pair<std::vector<std::string>, SquareMatrix<double>> parse_percent_csv(
    const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kInvalidArgument, "empty CSV");
  auto header = parse_csv_line(line);
  std::vector<std::string> gens(header.begin() + 1, header.end());
  SquareMatrix<double> m(gens.size());
  for (std::size_t r = 0; r < gens.size(); ++r) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kInvalidArgument, "CSV is not square");
    auto fields = parse_csv_line(line);
    if (fields.size() != gens.size() + 1 || fields[0] != gens[r]) {
      throw Error(ErrorCode::kInvalidArgument, "CSV row " + std::to_string(r + 1) + " malformed");
    }
    for (std::size_t c = 0; c < gens.size(); ++c) m(r, c) = std::stod(fields[c + 1]) / 100.0;
  }
  return {gens, m};
}

std::string matrix_csv(const std::vector<std::string>& generators, const SquareMatrix<double>& m) {
  std::string out = header_row(generators);
  char buf[40];
  for (std::size_t i = 0; i < generators.size(); ++i) {
    out += csv_field(generators[i]);
    for (std::size_t j = 0; j < generators.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", m(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string significance_csv(const AccGapMatrix& gaps) {
  std::string out = header_row(gaps.generators);
  for (std::size_t i = 0; i < gaps.generators.size(); ++i) {
    out += csv_field(gaps.generators[i]);
    for (std::size_t j = 0; j < gaps.generators.size(); ++j) {
      out += gaps.significant(i, j) ? ",1" : ",0";
    }
    out += "\n";
  }
  return out;
}

std::vector<DirectionRow> direction_rows(const AccGapMatrix& gaps, std::span<const Edge> pairs) {
  std::vector<DirectionRow> rows;
  for (const auto& [medium, large] : pairs) {
    const auto mi = gaps.index_of(medium);
    const auto li = gaps.index_of(large);
    rows.push_back({medium, large, gaps.gap(mi, li), gaps.gap(li, mi)});
  }
  return rows;
}

std::string direction_table(const AccGapMatrix& gaps, std::span<const Edge> pairs) {
  std::string out = "M,N,gap_M_to_N,gap_N_to_M\n";
  for (const auto& r : direction_rows(gaps, pairs)) {
    out += csv_field(r.medium) + "," + csv_field(r.large) + "," + percent2(r.medium_to_large) +
           "%," + percent2(r.large_to_medium) + "%\n";
  }
  return out;
}

std::string direction_text(const AccGapMatrix& gaps, std::span<const Edge> pairs) {
  std::string out;
  for (const auto& r : direction_rows(gaps, pairs)) {
    out += r.medium + " | " + r.large + " | " + percent2(r.medium_to_large) + "% | " +
           percent2(r.large_to_medium) + "%\n";
  }
  return out;
}

std::string suite_cell(double acc, double baseline_acc, bool annotate) {
  const long long t = std::llround(acc * 1000.0);
  std::string cell = (t < 0 ? "-" : "") + tenths(t);
  if (!annotate) return cell;
  const long long d = t - std::llround(baseline_acc * 1000.0);
  if (d == 0) return cell + " (0)";
  return cell + " (" + (d > 0 ? "+" : "-") + tenths(d) + ")";
}

std::string suite_table(std::span<const NamedReport> reports, const std::string& baseline,
                        bool annotate_baseline, std::span<const std::string> plain) {
  if (reports.empty()) throw Error(ErrorCode::kInvalidArgument, "no suite reports");
  const auto& universe = reports.front().report.per_generator_acc;
  for (const auto& r : reports) {
    const auto& accs = r.report.per_generator_acc;
    bool same = accs.size() == universe.size();
    for (std::size_t i = 0; same && i < accs.size(); ++i) same = accs[i].first == universe[i].first;
    if (!same) {
      throw Error(ErrorCode::kInconsistentUniverse,
                  "report \"" + r.name + "\" covers different generators");
    }
  }
  const NamedReport* base = nullptr;
  for (const auto& r : reports) {
    if (r.name == baseline) base = &r;
  }
  if (!base) throw Error(ErrorCode::kInvalidArgument, "baseline \"" + baseline + "\" not found");

  std::string out = "row";
  for (const auto& r : reports) out += "," + csv_field(r.name);
  out += "\n";
  auto row = [&](const std::string& label, auto value_of) {
    out += csv_field(label);
    for (const auto& r : reports) {
      const bool is_plain = std::find(plain.begin(), plain.end(), r.name) != plain.end();
      const bool annotate = &r == base ? annotate_baseline : !is_plain;
      out += "," + csv_field(suite_cell(value_of(r.report), value_of(base->report), annotate));
    }
    out += "\n";
  };
  row("Average", [](const SuiteReport& s) { return s.average; });
  row("Worst-case", [](const SuiteReport& s) { return s.worst_case; });
  for (std::size_t i = 0; i < universe.size(); ++i) {
    row(universe[i].first, [i](const SuiteReport& s) { return s.per_generator_acc[i].second; });
  }
  return out;
}

nlohmann::json summary_json(const AccGapMatrix& gaps, std::span<const GenGraph> graphs,
                            std::span<const NamedReport> suites) {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& graph : graphs) g.push_back(to_json(graph));
  nlohmann::json s = nlohmann::json::object();
  for (const auto& r : suites) s[r.name] = to_json(r.report);
  return {{"matrices", to_json(gaps)}, {"graphs", std::move(g)}, {"suites", std::move(s)}};
}

}  // namespace xgen
