#include "xgen/graph.hpp"

#include <algorithm>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

namespace {

GenGraph empty_graph(const AccGapMatrix& gaps, GraphKind kind, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be > 0");
  GenGraph g;
  g.nodes = gaps.generators;
  std::sort(g.nodes.begin(), g.nodes.end());
  g.kind = kind;
  g.threshold = threshold;
  g.source_digest = digest(gaps);
  return g;
}

std::string quoted(const std::string& id) {
  std::string out = "\"";
  for (char c : id) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

GenGraph good_graph(const AccGapMatrix& gaps, double threshold, bool require_significance) {
  GenGraph g = empty_graph(gaps, GraphKind::kGood, threshold);
  g.require_significance = require_significance;
  const auto& gens = gaps.generators;
  for (std::size_t m = 0; m < gens.size(); ++m) {
    for (std::size_t n = 0; n < gens.size(); ++n) {
      if (m == n || !(gaps.mean_gap(m, n) < threshold)) continue;
      if (require_significance && gaps.significant(m, n)) continue;
      g.edges.emplace(gens[m], gens[n]);
    }
  }
  return g;
}

GenGraph poor_graph(const AccGapMatrix& gaps, double threshold) {
  GenGraph g = empty_graph(gaps, GraphKind::kPoor, threshold);
  const auto& gens = gaps.generators;
  for (std::size_t m = 0; m < gens.size(); ++m) {
    for (std::size_t n = 0; n < gens.size(); ++n) {
      if (m != n && gaps.mean_gap(m, n) > threshold) g.edges.emplace(gens[m], gens[n]);
    }
  }
  return g;
}

std::string export_dot(const GenGraph& g, std::span<const Edge> highlight) {
  std::string out = "digraph {\n";
  out += "  label=\"";
  out += g.kind == GraphKind::kGood ? "good: gap < " : "poor: gap > ";
  out += format_fixed(g.threshold * 100.0, 2) + "%";
  if (g.require_significance) out += ", not significant";
  out += "\";\n";
  for (const auto& n : g.nodes) out += "  " + quoted(n) + ";\n";
  // std::set already orders edges by (M, N).
  for (const auto& e : g.edges) {
    out += "  " + quoted(e.first) + " -> " + quoted(e.second);
    if (std::find(highlight.begin(), highlight.end(), e) != highlight.end()) {
      out += " [style=dotted, color=green]";
    }
    out += ";\n";
  }
  out += "}\n";
  return out;
}

nlohmann::json to_json(const GenGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [m, n] : g.edges) edges.push_back({m, n});
  nlohmann::json j = {{"nodes", g.nodes},
                      {"edges", std::move(edges)},
                      {"kind", g.kind == GraphKind::kGood ? "good" : "poor"},
                      {"require_significance", g.require_significance},
                      {"source_digest", g.source_digest}};
  j[g.kind == GraphKind::kGood ? "T" : "threshold"] = g.threshold;
  return j;
}

}  // namespace xgen
