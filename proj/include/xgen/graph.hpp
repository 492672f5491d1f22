#pragma once

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/evaluation.hpp"

namespace xgen {

enum class GraphKind { kGood, kPoor };

using Edge = std::pair<std::string, std::string>;

// Directed M -> N links between generators. No self-edges.
struct GenGraph {
  std::vector<std::string> nodes;
  std::set<Edge> edges;
  GraphKind kind = GraphKind::kGood;
  double threshold = 0.0;
  bool require_significance = false;
  std::string source_digest;
};

// M -> N iff the mean bootstrap gap is below T. With require_significance,
// the gap must additionally not be significantly positive.
GenGraph good_graph(const AccGapMatrix& gaps, double threshold,
                    bool require_significance = false);

// M -> N iff the mean bootstrap gap exceeds the threshold.
GenGraph poor_graph(const AccGapMatrix& gaps, double threshold = 0.20);

// Nodes and edges are emitted in sorted order. Edges listed in `highlight`
// (declared medium -> large pairs) are drawn dotted green.
std::string export_dot(const GenGraph& g, std::span<const Edge> highlight = {});

nlohmann::json to_json(const GenGraph& g);

}  // namespace xgen
