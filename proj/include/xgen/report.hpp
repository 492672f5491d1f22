#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/ensemble.hpp"
#include "xgen/evaluation.hpp"
#include "xgen/graph.hpp"

namespace xgen {

// Square CSV of mean bootstrap gaps in percent (2 decimals); detector rows,
// generator columns, in matrix order.
std::string heatmap_csv(const AccGapMatrix& gaps);

// Parses a percent matrix CSV back into fractions (ids from the header).
std::pair<std::vector<std::string>, SquareMatrix<double>> parse_percent_csv(
    const std::string& csv);

// Raw matrix export, full precision; one file each for acc, gap, p-values.
std::string matrix_csv(const std::vector<std::string>& generators, const SquareMatrix<double>& m);
std::string significance_csv(const AccGapMatrix& gaps);

struct DirectionRow {
  std::string medium;
  std::string large;
  double medium_to_large = 0.0;  // gap of D_medium on the large generator
  double large_to_medium = 0.0;  // gap of D_large on the medium generator
};

std::vector<DirectionRow> direction_rows(const AccGapMatrix& gaps,
                                         std::span<const Edge> pairs);
// Per declared pair: gap(medium -> large) and gap(large -> medium), percent.
std::string direction_table(const AccGapMatrix& gaps, std::span<const Edge> pairs);
// The same rows in pipe layout: "M | N | 3.64% | 5.46%".
std::string direction_text(const AccGapMatrix& gaps, std::span<const Edge> pairs);

std::string percent2(double fraction);

struct NamedReport {
  std::string name;
  SuiteReport report;
};

// Suite table layout: rows Average, Worst-case, then generators; one column per
// report, annotated with the delta (one decimal) against the baseline.
// The baseline column itself is annotated "(0)" when annotate_baseline;
// columns named in `plain` (other baselines) are never annotated.
std::string suite_table(std::span<const NamedReport> reports, const std::string& baseline,
                        bool annotate_baseline = false, std::span<const std::string> plain = {});

// "88.6 (+0.6)" style cell, deltas taken between the rounded values.
std::string suite_cell(double acc, double baseline_acc, bool annotate);

nlohmann::json summary_json(const AccGapMatrix& gaps, std::span<const GenGraph> graphs,
                            std::span<const NamedReport> suites);

}  // namespace xgen
