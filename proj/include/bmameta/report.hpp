#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "bmameta/bma.hpp"
#include "bmameta/prior_fitting.hpp"

namespace bmameta {

// Plain-text report with "Components summary", "Model-averaged estimates"
// and "Conditional estimates" blocks, followed by a per-model table.
std::string format_report(const BmaResult& result);

// Deterministic JSON document: same input, same bytes.
nlohmann::ordered_json result_json(const BmaResult& result, bool include_grids = false);

// Writes mu_conditional.tsv, mu_averaged.tsv, tau_conditional.tsv,
// tau_averaged.tsv and forest.tsv into `dir` (created if missing) and returns
// the file names written. Grids are on the analysis (log) scale; averaged
// grids hold the continuous part, the atom weight is in the header. Forest
// rows use `policy` for zero cells, falling back to add=0.5 for display.
std::vector<std::string> write_plot_data(const BmaResult& result, const Dataset& data,
                                         ZeroCellPolicy policy, const std::string& dir);

nlohmann::ordered_json effect_json(const std::vector<EffectEstimate>& estimates);
std::string format_effects(const std::vector<EffectEstimate>& estimates);

nlohmann::ordered_json fit_json(const FitResult& fit, const FitInput& input, Family family);

nlohmann::ordered_json ranking_json(const RankingReport& report);
std::string format_ranking(const RankingReport& report);

}  // namespace bmameta
