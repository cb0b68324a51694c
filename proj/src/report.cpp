#include "bmameta/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "bmameta/errors.hpp"

namespace bmameta {

namespace {

using ojson = nlohmann::ordered_json;

std::string fixed3(double v) {
  char buf[64];
  if (std::abs(v) >= 1e6)
    std::snprintf(buf, sizeof buf, "%.3e", v);
  else
    std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::string level_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", p);
  return buf;
}

std::string bf_text(const InclusionBF& bf) {
  return bf.capped ? (bf.value > 1.0 ? ">" : "<") + fixed3(bf.value) : fixed3(bf.value);
}

std::string scale_note(const BmaResult& r) {
  const std::string m(to_string(r.measure));
  if (r.output_scale == OutputScale::Ratio) {
    const std::string ratio = m.substr(3);  // logOR -> OR
    return "The effect size estimates are summarized on the " + ratio +
           " scale and heterogeneity is summarized on the " + m + " scale.";
  }
  return "The effect size and heterogeneity estimates are summarized on the " + m + " scale.";
}

std::string estimates_block(const SummaryStats& mu, const SummaryStats& tau, double ci) {
  const double lo = 0.5 * (1.0 - ci), hi = 1.0 - lo;
  std::vector<std::vector<std::string>> rows = {
      {"", "Mean", "Median", level_label(lo), level_label(hi)},
      {"mu", fixed3(mu.mean), fixed3(mu.median), fixed3(mu.ci_lower), fixed3(mu.ci_upper)},
      {"tau", fixed3(tau.mean), fixed3(tau.median), fixed3(tau.ci_lower), fixed3(tau.ci_upper)}};
  std::vector<std::size_t> w(5, 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < 5; ++c) w[c] = std::max(w[c], r[c].size());
  std::ostringstream out;
  for (const auto& r : rows) {
    out << pad_right(r[0], w[0]);
    for (std::size_t c = 1; c < 5; ++c) out << ' ' << pad_left(r[c], w[c]);
    out << '\n';
  }
  return out.str();
}

ojson stats_json(const SummaryStats& s) {
  ojson j;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["ci_lower"] = s.ci_lower;
  j["ci_upper"] = s.ci_upper;
  j["ci_level"] = s.ci_level;
  return j;
}

ojson grid_json(const PosteriorGrid& g) {
  ojson j;
  j["x"] = g.axis;
  j["density"] = g.normalized_density;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ParseError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string format_report(const BmaResult& r) {
  std::ostringstream out;
  out << "Bayesian model-averaged meta-analysis (" << to_string(r.data_model) << " model)\n";
  out << "Priors: mu ~ " << to_string(r.prior_mu) << ", tau ~ " << to_string(r.prior_tau) << "\n\n";

  out << "Components summary:\n";
  out << "              Models Prior prob. Post. prob. Inclusion BF\n";
  auto comp = [&](const char* name, double prior, double post, const InclusionBF& bf) {
    out << pad_right(name, 14) << pad_left("2/4", 6) << pad_left(fixed3(prior), 12)
        << pad_left(fixed3(post), 12) << pad_left(bf_text(bf), 13) << '\n';
  };
  comp("Effect", r.prior_inclusion_effect(), r.posterior_inclusion_effect(), r.bf_effect);
  comp("Heterogeneity", r.prior_inclusion_heterogeneity(), r.posterior_inclusion_heterogeneity(),
       r.bf_heterogeneity);
  if (r.bf_effect.capped || r.bf_heterogeneity.capped)
    out << "A '>' or '<' marks a Bayes factor capped at exp(+-700).\n";

  out << "\nModel-averaged estimates:\n"
      << estimates_block(r.averaged_mu, r.averaged_tau, r.ci_level) << scale_note(r) << "\n";
  out << "\nConditional estimates:\n"
      << estimates_block(r.conditional_mu, r.conditional_tau, r.ci_level) << scale_note(r) << "\n";

  out << "\nModels overview:\n";
  out << "Model Prior prob. Post. prob. log(marglik)\n";
  for (const auto& e : r.evidence) {
    const auto i = index(e.hypothesis_id);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-5s %11.3f %11.3f %12.4f\n",
                  std::string(to_string(e.hypothesis_id)).c_str(), r.prior_probs[i],
                  r.posterior_model_probs[i], e.log_marginal);
    out << buf;
  }
  return out.str();
}

ojson result_json(const BmaResult& r, bool include_grids) {
  ojson j;
  j["measure"] = std::string(to_string(r.measure));
  j["data_model"] = std::string(to_string(r.data_model));
  j["output_scale"] = std::string(to_string(r.output_scale));
  j["ci_level"] = r.ci_level;
  j["priors"] = {{"mu", to_string(r.prior_mu)}, {"tau", to_string(r.prior_tau)}};

  auto comp = [](double prior, double post, const InclusionBF& bf) {
    ojson c;
    c["models"] = "2/4";
    c["prior_prob"] = prior;
    c["posterior_prob"] = post;
    c["inclusion_bf"] = bf.value;
    c["bf_capped"] = bf.capped;
    return c;
  };
  j["components"]["effect"] =
      comp(r.prior_inclusion_effect(), r.posterior_inclusion_effect(), r.bf_effect);
  j["components"]["heterogeneity"] = comp(r.prior_inclusion_heterogeneity(),
                                          r.posterior_inclusion_heterogeneity(), r.bf_heterogeneity);
  j["model_averaged"] = {{"mu", stats_json(r.averaged_mu)}, {"tau", stats_json(r.averaged_tau)}};
  j["conditional"] = {{"mu", stats_json(r.conditional_mu)}, {"tau", stats_json(r.conditional_tau)}};

  ojson models = ojson::array();
  for (const auto& e : r.evidence) {
    const auto i = index(e.hypothesis_id);
    ojson m;
    m["hypothesis"] = std::string(to_string(e.hypothesis_id));
    m["prior_prob"] = r.prior_probs[i];
    m["posterior_prob"] = r.posterior_model_probs[i];
    m["log_marginal"] = e.log_marginal;
    m["grid_points_mu"] = e.points_mu;
    m["grid_points_tau"] = e.points_tau;
    models.push_back(std::move(m));
  }
  j["models"] = std::move(models);

  if (include_grids) {
    ojson g;
    g["scale"] = "log";
    g["mu_conditional"] = grid_json(r.mu_conditional.density_grid());
    g["tau_conditional"] = grid_json(r.tau_conditional.density_grid());
    g["mu_averaged_atom_weight"] = r.mu_averaged.atom_weight();
    g["tau_averaged_atom_weight"] = r.tau_averaged.atom_weight();
    j["grids"] = std::move(g);
  }
  return j;
}

std::vector<std::string> write_plot_data(const BmaResult& r, const Dataset& data,
                                         ZeroCellPolicy policy, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create '" + dir + "': " + ec.message());
  const fs::path base(dir);
  const std::string m(to_string(r.measure));
  std::vector<std::string> files;

  auto grid_file = [&](const std::string& name, const MixtureDistribution& mix,
                       const std::string& what) {
    std::ostringstream h;
    h.precision(17);
    h << "# " << what << ", " << m << " scale; columns: x density\n";
    if (mix.atom_weight() > 0.0)
      h << "# point mass at " << mix.atom() << " with weight " << mix.atom_weight()
        << "; density below is the continuous part, normalized to 1\n";
    write_text(base / name, grid_to_text(mix.density_grid(), h.str()));
    files.push_back(name);
  };
  grid_file("mu_conditional.tsv", r.mu_conditional, "mu posterior conditional on the effect");
  grid_file("mu_averaged.tsv", r.mu_averaged, "mu posterior, model-averaged");
  grid_file("tau_conditional.tsv", r.tau_conditional,
            "tau posterior conditional on heterogeneity");
  grid_file("tau_averaged.tsv", r.tau_averaged, "tau posterior, model-averaged");

  const double zq = std::sqrt(2.0) * boost::math::erfc_inv(1.0 - r.ci_level);

  std::ostringstream f;
  f.precision(17);
  f << "# study estimates, " << m << " scale, " << level_label(r.ci_level) << " intervals\n";
  f << "study\ty\tse\tlower\tupper\tcorrected\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    EffectEstimate e;
    if (data.has_tables()) {
      const auto& t = data.tables[i];
      ZeroCellPolicy p = policy;
      if (p.mode == ZeroCellPolicy::Mode::None && t.has_zero_cell() && r.measure != Measure::RD)
        p = ZeroCellPolicy::constant_add(0.5);
      e = effect_from_table(r.measure, t, p, data.labels[i]);
    } else {
      e = data.estimates[i];
    }
    f << e.study_label << '\t' << e.y << '\t' << e.se << '\t' << e.y - zq * e.se << '\t'
      << e.y + zq * e.se << '\t' << (e.corrected ? 1 : 0) << '\n';
  }
  write_text(base / "forest.tsv", f.str());
  files.push_back("forest.tsv");
  return files;
}

ojson effect_json(const std::vector<EffectEstimate>& estimates) {
  ojson arr = ojson::array();
  for (const auto& e : estimates) {
    ojson j;
    j["study"] = e.study_label;
    j["measure"] = std::string(to_string(e.measure));
    j["y"] = e.y;
    j["se"] = e.se;
    j["corrected"] = e.corrected;
    j["double_zero"] = e.double_zero;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string format_effects(const std::vector<EffectEstimate>& estimates) {
  std::ostringstream out;
  out << "study\tmeasure\ty\tse\tnote\n";
  out.precision(6);
  for (const auto& e : estimates) {
    out << e.study_label << '\t' << to_string(e.measure) << '\t' << e.y << '\t' << e.se << '\t';
    if (e.double_zero)
      out << "double zero";
    else if (e.corrected)
      out << "corrected";
    out << '\n';
  }
  return out.str();
}

ojson fit_json(const FitResult& fit, const FitInput& input, Family family) {
  ojson j;
  j["family"] = std::string(family_name(family));
  j["target"] = input.target == FitTarget::EffectFamily ? "mu" : "tau";
  j["spec"] = to_string(fit.spec);
  ojson params = ojson::array();
  for (std::size_t i = 0; i < fit.spec.params().size(); ++i) params.push_back(fit.spec.param(i));
  j["parameters"] = std::move(params);
  j["log_likelihood"] = fit.log_likelihood;
  j["n_used"] = fit.n_used;
  j["dropped"] = input.dropped;
  j["converged"] = fit.converged;
  if (family == Family::StudentT) j["normal_equivalent"] = fit.normal_equivalent;
  return j;
}

ojson ranking_json(const RankingReport& rep) {
  ojson j;
  j["n_datasets"] = rep.n_datasets;
  j["n_used"] = rep.n_used;
  j["tie_rule"] = rep.tie_rule;
  auto cands = [](const std::vector<CandidateRanking>& cs) {
    ojson arr = ojson::array();
    for (const auto& c : cs) {
      ojson e;
      e["prior"] = to_string(c.spec);
      e["rank_counts"] = c.rank_counts;
      e["prior_prob"] = c.prior_prob;
      e["average_posterior_prob"] = c.average_posterior_prob;
      arr.push_back(std::move(e));
    }
    return arr;
  };
  j["mu"] = cands(rep.mu);
  j["tau"] = cands(rep.tau);
  ojson types = ojson::array();
  for (const auto& t : rep.model_types) {
    ojson e;
    e["hypothesis"] = std::string(to_string(t.id));
    e["rank_counts"] = t.rank_counts;
    e["prior_prob"] = t.prior_prob;
    e["average_posterior_prob"] = t.average_posterior_prob;
    types.push_back(std::move(e));
  }
  j["model_types"] = std::move(types);
  ojson fails = ojson::array();
  for (const auto& [i, msg] : rep.failures) fails.push_back({{"dataset", i}, {"error", msg}});
  j["failures"] = std::move(fails);
  return j;
}

std::string format_ranking(const RankingReport& rep) {
  std::ostringstream out;
  out << "Datasets: " << rep.n_used << " of " << rep.n_datasets << " analysed";
  if (!rep.failures.empty()) out << " (" << rep.failures.size() << " failed)";
  out << "\nRanks: " << rep.tie_rule << "\n";
  auto block = [&](const char* title, const std::vector<CandidateRanking>& cs) {
    out << '\n' << title << '\n';
    std::size_t w = 5;
    for (const auto& c : cs) w = std::max(w, to_string(c.spec).size());
    out << pad_right("Prior", w);
    for (std::size_t k = 0; k < cs.size(); ++k) out << pad_left("#" + std::to_string(k + 1), 7);
    out << pad_left("PrMP", 8) << pad_left("PoMP", 8) << '\n';
    for (const auto& c : cs) {
      out << pad_right(to_string(c.spec), w);
      for (auto n : c.rank_counts) out << pad_left(std::to_string(n), 7);
      out << pad_left(fixed3(c.prior_prob), 8) << pad_left(fixed3(c.average_posterior_prob), 8)
          << '\n';
    }
  };
  block("Effect (mu) priors:", rep.mu);
  block("Heterogeneity (tau) priors:", rep.tau);
  out << "\nModel types:\n" << pad_right("Model", 6);
  for (int k = 1; k <= 4; ++k) out << pad_left("#" + std::to_string(k), 7);
  out << pad_left("PrMP", 8) << pad_left("PoMP", 8) << '\n';
  for (const auto& t : rep.model_types) {
    out << pad_right(std::string(to_string(t.id)), 6);
    for (auto n : t.rank_counts) out << pad_left(std::to_string(n), 7);
    out << pad_left(fixed3(t.prior_prob), 8) << pad_left(fixed3(t.average_posterior_prob), 8)
        << '\n';
  }
  for (const auto& [i, msg] : rep.failures) out << "dataset " << i + 1 << " failed: " << msg << '\n';
  return out.str();
}

}  // namespace bmameta
