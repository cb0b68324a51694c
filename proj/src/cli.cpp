#include "bmameta/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bmameta/bma.hpp"
#include "bmameta/data_io.hpp"
#include "bmameta/errors.hpp"
#include "bmameta/prior_fitting.hpp"
#include "bmameta/prior_registry.hpp"
#include "bmameta/report.hpp"

namespace bmameta {

namespace {

using ojson = nlohmann::ordered_json;

void emit_json(const ojson& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + path + "'");
  f << text;
}

Family parse_family(std::string text) {
  for (auto& ch : text) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (text == "normal") return Family::Normal;
  if (text == "t" || text == "student-t" || text == "studentt" || text == "student") return Family::StudentT;
  if (text == "halfnormal" || text == "half-normal" || text == "normal+") return Family::HalfNormal;
  if (text == "gamma") return Family::Gamma;
  if (text == "invgamma" || text == "inv-gamma" || text == "inverse-gamma") return Family::InvGamma;
  throw InvalidPriorError("unknown family '" + text +
                          "'; expected normal, student-t, halfnormal, gamma or invgamma");
}

struct AnalyzeOptions {
  std::string measure, data, topic, prior_mu, prior_tau, json, plots;
  bool pooled = false, quiet = false;
  std::string output_scale = "log", model = "auto", zero_cell = "none";
  double ci = 0.95, beta_bound = 10.0;
  std::size_t points_mu = 81, points_tau = 81;
};

int analyze(const AnalyzeOptions& o, std::ostream& out) {
  const Measure measure = parse_measure(o.measure);
  const auto scale = parse_output_scale(o.output_scale);
  const auto policy = ZeroCellPolicy::parse(o.zero_cell);

  std::string source;
  PriorSpec prior_mu, prior_tau;
  const int n_sources = (o.topic.empty() ? 0 : 1) + (o.pooled ? 1 : 0) +
                        (o.prior_mu.empty() && o.prior_tau.empty() ? 0 : 1);
  if (n_sources != 1)
    throw InvalidPriorError(
        "choose exactly one prior source: --prior-topic, --prior-pooled, or --prior-mu with --prior-tau");
  if (!o.topic.empty() || o.pooled) {
    const auto& row = lookup(measure, o.pooled ? "Pooled" : o.topic, true);
    row.require_usable(true);
    prior_mu = row.prior_mu;
    prior_tau = *row.prior_tau;
    source = row.topic;
  } else {
    if (o.prior_mu.empty() || o.prior_tau.empty())
      throw InvalidPriorError("--prior-mu and --prior-tau must be given together");
    prior_mu = parse_prior(o.prior_mu);
    prior_tau = parse_prior(o.prior_tau);
    source = "custom";
  }

  Dataset data = ingest(o.data, measure);
  DataModel dm;
  if (o.model == "auto")
    dm = measure == Measure::LogOR && data.has_tables() ? DataModel::BinomialNormal
                                                          : DataModel::NormalNormal;
  else if (o.model == "nn" || o.model == "normal-normal")
    dm = DataModel::NormalNormal;
  else if (o.model == "bn" || o.model == "binomial-normal")
    dm = DataModel::BinomialNormal;
  else
    throw InvalidPriorError("--model must be auto, nn or bn, got '" + o.model + "'");
  if (dm == DataModel::BinomialNormal && !data.has_tables())
    throw InvalidEstimateError("the binomial-normal model needs 2x2 table input (study,a,b,c,d)");
  Dataset analysed = data;
  if (dm == DataModel::NormalNormal && data.has_tables()) analysed = to_estimates(data, policy);

  QuadratureConfig cfg;
  cfg.outer_points_mu = o.points_mu;
  cfg.outer_points_tau = o.points_tau;
  const auto space = build_space(measure, prior_mu, prior_tau, dm, std::nullopt, o.beta_bound);
  const auto result = run_bma(analysed, space, cfg, o.ci, scale);

  if (!o.quiet) out << format_report(result);
  if (!o.json.empty()) {
    auto j = result_json(result);
    j["prior_source"] = source;
    j["n_studies"] = data.size();
    if (dm == DataModel::BinomialNormal) j["beta_bound"] = o.beta_bound;
    emit_json(j, o.json, out);
  }
  if (!o.plots.empty()) {
    const auto files = write_plot_data(result, data, policy, o.plots);
    if (!o.quiet) {
      out << "\nPlot data written to " << o.plots << ":\n";
      for (const auto& f : files) out << "  " << f << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian model-averaged meta-analysis of binary and time-to-event outcomes",
               "bma-meta"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bma-meta 0.1.0");

  AnalyzeOptions ao;
  auto* an = app.add_subcommand("analyze", "Run the four-model BMA analysis on one dataset");
  an->add_option("--measure", ao.measure, "logOR, logRR, RD or logHR")->required();
  an->add_option("--data", ao.data, "CSV with study,a,b,c,d or study,y,se")->required();
  auto* topic = an->add_option("--prior-topic", ao.topic, "Registry topic for the priors");
  auto* pooled = an->add_flag("--prior-pooled", ao.pooled, "Use the pooled registry priors");
  an->add_option("--prior-mu", ao.prior_mu, "Effect prior, e.g. 'Student-t(0, 0.48, 3)'");
  an->add_option("--prior-tau", ao.prior_tau, "Heterogeneity prior, e.g. 'Inv-Gamma(1.67, 0.45)'");
  topic->excludes(pooled);
  an->add_option("--output-scale", ao.output_scale, "log or ratio")->capture_default_str();
  an->add_option("--ci", ao.ci, "Credible interval level")->capture_default_str();
  an->add_option("--json", ao.json, "Write the JSON result to FILE ('-' for stdout)");
  an->add_option("--plots", ao.plots, "Write posterior grids and forest rows to DIR");
  an->add_option("--model", ao.model, "auto, nn or bn")->capture_default_str();
  an->add_option("--zero-cell", ao.zero_cell, "none or add=EPS")->capture_default_str();
  an->add_option("--beta-bound", ao.beta_bound, "Baseline support half-width")->capture_default_str();
  an->add_option("--points-mu", ao.points_mu, "Initial grid points for mu")->capture_default_str();
  an->add_option("--points-tau", ao.points_tau, "Initial grid points for tau")->capture_default_str();
  an->add_flag("--quiet", ao.quiet, "Suppress the text report");

  std::string es_measure, es_data, es_zero = "none", es_json;
  auto* es = app.add_subcommand("es", "Compute per-study effect sizes");
  es->add_option("--measure", es_measure)->required();
  es->add_option("--data", es_data)->required();
  es->add_option("--zero-cell", es_zero)->capture_default_str();
  es->add_option("--json", es_json);

  auto* pr = app.add_subcommand("priors", "Browse the prior registry");
  pr->require_subcommand(1);
  std::string pl_measure, ps_measure, ps_topic;
  bool pl_json = false, ps_json = false;
  auto* pl = pr->add_subcommand("list", "List topics and priors for a measure");
  pl->add_option("--measure", pl_measure);
  pl->add_flag("--json", pl_json);
  auto* ps = pr->add_subcommand("show", "Show one registry row");
  ps->add_option("--measure", ps_measure)->required();
  ps->add_option("--topic", ps_topic)->required();
  ps->add_flag("--json", ps_json);

  std::string fp_input, fp_target, fp_family, fp_json;
  double fp_floor = 0.01;
  auto* fp = app.add_subcommand("fit-priors", "Fit a prior family by maximum likelihood");
  fp->add_option("--input", fp_input, "CSV with a 'value' column")->required();
  fp->add_option("--target", fp_target, "mu or tau")->required();
  fp->add_option("--family", fp_family, "normal, student-t, halfnormal, gamma or invgamma")->required();
  fp->add_option("--tau-floor", fp_floor)->capture_default_str();
  fp->add_option("--json", fp_json);

  std::string rk_measure, rk_corpus, rk_json;
  std::vector<std::string> rk_mu, rk_tau;
  double rk_bound = 10.0;
  auto* rk = app.add_subcommand("rank-priors", "Rank candidate priors over a corpus");
  rk->add_option("--measure", rk_measure)->required();
  rk->add_option("--corpus", rk_corpus, "CSV with a leading 'comparison' column")->required();
  rk->add_option("--mu-candidate", rk_mu, "Effect candidate (repeatable); default: registry set");
  rk->add_option("--tau-candidate", rk_tau, "Heterogeneity candidate (repeatable)");
  rk->add_option("--beta-bound", rk_bound)->capture_default_str();
  rk->add_option("--json", rk_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (an->parsed()) return analyze(ao, out);

    if (es->parsed()) {
      const Measure m = parse_measure(es_measure);
      const auto data = ingest(es_data, m);
      const auto est = data.has_tables() ? to_estimates(data, ZeroCellPolicy::parse(es_zero)).estimates
                                         : data.estimates;
      if (es_json.empty())
        out << format_effects(est);
      else
        emit_json(effect_json(est), es_json, out);
      return kExitOk;
    }

    if (pl->parsed()) {
      std::optional<Measure> m;
      if (!pl_measure.empty()) m = parse_measure(pl_measure);
      if (pl_json) {
        out << registry_json(m) << '\n';
        return kExitOk;
      }
      const std::vector<Measure> ms =
          m ? std::vector<Measure>{*m}
            : std::vector<Measure>{Measure::LogOR, Measure::LogRR, Measure::RD, Measure::LogHR};
      for (auto mm : ms) {
        out << "# " << to_string(mm) << '\n';
        for (const auto& row : list_topics(mm))
          out << row.topic << '\t' << row.prior_mu_text << '\t' << row.prior_tau_text.value_or("-")
              << '\n';
      }
      return kExitOk;
    }

    if (ps->parsed()) {
      const Measure m = parse_measure(ps_measure);
      const auto& row = lookup(m, ps_topic);
      if (ps_json) {
        auto all = ojson::parse(registry_json(m));
        for (const auto& r : all)
          if (r["topic"] == row.topic) out << r.dump(2) << '\n';
        return kExitOk;
      }
      out << "measure: " << to_string(row.measure) << '\n'
          << "topic:   " << row.topic << '\n'
          << "mu:      " << row.prior_mu_text << "  (" << row.n_comparisons_mu << " comparisons, "
          << row.n_estimates_mu << " estimates)\n"
          << "tau:     " << row.prior_tau_text.value_or("-");
      if (row.n_comparisons_tau)
        out << "  (" << *row.n_comparisons_tau << " comparisons, " << row.n_estimates_tau.value_or(0)
            << " estimates)";
      out << '\n';
      if (auto why = row.prior_mu.invalid_reason()) out << "note:    mu prior unusable: " << *why << '\n';
      if (row.prior_tau)
        if (auto why = row.prior_tau->invalid_reason())
          out << "note:    tau prior unusable: " << *why << '\n';
      return kExitOk;
    }

    if (fp->parsed()) {
      const auto target = parse_fit_target(fp_target);
      const auto family = parse_family(fp_family);
      const auto values = values_from_csv(read_file(fp_input));
      FitInput in;
      if (target == FitTarget::HeterogeneityFamily) {
        in = filter_tau_estimates(values, fp_floor);
      } else {
        in.values = values;
        in.target = target;
      }
      const auto fit = fit_family(in, family);
      const auto j = fit_json(fit, in, family);
      if (fp_json.empty()) {
        out << to_string(fit.spec) << '\n' << j.dump(2) << '\n';
      } else {
        out << to_string(fit.spec) << '\n';
        emit_json(j, fp_json, out);
      }
      if (!fit.converged) {
        err << "warning: fit did not converge; reporting the best point found\n";
        return kExitNotConverged;
      }
      return kExitOk;
    }

    if (rk->parsed()) {
      const Measure m = parse_measure(rk_measure);
      const auto corpus = ingest_corpus(rk_corpus, m);
      std::vector<PriorSpec> mus, taus;
      if (rk_mu.empty() || rk_tau.empty()) {
        const auto set = candidate_priors(m);
        if (rk_mu.empty())
          for (const auto& c : set.mu) mus.push_back(c.spec);
        if (rk_tau.empty())
          for (const auto& c : set.tau) taus.push_back(c.spec);
      }
      for (const auto& s : rk_mu) mus.push_back(parse_prior(s));
      for (const auto& s : rk_tau) taus.push_back(parse_prior(s));
      const auto rep = rank_priors_over_corpus(corpus, mus, taus, QuadratureConfig{}, rk_bound);
      out << format_ranking(rep);
      if (!rk_json.empty()) emit_json(ranking_json(rep), rk_json, out);
      return kExitOk;
    }
  } catch (const NotConvergedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const NonConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace bmameta
