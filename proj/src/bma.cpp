#include "bmameta/bma.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "bmameta/errors.hpp"
#include "bmameta/numerics.hpp"

namespace bmameta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCap = 700.0;

const ModelEvidence* find(const std::vector<ModelEvidence>& ev, HypothesisId id) {
  for (const auto& e : ev)
    if (e.hypothesis_id == id) return &e;
  return nullptr;
}

InclusionBF inclusion_bf(double post_in, double post_out, double prior_in, double prior_out,
                         const char* what) {
  if (!(prior_in > 0.0) || !(prior_out > 0.0))
    throw DegenerateOddsError(std::string("prior inclusion odds for ") + what +
                              " are degenerate (one side has prior probability 0)");
  if (post_out <= 0.0) return {std::exp(kCap), true};
  if (post_in <= 0.0) return {std::exp(-kCap), true};
  const double log_bf =
      std::log(post_in) - std::log(post_out) - (std::log(prior_in) - std::log(prior_out));
  if (log_bf > kCap) return {std::exp(kCap), true};
  if (log_bf < -kCap) return {std::exp(-kCap), true};
  return {std::exp(log_bf), false};
}

// Mixtures for one parameter. `cond_logw` are unnormalized log weights of
// the models where the parameter is free; `post` are posterior model
// probabilities for the model-averaged mixture.
AveragedPosterior build_averaged(const std::vector<ModelEvidence>& evidence,
                                 const std::array<double, 4>& cond_logw, const ProbVector& post,
                                 bool for_mu, double ci_level) {
  const std::array<HypothesisId, 2> free_ids =
      for_mu ? std::array{HypothesisId::H1f, HypothesisId::H1r}
             : std::array{HypothesisId::H0r, HypothesisId::H1r};
  const std::array<HypothesisId, 2> fixed_ids =
      for_mu ? std::array{HypothesisId::H0f, HypothesisId::H0r}
             : std::array{HypothesisId::H0f, HypothesisId::H1f};
  const char* name = for_mu ? "mu" : "tau";

  std::vector<const PosteriorGrid*> grids;
  std::vector<double> logw;
  for (auto id : free_ids) {
    const auto* e = find(evidence, id);
    const auto& g = e ? (for_mu ? e->mu_grid : e->tau_grid) : std::optional<PosteriorGrid>{};
    if (!g) continue;
    grids.push_back(&*g);
    logw.push_back(cond_logw[index(id)]);
  }
  if (grids.empty())
    throw ParameterFixedError(std::string("no model with a free ") + name + " parameter");
  const double lse = numerics::log_sum_exp(logw);
  if (lse == -kInf)
    throw DegenerateOddsError(std::string("all models with a free ") + name +
                              " have posterior probability 0");

  std::vector<MixtureDistribution::Component> cond, avg;
  double free_post = 0.0;
  std::size_t gi = 0;
  for (auto id : free_ids) {
    const auto* e = find(evidence, id);
    const auto& g = e ? (for_mu ? e->mu_grid : e->tau_grid) : std::optional<PosteriorGrid>{};
    if (!g) continue;
    cond.push_back({std::exp(logw[gi++] - lse), *g});
    avg.push_back({post[index(id)], *g});
    free_post += post[index(id)];
  }
  double atom = 0.0;
  for (auto id : fixed_ids) atom += post[index(id)];

  AveragedPosterior out;
  out.conditional = MixtureDistribution(std::move(cond), 0.0);
  if (free_post > 0.0)
    out.model_averaged = MixtureDistribution(std::move(avg), atom);
  else
    out.model_averaged = MixtureDistribution({}, 1.0);
  out.conditional_grid = out.conditional.density_grid();
  out.conditional_stats = out.conditional.summary(ci_level);
  out.averaged_stats = out.model_averaged.summary(ci_level);
  return out;
}

void check_ci(double ci_level) {
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw DomainError("ci level must lie in (0, 1)");
}

}  // namespace

std::string_view to_string(OutputScale s) { return s == OutputScale::Log ? "log" : "ratio"; }

OutputScale parse_output_scale(std::string_view text) {
  std::string s(text);
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "log") return OutputScale::Log;
  if (s == "ratio" || s == "or" || s == "rr" || s == "hr") return OutputScale::Ratio;
  throw ScaleError("output scale must be 'log' or 'ratio', got '" + std::string(text) + "'");
}

ProbVector posterior_model_probs(const std::vector<ModelEvidence>& evidence,
                                 const ProbVector& prior_probs) {
  if (evidence.size() != 4) throw QuadratureError("expected evidence for exactly four models");
  std::array<double, 4> lp{};
  for (const auto& e : evidence) {
    const auto i = index(e.hypothesis_id);
    lp[i] = prior_probs[i] > 0.0 ? std::log(prior_probs[i]) + e.log_marginal : -kInf;
  }
  const double z = numerics::log_sum_exp(lp);
  ProbVector p{};
  for (std::size_t i = 0; i < 4; ++i) p[i] = std::exp(lp[i] - z);
  return p;
}

InclusionBF inclusion_bf_effect(const ProbVector& post, const ProbVector& prior) {
  return inclusion_bf(post[1] + post[3], post[0] + post[2], prior[1] + prior[3],
                      prior[0] + prior[2], "the effect");
}

InclusionBF inclusion_bf_heterogeneity(const ProbVector& post, const ProbVector& prior) {
  return inclusion_bf(post[2] + post[3], post[0] + post[1], prior[2] + prior[3],
                      prior[0] + prior[1], "heterogeneity");
}

MixtureDistribution::MixtureDistribution(std::vector<Component> components, double atom_weight,
                                         double atom)
    : atom_weight_(atom_weight), atom_(atom) {
  double total = atom_weight;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw DomainError("mixture weights must be nonnegative");
    total += c.weight;
  }
  if (!(total > 0.0)) throw DomainError("mixture has no mass");
  for (auto& c : components) {
    if (c.weight > 0.0) components_.push_back({c.weight / total, std::move(c.grid)});
  }
  atom_weight_ = atom_weight / total;
}

double MixtureDistribution::cdf(double x) const {
  double c = atom_weight_ > 0.0 && x >= atom_ ? atom_weight_ : 0.0;
  for (const auto& comp : components_) c += comp.weight * comp.grid.cdf(x);
  return std::min(c, 1.0);
}

double MixtureDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile requires 0 < p < 1");
  if (components_.size() == 1 && atom_weight_ == 0.0) return components_[0].grid.quantile(p);
  if (atom_weight_ > 0.0) {
    double below = 0.0;
    for (const auto& comp : components_) below += comp.weight * comp.grid.cdf(atom_);
    if (p > below && p <= below + atom_weight_) return atom_;
  }
  if (components_.empty()) return atom_;
  double lo = kInf, hi = -kInf;
  for (const auto& comp : components_) {
    lo = std::min(lo, comp.grid.axis.front());
    hi = std::max(hi, comp.grid.axis.back());
  }
  if (atom_weight_ > 0.0) {
    lo = std::min(lo, atom_);
    hi = std::max(hi, atom_);
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) >= p)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double MixtureDistribution::expect(const std::function<double(double)>& fn) const {
  double s = atom_weight_ > 0.0 ? atom_weight_ * fn(atom_) : 0.0;
  for (const auto& comp : components_) s += comp.weight * comp.grid.expect(fn);
  return s;
}

double MixtureDistribution::mean() const {
  return expect([](double x) { return x; });
}

SummaryStats MixtureDistribution::summary(double ci_level) const {
  check_ci(ci_level);
  SummaryStats s;
  s.ci_level = ci_level;
  s.mean = mean();
  s.median = quantile(0.5);
  s.ci_lower = quantile(0.5 * (1.0 - ci_level));
  s.ci_upper = quantile(1.0 - 0.5 * (1.0 - ci_level));
  return s;
}

PosteriorGrid MixtureDistribution::density_grid() const {
  if (components_.empty()) throw ParameterFixedError("mixture has no continuous part");
  if (components_.size() == 1) return components_[0].grid;
  std::vector<double> axis;
  for (const auto& comp : components_) axis.insert(axis.end(), comp.grid.axis.begin(), comp.grid.axis.end());
  std::sort(axis.begin(), axis.end());
  axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
  double cont = 0.0;
  for (const auto& comp : components_) cont += comp.weight;

  PosteriorGrid g;
  g.axis = axis;
  g.normalized_density.resize(axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i) {
    double d = 0.0;
    for (const auto& comp : components_) d += comp.weight * comp.grid.density_at(axis[i]);
    g.normalized_density[i] = d / cont;
  }
  const double mass = g.trapezoid_mass();
  if (mass > 0.0)
    for (auto& d : g.normalized_density) d /= mass;
  g.log_weights.resize(axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i) g.log_weights[i] = std::log(g.normalized_density[i]);
  g.log_marginal = 0.0;
  g.transform = AxisTransform{};
  g.t = g.axis;
  g.t_density = g.normalized_density;
  return g;
}

AveragedPosterior averaged_posterior_mu(const std::vector<ModelEvidence>& evidence,
                                        const ProbVector& posterior, double ci_level) {
  std::array<double, 4> lw{};
  for (std::size_t i = 0; i < 4; ++i) lw[i] = posterior[i] > 0.0 ? std::log(posterior[i]) : -kInf;
  return build_averaged(evidence, lw, posterior, true, ci_level);
}

AveragedPosterior averaged_posterior_tau(const std::vector<ModelEvidence>& evidence,
                                         const ProbVector& posterior, double ci_level) {
  std::array<double, 4> lw{};
  for (std::size_t i = 0; i < 4; ++i) lw[i] = posterior[i] > 0.0 ? std::log(posterior[i]) : -kInf;
  return build_averaged(evidence, lw, posterior, false, ci_level);
}

SummaryStats to_ratio_scale(const SummaryStats& log_stats, const MixtureDistribution& dist,
                            Measure measure) {
  if (!is_log_scale(measure))
    throw ScaleError("risk differences have no ratio scale; use --output-scale log");
  SummaryStats s = log_stats;
  s.median = std::exp(log_stats.median);
  s.ci_lower = std::exp(log_stats.ci_lower);
  s.ci_upper = std::exp(log_stats.ci_upper);
  s.mean = dist.expect([](double x) { return std::exp(x); });
  return s;
}

PosteriorGrid to_ratio_scale(const PosteriorGrid& grid, Measure measure) {
  if (!is_log_scale(measure))
    throw ScaleError("risk differences have no ratio scale; use --output-scale log");
  PosteriorGrid g;
  g.axis.resize(grid.axis.size());
  g.normalized_density.resize(grid.axis.size());
  g.log_weights.resize(grid.axis.size());
  for (std::size_t i = 0; i < grid.axis.size(); ++i) {
    g.axis[i] = std::exp(grid.axis[i]);
    g.normalized_density[i] = grid.normalized_density[i] / g.axis[i];
    g.log_weights[i] = grid.log_weights[i] - grid.axis[i];
  }
  const double mass = g.trapezoid_mass();
  if (mass > 0.0)
    for (auto& d : g.normalized_density) d /= mass;
  g.log_marginal = grid.log_marginal;
  g.t = g.axis;
  g.t_density = g.normalized_density;
  return g;
}

BmaResult combine_evidence(std::vector<ModelEvidence> evidence, const ModelSpace& space,
                           double ci_level, OutputScale scale) {
  check_ci(ci_level);
  if (scale == OutputScale::Ratio && !is_log_scale(space.measure))
    throw ScaleError("risk differences have no ratio scale; use --output-scale log");
  BmaResult r;
  r.measure = space.measure;
  r.data_model = space.data_model;
  r.prior_mu = space[HypothesisId::H1r].prior_mu;
  r.prior_tau = space[HypothesisId::H1r].prior_tau;
  r.prior_probs = space.prior_probs();
  r.posterior_model_probs = posterior_model_probs(evidence, r.prior_probs);
  r.bf_effect = inclusion_bf_effect(r.posterior_model_probs, r.prior_probs);
  r.bf_heterogeneity = inclusion_bf_heterogeneity(r.posterior_model_probs, r.prior_probs);
  r.output_scale = scale;
  r.ci_level = ci_level;

  // Conditional weights straight from the log marginals so that they stay
  // defined when the posterior probabilities underflow.
  std::array<double, 4> lw{};
  for (const auto& e : evidence) {
    const auto i = index(e.hypothesis_id);
    lw[i] = std::log(r.prior_probs[i]) + e.log_marginal;
  }
  auto mu = build_averaged(evidence, lw, r.posterior_model_probs, true, ci_level);
  auto tau = build_averaged(evidence, lw, r.posterior_model_probs, false, ci_level);
  r.conditional_mu = mu.conditional_stats;
  r.averaged_mu = mu.averaged_stats;
  if (scale == OutputScale::Ratio) {
    r.conditional_mu = to_ratio_scale(mu.conditional_stats, mu.conditional, space.measure);
    r.averaged_mu = to_ratio_scale(mu.averaged_stats, mu.model_averaged, space.measure);
  }
  r.conditional_tau = tau.conditional_stats;
  r.averaged_tau = tau.averaged_stats;
  r.mu_conditional = std::move(mu.conditional);
  r.mu_averaged = std::move(mu.model_averaged);
  r.tau_conditional = std::move(tau.conditional);
  r.tau_averaged = std::move(tau.model_averaged);
  r.evidence = std::move(evidence);
  return r;
}

BmaResult run_bma(const Dataset& data, const ModelSpace& space, const QuadratureConfig& config,
                  double ci_level, OutputScale scale) {
  check_ci(ci_level);
  if (scale == OutputScale::Ratio && !is_log_scale(space.measure))
    throw ScaleError("risk differences have no ratio scale; use --output-scale log");
  return combine_evidence(evidence(data, space, config), space, ci_level, scale);
}

RankingReport rank_priors_over_corpus(const std::vector<Dataset>& datasets,
                                      const std::vector<PriorSpec>& mu_candidates,
                                      const std::vector<PriorSpec>& tau_candidates,
                                      const QuadratureConfig& config, double baseline_bound) {
  if (datasets.empty()) throw InsufficientDataError("ranking needs at least one dataset");
  if (mu_candidates.empty() || tau_candidates.empty())
    throw InvalidPriorError("ranking needs at least one candidate for each parameter");
  config.validate();
  const std::size_t km = mu_candidates.size(), kt = tau_candidates.size();
  // Validates every candidate as a proper model-space prior.
  for (const auto& m : mu_candidates)
    build_space(Measure::LogOR, m, tau_candidates.front(), DataModel::NormalNormal);
  for (const auto& t : tau_candidates)
    build_space(Measure::LogOR, mu_candidates.front(), t, DataModel::NormalNormal);

  struct PerDataset {
    bool ok = false;
    std::string error;
    std::vector<double> mu_prob, tau_prob;
    std::array<double, 4> type_prob{};
  };
  std::vector<PerDataset> results(datasets.size());

  numerics::parallel_for(datasets.size(), [&](std::size_t d) {
    auto& out = results[d];
    try {
      const auto& data = datasets[d];
      const auto dm = data.has_tables() ? DataModel::BinomialNormal : DataModel::NormalNormal;
      const auto space =
          build_space(data.measure, mu_candidates.front(), tau_candidates.front(), dm, std::nullopt,
                      baseline_bound);
      const DataLikelihood lik(data, space);
      const auto null = PriorSpec::point_mass(0.0);

      auto ev = [&](HypothesisId id, const PriorSpec& m, const PriorSpec& t) {
        Hypothesis h;
        h.id = id;
        h.prior_mu = m;
        h.prior_tau = t;
        return evidence_for(lik, h, config).log_marginal;
      };
      // log(prior x marginal) for every configuration.
      const double l0f = std::log(0.25) + ev(HypothesisId::H0f, null, null);
      std::vector<double> l1f(km), l0r(kt), l1r(km * kt);
      for (std::size_t i = 0; i < km; ++i)
        l1f[i] = std::log(0.25 / km) + ev(HypothesisId::H1f, mu_candidates[i], null);
      for (std::size_t j = 0; j < kt; ++j)
        l0r[j] = std::log(0.25 / kt) + ev(HypothesisId::H0r, null, tau_candidates[j]);
      for (std::size_t i = 0; i < km; ++i)
        for (std::size_t j = 0; j < kt; ++j)
          l1r[i * kt + j] = std::log(0.25 / (km * kt)) +
                            ev(HypothesisId::H1r, mu_candidates[i], tau_candidates[j]);

      std::vector<double> all{l0f};
      all.insert(all.end(), l1f.begin(), l1f.end());
      all.insert(all.end(), l0r.begin(), l0r.end());
      all.insert(all.end(), l1r.begin(), l1r.end());
      const double z = numerics::log_sum_exp(all);
      out.type_prob[0] = std::exp(l0f - z);
      out.type_prob[1] = std::exp(numerics::log_sum_exp(l1f) - z);
      out.type_prob[2] = std::exp(numerics::log_sum_exp(l0r) - z);
      const double z1r = numerics::log_sum_exp(l1r);
      out.type_prob[3] = std::exp(z1r - z);

      out.mu_prob.assign(km, 0.0);
      out.tau_prob.assign(kt, 0.0);
      std::vector<double> tmp;
      for (std::size_t i = 0; i < km; ++i) {
        tmp.assign(l1r.begin() + static_cast<std::ptrdiff_t>(i * kt),
                   l1r.begin() + static_cast<std::ptrdiff_t>((i + 1) * kt));
        out.mu_prob[i] = std::exp(numerics::log_sum_exp(tmp) - z1r);
      }
      for (std::size_t j = 0; j < kt; ++j) {
        tmp.clear();
        for (std::size_t i = 0; i < km; ++i) tmp.push_back(l1r[i * kt + j]);
        out.tau_prob[j] = std::exp(numerics::log_sum_exp(tmp) - z1r);
      }
      out.ok = true;
    } catch (const Error& e) {
      out.error = e.what();
    }
  });

  RankingReport rep;
  rep.n_datasets = datasets.size();
  auto init = [](const std::vector<PriorSpec>& c) {
    std::vector<CandidateRanking> rows;
    for (const auto& s : c) {
      CandidateRanking r;
      r.spec = s;
      r.rank_counts.assign(c.size(), 0);
      r.prior_prob = 1.0 / static_cast<double>(c.size());
      rows.push_back(r);
    }
    return rows;
  };
  rep.mu = init(mu_candidates);
  rep.tau = init(tau_candidates);
  for (auto id : kHypotheses) rep.model_types[index(id)].id = id;

  auto rank_into = [](const std::vector<double>& probs, auto& rows, auto counts) {
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    for (std::size_t r = 0; r < order.size(); ++r) counts(rows[order[r]], r);
  };

  for (std::size_t d = 0; d < results.size(); ++d) {
    const auto& res = results[d];
    if (!res.ok) {
      rep.failures.emplace_back(d, res.error);
      continue;
    }
    ++rep.n_used;
    for (std::size_t i = 0; i < km; ++i) rep.mu[i].average_posterior_prob += res.mu_prob[i];
    for (std::size_t j = 0; j < kt; ++j) rep.tau[j].average_posterior_prob += res.tau_prob[j];
    for (std::size_t k = 0; k < 4; ++k) rep.model_types[k].average_posterior_prob += res.type_prob[k];
    rank_into(res.mu_prob, rep.mu, [](CandidateRanking& c, std::size_t r) { ++c.rank_counts[r]; });
    rank_into(res.tau_prob, rep.tau, [](CandidateRanking& c, std::size_t r) { ++c.rank_counts[r]; });
    std::vector<double> tp(res.type_prob.begin(), res.type_prob.end());
    rank_into(tp, rep.model_types, [](ModelTypeRanking& c, std::size_t r) { ++c.rank_counts[r]; });
  }
  if (rep.n_used > 0) {
    const double n = static_cast<double>(rep.n_used);
    for (auto& c : rep.mu) c.average_posterior_prob /= n;
    for (auto& c : rep.tau) c.average_posterior_prob /= n;
    for (auto& c : rep.model_types) c.average_posterior_prob /= n;
  }
  return rep;
}

}  // namespace bmameta
