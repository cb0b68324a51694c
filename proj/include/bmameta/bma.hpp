#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bmameta/marginal_inference.hpp"
#include "bmameta/model_space.hpp"

namespace bmameta {

enum class OutputScale { Log, Ratio };
std::string_view to_string(OutputScale s);
OutputScale parse_output_scale(std::string_view text);

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double ci_level = 0.95;
};

struct InclusionBF {
  double value = 1.0;
  // Set when a posterior side underflowed; value is then exp(+-700).
  bool capped = false;
};

// probs_k proportional to prior_k * exp(log_marginal_k), normalized in log space.
ProbVector posterior_model_probs(const std::vector<ModelEvidence>& evidence,
                                 const ProbVector& prior_probs);

// Change from prior to posterior inclusion odds. Throw DegenerateOddsError
// when one side of the prior odds is zero.
InclusionBF inclusion_bf_effect(const ProbVector& posterior, const ProbVector& prior);
InclusionBF inclusion_bf_heterogeneity(const ProbVector& posterior, const ProbVector& prior);

// Weighted mixture of posterior grids plus an optional atom (at 0).
class MixtureDistribution {
 public:
  struct Component {
    double weight;
    PosteriorGrid grid;
  };

  MixtureDistribution() = default;
  // Weights are normalized together with the atom weight; zero-weight
  // components are dropped.
  MixtureDistribution(std::vector<Component> components, double atom_weight, double atom = 0.0);

  const std::vector<Component>& components() const { return components_; }
  double atom_weight() const { return atom_weight_; }
  double atom() const { return atom_; }

  double cdf(double x) const;
  // Smallest x with cdf(x) >= p; lands exactly on the atom when it carries p.
  double quantile(double p) const;
  double mean() const;
  double expect(const std::function<double(double)>& fn) const;
  SummaryStats summary(double ci_level) const;
  // Continuous part on the union of the component axes, renormalized to
  // integrate to 1. A single component is returned unchanged.
  PosteriorGrid density_grid() const;

 private:
  std::vector<Component> components_;
  double atom_weight_ = 0.0;
  double atom_ = 0.0;
};

struct AveragedPosterior {
  // Mixture over the models in which the parameter is free.
  MixtureDistribution conditional;
  // Mixture over all four models; fixed models add an atom at 0.
  MixtureDistribution model_averaged;
  PosteriorGrid conditional_grid;
  SummaryStats conditional_stats;
  SummaryStats averaged_stats;
};

// Throw ParameterFixedError if neither effect (resp. heterogeneity) model has a
// grid and DegenerateOddsError if their posterior probabilities are all 0.
AveragedPosterior averaged_posterior_mu(const std::vector<ModelEvidence>& evidence,
                                        const ProbVector& posterior, double ci_level = 0.95);
AveragedPosterior averaged_posterior_tau(const std::vector<ModelEvidence>& evidence,
                                         const ProbVector& posterior, double ci_level = 0.95);

// Ratio-scale summary: median and interval exponentiated, mean recomputed
// as E[exp(x)]. ScaleError for RD.
SummaryStats to_ratio_scale(const SummaryStats& log_stats, const MixtureDistribution& dist,
                            Measure measure);
// Change of variables to r = exp(x). ScaleError for RD.
PosteriorGrid to_ratio_scale(const PosteriorGrid& grid, Measure measure);

struct BmaResult {
  Measure measure = Measure::LogOR;
  DataModel data_model = DataModel::NormalNormal;
  PriorSpec prior_mu;
  PriorSpec prior_tau;
  std::vector<ModelEvidence> evidence;
  ProbVector prior_probs{};
  ProbVector posterior_model_probs{};
  InclusionBF bf_effect;
  InclusionBF bf_heterogeneity;
  SummaryStats averaged_mu;
  SummaryStats averaged_tau;
  SummaryStats conditional_mu;
  SummaryStats conditional_tau;
  OutputScale output_scale = OutputScale::Log;
  double ci_level = 0.95;
  MixtureDistribution mu_conditional;
  MixtureDistribution mu_averaged;
  MixtureDistribution tau_conditional;
  MixtureDistribution tau_averaged;

  double prior_inclusion_effect() const { return prior_probs[1] + prior_probs[3]; }
  double posterior_inclusion_effect() const {
    return posterior_model_probs[1] + posterior_model_probs[3];
  }
  double prior_inclusion_heterogeneity() const { return prior_probs[2] + prior_probs[3]; }
  double posterior_inclusion_heterogeneity() const {
    return posterior_model_probs[2] + posterior_model_probs[3];
  }
};

BmaResult run_bma(const Dataset& data, const ModelSpace& space, const QuadratureConfig& config = {},
                  double ci_level = 0.95, OutputScale scale = OutputScale::Log);
BmaResult combine_evidence(std::vector<ModelEvidence> evidence, const ModelSpace& space,
                           double ci_level = 0.95, OutputScale scale = OutputScale::Log);

struct CandidateRanking {
  PriorSpec spec;
  std::vector<std::size_t> rank_counts;  // rank_counts[r] = datasets where rank r + 1 was attained
  double prior_prob = 0.0;
  double average_posterior_prob = 0.0;
};

struct ModelTypeRanking {
  HypothesisId id = HypothesisId::H0f;
  std::array<std::size_t, 4> rank_counts{};
  double prior_prob = 0.25;
  double average_posterior_prob = 0.0;
};

struct RankingReport {
  std::vector<CandidateRanking> mu;
  std::vector<CandidateRanking> tau;
  std::array<ModelTypeRanking, 4> model_types;
  std::size_t n_datasets = 0;
  std::size_t n_used = 0;
  // (dataset index, message) for datasets whose evidence failed.
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::string tie_rule = "ties broken by candidate input order";
};

// Cross of all candidate priors (plus the null models); each model type gets
// prior probability 1/4, split equally among its prior configurations.
// Candidates are ranked per dataset by their posterior probability within
// the random-effects alternative, marginalized over the other parameter's
// candidates. Table data use the binomial-normal model, estimates the
// normal-normal model.
RankingReport rank_priors_over_corpus(const std::vector<Dataset>& datasets,
                                      const std::vector<PriorSpec>& mu_candidates,
                                      const std::vector<PriorSpec>& tau_candidates,
                                      const QuadratureConfig& config = {},
                                      double baseline_bound = 10.0);

}  // namespace bmameta
