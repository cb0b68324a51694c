#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmameta/distributions.hpp"
#include "bmameta/effect_sizes.hpp"

namespace bmameta {

// Order matters: vectors of per-hypothesis quantities use this index order.
enum class HypothesisId { H0f = 0, H1f = 1, H0r = 2, H1r = 3 };
inline constexpr std::array<HypothesisId, 4> kHypotheses = {HypothesisId::H0f, HypothesisId::H1f,
                                                            HypothesisId::H0r, HypothesisId::H1r};
std::string_view to_string(HypothesisId id);
inline std::size_t index(HypothesisId id) { return static_cast<std::size_t>(id); }
inline bool has_effect(HypothesisId id) { return id == HypothesisId::H1f || id == HypothesisId::H1r; }
inline bool is_random(HypothesisId id) { return id == HypothesisId::H0r || id == HypothesisId::H1r; }

enum class DataModel { NormalNormal, BinomialNormal };
std::string_view to_string(DataModel m);

struct Hypothesis {
  HypothesisId id = HypothesisId::H0f;
  PriorSpec prior_mu;   // PointMass(0) when the effect is absent
  PriorSpec prior_tau;  // PointMass(0) under fixed effects
  double prior_prob = 0.25;

  bool mu_free() const { return has_effect(id); }
  bool tau_free() const { return is_random(id); }
};

using ProbVector = std::array<double, 4>;

struct ModelSpace {
  Measure measure = Measure::LogOR;
  std::array<Hypothesis, 4> hypotheses;
  DataModel data_model = DataModel::NormalNormal;
  // Half-width B of the baseline (beta_i) support, binomial-normal only.
  double baseline_bound = 10.0;

  const Hypothesis& operator[](HypothesisId id) const { return hypotheses[index(id)]; }
  ProbVector prior_probs() const;
};

// Throws InvalidPriorError when prior_mu is not a proper zero-centred prior,
// prior_tau is not supported on (0, inf), or prior_probs are not in (0, 1)
// summing to 1.
ModelSpace build_space(Measure measure, const PriorSpec& prior_mu, const PriorSpec& prior_tau,
                       DataModel data_model, std::optional<ProbVector> prior_probs = std::nullopt,
                       double baseline_bound = 10.0);

// Either effect estimates (normal-normal) or 2x2 tables (binomial-normal).
struct Dataset {
  Measure measure = Measure::LogOR;
  std::vector<EffectEstimate> estimates;
  std::vector<ContingencyTable> tables;
  std::vector<std::string> labels;

  bool has_tables() const { return !tables.empty(); }
  std::size_t size() const { return has_tables() ? tables.size() : estimates.size(); }
  // Throws InvalidEstimateError / InvalidTableError.
  void validate() const;

  static Dataset from_estimates(Measure measure, std::vector<EffectEstimate> estimates);
  static Dataset from_tables(Measure measure, std::vector<ContingencyTable> tables,
                             std::vector<std::string> labels = {});
};

// Converts a table dataset to estimates of its measure.
Dataset to_estimates(const Dataset& data, ZeroCellPolicy policy);

// Sum over studies of log Normal(y_i; mu, sqrt(se_i^2 + tau^2)).
// Throws DomainError for tau < 0 and InvalidEstimateError for table data.
double loglik_normal_normal(const Dataset& data, double mu, double tau);

// log of the integral over beta in [-B, B] and gamma of
//   Bin(a; expit(beta + gamma/2), n1) Bin(c; expit(beta - gamma/2), n2)
//   Normal(gamma; mu, tau) pi(beta),
// where pi is the baseline prior (see baseline_log_prior). tau == 0 fixes
// gamma = mu. Evaluated by direct nested adaptive quadrature.
double loglik_binomial_normal_study(const ContingencyTable& table, double mu, double tau,
                                    double bound);

// Baseline prior on beta: uniform on the baseline event probability
// expit(beta), restricted to beta in [-B, B] and renormalized.
double baseline_log_prior(double beta, double bound);

// log of the beta integral for a fixed study-level effect gamma.
double binomial_profile(const ContingencyTable& table, double gamma, double bound);

// Per-study binomial-normal likelihood with the beta integral tabulated once
// on a fine gamma grid and interpolated by a cubic B-spline. Outside the
// fine window a coarser table runs out to |gamma| = 2B + 50, beyond which the
// profile is linear.
class BinomialStudyLikelihood {
 public:
  BinomialStudyLikelihood(const ContingencyTable& table, double bound);

  double profile(double gamma) const;
  double log_lik(double mu, double tau) const;
  // Approximate location and spread of the study's log OR information.
  double center() const { return center_; }
  double spread() const { return spread_; }

 private:
  double adaptive_log_lik(double mu, double tau) const;

  struct Spline;
  ContingencyTable table_;
  double bound_ = 10.0;
  std::shared_ptr<const Spline> spline_;
  std::shared_ptr<const Spline> band_lo_, band_hi_;  // between the window and the tails
  std::shared_ptr<const std::vector<double>> values_;  // profile at the nodes
  std::size_t first_ = 0, last_ = 0;  // nodes within 50 of the profile maximum
  double step_ = 0.05;
  double curvature_scale_ = 1.0;      // smallest 1/sqrt|h''| over that window
  double lo_ = 0.0, hi_ = 0.0;
  double far_lo_ = 0.0, far_hi_ = 0.0, far_lo_value_ = 0.0, far_hi_value_ = 0.0;
  double center_ = 0.0, spread_ = 1.0;
};

// Dataset likelihood over (mu, tau) for either data model.
class DataLikelihood {
 public:
  DataLikelihood(const Dataset& data, const ModelSpace& space);

  double log_lik(double mu, double tau) const;
  // Inverse-variance pooled estimate and its standard error; used to place
  // integration windows.
  double center() const { return center_; }
  double scale() const { return scale_; }
  // Crude upper reference for tau: spread of the study estimates.
  double tau_reference() const { return tau_ref_; }
  std::size_t size() const { return n_; }

 private:
  DataModel model_;
  Dataset data_;
  std::vector<BinomialStudyLikelihood> studies_;
  double center_ = 0.0, scale_ = 1.0, tau_ref_ = 1.0;
  std::size_t n_ = 0;
};

}  // namespace bmameta
