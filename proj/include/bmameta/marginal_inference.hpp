#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bmameta/model_space.hpp"

namespace bmameta {

struct QuadratureConfig {
  std::size_t outer_points_mu = 81;
  std::size_t outer_points_tau = 81;
  // Integration bounds are the prior quantiles at cut and 1 - cut.
  double prior_mass_cut = 1e-6;
  // Largest accepted change of a log marginal between grid refinements.
  double refine_threshold = 1e-4;

  // Throws QuadratureError: points must be odd and >= 11, 0 < cut < 0.01.
  void validate() const;
};

// Grids are uniform in a transformed coordinate t with x = map(t):
//   Sinh:      x = center + scale * sinh(t)   (mu)
//   Log:       x = exp(t)                      (tau)
//   Identity:  x = t
enum class AxisMap { Identity, Sinh, Log };

struct AxisTransform {
  AxisMap map = AxisMap::Identity;
  double center = 0.0;
  double scale = 1.0;

  double x(double t) const;
  double dxdt(double t) const;
  double t(double x) const;
};

struct PosteriorGrid {
  // Export nodes: the integration nodes with each cell subdivided, so that
  // plain trapezoid sums over `axis` are accurate.
  std::vector<double> axis;                // natural units, strictly increasing
  std::vector<double> log_weights;         // log(prior x likelihood), natural units
  std::vector<double> normalized_density;  // trapezoid over axis integrates to 1
  double log_marginal = 0.0;

  // Integration nodes in the transformed coordinate, used for summaries.
  AxisTransform transform;
  std::vector<double> t;
  std::vector<double> t_density;  // density in t; trapezoid over t is exactly 1

  // Built from nodes uniform in t and log(integrand in t).
  static PosteriorGrid from_t_nodes(const AxisTransform& transform, std::vector<double> t,
                                    const std::vector<double>& log_g_t);

  double cdf(double x) const;
  double quantile(double p) const;
  double mean() const;
  // Integral of fn(x) against the posterior.
  double expect(const std::function<double(double)>& fn) const;
  // Natural-unit density, piecewise linear between export nodes, 0 outside.
  double density_at(double x) const;
  double trapezoid_mass() const;
};

struct ModelEvidence {
  HypothesisId hypothesis_id = HypothesisId::H0f;
  double log_marginal = 0.0;
  std::optional<PosteriorGrid> mu_grid;
  std::optional<PosteriorGrid> tau_grid;
  // Grid points per axis of the accepted (finest) level; 0 for fixed axes.
  std::size_t points_mu = 0;
  std::size_t points_tau = 0;
};

// One entry per hypothesis, in H0f, H1f, H0r, H1r order.
std::vector<ModelEvidence> evidence(const Dataset& data, const ModelSpace& space,
                                    const QuadratureConfig& config = {});
std::vector<ModelEvidence> evidence(const DataLikelihood& lik, const ModelSpace& space,
                                    const QuadratureConfig& config = {});
// Evidence for a single hypothesis with its own priors.
ModelEvidence evidence_for(const DataLikelihood& lik, const Hypothesis& h,
                           const QuadratureConfig& config = {});

// Throw ParameterFixedError when the parameter is fixed under the hypothesis.
const PosteriorGrid& posterior_mu_grid(const ModelEvidence& ev);
const PosteriorGrid& posterior_tau_grid(const ModelEvidence& ev);

// Two whitespace-separated columns "axis density", one node per line.
std::string grid_to_text(const PosteriorGrid& grid, const std::string& header = {});

}  // namespace bmameta
