#include "bmameta/model_space.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <span>
#include <cmath>
#include <limits>
#include <numbers>

#include "bmameta/errors.hpp"
#include "bmameta/numerics.hpp"

namespace bmameta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_sigmoid(double x) { return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x)); }

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

// Corrected log OR and its variance; only used to seed searches.
void rough_log_or(const ContingencyTable& t, double& y, double& v) {
  const double a = t.a + 0.5, b = t.b + 0.5, c = t.c + 0.5, d = t.d + 0.5;
  y = std::log(a * d / (b * c));
  v = 1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d;
}

struct BetaIntegrand {
  double lc;
  double a, b, c, d;
  double bound;
  double half_gamma;

  double operator()(double beta) const {
    const double e1 = beta + half_gamma, e2 = beta - half_gamma;
    double v = lc + baseline_log_prior(beta, bound);
    if (a > 0) v += a * log_sigmoid(e1);
    if (b > 0) v += b * log_sigmoid(-e1);
    if (c > 0) v += c * log_sigmoid(e2);
    if (d > 0) v += d * log_sigmoid(-e2);
    return v;
  }
};

double profile_impl(const ContingencyTable& t, double gamma, double bound) {
  BetaIntegrand f{log_choose(t.n1(), t.a) + log_choose(t.n2(), t.c),
                  static_cast<double>(t.a),
                  static_cast<double>(t.b),
                  static_cast<double>(t.c),
                  static_cast<double>(t.d),
                  bound,
                  0.5 * gamma};
  const double n = static_cast<double>(t.n1() + t.n2());
  const double p = (static_cast<double>(t.a + t.c) + 1.0) / (n + 2.0);
  // Mode of the binomial part when both arms share the mean logit.
  double guess = std::log(p / (1.0 - p));
  guess = std::clamp(guess, -bound, bound);
  const double scale = 1.0 / std::sqrt(n * p * (1.0 - p) + 0.25);
  return numerics::log_integrate_unimodal(f, -bound, bound, guess, scale).log_value;
}

}  // namespace

std::string_view to_string(HypothesisId id) {
  switch (id) {
    case HypothesisId::H0f: return "H0f";
    case HypothesisId::H1f: return "H1f";
    case HypothesisId::H0r: return "H0r";
    case HypothesisId::H1r: return "H1r";
  }
  return "?";
}

std::string_view to_string(DataModel m) {
  return m == DataModel::NormalNormal ? "normal-normal" : "binomial-normal";
}

ProbVector ModelSpace::prior_probs() const {
  ProbVector p{};
  for (const auto& h : hypotheses) p[index(h.id)] = h.prior_prob;
  return p;
}

ModelSpace build_space(Measure measure, const PriorSpec& prior_mu, const PriorSpec& prior_tau,
                       DataModel data_model, std::optional<ProbVector> prior_probs,
                       double baseline_bound) {
  prior_mu.validate();
  prior_tau.validate();
  if (prior_mu.is_point_mass())
    throw InvalidPriorError("the effect prior must be a proper distribution, not a point mass");
  if (prior_mu.positive_support() || prior_mu.location() != 0.0 ||
      prior_mu.family() == Family::Uniform)
    throw InvalidPriorError("the effect prior must be centred at 0, got " + to_string(prior_mu));
  if (prior_tau.is_point_mass() || !prior_tau.positive_support())
    throw InvalidPriorError("the heterogeneity prior must live on (0, inf), got " +
                            to_string(prior_tau));
  if (!(baseline_bound > 0.0) || !std::isfinite(baseline_bound))
    throw InvalidPriorError("baseline bound must be positive");
  if (data_model == DataModel::BinomialNormal && measure != Measure::LogOR)
    throw InvalidPriorError("the binomial-normal model is defined for log OR only");

  ProbVector probs = prior_probs.value_or(ProbVector{0.25, 0.25, 0.25, 0.25});
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0))
      throw InvalidPriorError("prior model probabilities must lie in (0, 1)");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidPriorError("prior model probabilities must sum to 1 (got " +
                            std::to_string(total) + ")");

  ModelSpace s;
  s.measure = measure;
  s.data_model = data_model;
  s.baseline_bound = baseline_bound;
  for (auto id : kHypotheses) {
    Hypothesis h;
    h.id = id;
    h.prior_mu = has_effect(id) ? prior_mu : PriorSpec::point_mass(0.0);
    h.prior_tau = is_random(id) ? prior_tau : PriorSpec::point_mass(0.0);
    h.prior_prob = probs[index(id)];
    s.hypotheses[index(id)] = h;
  }
  return s;
}

void Dataset::validate() const {
  if (size() == 0) throw InvalidEstimateError("dataset has no studies");
  if (has_tables() && !estimates.empty())
    throw InvalidEstimateError("dataset mixes tables and estimates");
  for (const auto& t : tables) t.validate();
  for (const auto& e : estimates) {
    if (e.measure != measure) throw InvalidEstimateError("dataset mixes effect-size measures");
    validate_estimate(e.y, e.se, e.measure, e.study_label);
  }
}

Dataset Dataset::from_estimates(Measure measure, std::vector<EffectEstimate> estimates) {
  Dataset d;
  d.measure = measure;
  for (const auto& e : estimates) d.labels.push_back(e.study_label);
  d.estimates = std::move(estimates);
  d.validate();
  return d;
}

Dataset Dataset::from_tables(Measure measure, std::vector<ContingencyTable> tables,
                             std::vector<std::string> labels) {
  Dataset d;
  d.measure = measure;
  if (labels.empty())
    for (std::size_t i = 0; i < tables.size(); ++i) labels.push_back("Study " + std::to_string(i + 1));
  if (labels.size() != tables.size()) throw InvalidTableError("one label per table is required");
  d.tables = std::move(tables);
  d.labels = std::move(labels);
  d.validate();
  return d;
}

Dataset to_estimates(const Dataset& data, ZeroCellPolicy policy) {
  if (!data.has_tables()) return data;
  std::vector<EffectEstimate> out;
  for (std::size_t i = 0; i < data.tables.size(); ++i)
    out.push_back(effect_from_table(data.measure, data.tables[i], policy, data.labels[i]));
  return Dataset::from_estimates(data.measure, std::move(out));
}

double loglik_normal_normal(const Dataset& data, double mu, double tau) {
  if (data.has_tables())
    throw InvalidEstimateError("normal-normal likelihood needs effect estimates, not tables");
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  const double t2 = tau * tau;
  double s = 0.0;
  for (const auto& e : data.estimates) s += log_normal_pdf(e.y, mu, std::sqrt(e.se * e.se + t2));
  return s;
}

double baseline_log_prior(double beta, double bound) {
  if (beta < -bound || beta > bound) return -kInf;
  return log_sigmoid(beta) + log_sigmoid(-beta) - std::log(std::tanh(0.5 * bound));
}

double binomial_profile(const ContingencyTable& table, double gamma, double bound) {
  table.validate();
  if (!(bound > 0.0)) throw DomainError("baseline bound must be positive");
  return profile_impl(table, gamma, bound);
}

double loglik_binomial_normal_study(const ContingencyTable& table, double mu, double tau,
                                    double bound) {
  table.validate();
  if (!(bound > 0.0)) throw DomainError("baseline bound must be positive");
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  if (tau == 0.0) return profile_impl(table, mu, bound);
  double y = 0.0, v = 1.0;
  rough_log_or(table, y, v);
  const double prec = 1.0 / v + 1.0 / (tau * tau);
  const double guess = (y / v + mu / (tau * tau)) / prec;
  auto f = [&](double g) { return profile_impl(table, g, bound) + log_normal_pdf(g, mu, tau); };
  return numerics::log_integrate_unimodal(f, -kInf, kInf, guess, 1.0 / std::sqrt(prec)).log_value;
}

constexpr double kBandStep = 0.1;

// One-sided third-order derivative at v[0] from v[0], v[dir], v[2 dir], v[3 dir].
double end_slope(const double* v, std::ptrdiff_t dir, double h) {
  return static_cast<double>(dir) * (-11.0 * v[0] + 18.0 * v[dir] - 9.0 * v[2 * dir] + 2.0 * v[3 * dir]) /
         (6.0 * h);
}

struct BinomialStudyLikelihood::Spline {
  boost::math::interpolators::cardinal_cubic_b_spline<double> s;
};

BinomialStudyLikelihood::BinomialStudyLikelihood(const ContingencyTable& table, double bound)
    : table_(table), bound_(bound) {
  table.validate();
  if (!(bound > 0.0)) throw DomainError("baseline bound must be positive");
  const double n = static_cast<double>(table.n1() + table.n2());
  const double step = std::min(0.05, 0.5 / std::sqrt(n / 16.0));
  const double half = 2.0 * bound + 40.0;
  // Coarse pass to find where the profile is within 60 of its maximum; the
  // fine table covers that window and the profile is computed directly
  // beyond it. Past |gamma| = 2B + 50 the profile is linear up to terms of
  // order exp(-25), with slope (a + d) / 2 on the left and -(b + c) / 2 on
  // the right.
  constexpr std::size_t kCoarse = 121;
  std::vector<double> coarse(kCoarse);
  const double coarse_step = 2.0 * half / static_cast<double>(kCoarse - 1);
  numerics::parallel_for(kCoarse, [&](std::size_t i) {
    coarse[i] = profile_impl(table, -half + coarse_step * static_cast<double>(i), bound);
  });
  far_hi_ = 2.0 * bound + 50.0;
  far_lo_ = -far_hi_;
  far_lo_value_ = profile_impl(table, far_lo_, bound);
  far_hi_value_ = profile_impl(table, far_hi_, bound);
  const double coarse_top = *std::max_element(coarse.begin(), coarse.end());
  std::size_t c0 = kCoarse - 1, c1 = 0;
  for (std::size_t i = 0; i < kCoarse; ++i)
    if (coarse[i] >= coarse_top - 60.0) {
      c0 = std::min(c0, i);
      c1 = std::max(c1, i);
    }
  c0 = c0 >= 2 ? c0 - 2 : 0;
  c1 = std::min(kCoarse - 1, c1 + 2);
  lo_ = -half + coarse_step * static_cast<double>(c0);
  const double span = coarse_step * static_cast<double>(c1 - c0);
  const auto nodes = static_cast<std::size_t>(std::ceil(span / step)) + 1;
  const double h = span / static_cast<double>(nodes - 1);
  hi_ = lo_ + h * static_cast<double>(nodes - 1);
  std::vector<double> values(nodes);
  numerics::parallel_for(nodes, [&](std::size_t i) {
    values[i] = profile_impl(table, lo_ + h * static_cast<double>(i), bound);
  });
  const double slope_lo = end_slope(values.data(), 1, h);
  const double slope_hi = end_slope(values.data() + nodes - 1, -1, h);
  spline_ = std::make_shared<const Spline>(
      Spline{boost::math::interpolators::cardinal_cubic_b_spline<double>(
          values.begin(), values.end(), lo_, h, slope_lo, slope_hi)});
  step_ = h;
  const double top = *std::max_element(values.begin(), values.end());
  first_ = nodes - 1;
  last_ = 0;
  for (std::size_t i = 0; i < nodes; ++i)
    if (values[i] >= top - 50.0) {
      first_ = std::min(first_, i);
      last_ = std::max(last_, i);
    }
  double max_curv = 1e-12;
  for (std::size_t i = std::max<std::size_t>(first_, 1); i + 1 < nodes && i <= last_; ++i)
    max_curv = std::max(max_curv, std::abs(values[i - 1] - 2.0 * values[i] + values[i + 1]) / (h * h));
  curvature_scale_ = 1.0 / std::sqrt(max_curv);
  values_ = std::make_shared<const std::vector<double>>(std::move(values));
  // Coarser tables between the fine window and the linear tails.
  auto band = [&](double from, double to) -> std::shared_ptr<const Spline> {
    if (to - from < 1e-9) return nullptr;
    const auto m = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil((to - from) / kBandStep)) + 1);
    const double hb = (to - from) / static_cast<double>(m - 1);
    std::vector<double> v(m);
    numerics::parallel_for(m, [&](std::size_t i) {
      v[i] = profile_impl(table, from + hb * static_cast<double>(i), bound);
    });
    return std::make_shared<const Spline>(Spline{boost::math::interpolators::cardinal_cubic_b_spline<double>(
        v.begin(), v.end(), from, hb, end_slope(v.data(), 1, hb), end_slope(v.data() + m - 1, -1, hb))});
  };
  if (lo_ > far_lo_) band_lo_ = band(far_lo_, lo_);
  if (hi_ < far_hi_) band_hi_ = band(hi_, far_hi_);
  rough_log_or(table, center_, spread_);
  spread_ = std::sqrt(spread_);
}

double BinomialStudyLikelihood::profile(double gamma) const {
  if (gamma >= lo_ && gamma <= hi_) return spline_->s(gamma);
  if (gamma < far_lo_) return far_lo_value_ + 0.5 * static_cast<double>(table_.a + table_.d) * (gamma - far_lo_);
  if (gamma > far_hi_) return far_hi_value_ - 0.5 * static_cast<double>(table_.b + table_.c) * (gamma - far_hi_);
  if (gamma < lo_ && band_lo_) return band_lo_->s(gamma);
  if (gamma > hi_ && band_hi_) return band_hi_->s(gamma);
  return profile_impl(table_, gamma, bound_);
}

double BinomialStudyLikelihood::adaptive_log_lik(double mu, double tau) const {
  const double prec = 1.0 / (spread_ * spread_) + 1.0 / (tau * tau);
  const double guess = (center_ / (spread_ * spread_) + mu / (tau * tau)) / prec;
  auto f = [&](double g) { return profile(g) + log_normal_pdf(g, mu, tau); };
  return numerics::log_integrate_unimodal(f, -kInf, kInf, guess, 1.0 / std::sqrt(prec)).log_value;
}

// Fast paths: Gauss-Legendre panels around mu when tau is small next to the
// node spacing, otherwise a trapezoid sum over the tabulated nodes. Either
// falls back to adaptive quadrature when the summed range does not capture
// the integrand (edges within 30 of its maximum).
double BinomialStudyLikelihood::log_lik(double mu, double tau) const {
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  if (tau == 0.0) return profile(mu);
  auto f = [&](double g) { return profile(g) + log_normal_pdf(g, mu, tau); };

  if (tau < 4.0 * step_) {
    using GL = boost::math::quadrature::gauss<double, 15>;
    constexpr int kPanels = 4;
    const double a = mu - 8.5 * tau, width = 17.0 * tau / kPanels;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    std::array<double, 2 * 15 * kPanels> lf{};
    std::size_t k = 0;
    double top = -kInf;
    for (int p = 0; p < kPanels; ++p) {
      const double mid = a + (p + 0.5) * width, half = 0.5 * width;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double lw = std::log(w[i] * half);
        const double v1 = f(mid + half * x[i]) + lw;
        lf[k++] = v1;
        top = std::max(top, v1);
        if (x[i] != 0.0) {
          const double v2 = f(mid - half * x[i]) + lw;
          lf[k++] = v2;
          top = std::max(top, v2);
        }
      }
    }
    const double lw_edge = std::log(width);
    if (std::max(f(a), f(a + kPanels * width)) + lw_edge > top - 30.0 || !std::isfinite(top))
      return adaptive_log_lik(mu, tau);
    return numerics::log_sum_exp(std::span<const double>(lf.data(), k));
  }

  const auto& v = *values_;
  const double scale = std::min(tau, curvature_scale_);
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(scale / (4.0 * step_)));
  const double span_lo = std::max(lo_ + step_ * static_cast<double>(first_), mu - 40.0 * tau);
  const double span_hi = std::min(lo_ + step_ * static_cast<double>(last_), mu + 40.0 * tau);
  if (!(span_hi - span_lo > 8.0 * step_ * static_cast<double>(stride))) return adaptive_log_lik(mu, tau);
  const auto i0 = static_cast<std::size_t>(std::ceil((span_lo - lo_) / step_));
  const auto i1 = static_cast<std::size_t>(std::floor((span_hi - lo_) / step_));
  double top = -kInf, first_val = 0.0, last_val = 0.0;
  std::size_t count = 0;
  for (std::size_t i = i0; i <= i1; i += stride) {
    const double val = v[i] + log_normal_pdf(lo_ + step_ * static_cast<double>(i), mu, tau);
    if (count == 0) first_val = val;
    last_val = val;
    top = std::max(top, val);
    ++count;
  }
  if (!std::isfinite(top) || std::max(first_val, last_val) > top - 30.0) return adaptive_log_lik(mu, tau);
  double sum = 0.0;
  for (std::size_t i = i0; i <= i1; i += stride)
    sum += std::exp(v[i] + log_normal_pdf(lo_ + step_ * static_cast<double>(i), mu, tau) - top);
  return top + std::log(sum * step_ * static_cast<double>(stride));
}

DataLikelihood::DataLikelihood(const Dataset& data, const ModelSpace& space)
    : model_(space.data_model), n_(data.size()) {
  data.validate();
  if (data.measure != space.measure)
    throw InvalidEstimateError("dataset measure does not match the model space");
  std::vector<double> ys, vs;
  if (model_ == DataModel::BinomialNormal) {
    if (!data.has_tables())
      throw InvalidEstimateError("the binomial-normal model needs 2x2 tables");
    for (const auto& t : data.tables) studies_.emplace_back(t, space.baseline_bound);
    for (const auto& s : studies_) {
      ys.push_back(s.center());
      vs.push_back(s.spread() * s.spread());
    }
  } else {
    if (data.has_tables())
      throw InvalidEstimateError("the normal-normal model needs effect estimates; convert tables first");
    data_ = data;
    for (const auto& e : data.estimates) {
      ys.push_back(e.y);
      vs.push_back(e.se * e.se);
    }
  }
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    sw += 1.0 / vs[i];
    swy += ys[i] / vs[i];
  }
  center_ = swy / sw;
  scale_ = 1.0 / std::sqrt(sw);
  double ss = 0.0, mean_se = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    ss += (ys[i] - center_) * (ys[i] - center_);
    mean_se += std::sqrt(vs[i]);
  }
  tau_ref_ = std::sqrt(ss / static_cast<double>(ys.size())) + mean_se / static_cast<double>(ys.size());
}

double DataLikelihood::log_lik(double mu, double tau) const {
  if (model_ == DataModel::NormalNormal) return loglik_normal_normal(data_, mu, tau);
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  double s = 0.0;
  for (const auto& st : studies_) s += st.log_lik(mu, tau);
  return s;
}

}  // namespace bmameta
