#include "bmameta/prior_fitting.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "bmameta/errors.hpp"

namespace bmameta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMinValues = 10;

using Point = std::array<double, 2>;

struct Minimum {
  Point x;
  double f;
  bool converged;
};

// Nelder-Mead on R^2 with standard coefficients.
Minimum nelder_mead(const std::function<double(const Point&)>& f, Point start, double step) {
  std::array<Point, 3> s{start, start, start};
  s[1][0] += step;
  s[2][1] += step;
  std::array<double, 3> fs{};
  for (int i = 0; i < 3; ++i) fs[i] = f(s[i]);
  bool converged = false;
  for (int it = 0; it < 5000; ++it) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const auto best = order[0], mid = order[1], worst = order[2];
    double diam = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 2; ++k) diam = std::max(diam, std::abs(s[i][k] - s[best][k]));
    if (diam < 1e-9 && std::abs(fs[worst] - fs[best]) <= 1e-10 * (1.0 + std::abs(fs[best]))) {
      converged = true;
      break;
    }
    Point c{};
    for (int k = 0; k < 2; ++k) c[k] = 0.5 * (s[best][k] + s[mid][k]);
    auto along = [&](double t) {
      Point p{};
      for (int k = 0; k < 2; ++k) p[k] = c[k] + t * (s[worst][k] - c[k]);
      return p;
    };
    const Point xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fs[best]) {
      const Point xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        s[worst] = xe;
        fs[worst] = fe;
      } else {
        s[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[mid]) {
      s[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    const bool outside = fr < fs[worst];
    const Point xc = along(outside ? -0.5 : 0.5);
    const double fc = f(xc);
    if (fc < (outside ? fr : fs[worst])) {
      s[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (int i = 0; i < 3; ++i) {
      if (i == best) continue;
      for (int k = 0; k < 2; ++k) s[i][k] = s[best][k] + 0.5 * (s[i][k] - s[best][k]);
      fs[i] = f(s[i]);
    }
  }
  const auto bi = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  return {s[bi], fs[bi], converged};
}

double df_from(double u) { return kMinStudentDf + (kMaxStudentDf - kMinStudentDf) / (1.0 + std::exp(-u)); }
double df_to(double df) {
  const double r = (df - kMinStudentDf) / (kMaxStudentDf - kMinStudentDf);
  return std::log(r / (1.0 - r));
}

void check_values(const FitInput& in) {
  if (in.values.size() < kMinValues)
    throw InsufficientDataError("fitting needs at least " + std::to_string(kMinValues) +
                                " values, got " + std::to_string(in.values.size()));
  for (double v : in.values)
    if (!std::isfinite(v)) throw InsufficientDataError("fit input contains a non-finite value");
  if (in.target == FitTarget::HeterogeneityFamily)
    for (double v : in.values)
      if (!(v > 0.0)) throw InsufficientDataError("heterogeneity estimates must be positive");
}

FitResult multistart(const std::function<double(const Point&)>& nll, const std::vector<Point>& starts,
                     const std::function<PriorSpec(const Point&)>& to_spec, std::size_t n) {
  FitResult best;
  double best_f = kInf;
  bool any_converged = false;
  for (const auto& s0 : starts) {
    auto m = nelder_mead(nll, s0, 0.3);
    // Restart once from the found point to shake off a collapsed simplex.
    auto m2 = nelder_mead(nll, m.x, 0.05);
    if (m2.f <= m.f) m = m2;
    any_converged = any_converged || m.converged;
    if (m.f < best_f) {
      best_f = m.f;
      best.spec = to_spec(m.x);
      best.converged = m.converged;
    }
  }
  if (!std::isfinite(best_f)) throw NonConvergenceError("likelihood is not finite at any start");
  best.log_likelihood = -best_f;
  best.n_used = n;
  return best;
}

}  // namespace

FitTarget parse_fit_target(std::string_view text) {
  std::string s(text);
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "mu" || s == "effect") return FitTarget::EffectFamily;
  if (s == "tau" || s == "heterogeneity") return FitTarget::HeterogeneityFamily;
  throw InvalidPriorError("fit target must be 'mu' or 'tau', got '" + std::string(text) + "'");
}

FitInput filter_tau_estimates(const std::vector<double>& values, double floor) {
  if (!(floor >= 0.0)) throw DomainError("tau floor must be nonnegative");
  FitInput in;
  in.target = FitTarget::HeterogeneityFamily;
  in.tau_floor = floor;
  for (double v : values) {
    if (v > floor)
      in.values.push_back(v);
    else
      ++in.dropped;
  }
  return in;
}

double log_likelihood(const PriorSpec& spec, const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += log_density(spec, v);
  return s;
}

FitResult fit_family(const FitInput& input, Family family) {
  const bool effect = input.target == FitTarget::EffectFamily;
  const bool admissible = effect ? (family == Family::Normal || family == Family::StudentT)
                                 : (family == Family::HalfNormal || family == Family::Gamma ||
                                    family == Family::InvGamma);
  if (!admissible)
    throw InvalidPriorError(std::string(family_name(family)) + " cannot be fitted to " +
                            (effect ? "effect" : "heterogeneity") + " estimates");
  check_values(input);
  const auto& x = input.values;
  const double n = static_cast<double>(x.size());

  double sum = 0.0, sum_sq = 0.0, sum_log = 0.0, sum_inv = 0.0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
    if (!effect) {
      sum_log += std::log(v);
      sum_inv += 1.0 / v;
    }
  }

  if (family == Family::Normal || family == Family::HalfNormal) {
    const double sd = std::sqrt(sum_sq / n);
    if (!(sd > 0.0)) throw InsufficientDataError("all values are zero");
    FitResult r;
    r.spec = family == Family::Normal ? PriorSpec::normal(0.0, sd) : PriorSpec::half_normal(sd);
    r.log_likelihood = log_likelihood(r.spec, x);
    r.n_used = x.size();
    r.converged = true;
    return r;
  }

  if (family == Family::Gamma) {
    const double mean = sum / n, var = std::max(sum_sq / n - mean * mean, 1e-300);
    const double k0 = mean * mean / var, th0 = var / mean;
    auto nll = [&](const Point& p) {
      const double k = std::exp(p[0]), th = std::exp(p[1]);
      const double ll = (k - 1.0) * sum_log - sum / th - n * std::lgamma(k) - n * k * std::log(th);
      return std::isfinite(ll) ? -ll : kInf;
    };
    std::vector<Point> starts;
    for (double f : {1.0, 0.5, 2.0, 0.25, 4.0})
      starts.push_back({std::log(k0 * f), std::log(th0 / f)});
    return multistart(nll, starts,
                      [](const Point& p) { return PriorSpec::gamma(std::exp(p[0]), std::exp(p[1])); },
                      x.size());
  }

  if (family == Family::InvGamma) {
    const double m = sum_inv / n;
    double v = 0.0;
    for (double xi : x) v += (1.0 / xi - m) * (1.0 / xi - m);
    v = std::max(v / n, 1e-300);
    const double a0 = m * m / v, b0 = m / v;
    auto nll = [&](const Point& p) {
      const double a = std::exp(p[0]), b = std::exp(p[1]);
      const double ll = n * a * std::log(b) - n * std::lgamma(a) - (a + 1.0) * sum_log - b * sum_inv;
      return std::isfinite(ll) ? -ll : kInf;
    };
    std::vector<Point> starts;
    for (double f : {1.0, 0.5, 2.0, 0.25, 4.0})
      starts.push_back({std::log(a0 * f), std::log(b0 * f)});
    return multistart(nll, starts,
                      [](const Point& p) { return PriorSpec::inv_gamma(std::exp(p[0]), std::exp(p[1])); },
                      x.size());
  }

  // Zero-centred Student-t: scale and df.
  std::vector<double> abs_x(x.size());
  std::transform(x.begin(), x.end(), abs_x.begin(), [](double v) { return std::abs(v); });
  std::nth_element(abs_x.begin(), abs_x.begin() + abs_x.size() / 2, abs_x.end());
  const double mad = std::max(abs_x[abs_x.size() / 2], 1e-12);
  auto nll = [&](const Point& p) {
    const double s = std::exp(p[0]), nu = df_from(p[1]);
    const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                     0.5 * std::log(nu * std::numbers::pi) - std::log(s);
    double ll = n * c;
    for (double v : x) {
      const double z = v / s;
      ll -= 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
    }
    return std::isfinite(ll) ? -ll : kInf;
  };
  std::vector<Point> starts;
  for (double df : {4.0, 2.0, 10.0, 1.0, 30.0})
    starts.push_back({std::log(mad / 0.6745), df_to(df)});
  auto r = multistart(nll, starts,
                      [](const Point& p) {
                        return PriorSpec::student_t(0.0, std::exp(p[0]), df_from(p[1]));
                      },
                      x.size());
  r.normal_equivalent = r.spec.param(2) > 0.99 * kMaxStudentDf;
  return r;
}

FitResult fit_family_strict(const FitInput& input, Family family) {
  auto r = fit_family(input, family);
  if (!r.converged)
    throw NonConvergenceError("maximum likelihood fit of " + std::string(family_name(family)) +
                              " did not converge; best found " + to_string(r.spec));
  return r;
}

}  // namespace bmameta
