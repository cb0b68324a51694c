#include "bmameta/marginal_inference.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bmameta/errors.hpp"
#include "bmameta/numerics.hpp"

namespace bmameta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Nodes whose log integrand is this far below the maximum are dropped from
// the integration window.
constexpr double kWindowDrop = 40.0;
// Prior mass beyond which a window is not extended while the integrand is
// already falling towards that end.
constexpr double kOuterCut = 1e-15;
// Absolute limit on |t| for windows chasing a maximum on their edge.
constexpr double kHardLimit = 60.0;
// Export grids hold about this many intervals.
constexpr std::size_t kExportIntervals = 4096;

double checked(double v) {
  if (std::isnan(v) || v == kInf) throw QuadratureError("non-finite log likelihood during integration");
  return v;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

// Trapezoid weights (log) for a uniform grid.
std::vector<double> log_trap_weights(const std::vector<double>& t) {
  const std::size_t n = t.size();
  const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
  std::vector<double> w(n, std::log(h));
  w.front() = w.back() = std::log(0.5 * h);
  return w;
}

struct Bounds {
  double lo, hi;
};

// Window [a, b] covering every scan node within kWindowDrop of the maximum,
// padded by one scan step. Where the integrand has not decayed at an end of
// the range, that end moves outward and the caller rescans. Extension stops
// at `outer` unless the maximum itself sits on that end, as when the data
// pull the posterior beyond the prior's bulk.
bool window_from_scan(const std::vector<double>& t, const std::vector<double>& v, const Bounds& outer,
                      double& a, double& b) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == -kInf) throw QuadratureError("integrand vanishes on the whole integration range");
  const double width = b - a;
  bool extended = false;
  const double lo = v.front() == m ? -kHardLimit : outer.lo;
  const double hi = v.back() == m ? kHardLimit : outer.hi;
  if (v.front() >= m - kWindowDrop && a > lo) {
    a = std::max(lo, a - 2.0 * width);
    extended = true;
  }
  if (v.back() >= m - kWindowDrop && b < hi) {
    b = std::min(hi, b + 2.0 * width);
    extended = true;
  }
  if (extended) return true;
  std::size_t first = v.size(), last = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] >= m - kWindowDrop) {
      first = std::min(first, i);
      last = i;
    }
  }
  a = t[first > 0 ? first - 1 : 0];
  b = t[std::min(last + 1, v.size() - 1)];
  return false;
}

Bounds prior_bounds(const PriorSpec& prior, double cut) {
  return {quantile(prior, cut), quantile(prior, 1.0 - cut)};
}

// Under random effects the spread of the study estimates widens the data
// term, so a diffuse likelihood leaves the axis on the prior.
AxisTransform mu_transform(const DataLikelihood& lik, const PriorSpec& prior, bool random) {
  const double prior_scale = 0.5 * (quantile(prior, 0.841344746) - quantile(prior, 0.158655254));
  double data_var = lik.scale() * lik.scale();
  if (random) data_var += lik.tau_reference() * lik.tau_reference() / static_cast<double>(lik.size());
  const double data_prec = 1.0 / data_var;
  const double prior_prec = 1.0 / (prior_scale * prior_scale);
  AxisTransform tr;
  tr.map = AxisMap::Sinh;
  tr.center = lik.center() * data_prec / (data_prec + prior_prec) + prior.location() * prior_prec / (data_prec + prior_prec);
  tr.scale = 1.0 / std::sqrt(data_prec + prior_prec);
  return tr;
}

AxisTransform tau_transform() {
  AxisTransform tr;
  tr.map = AxisMap::Log;
  return tr;
}

// log prior in x plus the log Jacobian of the map.
struct AxisTerm {
  const PriorSpec* prior;
  AxisTransform tr;
  double x(double t) const { return tr.x(t); }
  double log_term(double t) const { return log_density(*prior, tr.x(t)) + std::log(tr.dxdt(t)); }
};

struct OneDimResult {
  std::vector<double> t;
  std::vector<double> g;
  double log_marginal;
};

OneDimResult integrate_1d(const std::function<double(double)>& g, double a, double b,
                          const Bounds& outer, std::size_t n, double threshold) {
  const std::size_t scan = 4 * (n - 1) + 1;
  for (int pass = 0, narrowing = 0; pass < 12 && narrowing < 3; ++pass) {
    const auto t = linspace(a, b, scan);
    std::vector<double> v(scan);
    numerics::parallel_for(scan, [&](std::size_t i) { v[i] = g(t[i]); });
    double na = a, nb = b;
    if (window_from_scan(t, v, outer, na, nb)) {
      a = na;
      b = nb;
      continue;
    }
    const bool narrow = (nb - na) < 0.25 * (b - a);
    a = na;
    b = nb;
    if (++narrowing >= 2 && !narrow) break;
  }

  auto level = [&](std::size_t m, const OneDimResult* prev) {
    OneDimResult r;
    r.t = linspace(a, b, m);
    r.g.assign(m, 0.0);
    numerics::parallel_for(m, [&](std::size_t i) {
      if (prev && i % 2 == 0)
        r.g[i] = prev->g[i / 2];
      else
        r.g[i] = g(r.t[i]);
    });
    r.log_marginal = numerics::log_trapezoid(r.t, r.g);
    return r;
  };
  auto coarse = level(n, nullptr);
  auto fine = level(2 * n - 1, &coarse);
  if (std::abs(fine.log_marginal - coarse.log_marginal) < threshold) return fine;
  auto finer = level(4 * n - 3, &fine);
  if (!(std::abs(finer.log_marginal - fine.log_marginal) < threshold)) {
    std::ostringstream msg;
    msg << "log marginal did not stabilize: " << fine.log_marginal << " -> " << finer.log_marginal
        << " after refinement to " << 4 * n - 3 << " points";
    throw NotConvergedError(msg.str());
  }
  return finer;
}

struct TwoDimResult {
  std::vector<double> tm, tt;
  std::vector<double> g;  // row-major, mu index outer
  double log_marginal;
};

double log_trapezoid_2d(const std::vector<double>& tm, const std::vector<double>& tt,
                        const std::vector<double>& g) {
  const auto wm = log_trap_weights(tm);
  const auto wt = log_trap_weights(tt);
  std::vector<double> terms(g.size());
  for (std::size_t i = 0; i < tm.size(); ++i)
    for (std::size_t j = 0; j < tt.size(); ++j)
      terms[i * tt.size() + j] = g[i * tt.size() + j] + wm[i] + wt[j];
  return numerics::log_sum_exp(terms);
}

TwoDimResult integrate_2d(const std::function<double(double, double)>& g, double am, double bm,
                          double at, double bt, const Bounds& outer_m, const Bounds& outer_t,
                          std::size_t nm, std::size_t nt, double threshold) {
  const std::size_t sm = nm, st = nt;
  for (int pass = 0, narrowing = 0; pass < 12 && narrowing < 3; ++pass) {
    const auto tm = linspace(am, bm, sm);
    const auto tt = linspace(at, bt, st);
    std::vector<double> v(sm * st);
    numerics::parallel_for(sm, [&](std::size_t i) {
      for (std::size_t j = 0; j < st; ++j) v[i * st + j] = g(tm[i], tt[j]);
    });
    std::vector<double> pm(sm, -kInf), pt(st, -kInf);
    for (std::size_t i = 0; i < sm; ++i)
      for (std::size_t j = 0; j < st; ++j) {
        pm[i] = std::max(pm[i], v[i * st + j]);
        pt[j] = std::max(pt[j], v[i * st + j]);
      }
    double nam = am, nbm = bm, nat = at, nbt = bt;
    const bool ext_m = window_from_scan(tm, pm, outer_m, nam, nbm);
    const bool ext_t = window_from_scan(tt, pt, outer_t, nat, nbt);
    if (ext_m || ext_t) {
      // Keep the other axis as it was until both ends have decayed.
      if (ext_m) am = nam, bm = nbm;
      if (ext_t) at = nat, bt = nbt;
      continue;
    }
    const bool narrow = (nbm - nam) < 0.25 * (bm - am) || (nbt - nat) < 0.25 * (bt - at);
    am = nam;
    bm = nbm;
    at = nat;
    bt = nbt;
    if (++narrowing >= 2 && !narrow) break;
  }

  auto level = [&](std::size_t m, std::size_t k, const TwoDimResult* prev) {
    TwoDimResult r;
    r.tm = linspace(am, bm, m);
    r.tt = linspace(at, bt, k);
    r.g.assign(m * k, 0.0);
    numerics::parallel_for(m, [&](std::size_t i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (prev && i % 2 == 0 && j % 2 == 0)
          r.g[i * k + j] = prev->g[(i / 2) * prev->tt.size() + j / 2];
        else
          r.g[i * k + j] = g(r.tm[i], r.tt[j]);
      }
    });
    r.log_marginal = log_trapezoid_2d(r.tm, r.tt, r.g);
    return r;
  };
  auto coarse = level(nm, nt, nullptr);
  auto fine = level(2 * nm - 1, 2 * nt - 1, &coarse);
  if (std::abs(fine.log_marginal - coarse.log_marginal) < threshold) return fine;
  auto finer = level(4 * nm - 3, 4 * nt - 3, &fine);
  if (!(std::abs(finer.log_marginal - fine.log_marginal) < threshold)) {
    std::ostringstream msg;
    msg << "log marginal did not stabilize on the (mu, tau) grid: " << fine.log_marginal << " -> "
        << finer.log_marginal;
    throw NotConvergedError(msg.str());
  }
  return finer;
}

}  // namespace

void QuadratureConfig::validate() const {
  for (auto n : {outer_points_mu, outer_points_tau})
    if (n < 11 || n % 2 == 0) throw QuadratureError("outer grid points must be odd and at least 11");
  if (!(prior_mass_cut > 0.0 && prior_mass_cut < 0.01))
    throw QuadratureError("prior_mass_cut must lie in (0, 0.01)");
  if (!(refine_threshold > 0.0)) throw QuadratureError("refine_threshold must be positive");
}

double AxisTransform::x(double t) const {
  switch (map) {
    case AxisMap::Sinh: return center + scale * std::sinh(t);
    case AxisMap::Log: return std::exp(t);
    case AxisMap::Identity: break;
  }
  return t;
}

double AxisTransform::dxdt(double t) const {
  switch (map) {
    case AxisMap::Sinh: return scale * std::cosh(t);
    case AxisMap::Log: return std::exp(t);
    case AxisMap::Identity: break;
  }
  return 1.0;
}

double AxisTransform::t(double x) const {
  switch (map) {
    case AxisMap::Sinh: return std::asinh((x - center) / scale);
    case AxisMap::Log: return x > 0.0 ? std::log(x) : -kInf;
    case AxisMap::Identity: break;
  }
  return x;
}

PosteriorGrid PosteriorGrid::from_t_nodes(const AxisTransform& transform, std::vector<double> t,
                                          const std::vector<double>& log_g_t) {
  PosteriorGrid g;
  g.transform = transform;
  g.log_marginal = numerics::log_trapezoid(t, log_g_t);
  if (!std::isfinite(g.log_marginal)) throw QuadratureError("posterior grid has no finite mass");
  const std::size_t n = t.size();
  g.t_density.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.t_density[i] = std::exp(log_g_t[i] - g.log_marginal);

  // Export nodes: each integration cell split into `sub` pieces, log
  // integrand interpolated by a cubic spline in t.
  const std::size_t sub = n > 1 ? std::max<std::size_t>(1, (kExportIntervals + n - 2) / (n - 1)) : 1;
  const double h = n > 1 ? (t.back() - t.front()) / static_cast<double>(n - 1) : 0.0;
  const double top = *std::max_element(log_g_t.begin(), log_g_t.end());
  std::vector<double> clamped(log_g_t.begin(), log_g_t.end());
  for (auto& v : clamped) v = std::max(v, top - 800.0);
  std::vector<double> te;
  std::vector<double> le;
  if (n >= 5 && sub > 1) {
    const boost::math::interpolators::cardinal_cubic_b_spline<double> spline(clamped.begin(), clamped.end(),
                                                                             t.front(), h);
    const std::size_t m = (n - 1) * sub + 1;
    te.resize(m);
    le.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      if (k % sub == 0) {
        te[k] = t[k / sub];
        le[k] = log_g_t[k / sub];
      } else {
        te[k] = t[k / sub] + h * static_cast<double>(k % sub) / static_cast<double>(sub);
        le[k] = spline(te[k]);
      }
    }
  } else {
    te = t;
    le = log_g_t;
  }
  const std::size_t m = te.size();
  g.axis.resize(m);
  g.log_weights.resize(m);
  g.normalized_density.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    g.axis[k] = transform.x(te[k]);
    g.log_weights[k] = le[k] - std::log(transform.dxdt(te[k]));
    g.normalized_density[k] = std::exp(g.log_weights[k] - g.log_marginal);
  }
  g.t = std::move(t);
  const double mass = g.trapezoid_mass();
  if (mass > 0.0)
    for (auto& d : g.normalized_density) d /= mass;
  return g;
}

double PosteriorGrid::cdf(double x) const {
  const double u = transform.t(x);
  if (u <= t.front()) return 0.0;
  if (u >= t.back()) return 1.0;
  const auto it = std::upper_bound(t.begin(), t.end(), u);
  const std::size_t j = static_cast<std::size_t>(it - t.begin()) - 1;
  double c = 0.0;
  for (std::size_t i = 0; i < j; ++i) c += 0.5 * (t[i + 1] - t[i]) * (t_density[i] + t_density[i + 1]);
  const double h = t[j + 1] - t[j];
  const double s = (u - t[j]) / h;
  c += h * (t_density[j] * s + 0.5 * (t_density[j + 1] - t_density[j]) * s * s);
  return std::clamp(c, 0.0, 1.0);
}

double PosteriorGrid::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile requires 0 < p < 1");
  double c = 0.0;
  for (std::size_t j = 0; j + 1 < t.size(); ++j) {
    const double h = t[j + 1] - t[j];
    const double cell = 0.5 * h * (t_density[j] + t_density[j + 1]);
    if (c + cell >= p || j + 2 == t.size()) {
      // Solve c + h (d0 s + (d1 - d0) s^2 / 2) = p for s in [0, 1].
      const double r = p - c;
      const double qa = 0.5 * h * (t_density[j + 1] - t_density[j]);
      const double qb = h * t_density[j];
      double s = 0.0;
      const double disc = qb * qb + 4.0 * qa * r;
      if (qb + std::sqrt(std::max(disc, 0.0)) > 0.0)
        s = 2.0 * r / (qb + std::sqrt(std::max(disc, 0.0)));
      s = std::clamp(s, 0.0, 1.0);
      return transform.x(t[j] + s * h);
    }
    c += cell;
  }
  return axis.back();
}

double PosteriorGrid::expect(const std::function<double(double)>& fn) const {
  double s = 0.0;
  double f0 = fn(transform.x(t.front()));
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    const double f1 = fn(transform.x(t[i + 1]));
    s += 0.5 * h * (f0 * t_density[i] + f1 * t_density[i + 1]);
    f0 = f1;
  }
  return s;
}

double PosteriorGrid::mean() const {
  return expect([](double x) { return x; });
}

double PosteriorGrid::density_at(double x) const {
  if (!(x >= axis.front() && x <= axis.back())) return 0.0;
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  if (it == axis.end()) --it;
  const std::size_t j = static_cast<std::size_t>(it - axis.begin()) - 1;
  const double s = (x - axis[j]) / (axis[j + 1] - axis[j]);
  return normalized_density[j] + s * (normalized_density[j + 1] - normalized_density[j]);
}

double PosteriorGrid::trapezoid_mass() const {
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < axis.size(); ++i)
    mass += 0.5 * (axis[i + 1] - axis[i]) * (normalized_density[i] + normalized_density[i + 1]);
  return mass;
}

ModelEvidence evidence_for(const DataLikelihood& lik, const Hypothesis& h,
                           const QuadratureConfig& config) {
  config.validate();
  h.prior_mu.validate();
  h.prior_tau.validate();
  ModelEvidence ev;
  ev.hypothesis_id = h.id;
  const double cut = config.prior_mass_cut;
  const bool mu_free = !h.prior_mu.is_point_mass();
  const bool tau_free = !h.prior_tau.is_point_mass();
  const double mu0 = mu_free ? 0.0 : h.prior_mu.param(0);
  const double tau0 = tau_free ? 0.0 : h.prior_tau.param(0);

  if (!mu_free && !tau_free) {
    ev.log_marginal = checked(lik.log_lik(mu0, tau0));
    return ev;
  }

  const AxisTerm mu_axis{&h.prior_mu, mu_free ? mu_transform(lik, h.prior_mu, tau_free) : AxisTransform{}};
  const AxisTerm tau_axis{&h.prior_tau, tau_transform()};
  Bounds mb{0.0, 0.0}, tb{0.0, 0.0}, mo{0.0, 0.0}, to{0.0, 0.0};
  auto to_t = [](const AxisTransform& tr, Bounds b) { return Bounds{tr.t(b.lo), tr.t(b.hi)}; };
  if (mu_free) {
    mb = to_t(mu_axis.tr, prior_bounds(h.prior_mu, cut));
    mo = to_t(mu_axis.tr, prior_bounds(h.prior_mu, std::min(cut, kOuterCut)));
  }
  if (tau_free) {
    tb = to_t(tau_axis.tr, prior_bounds(h.prior_tau, cut));
    to = to_t(tau_axis.tr, prior_bounds(h.prior_tau, std::min(cut, kOuterCut)));
  }

  if (mu_free && !tau_free) {
    auto g = [&](double t) { return checked(mu_axis.log_term(t) + lik.log_lik(mu_axis.x(t), tau0)); };
    auto r = integrate_1d(g, mb.lo, mb.hi, mo, config.outer_points_mu, config.refine_threshold);
    ev.log_marginal = r.log_marginal;
    ev.points_mu = r.t.size();
    ev.mu_grid = PosteriorGrid::from_t_nodes(mu_axis.tr, r.t, r.g);
    return ev;
  }
  if (!mu_free && tau_free) {
    auto g = [&](double t) { return checked(tau_axis.log_term(t) + lik.log_lik(mu0, tau_axis.x(t))); };
    auto r = integrate_1d(g, tb.lo, tb.hi, to, config.outer_points_tau, config.refine_threshold);
    ev.log_marginal = r.log_marginal;
    ev.points_tau = r.t.size();
    ev.tau_grid = PosteriorGrid::from_t_nodes(tau_axis.tr, r.t, r.g);
    return ev;
  }

  auto g = [&](double tm, double tt) {
    return checked(mu_axis.log_term(tm) + tau_axis.log_term(tt) +
                   lik.log_lik(mu_axis.x(tm), tau_axis.x(tt)));
  };
  auto r = integrate_2d(g, mb.lo, mb.hi, tb.lo, tb.hi, mo, to, config.outer_points_mu,
                        config.outer_points_tau, config.refine_threshold);
  ev.log_marginal = r.log_marginal;
  ev.points_mu = r.tm.size();
  ev.points_tau = r.tt.size();
  const std::size_t nm = r.tm.size(), nt = r.tt.size();
  const auto wm = log_trap_weights(r.tm);
  const auto wt = log_trap_weights(r.tt);
  std::vector<double> marg_mu(nm), marg_tau(nt), row(nt), col(nm);
  for (std::size_t i = 0; i < nm; ++i) {
    for (std::size_t j = 0; j < nt; ++j) row[j] = r.g[i * nt + j] + wt[j];
    marg_mu[i] = numerics::log_sum_exp(row);
  }
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t i = 0; i < nm; ++i) col[i] = r.g[i * nt + j] + wm[i];
    marg_tau[j] = numerics::log_sum_exp(col);
  }
  ev.mu_grid = PosteriorGrid::from_t_nodes(mu_axis.tr, r.tm, marg_mu);
  ev.tau_grid = PosteriorGrid::from_t_nodes(tau_axis.tr, r.tt, marg_tau);
  return ev;
}

std::vector<ModelEvidence> evidence(const DataLikelihood& lik, const ModelSpace& space,
                                    const QuadratureConfig& config) {
  std::vector<ModelEvidence> out;
  for (auto id : kHypotheses) out.push_back(evidence_for(lik, space[id], config));
  return out;
}

std::vector<ModelEvidence> evidence(const Dataset& data, const ModelSpace& space,
                                    const QuadratureConfig& config) {
  config.validate();
  const DataLikelihood lik(data, space);
  return evidence(lik, space, config);
}

const PosteriorGrid& posterior_mu_grid(const ModelEvidence& ev) {
  if (!ev.mu_grid)
    throw ParameterFixedError("mu is fixed at 0 under " + std::string(to_string(ev.hypothesis_id)));
  return *ev.mu_grid;
}

const PosteriorGrid& posterior_tau_grid(const ModelEvidence& ev) {
  if (!ev.tau_grid)
    throw ParameterFixedError("tau is fixed at 0 under " + std::string(to_string(ev.hypothesis_id)));
  return *ev.tau_grid;
}

std::string grid_to_text(const PosteriorGrid& grid, const std::string& header) {
  std::ostringstream out;
  out.precision(17);
  if (!header.empty()) out << header;
  for (std::size_t i = 0; i < grid.axis.size(); ++i)
    out << grid.axis[i] << ' ' << grid.normalized_density[i] << '\n';
  return out.str();
}

}  // namespace bmameta
