// Acceptance runner. `acceptance --criterion N` runs one criterion, no
// argument runs all of them. Each criterion prints indented detail lines and
// one final "criterion N: PASS" or "criterion N: FAIL" line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bmameta/bma.hpp"
#include "bmameta/cli.hpp"
#include "bmameta/data_io.hpp"
#include "bmameta/effect_sizes.hpp"
#include "bmameta/errors.hpp"
#include "bmameta/prior_fitting.hpp"
#include "bmameta/prior_registry.hpp"

using namespace bmameta;

namespace {

class Checks {
 public:
  bool check(bool ok, const std::string& what) {
    std::printf("    [%s] %s\n", ok ? "ok" : "xx", what.c_str());
    all_ &= ok;
    return ok;
  }
  bool passed() const { return all_; }

 private:
  bool all_ = true;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within_rel(double x, double target, double rel) { return std::abs(x - target) <= rel * std::abs(target); }

bool rel_check(Checks& c, const char* name, double x, double target, double rel) {
  return c.check(within_rel(x, target, rel),
                 fmt("%s = %.4f, target %.3f +-%.0f%%", name, x, target, rel * 100));
}

const PriorSpec kAriMu = PriorSpec::student_t(0, 0.48, 3);
const PriorSpec kAriTau = PriorSpec::inv_gamma(1.67, 0.45);

Dataset honey() {
  return Dataset::from_tables(Measure::LogOR, {{5, 30, 0, 39}, {2, 38, 0, 40}}, {"Paul 2007", "Shadkam 2010"});
}

BmaResult honey_result(OutputScale scale, double bound = 10.0) {
  const auto space = build_space(Measure::LogOR, kAriMu, kAriTau, DataModel::BinomialNormal, std::nullopt, bound);
  return run_bma(honey(), space, {}, 0.95, scale);
}

// --- 1 ----------------------------------------------------------------------

bool criterion1(Checks& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = honey_result(OutputScale::Ratio);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double bf10 = r.bf_effect.value, bfrf = r.bf_heterogeneity.value;
  c.check(bf10 >= 2.35 && bf10 <= 2.95, fmt("BF10 = %.4f in [2.35, 2.95] (paper 2.630)", bf10));
  c.check(bfrf >= 1.15 && bfrf <= 1.45, fmt("BFrf = %.4f in [1.15, 1.45] (paper 1.296)", bfrf));
  const double pe = r.posterior_inclusion_effect(), ph = r.posterior_inclusion_heterogeneity();
  c.check(std::abs(pe - 0.725) <= 0.03, fmt("P(effect | data) = %.4f, target 0.725 +-0.03", pe));
  c.check(std::abs(ph - 0.564) <= 0.03, fmt("P(heterogeneity | data) = %.4f, target 0.564 +-0.03", ph));
  c.check(secs < 10.0, fmt("runtime %.2f s < 10 s", secs));
  return c.passed();
}

// --- 2, 3 -------------------------------------------------------------------

bool criterion2(Checks& c) {
  const auto r = honey_result(OutputScale::Ratio);
  const auto& m = r.conditional_mu;
  rel_check(c, "conditional OR mean", m.mean, 4.242, 0.15);
  rel_check(c, "conditional OR median", m.median, 2.261, 0.10);
  rel_check(c, "conditional OR CI lower", m.ci_lower, 0.781, 0.15);
  rel_check(c, "conditional OR CI upper", m.ci_upper, 17.613, 0.15);
  rel_check(c, "conditional tau mean", r.conditional_tau.mean, 0.747, 0.15);
  rel_check(c, "conditional tau median", r.conditional_tau.median, 0.426, 0.15);
  return c.passed();
}

bool criterion3(Checks& c) {
  const auto r = honey_result(OutputScale::Ratio);
  rel_check(c, "averaged OR mean", r.averaged_mu.mean, 3.389, 0.15);
  rel_check(c, "averaged OR median", r.averaged_mu.median, 1.642, 0.15);
  rel_check(c, "averaged tau median", r.averaged_tau.median, 0.158, 0.20);
  c.check(r.averaged_tau.ci_lower == 0.0, fmt("averaged tau CI lower = %.17g, exactly 0", r.averaged_tau.ci_lower));
  return c.passed();
}

// --- 4 ----------------------------------------------------------------------

double nn_loglik(const std::vector<double>& y, const std::vector<double>& se, double mu, double tau) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = se[i] * se[i] + tau * tau;
    s += -0.5 * std::log(2 * std::numbers::pi * v) - 0.5 * (y[i] - mu) * (y[i] - mu) / v;
  }
  return s;
}

struct McEstimate {
  double log_mean;
  double log_se;
};

// Log of the Monte Carlo mean of exp(loglik) over prior draws.
McEstimate mc_log_marginal(const std::vector<double>& ll) {
  double mx = -INFINITY;
  for (double v : ll) mx = std::max(mx, v);
  double s = 0.0, s2 = 0.0;
  for (double v : ll) {
    const double w = std::exp(v - mx);
    s += w;
    s2 += w * w;
  }
  const double n = static_cast<double>(ll.size());
  const double mean = s / n, var = s2 / n - mean * mean;
  return {mx + std::log(mean), std::sqrt(var / n) / mean};
}

// Independent prior draws (std::random) for the families used below.
struct PriorSampler {
  PriorSpec spec;
  std::function<double(std::mt19937_64&)> draw;
};

PriorSampler sampler(const PriorSpec& p) {
  switch (p.family()) {
    case Family::Normal:
      return {p, [sd = p.param(1)](std::mt19937_64& g) { return std::normal_distribution<double>(0, sd)(g); }};
    case Family::StudentT:
      return {p, [s = p.param(1), df = p.param(2)](std::mt19937_64& g) {
                return s * std::student_t_distribution<double>(df)(g);
              }};
    case Family::HalfNormal:
      return {p, [sd = p.param(0)](std::mt19937_64& g) {
                return std::abs(std::normal_distribution<double>(0, sd)(g));
              }};
    case Family::Gamma:
      return {p, [k = p.param(0), th = p.param(1)](std::mt19937_64& g) {
                return std::gamma_distribution<double>(k, th)(g);
              }};
    case Family::InvGamma:
      return {p, [k = p.param(0), th = p.param(1)](std::mt19937_64& g) {
                return 1.0 / std::gamma_distribution<double>(k, 1.0 / th)(g);
              }};
    default:
      throw std::logic_error("no sampler");
  }
}

double conjugate_log_evidence(const std::vector<double>& y, const std::vector<double>& se, double s0) {
  double w = 0.0, wy = 0.0, base = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = 1.0 / (se[i] * se[i]);
    w += p;
    wy += p * y[i];
    base += -0.5 * std::log(2 * std::numbers::pi * se[i] * se[i]) - 0.5 * y[i] * y[i] * p;
  }
  const double k = 1.0 + s0 * s0 * w;
  return base - 0.5 * std::log(k) + 0.5 * s0 * s0 * wy * wy / k;
}

bool criterion4(Checks& c) {
  const std::vector<std::pair<PriorSpec, PriorSpec>> pairs{
      {kAriMu, kAriTau},
      {PriorSpec::normal(0, 0.81), PriorSpec::gamma(1.99, 0.25)},
      {PriorSpec::student_t(0, 0.58, 4), PriorSpec::half_normal(0.5)},
      {PriorSpec::normal(0, 0.5), PriorSpec::inv_gamma(1.77, 0.55)},
  };
  constexpr std::size_t kDraws = 1'000'000;
  std::mt19937_64 rng(20240601);
  double worst = 0.0, worst_se = 0.0, worst_conj = 0.0;
  for (int d = 0; d < 20; ++d) {
    const auto& [pm, pt] = pairs[static_cast<std::size_t>(d) % pairs.size()];
    const auto smu = sampler(pm), stau = sampler(pt);
    const int k = 3 + d % 8;
    std::uniform_real_distribution<double> use(0.25, 0.8);
    // True effects in the range seen across real meta-analyses. Drawing them
    // from the priors instead occasionally gives tau ~ 30, where 1e6 prior
    // draws leave a Monte Carlo error of 0.1 and the oracle says nothing.
    const double mu = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const double tau = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    std::vector<double> y, se;
    for (int i = 0; i < k; ++i) {
      se.push_back(use(rng));
      y.push_back(std::normal_distribution<double>(mu, std::sqrt(se.back() * se.back() + tau * tau))(rng));
    }
    std::vector<EffectEstimate> est;
    for (int i = 0; i < k; ++i) est.push_back(validate_estimate(y[i], se[i], Measure::LogOR));
    const auto data = Dataset::from_estimates(Measure::LogOR, est);
    const auto space = build_space(Measure::LogOR, pm, pt, DataModel::NormalNormal);
    const auto ev = evidence(data, space);

    std::vector<double> l1f(kDraws), l0r(kDraws), l1r(kDraws);
    for (std::size_t s = 0; s < kDraws; ++s) {
      const double m = smu.draw(rng), t = stau.draw(rng);
      l1f[s] = nn_loglik(y, se, m, 0.0);
      l0r[s] = nn_loglik(y, se, 0.0, t);
      const double m2 = smu.draw(rng), t2 = stau.draw(rng);
      l1r[s] = nn_loglik(y, se, m2, t2);
    }
    const McEstimate mc[3] = {mc_log_marginal(l1f), mc_log_marginal(l0r), mc_log_marginal(l1r)};
    const double q[3] = {ev[1].log_marginal, ev[2].log_marginal, ev[3].log_marginal};
    std::string line = fmt("dataset %2d (k=%2d):", d, k);
    for (int h = 0; h < 3; ++h) {
      const double diff = std::abs(q[h] - mc[h].log_mean);
      line += fmt(" |d|=%.4f (mc se %.4f)", diff, mc[h].log_se);
      if (diff > worst) {
        worst = diff;
        worst_se = mc[h].log_se;
      }
    }
    std::printf("      %s\n", line.c_str());

    const auto nspace = build_space(Measure::LogOR, PriorSpec::normal(0, 0.81), pt, DataModel::NormalNormal);
    const double conj = evidence_for(DataLikelihood(data, nspace), nspace[HypothesisId::H1f]).log_marginal;
    worst_conj = std::max(worst_conj, std::abs(conj - conjugate_log_evidence(y, se, 0.81)));
  }
  c.check(worst < 0.01, fmt("max |quadrature - Monte Carlo| = %.5f < 0.01 (mc se there %.5f)", worst, worst_se));
  c.check(worst_conj < 1e-8, fmt("max |H1f - conjugate closed form| = %.3e < 1e-8", worst_conj));
  return c.passed();
}

// --- 5 ----------------------------------------------------------------------

// Midpoint sum over beta in [-B, B] (2000 cells) and gamma in mu +- 9 tau
// (2000 cells). Baseline density: logistic, renormalized to [-B, B].
double riemann_oracle(const ContingencyTable& t, double mu, double tau, double bound) {
  const double a = double(t.a), b = double(t.b), cc = double(t.c), d = double(t.d);
  const double lchoose = std::lgamma(a + b + 1) - std::lgamma(a + 1) - std::lgamma(b + 1) +
                         std::lgamma(cc + d + 1) - std::lgamma(cc + 1) - std::lgamma(d + 1);
  auto log_expit = [](double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); };
  const int nb = 2000, ng = tau > 0 ? 2000 : 1;
  const double hb = 2 * bound / nb;
  const double hg = tau > 0 ? 18 * tau / ng : 1.0;
  const double log_norm = std::log(std::tanh(bound / 2));
  std::vector<double> lprior(nb), beta(nb);
  for (int i = 0; i < nb; ++i) {
    beta[i] = -bound + (i + 0.5) * hb;
    lprior[i] = log_expit(beta[i]) + log_expit(-beta[i]) - log_norm;
  }
  // Shift by the value at the centre to keep exp() in range.
  double shift = -INFINITY;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(nb) * ng);
  for (int j = 0; j < ng; ++j) {
    const double g = tau > 0 ? mu - 9 * tau + (j + 0.5) * hg : mu;
    const double lwg =
        tau > 0 ? std::log(hg) - 0.5 * (g - mu) * (g - mu) / (tau * tau) - std::log(tau * std::sqrt(2 * std::numbers::pi))
                : 0.0;
    for (int i = 0; i < nb; ++i) {
      const double x1 = beta[i] + g / 2, x2 = beta[i] - g / 2;
      const double v = lwg + std::log(hb) + lprior[i] + a * log_expit(x1) + b * log_expit(-x1) +
                       cc * log_expit(x2) + d * log_expit(-x2);
      terms.push_back(v);
      shift = std::max(shift, v);
    }
  }
  double s = 0.0;
  for (double v : terms) s += std::exp(v - shift);
  return lchoose + shift + std::log(s);
}

bool criterion5(Checks& c) {
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> arm(1, 50);
  std::vector<ContingencyTable> tables;
  for (int i = 0; i < 20; ++i) {
    const int n1 = arm(rng), n2 = arm(rng);
    int a = std::uniform_int_distribution<int>(0, n1)(rng), cc = std::uniform_int_distribution<int>(0, n2)(rng);
    switch (i) {
      case 0: a = 0; break;
      case 1: cc = 0; break;
      case 2: a = 0, cc = 0; break;
      case 3: a = n1; break;
      case 4: a = n1, cc = 0; break;
      default: break;
    }
    tables.push_back({a, n1 - a, cc, n2 - cc});
  }
  const double mus[] = {-1.0, 0.5, 2.0}, taus[] = {0.0, 0.3, 1.2};
  double worst_fast = 0.0, worst_direct = 0.0;
  for (const auto& t : tables) {
    const BinomialStudyLikelihood fast(t, 10.0);
    double wf = 0.0, wd = 0.0;
    for (double m : mus)
      for (double s : taus) {
        const double ref = riemann_oracle(t, m, s, 10.0);
        wf = std::max(wf, std::abs(fast.log_lik(m, s) - ref));
        wd = std::max(wd, std::abs(loglik_binomial_normal_study(t, m, s, 10.0) - ref));
      }
    std::printf("      table (%2lld,%2lld,%2lld,%2lld): tabulated %.2e, direct %.2e\n", static_cast<long long>(t.a),
                static_cast<long long>(t.b), static_cast<long long>(t.c), static_cast<long long>(t.d), wf, wd);
    worst_fast = std::max(worst_fast, wf);
    worst_direct = std::max(worst_direct, wd);
  }
  c.check(worst_fast < 1e-4, fmt("tabulated route: max |log lik - oracle| = %.3e < 1e-4", worst_fast));
  c.check(worst_direct < 1e-4, fmt("direct route: max |log lik - oracle| = %.3e < 1e-4", worst_direct));
  return c.passed();
}

// --- 6 ----------------------------------------------------------------------

bool criterion6(Checks& c) {
  const auto r10 = honey_result(OutputScale::Log, 10.0), r20 = honey_result(OutputScale::Log, 20.0);
  const double d10 = std::abs(r20.bf_effect.value / r10.bf_effect.value - 1);
  const double drf = std::abs(r20.bf_heterogeneity.value / r10.bf_heterogeneity.value - 1);
  c.check(d10 < 1e-3, fmt("BF10 %.6f -> %.6f, relative change %.2e < 1e-3", r10.bf_effect.value, r20.bf_effect.value, d10));
  c.check(drf < 1e-3, fmt("BFrf %.6f -> %.6f, relative change %.2e < 1e-3", r10.bf_heterogeneity.value,
                          r20.bf_heterogeneity.value, drf));
  return c.passed();
}

// --- 7 ----------------------------------------------------------------------

bool criterion7(Checks& c) {
  const auto none = ZeroCellPolicy::none(), half = ZeroCellPolicy::constant_add(0.5);
  auto near = [](double x, double t) { return std::abs(x - t) <= 1e-4; };
  auto e = log_odds_ratio({10, 5, 4, 20}, none);
  c.check(near(e.y, std::log(10.0 * 20 / (5 * 4))) && near(e.se, std::sqrt(0.1 + 0.2 + 0.25 + 0.05)),
          fmt("log OR (10,5,4,20): y %.4f se %.4f", e.y, e.se));
  e = log_odds_ratio({10, 10, 10, 10}, none);
  c.check(e.y == 0.0 && near(e.se, std::sqrt(0.4)), fmt("log OR (10,10,10,10): y %.4f se %.4f", e.y, e.se));
  e = log_odds_ratio({5, 30, 0, 39}, half);
  c.check(near(e.y, std::log((5.5 / 30.5) / (0.5 / 39.5))), fmt("log OR (5,30,0,39)+0.5: y %.4f", e.y));
  e = log_risk_ratio({10, 10, 5, 15}, none);
  c.check(near(e.y, std::log(2.0)) && near(e.se, std::sqrt(0.1 - 0.05 + 0.2 - 0.05)),
          fmt("log RR (10,10,5,15): y %.4f se %.4f", e.y, e.se));
  e = log_risk_ratio({2, 38, 0, 40}, half);
  c.check(std::isfinite(e.y) && near(e.y, std::log((2.5 / 41) / (0.5 / 41))), fmt("log RR (2,38,0,40)+0.5: y %.4f", e.y));
  e = risk_difference({10, 10, 5, 15});
  c.check(near(e.y, 0.25) && near(e.se, std::sqrt(100.0 / 8000 + 75.0 / 8000)),
          fmt("RD (10,10,5,15): y %.4f se %.4f", e.y, e.se));
  bool threw = false;
  try {
    risk_difference({0, 20, 0, 20});
  } catch (const DegenerateVarianceError&) {
    threw = true;
  }
  c.check(threw, "RD (0,20,0,20) raises DegenerateVarianceError");

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> cnt(1, 60);
  bool swap_ok = true, sym_ok = true, cont_ok = true;
  const auto tiny = ZeroCellPolicy::constant_add(1e-8);
  for (int i = 0; i < 1000; ++i) {
    const ContingencyTable t{cnt(rng), cnt(rng), cnt(rng), cnt(rng)};
    const auto s = t.swapped();
    swap_ok &= log_odds_ratio(s, none).y == -log_odds_ratio(t, none).y &&
               log_odds_ratio(s, none).se == log_odds_ratio(t, none).se &&
               log_risk_ratio(s, none).y == -log_risk_ratio(t, none).y &&
               risk_difference(s).y == -risk_difference(t).y && risk_difference(s).se == risk_difference(t).se;
    const ContingencyTable sym{t.a, t.b, t.a, t.b};
    sym_ok &= log_odds_ratio(sym, none).y == 0.0 && log_risk_ratio(sym, none).y == 0.0 && risk_difference(sym).y == 0.0;
    cont_ok &= std::abs(log_odds_ratio(t, tiny).y - log_odds_ratio(t, none).y) < 1e-6 &&
               std::abs(log_odds_ratio(t, tiny).se - log_odds_ratio(t, none).se) < 1e-6 &&
               std::abs(log_risk_ratio(t, tiny).y - log_risk_ratio(t, none).y) < 1e-6 &&
               std::abs(log_risk_ratio(t, tiny).se - log_risk_ratio(t, none).se) < 1e-6;
  }
  c.check(swap_ok, "group swap negates log OR, log RR and RD exactly (1000 tables)");
  c.check(sym_ok, "tables with equal arms give exactly 0 (1000 tables)");
  c.check(cont_ok, "add=1e-8 agrees with the uncorrected estimate to 1e-6 (1000 tables)");
  return c.passed();
}

// --- 8 ----------------------------------------------------------------------

bool criterion8(Checks& c) {
  std::size_t rows = 0, parse_fail = 0, invalid = 0;
  for (auto m : {Measure::LogOR, Measure::LogRR, Measure::RD, Measure::LogHR})
    for (const auto& r : list_topics(m)) {
      ++rows;
      auto one = [&](const std::string& text, const PriorSpec& stored, bool tau) {
        try {
          const auto p = parse_prior(text);
          if (to_string(p) != text || !(p == stored) || to_string(stored) != text) ++parse_fail;
        } catch (const Error&) {
          ++parse_fail;
        }
        if (auto why = stored.invalid_reason()) {
          ++invalid;
          std::printf("      %s / %s: %s prior %s violates invariants (%s)\n", std::string(to_string(m)).c_str(),
                      r.topic.c_str(), tau ? "tau" : "mu", text.c_str(), why->c_str());
        }
      };
      one(r.prior_mu_text, r.prior_mu, false);
      if (r.prior_tau) one(*r.prior_tau_text, *r.prior_tau, true);
    }
  std::size_t cand = 0, cand_bad = 0;
  for (auto m : {Measure::LogOR, Measure::LogRR, Measure::RD, Measure::LogHR}) {
    const auto set = candidate_priors(m);
    for (const auto* list : {&set.mu, &set.tau})
      for (const auto& p : *list) {
        ++cand;
        const auto text = to_string(p.spec);
        if (!p.spec.is_valid() || !(parse_prior(text) == p.spec)) ++cand_bad;
      }
  }
  c.check(parse_fail == 0, fmt("%zu registry rows: every prior parses and round-trips through text (%zu failures)",
                               rows, parse_fail));
  c.check(invalid == 0, fmt("every registry prior satisfies its family invariants (%zu violations)", invalid));
  c.check(cand_bad == 0, fmt("%zu candidate priors valid and round-trip (%zu failures)", cand, cand_bad));

  struct Verbatim {
    Measure m;
    const char* topic;
    const char* mu;
    const char* tau;
  };
  const Verbatim expected[] = {
      {Measure::LogOR, "Acute Respiratory Infections", "Student-t(0, 0.48, 3)", "Inv-Gamma(1.67, 0.45)"},
      {Measure::LogOR, "Pooled", "Student-t(0, 0.58, 4)", "Inv-Gamma(1.77, 0.55)"},
      {Measure::LogRR, "Acute Respiratory Infections", "Student-t(0, 0.27, 3)", "Inv-Gamma(1.58, 0.25)"},
      {Measure::LogRR, "Pooled", "Student-t(0, 0.32, 3)", "Inv-Gamma(1.51, 0.23)"},
      {Measure::RD, "Acute Respiratory Infections", "Student-t(0, 0.01, 1)", "Normal+(0, 0.10)"},
      {Measure::RD, "Pooled", "Student-t(0, 0.03, 1)", "Normal+(0, 0.10)"},
      {Measure::LogHR, "Pooled", "Student-t(0, 0.13, 2)", "Inv-Gamma(2.42, 0.30)"},
  };
  for (const auto& v : expected) {
    const auto& r = lookup(v.m, v.topic);
    const bool ok = r.prior_mu_text == v.mu && r.prior_tau_text && *r.prior_tau_text == v.tau;
    c.check(ok, fmt("%s / %s: %s, %s", std::string(to_string(v.m)).c_str(), v.topic, r.prior_mu_text.c_str(),
                    r.prior_tau_text.value_or("-").c_str()));
  }
  return c.passed();
}

// --- 9 ----------------------------------------------------------------------

bool criterion9(Checks& c) {
  FitInput eff;
  eff.values = sample(PriorSpec::normal(0, 0.7), 1000, 91);
  double ss = 0.0;
  for (double v : eff.values) ss += v * v;
  const auto n = fit_family(eff, Family::Normal);
  const double closed = std::sqrt(ss / static_cast<double>(eff.values.size()));
  c.check(std::abs(n.spec.param(1) - closed) <= 1e-12,
          fmt("Normal sd %.15f vs sqrt(mean x^2) %.15f", n.spec.param(1), closed));

  const auto g = fit_family(filter_tau_estimates(sample(PriorSpec::gamma(1.99, 0.25), 100000, 92)), Family::Gamma);
  c.check(g.converged && within_rel(g.spec.param(0), 1.99, 0.05) && within_rel(g.spec.param(1), 0.25, 0.05),
          fmt("Gamma(1.99, 0.25) recovered as %s", to_string(g.spec).c_str()));

  FitInput t;
  t.values = sample(PriorSpec::student_t(0, 0.45, 2.38), 100000, 93);
  const auto st = fit_family(t, Family::StudentT);
  c.check(st.converged && within_rel(st.spec.param(1), 0.45, 0.05) && within_rel(st.spec.param(2), 2.38, 0.15),
          fmt("Student-t(0, 0.45, 2.38) recovered as scale %.4f df %.4f", st.spec.param(1), st.spec.param(2)));
  return c.passed();
}

// --- 10 ---------------------------------------------------------------------

bool criterion10(Checks& c) {
  const auto gen_mu = PriorSpec::normal(0, 0.81), wrong_mu = PriorSpec::normal(0, 5);
  const auto gen_tau = PriorSpec::inv_gamma(1.67, 0.45);
  std::mt19937_64 rng(1010);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> use(0.1, 0.5);
  std::vector<Dataset> corpus;
  for (int d = 0; d < 200; ++d) {
    const double mu = 0.81 * z(rng);
    const double tau = 1.0 / std::gamma_distribution<double>(1.67, 1.0 / 0.45)(rng);
    const int k = 3 + d % 8;
    std::vector<EffectEstimate> est;
    for (int i = 0; i < k; ++i) {
      const double se = use(rng);
      est.push_back(validate_estimate(mu + tau * z(rng) + se * z(rng), se, Measure::LogOR));
    }
    corpus.push_back(Dataset::from_estimates(Measure::LogOR, est));
  }
  const auto rep = rank_priors_over_corpus(corpus, {gen_mu, wrong_mu}, {gen_tau});
  c.check(rep.n_used == 200, fmt("%zu of 200 datasets evaluated", rep.n_used));
  const double p_gen = rep.mu[0].average_posterior_prob, p_wrong = rep.mu[1].average_posterior_prob;
  c.check(p_gen > p_wrong, fmt("average posterior probability: Normal(0, 0.81) %.4f vs Normal(0, 5) %.4f", p_gen, p_wrong));
  std::printf("      rank-1 counts: Normal(0, 0.81) %zu, Normal(0, 5) %zu\n", rep.mu[0].rank_counts[0],
              rep.mu[1].rank_counts[0]);
  return c.passed();
}

// --- 11 ---------------------------------------------------------------------

bool criterion11(Checks& c) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "bmameta_acceptance_11";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = std::string(BMAMETA_TEST_DATA) + "/honey.csv";
  std::string bytes[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = (dir / ("run" + std::to_string(i) + ".json")).string();
    const char* argv[] = {"bma-meta", "analyze", "--measure", "logOR", "--data", data.c_str(), "--prior-topic",
                          "Acute Respiratory Infections", "--output-scale", "ratio", "--json", out.c_str(), "--quiet"};
    std::ostringstream o, e;
    const int code = run_cli(static_cast<int>(std::size(argv)), argv, o, e);
    c.check(code == 0, fmt("run %d exit code %d", i + 1, code));
    bytes[i] = read_file(out);
  }
  c.check(!bytes[0].empty() && bytes[0] == bytes[1], fmt("JSON outputs byte-identical (%zu bytes)", bytes[0].size()));
  return c.passed();
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<bool(Checks&)>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},   {5, criterion5},   {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}, {11, criterion11},
  };
  std::optional<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }
  if (only && !criteria.count(*only)) {
    std::fprintf(stderr, "no criterion %d\n", *only);
    return 2;
  }
  bool all = true;
  for (const auto& [n, fn] : criteria) {
    if (only && *only != n) continue;
    Checks c;
    bool ok = false;
    try {
      ok = fn(c);
    } catch (const std::exception& e) {
      std::printf("    error: %s\n", e.what());
    }
    std::printf("criterion %d: %s\n", n, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    all &= ok;
  }
  return all ? 0 : 1;
}
