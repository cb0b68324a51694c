#include <cmath>

#include "bmameta/bma.hpp"
#include "bmameta/errors.hpp"
#include "doctest.h"

using namespace bmameta;

namespace {

std::vector<ModelEvidence> logm(std::array<double, 4> v) {
  std::vector<ModelEvidence> out;
  for (auto id : kHypotheses) {
    ModelEvidence e;
    e.hypothesis_id = id;
    e.log_marginal = v[index(id)];
    out.push_back(e);
  }
  return out;
}

Dataset sample_data() {
  std::vector<EffectEstimate> e;
  const double y[] = {0.35, 0.1, 0.62, -0.05, 0.4};
  const double se[] = {0.2, 0.25, 0.3, 0.22, 0.18};
  for (int i = 0; i < 5; ++i) e.push_back(validate_estimate(y[i], se[i], Measure::LogOR));
  return Dataset::from_estimates(Measure::LogOR, e);
}

ModelSpace sample_space(Measure m = Measure::LogOR) {
  return build_space(m, PriorSpec::student_t(0, 0.48, 3), PriorSpec::inv_gamma(1.67, 0.45),
                     DataModel::NormalNormal);
}

constexpr ProbVector kEqual{0.25, 0.25, 0.25, 0.25};

}  // namespace

TEST_SUITE("bma") {
  TEST_CASE("posterior model probabilities") {
    auto p = posterior_model_probs(logm({0, 0, 0, 0}), kEqual);
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    p = posterior_model_probs(logm({0, 0, 0, std::log(3.0)}), kEqual);
    CHECK(p[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
    CHECK(p[3] == doctest::Approx(0.5).epsilon(1e-14));
    // Large log marginals do not overflow.
    p = posterior_model_probs(logm({-1e4, -1e4 + 1, -1e4, -1e4}), kEqual);
    CHECK(p[0] + p[1] + p[2] + p[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[1] > p[0]);
  }

  TEST_CASE("inclusion Bayes factors") {
    CHECK(inclusion_bf_effect({0.1, 0.4, 0.1, 0.4}, kEqual).value == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(inclusion_bf_effect(kEqual, kEqual).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(inclusion_bf_heterogeneity(kEqual, kEqual).value == doctest::Approx(1.0).epsilon(1e-15));
    auto capped = inclusion_bf_heterogeneity({0, 0, 0.5, 0.5}, kEqual);
    CHECK(capped.capped);
    CHECK(capped.value == doctest::Approx(std::exp(700.0)));
    auto low = inclusion_bf_effect({0.5, 0, 0.5, 0}, kEqual);
    CHECK(low.capped);
    CHECK(low.value == doctest::Approx(std::exp(-700.0)));
    CHECK_THROWS_AS(inclusion_bf_effect(kEqual, {0.5, 0, 0.5, 0}), DegenerateOddsError);
    CHECK_THROWS_AS(inclusion_bf_heterogeneity(kEqual, {0.5, 0.5, 0, 0}), DegenerateOddsError);
  }

  TEST_CASE("Bayes factors are invariant to a common shift of the log marginals") {
    auto a = posterior_model_probs(logm({-3.1, -2.4, -2.9, -2.2}), kEqual);
    auto b = posterior_model_probs(logm({96.9, 97.6, 97.1, 97.8}), kEqual);
    CHECK(inclusion_bf_effect(a, kEqual).value ==
          doctest::Approx(inclusion_bf_effect(b, kEqual).value).epsilon(1e-12));
    CHECK(inclusion_bf_heterogeneity(a, kEqual).value ==
          doctest::Approx(inclusion_bf_heterogeneity(b, kEqual).value).epsilon(1e-12));
    // Unit prior odds: BF equals posterior odds.
    CHECK(inclusion_bf_effect(a, kEqual).value == doctest::Approx((a[1] + a[3]) / (a[0] + a[2])).epsilon(1e-14));
  }

  TEST_CASE("unequal prior probabilities") {
    const ProbVector prior{0.1, 0.2, 0.3, 0.4};
    auto p = posterior_model_probs(logm({0, 0, 0, 0}), prior);
    for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(prior[i]).epsilon(1e-14));
    CHECK(inclusion_bf_effect(p, prior).value == doctest::Approx(1.0).epsilon(1e-13));
  }

  TEST_CASE("full analysis invariants") {
    auto r = run_bma(sample_data(), sample_space());
    double s = 0;
    for (double v : r.posterior_model_probs) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.bf_effect.value > 0);
    CHECK(r.bf_heterogeneity.value > 0);
    for (const auto* st : {&r.averaged_mu, &r.averaged_tau, &r.conditional_mu, &r.conditional_tau}) {
      CHECK(st->ci_lower <= st->median);
      CHECK(st->median <= st->ci_upper);
    }
    CHECK(r.mu_conditional.density_grid().trapezoid_mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.tau_conditional.density_grid().trapezoid_mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.mu_averaged.density_grid().trapezoid_mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.mu_averaged.atom_weight() ==
          doctest::Approx(r.posterior_model_probs[0] + r.posterior_model_probs[2]).epsilon(1e-12));
    CHECK(r.tau_averaged.atom_weight() ==
          doctest::Approx(r.posterior_model_probs[0] + r.posterior_model_probs[1]).epsilon(1e-12));
    CHECK(r.mu_averaged.cdf(1e9) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.tau_averaged.cdf(-1e-12) == doctest::Approx(0.0));
    CHECK(r.tau_averaged.cdf(0.0) >= r.tau_averaged.atom_weight() - 1e-12);
  }

  TEST_CASE("degenerate mixtures reproduce the single grid") {
    auto s = sample_space();
    auto ev = evidence(sample_data(), s);
    auto mu = averaged_posterior_mu(ev, {0, 1, 0, 0});
    const auto& g = *ev[1].mu_grid;
    const auto dg = mu.conditional.density_grid();
    REQUIRE(dg.axis.size() == g.axis.size());
    for (std::size_t i = 0; i < g.axis.size(); ++i) {
      CHECK(dg.axis[i] == g.axis[i]);
      CHECK(dg.normalized_density[i] == doctest::Approx(g.normalized_density[i]).epsilon(1e-12));
    }
    CHECK(mu.conditional_stats.median == doctest::Approx(g.quantile(0.5)).epsilon(1e-10));
    CHECK(mu.model_averaged.atom_weight() == 0.0);

    auto tau = averaged_posterior_tau(ev, {0, 0, 0, 1});
    CHECK(tau.conditional_stats.median == doctest::Approx(ev[3].tau_grid->quantile(0.5)).epsilon(1e-10));
    CHECK(tau.conditional_stats.mean == doctest::Approx(ev[3].tau_grid->mean()).epsilon(1e-10));

    CHECK_THROWS_AS(averaged_posterior_mu(ev, {0.5, 0, 0.5, 0}), DegenerateOddsError);
    std::vector<ModelEvidence> nogrid = logm({0, 0, 0, 0});
    CHECK_THROWS_AS(averaged_posterior_mu(nogrid, kEqual), ParameterFixedError);
    CHECK_THROWS_AS(averaged_posterior_tau(nogrid, kEqual), ParameterFixedError);
  }

  TEST_CASE("atom convention for the model-averaged median and interval") {
    auto ev = evidence(sample_data(), sample_space());
    auto tau = averaged_posterior_tau(ev, {0.4, 0.3, 0.2, 0.1});
    // 70% of the mass sits at tau = 0.
    CHECK(tau.averaged_stats.median == 0.0);
    CHECK(tau.averaged_stats.ci_lower == 0.0);
    CHECK(tau.averaged_stats.mean ==
          doctest::Approx(0.3 * tau.conditional_stats.mean).epsilon(1e-10));
  }

  TEST_CASE("ratio scale") {
    auto r = run_bma(sample_data(), sample_space(), {}, 0.95, OutputScale::Ratio);
    auto l = run_bma(sample_data(), sample_space(), {}, 0.95, OutputScale::Log);
    CHECK(r.conditional_mu.median == doctest::Approx(std::exp(l.conditional_mu.median)).epsilon(1e-10));
    CHECK(r.conditional_mu.ci_lower == doctest::Approx(std::exp(l.conditional_mu.ci_lower)).epsilon(1e-10));
    CHECK(r.conditional_mu.ci_upper == doctest::Approx(std::exp(l.conditional_mu.ci_upper)).epsilon(1e-10));
    CHECK(r.averaged_mu.median == doctest::Approx(std::exp(l.averaged_mu.median)).epsilon(1e-10));
    CHECK(r.conditional_mu.mean ==
          doctest::Approx(l.mu_conditional.expect([](double x) { return std::exp(x); })).epsilon(1e-12));
    // tau stays on the log scale.
    CHECK(r.conditional_tau.mean == l.conditional_tau.mean);
    CHECK(r.conditional_tau.median == l.conditional_tau.median);

    // Null atom contributes exp(0) = 1 to the averaged mean.
    const double w0 = l.mu_averaged.atom_weight();
    const double cont = l.mu_conditional.expect([](double x) { return std::exp(x); });
    CHECK(r.averaged_mu.mean == doctest::Approx(w0 + (1 - w0) * cont).epsilon(1e-10));

    SummaryStats zero;
    MixtureDistribution atom({}, 1.0);
    auto z = to_ratio_scale(zero, atom, Measure::LogOR);
    CHECK(z.median == 1.0);
    CHECK(z.mean == doctest::Approx(1.0));
    CHECK_THROWS_AS(to_ratio_scale(zero, atom, Measure::RD), ScaleError);
    auto ev = evidence(sample_data(), sample_space());
    CHECK_THROWS_AS(to_ratio_scale(*ev[1].mu_grid, Measure::RD), ScaleError);
    auto rg = to_ratio_scale(*ev[1].mu_grid, Measure::LogOR);
    CHECK(rg.trapezoid_mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rg.quantile(0.5) == doctest::Approx(std::exp(ev[1].mu_grid->quantile(0.5))).epsilon(1e-6));
  }

  TEST_CASE("output scale parsing") {
    CHECK(parse_output_scale("log") == OutputScale::Log);
    CHECK(parse_output_scale("ratio") == OutputScale::Ratio);
    CHECK_THROWS(parse_output_scale("odds"));
  }

  TEST_CASE("ranking with one candidate per parameter") {
    std::vector<Dataset> corpus{sample_data(), sample_data()};
    auto rep = rank_priors_over_corpus(corpus, {PriorSpec::normal(0, 0.81)}, {PriorSpec::inv_gamma(1.5, 0.4)});
    CHECK(rep.n_used == 2);
    CHECK(rep.mu[0].rank_counts[0] == 2);
    CHECK(rep.mu[0].average_posterior_prob == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rep.tau[0].average_posterior_prob == doctest::Approx(1.0).epsilon(1e-14));
    double s = 0;
    for (const auto& t : rep.model_types) s += t.average_posterior_prob;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("ranking with duplicate candidates ties by input order") {
    std::vector<Dataset> corpus{sample_data()};
    const auto n = PriorSpec::normal(0, 0.81);
    auto rep = rank_priors_over_corpus(corpus, {n, n}, {PriorSpec::inv_gamma(1.5, 0.4)});
    CHECK(std::abs(rep.mu[0].average_posterior_prob - rep.mu[1].average_posterior_prob) < 1e-10);
    CHECK(rep.mu[0].rank_counts[0] == 1);
    CHECK(rep.mu[1].rank_counts[1] == 1);
  }

  TEST_CASE("ranking preconditions") {
    CHECK_THROWS_AS(rank_priors_over_corpus({}, {PriorSpec::normal(0, 1)}, {PriorSpec::half_normal(1)}),
                    InsufficientDataError);
    CHECK_THROWS_AS(rank_priors_over_corpus({sample_data()}, {}, {PriorSpec::half_normal(1)}),
                    InvalidPriorError);
  }
}
