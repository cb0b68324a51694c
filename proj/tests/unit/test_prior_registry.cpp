#include <set>

#include "bmameta/errors.hpp"
#include "bmameta/prior_registry.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bmameta;

TEST_SUITE("prior_registry") {
  TEST_CASE("lookup of published rows") {
    const auto& ari = lookup(Measure::LogOR, "Acute Respiratory Infections");
    CHECK(ari.prior_mu == PriorSpec::student_t(0, 0.48, 3));
    CHECK(*ari.prior_tau == PriorSpec::inv_gamma(1.67, 0.45));
    CHECK(ari.n_comparisons_mu == 308);
    CHECK(ari.n_estimates_mu == 5860);
    CHECK(*ari.n_comparisons_tau == 197);
    CHECK(*ari.n_estimates_tau == 4061);

    const auto& pooled = lookup(Measure::LogOR, "Pooled");
    CHECK(pooled.prior_mu_text == "Student-t(0, 0.58, 4)");
    CHECK(*pooled.prior_tau_text == "Inv-Gamma(1.77, 0.55)");
    CHECK(&lookup(Measure::LogOR, "pooled estimate") == &pooled);

    const auto& hr = lookup(Measure::LogHR, "Pooled");
    CHECK(hr.prior_mu == PriorSpec::student_t(0, 0.13, 2));
    CHECK(*hr.prior_tau == PriorSpec::inv_gamma(2.42, 0.30));

    CHECK(lookup(Measure::RD, "Pooled").prior_tau_text == "Normal+(0, 0.10)");
    CHECK(lookup(Measure::LogRR, "Pooled").prior_mu_text == "Student-t(0, 0.32, 3)");
  }

  TEST_CASE("topic matching is case and whitespace insensitive") {
    const auto& a = lookup(Measure::LogOR, "  acute   respiratory INFECTIONS ");
    CHECK(a.topic == "Acute Respiratory Infections");
    CHECK(lookup(Measure::LogOR, "airways").topic == "Airways");
  }

  TEST_CASE("unknown topics list near matches") {
    try {
      lookup(Measure::LogOR, "Acute Respiratory Infection");
      FAIL("expected UnknownTopicError");
    } catch (const UnknownTopicError& e) {
      CHECK(std::string(e.what()).find("Acute Respiratory Infections") != std::string::npos);
    }
    CHECK_THROWS_AS(lookup(Measure::LogHR, "Airways"), UnknownTopicError);
  }

  TEST_CASE("missing tau priors") {
    const auto& cc = lookup(Measure::RD, "Childhood Cancer");
    CHECK_FALSE(cc.prior_tau.has_value());
    CHECK_THROWS_AS(lookup(Measure::RD, "Childhood Cancer", true), MissingTauPriorError);
    CHECK_THROWS_AS(cc.require_usable(true), MissingTauPriorError);
    CHECK_NOTHROW(cc.require_usable(false));
  }

  TEST_CASE("row counts and order") {
    for (auto m : {Measure::LogOR, Measure::LogRR, Measure::RD}) {
      const auto rows = list_topics(m);
      CHECK(rows.size() == 54);  // 53 topics and the pooled row
      CHECK(rows.front().topic == "Acute Respiratory Infections");
      CHECK(rows.back().is_pooled());
      std::set<std::string> topics;
      for (const auto& r : rows) topics.insert(r.topic);
      CHECK(topics.size() == rows.size());
    }
    const auto hr = list_topics(Measure::LogHR);
    REQUIRE(hr.size() == 1);
    CHECK(hr[0].is_pooled());
  }

  TEST_CASE("verbatim topic strings") {
    CHECK_NOTHROW(lookup(Measure::LogOR, "Heart; Vascular"));
    CHECK_NOTHROW(lookup(Measure::LogOR, "Multiple Sclerosis and Rare Diseases of the CNS"));
  }

  TEST_CASE("every row parses, round-trips and is centred") {
    std::size_t unusable = 0;
    for (auto m : {Measure::LogOR, Measure::LogRR, Measure::RD, Measure::LogHR})
      for (const auto& r : list_topics(m)) {
        INFO(to_string(m) << " / " << r.topic);
        CHECK(to_string(r.prior_mu) == r.prior_mu_text);
        CHECK(to_string(parse_prior(r.prior_mu_text)) == r.prior_mu_text);
        CHECK(r.prior_mu.location() == 0.0);
        if (r.prior_tau) {
          CHECK(to_string(*r.prior_tau) == *r.prior_tau_text);
          CHECK(r.prior_tau->positive_support());
          CHECK(r.prior_tau->is_valid());
        }
        if (!r.prior_mu.is_valid()) {
          ++unusable;
          CHECK(m == Measure::RD);
          CHECK_THROWS_AS(r.require_usable(false), InvalidPriorError);
        }
      }
    // Three RD rows print a zero scale or zero df.
    CHECK(unusable == 3);
  }

  TEST_CASE("candidate priors") {
    const auto lor = candidate_priors(Measure::LogOR);
    REQUIRE(lor.mu.size() == 3);
    REQUIRE(lor.tau.size() == 4);
    CHECK(lor.mu[0].spec == PriorSpec::student_t(0, 0.78, 5));
    CHECK(lor.mu[0].transformed);
    CHECK(lor.tau[0].spec == PriorSpec::inv_gamma(1.71, 0.73));
    CHECK(lor.tau[0].transformed);
    CHECK(lor.mu[1].spec == PriorSpec::normal(0, 0.81));
    CHECK(lor.tau[3].spec == PriorSpec::gamma(1.99, 0.25));

    const auto hr = candidate_priors(Measure::LogHR);
    CHECK(hr.mu.size() == 2);
    CHECK(hr.mu[1].spec == PriorSpec::student_t(0, 0.21, 2.57));
    CHECK(hr.tau.size() == 3);
    CHECK(hr.tau[0].spec == PriorSpec::half_normal(0.26));

    const auto rd = candidate_priors(Measure::RD);
    CHECK(rd.mu[1].spec == PriorSpec::student_t(0, 0.02, 0.85));
    for (auto m : {Measure::LogOR, Measure::LogRR, Measure::RD, Measure::LogHR}) {
      for (const auto& c : candidate_priors(m).mu) CHECK(c.spec.is_valid());
      for (const auto& c : candidate_priors(m).tau) CHECK(c.spec.positive_support());
    }
  }

  TEST_CASE("json export") {
    const auto j = nlohmann::json::parse(registry_json(Measure::LogOR));
    CHECK(j.size() == 54);
    CHECK(j[0]["prior_mu"] == "Student-t(0, 0.48, 3)");
    CHECK(j[0]["prior_tau"] == "Inv-Gamma(1.67, 0.45)");
    const auto all = nlohmann::json::parse(registry_json());
    CHECK(all.size() == 54 * 3 + 1);
    CHECK(registry_json() == registry_json());
  }

  TEST_CASE("checksum") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  }
}
