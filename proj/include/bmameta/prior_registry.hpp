#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmameta/distributions.hpp"
#include "bmameta/effect_sizes.hpp"

namespace bmameta {

struct RegistryEntry {
  Measure measure = Measure::LogOR;
  std::string topic;
  PriorSpec prior_mu;
  std::optional<PriorSpec> prior_tau;
  // Verbatim table text; to_string(prior_mu) == prior_mu_text for every row.
  std::string prior_mu_text;
  std::optional<std::string> prior_tau_text;
  std::uint32_t n_comparisons_mu = 0;
  std::uint32_t n_estimates_mu = 0;
  std::optional<std::uint32_t> n_comparisons_tau;
  std::optional<std::uint32_t> n_estimates_tau;

  bool is_pooled() const { return topic == "Pooled"; }
  // Throws InvalidPriorError if a stored prior is outside its family's
  // parameter space (a few RD rows print a zero scale or zero df), and
  // MissingTauPriorError if need_tau and the row has no tau prior.
  void require_usable(bool need_tau) const;
};

// Case-insensitive and whitespace-normalized exact match; "Pooled Estimate"
// is accepted for "Pooled". Throws UnknownTopicError listing the nearest
// topics, or MissingTauPriorError when need_tau and the row has none.
const RegistryEntry& lookup(Measure measure, std::string_view topic, bool need_tau = false);

// Rows for one measure in table order, the pooled row last.
std::vector<RegistryEntry> list_topics(Measure measure);

struct CandidatePrior {
  PriorSpec spec;
  // The log OR pair carried over from the continuous-outcome (Cohen's d)
  // priors rather than fitted on binary outcomes.
  bool transformed = false;
};

struct CandidateSet {
  std::vector<CandidatePrior> mu;
  std::vector<CandidatePrior> tau;
};

CandidateSet candidate_priors(Measure measure);

// JSON export of the registry rows (all measures when `measure` is empty).
std::string registry_json(std::optional<Measure> measure = std::nullopt);

// FNV-1a over the embedded table text.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace bmameta
