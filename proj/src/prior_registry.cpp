#include "bmameta/prior_registry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "bmameta/errors.hpp"
#include "json.hpp"

namespace bmameta {

namespace {

#include "registry_tables.inc"

std::string normalize_topic(std::string_view s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::optional<std::uint32_t> parse_count(std::string_view s) {
  if (s == "-") return std::nullopt;
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw RegistryIntegrityError("bad count field '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = line.find(sep);
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return out;
}

std::vector<RegistryEntry> load_table() {
  if (fnv1a64(kRegistryTable) != kRegistryChecksum)
    throw RegistryIntegrityError("embedded prior table does not match its checksum");
  std::vector<RegistryEntry> rows;
  std::string_view text = kRegistryTable;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const auto line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    if (line.empty()) continue;
    const auto f = split(line, '|');
    if (f.size() != 8) throw RegistryIntegrityError("malformed registry row: " + std::string(line));
    RegistryEntry e;
    e.measure = parse_measure(f[0]);
    e.topic = std::string(f[1]);
    e.n_comparisons_mu = parse_count(f[2]).value_or(0);
    e.n_estimates_mu = parse_count(f[3]).value_or(0);
    e.n_comparisons_tau = parse_count(f[4]);
    e.n_estimates_tau = parse_count(f[5]);
    e.prior_mu_text = std::string(f[6]);
    e.prior_mu = parse_prior(f[6]);
    if (f[7] != "-") {
      e.prior_tau_text = std::string(f[7]);
      e.prior_tau = parse_prior(f[7]);
    }
    rows.push_back(std::move(e));
  }
  return rows;
}

const std::vector<RegistryEntry>& table() {
  static const std::vector<RegistryEntry> rows = load_table();
  return rows;
}

CandidatePrior cand(const char* text, bool transformed = false) {
  return {parse_prior(text), transformed};
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RegistryEntry::require_usable(bool need_tau) const {
  const auto where = std::string(to_string(measure)) + " / " + topic;
  if (auto why = prior_mu.invalid_reason()) {
    throw InvalidPriorError("registry prior for mu (" + where + ") is printed as " +
                            prior_mu_text + ", which is not a usable distribution: " + *why +
                            ". Use the pooled prior or pass --prior-mu explicitly");
  }
  if (!prior_tau) {
    if (need_tau)
      throw MissingTauPriorError("no heterogeneity prior is tabulated for " + where +
                                 "; use the pooled prior or pass --prior-tau explicitly");
    return;
  }
  if (auto why = prior_tau->invalid_reason())
    throw InvalidPriorError("registry prior for tau (" + where + ") is not usable: " + *why);
}

const RegistryEntry& lookup(Measure measure, std::string_view topic, bool need_tau) {
  auto key = normalize_topic(topic);
  if (key == "pooled estimate") key = "pooled";
  const auto& rows = table();
  for (const auto& e : rows) {
    if (e.measure == measure && normalize_topic(e.topic) == key) {
      if (need_tau && !e.prior_tau)
        throw MissingTauPriorError("no heterogeneity prior is tabulated for " +
                                   std::string(to_string(measure)) + " / " + e.topic +
                                   "; use the pooled prior or pass --prior-tau explicitly");
      return e;
    }
  }
  std::vector<std::pair<std::size_t, std::string>> near;
  for (const auto& e : rows)
    if (e.measure == measure) near.emplace_back(edit_distance(key, normalize_topic(e.topic)), e.topic);
  std::stable_sort(near.begin(), near.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string msg = "unknown topic '" + std::string(topic) + "' for " +
                    std::string(to_string(measure));
  if (!near.empty()) {
    msg += "; nearest:";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, near.size()); ++i)
      msg += (i ? ", '" : " '") + near[i].second + "'";
  }
  throw UnknownTopicError(msg);
}

std::vector<RegistryEntry> list_topics(Measure measure) {
  std::vector<RegistryEntry> out;
  for (const auto& e : table())
    if (e.measure == measure) out.push_back(e);
  return out;
}

CandidateSet candidate_priors(Measure measure) {
  CandidateSet s;
  switch (measure) {
    case Measure::LogOR:
      s.mu = {cand("Student-t(0, 0.78, 5)", true), cand("Normal(0, 0.81)"),
              cand("Student-t(0, 0.45, 2.38)")};
      s.tau = {cand("Inv-Gamma(1.71, 0.73)", true), cand("Normal+(0, 0.62)"),
               cand("Inv-Gamma(1.53, 0.40)"), cand("Gamma(1.99, 0.25)")};
      break;
    case Measure::LogHR:
      s.mu = {cand("Normal(0, 0.35)"), cand("Student-t(0, 0.21, 2.57)")};
      s.tau = {cand("Normal+(0, 0.26)"), cand("Inv-Gamma(1.80, 0.21)"), cand("Gamma(1.93, 0.11)")};
      break;
    case Measure::LogRR:
      s.mu = {cand("Normal(0, 0.49)"), cand("Student-t(0, 0.26, 2.28)")};
      s.tau = {cand("Normal+(0, 0.35)"), cand("Inv-Gamma(1.51, 0.23)"), cand("Gamma(1.96, 0.14)")};
      break;
    case Measure::RD:
      s.mu = {cand("Normal(0, 0.10)"), cand("Student-t(0, 0.02, 0.85)")};
      s.tau = {cand("Normal+(0, 0.10)"), cand("Inv-Gamma(1.68, 0.07)"), cand("Gamma(1.80, 0.04)")};
      break;
  }
  return s;
}

std::string registry_json(std::optional<Measure> measure) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& e : table()) {
    if (measure && e.measure != *measure) continue;
    nlohmann::ordered_json j;
    j["measure"] = std::string(to_string(e.measure));
    j["topic"] = e.topic;
    j["prior_mu"] = to_string(e.prior_mu);
    j["prior_tau"] = e.prior_tau ? nlohmann::ordered_json(to_string(*e.prior_tau)) : nullptr;
    j["n_comparisons_mu"] = e.n_comparisons_mu;
    j["n_estimates_mu"] = e.n_estimates_mu;
    j["n_comparisons_tau"] =
        e.n_comparisons_tau ? nlohmann::ordered_json(*e.n_comparisons_tau) : nullptr;
    j["n_estimates_tau"] = e.n_estimates_tau ? nlohmann::ordered_json(*e.n_estimates_tau) : nullptr;
    j["usable"] = e.prior_mu.is_valid() && (!e.prior_tau || e.prior_tau->is_valid());
    rows.push_back(std::move(j));
  }
  return rows.dump(2);
}

}  // namespace bmameta
