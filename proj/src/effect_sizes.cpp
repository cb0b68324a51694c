#include "bmameta/effect_sizes.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "bmameta/errors.hpp"

namespace bmameta {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

struct Counts {
  double a, b, c, d;
  double n1() const { return a + b; }
  double n2() const { return c + d; }
};

Counts corrected_counts(const ContingencyTable& t, ZeroCellPolicy policy, bool needs_correction,
                        const char* what, bool& corrected) {
  Counts k{static_cast<double>(t.a), static_cast<double>(t.b), static_cast<double>(t.c),
           static_cast<double>(t.d)};
  corrected = false;
  if (!needs_correction) return k;
  if (policy.mode != ZeroCellPolicy::Mode::ConstantAdd) {
    throw ZeroCellError(std::string(what) + " is undefined for a table with a zero cell (" +
                        std::to_string(t.a) + ", " + std::to_string(t.b) + ", " +
                        std::to_string(t.c) + ", " + std::to_string(t.d) +
                        "); use a continuity correction or the binomial-normal model");
  }
  const double e = policy.increment;
  corrected = true;
  return {k.a + e, k.b + e, k.c + e, k.d + e};
}

}  // namespace

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::LogOR: return "logOR";
    case Measure::LogRR: return "logRR";
    case Measure::RD: return "RD";
    case Measure::LogHR: return "logHR";
  }
  return "?";
}

Measure parse_measure(std::string_view text) {
  const auto s = lower(text);
  if (s == "logor" || s == "or") return Measure::LogOR;
  if (s == "logrr" || s == "rr") return Measure::LogRR;
  if (s == "rd") return Measure::RD;
  if (s == "loghr" || s == "hr") return Measure::LogHR;
  throw InvalidEstimateError("unknown measure '" + std::string(text) +
                             "' (expected logOR, logRR, RD or logHR)");
}

bool is_log_scale(Measure m) { return m != Measure::RD; }

void ContingencyTable::validate() const {
  if (a < 0 || b < 0 || c < 0 || d < 0)
    throw InvalidTableError("contingency table counts must be nonnegative");
  if (n1() < 1 || n2() < 1)
    throw InvalidTableError("each arm of a contingency table needs at least one participant");
}

ZeroCellPolicy ZeroCellPolicy::constant_add(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw InvalidEstimateError("continuity correction increment must be positive");
  return {Mode::ConstantAdd, eps};
}

ZeroCellPolicy ZeroCellPolicy::parse(std::string_view text) {
  const auto s = lower(text);
  if (s == "none") return none();
  if (s.rfind("add=", 0) == 0) {
    double eps = 0.0;
    const auto* first = s.data() + 4;
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, eps);
    if (ec != std::errc() || ptr != last)
      throw InvalidEstimateError("bad zero-cell increment in '" + std::string(text) + "'");
    return constant_add(eps);
  }
  if (s == "add") return constant_add(0.5);
  throw InvalidEstimateError("zero-cell policy must be 'none' or 'add=EPS', got '" +
                             std::string(text) + "'");
}

EffectEstimate log_odds_ratio(const ContingencyTable& table, ZeroCellPolicy policy,
                              std::string label) {
  table.validate();
  bool corrected = false;
  const auto k = corrected_counts(table, policy, table.has_zero_cell(), "log OR", corrected);
  EffectEstimate e;
  e.measure = Measure::LogOR;
  // Cross products keep the group swap an exact sign flip.
  e.y = std::log(k.a * k.d) - std::log(k.b * k.c);
  e.se = std::sqrt((1.0 / k.a + 1.0 / k.b) + (1.0 / k.c + 1.0 / k.d));
  e.study_label = std::move(label);
  e.corrected = corrected;
  e.double_zero = table.double_zero();
  return e;
}

EffectEstimate log_risk_ratio(const ContingencyTable& table, ZeroCellPolicy policy,
                              std::string label) {
  table.validate();
  bool corrected = false;
  const bool zero_events = table.a == 0 || table.c == 0;
  const auto k = corrected_counts(table, policy, zero_events, "log RR", corrected);
  EffectEstimate e;
  e.measure = Measure::LogRR;
  e.y = std::log(k.a * k.n2()) - std::log(k.c * k.n1());
  const double var = (1.0 / k.a - 1.0 / k.n1()) + (1.0 / k.c - 1.0 / k.n2());
  if (!(var > 0.0))
    throw DegenerateVarianceError("log RR variance is zero (all participants had the event)");
  e.se = std::sqrt(var);
  e.study_label = std::move(label);
  e.corrected = corrected;
  e.double_zero = table.double_zero();
  return e;
}

EffectEstimate risk_difference(const ContingencyTable& table, std::string label) {
  table.validate();
  const double a = static_cast<double>(table.a), b = static_cast<double>(table.b);
  const double c = static_cast<double>(table.c), d = static_cast<double>(table.d);
  const double n1 = a + b, n2 = c + d;
  EffectEstimate e;
  e.measure = Measure::RD;
  e.y = a / n1 - c / n2;
  e.se = std::sqrt(a * b / (n1 * n1 * n1) + c * d / (n2 * n2 * n2));
  if (!(e.se > 0.0))
    throw DegenerateVarianceError(
        "risk difference standard error is zero (each arm is all-events or all-non-events)");
  e.study_label = std::move(label);
  e.double_zero = table.double_zero();
  return e;
}

EffectEstimate effect_from_table(Measure m, const ContingencyTable& table, ZeroCellPolicy policy,
                                 std::string label) {
  switch (m) {
    case Measure::LogOR: return log_odds_ratio(table, policy, std::move(label));
    case Measure::LogRR: return log_risk_ratio(table, policy, std::move(label));
    case Measure::RD: return risk_difference(table, std::move(label));
    case Measure::LogHR: break;
  }
  throw InvalidEstimateError("log HR cannot be computed from a 2x2 table; supply (y, se) pairs");
}

EffectEstimate validate_estimate(double y, double se, Measure measure, std::string label) {
  if (!std::isfinite(y)) throw InvalidEstimateError("effect estimate must be finite");
  if (!(se > 0.0) || !std::isfinite(se))
    throw InvalidEstimateError("standard error must be positive and finite");
  if (measure == Measure::RD && (y < -1.0 || y > 1.0))
    throw InvalidEstimateError("risk difference must lie in [-1, 1]");
  EffectEstimate e;
  e.y = y;
  e.se = se;
  e.measure = measure;
  e.study_label = std::move(label);
  return e;
}

}  // namespace bmameta
