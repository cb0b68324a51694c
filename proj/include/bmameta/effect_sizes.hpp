#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bmameta {

enum class Measure { LogOR, LogRR, RD, LogHR };

std::string_view to_string(Measure m);
// Accepts the CLI spellings (logOR, logRR, RD, logHR), case-insensitive.
Measure parse_measure(std::string_view text);
bool is_log_scale(Measure m);

// One study's 2x2 outcome table.
//
//            events  non-events
//   group 1    a         b        n1 = a + b
//   group 2    c         d        n2 = c + d
struct ContingencyTable {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;

  std::int64_t n1() const { return a + b; }
  std::int64_t n2() const { return c + d; }
  bool has_zero_cell() const { return a == 0 || b == 0 || c == 0 || d == 0; }
  bool double_zero() const { return a == 0 && c == 0; }
  ContingencyTable swapped() const { return {c, d, a, b}; }

  // Throws InvalidTableError on negative counts or an empty arm.
  void validate() const;

  friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

struct EffectEstimate {
  double y = 0.0;
  double se = 1.0;
  Measure measure = Measure::LogOR;
  std::string study_label;
  // Set when a continuity correction changed the counts.
  bool corrected = false;
  // Warning marker: no events in either arm. Ratio measures carry no
  // comparative information for such a table.
  bool double_zero = false;
};

struct ZeroCellPolicy {
  enum class Mode { None, ConstantAdd };
  Mode mode = Mode::None;
  double increment = 0.5;

  static ZeroCellPolicy none() { return {}; }
  static ZeroCellPolicy constant_add(double eps = 0.5);
  // Parses "none" or "add=EPS".
  static ZeroCellPolicy parse(std::string_view text);
};

EffectEstimate log_odds_ratio(const ContingencyTable& table, ZeroCellPolicy policy,
                              std::string label = {});
EffectEstimate log_risk_ratio(const ContingencyTable& table, ZeroCellPolicy policy,
                              std::string label = {});
EffectEstimate risk_difference(const ContingencyTable& table, std::string label = {});

// Dispatch on measure. LogHR has no table form and throws InvalidEstimateError.
EffectEstimate effect_from_table(Measure m, const ContingencyTable& table,
                                 ZeroCellPolicy policy, std::string label = {});

EffectEstimate validate_estimate(double y, double se, Measure measure,
                                 std::string label = {});

}  // namespace bmameta
