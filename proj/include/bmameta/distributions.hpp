#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bmameta {

enum class Family { PointMass, Normal, StudentT, HalfNormal, Gamma, InvGamma, Uniform };

std::string_view family_name(Family f);

// A parametric prior. Parameters by family:
//   PointMass(location)
//   Normal(mean, sd)
//   StudentT(location, scale, df)
//   HalfNormal(sd)                 printed as Normal+(0, sd)
//   Gamma(shape, scale)
//   InvGamma(shape, scale)
//   Uniform(lower, upper)
//
// The named constructors validate; `unchecked` does not, so that table rows
// printed with out-of-range values (e.g. a Student-t with df 0) can still be
// stored and reported. Every evaluation routine calls validate() first.
class PriorSpec {
 public:
  static PriorSpec point_mass(double location);
  static PriorSpec normal(double mean, double sd);
  static PriorSpec student_t(double location, double scale, double df);
  static PriorSpec half_normal(double sd);
  static PriorSpec gamma(double shape, double scale);
  static PriorSpec inv_gamma(double shape, double scale);
  static PriorSpec uniform(double lower, double upper);
  static PriorSpec unchecked(Family family, std::span<const double> params);

  PriorSpec() : PriorSpec(point_mass(0.0)) {}

  Family family() const { return family_; }
  std::span<const double> params() const { return {params_.data(), size_}; }
  double param(std::size_t i) const { return params_.at(i); }

  // Empty when the parameters satisfy the family's invariants.
  std::optional<std::string> invalid_reason() const;
  bool is_valid() const { return !invalid_reason(); }
  // Throws InvalidPriorError naming the offending parameter.
  void validate() const;

  bool is_point_mass() const { return family_ == Family::PointMass; }
  // Support restricted to [0, inf).
  bool positive_support() const;
  // Location parameter for the symmetric families, 0 for one-sided ones.
  double location() const;

  double support_lower() const;
  double support_upper() const;

  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;

 private:
  PriorSpec(Family f, std::initializer_list<double> p);

  Family family_;
  std::array<double, 3> params_{};
  std::size_t size_ = 0;
};

double log_density(const PriorSpec& spec, double x);
double density(const PriorSpec& spec, double x);
double cdf(const PriorSpec& spec, double x);
// Throws DomainError unless 0 < p < 1.
double quantile(const PriorSpec& spec, double p);
// Deterministic for a given seed. Throws DomainError for n == 0.
std::vector<double> sample(const PriorSpec& spec, std::size_t n, std::uint64_t seed);
// Throws DomainError when the mean does not exist (Student-t df <= 1,
// InvGamma shape <= 1).
double mean(const PriorSpec& spec);

// Text form used in tables, e.g. "Student-t(0, 0.48, 3)", "Inv-Gamma(1.67, 0.45)",
// "Normal+(0, 0.10)". Scale-type parameters print with at least two decimals;
// parse(to_string(s)) == s exactly.
std::string to_string(const PriorSpec& spec);
// Accepts the printed form and a few aliases (Half-Normal, InvGamma, t, ...).
// Produces an unchecked spec; throws PriorParseError on malformed text.
PriorSpec parse_prior(std::string_view text);

}  // namespace bmameta
