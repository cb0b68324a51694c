#include "bmameta/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bmameta/errors.hpp"

namespace bmameta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double std_normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile requires 0 < p < 1");
}

// Uniform on the open interval (0, 1) with 53 random bits.
double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double draw_normal(std::mt19937_64& rng) { return std_normal_quantile(open_uniform(rng)); }

// Marsaglia & Tsang (2000), unit scale.
double draw_gamma(std::mt19937_64& rng, double shape) {
  if (shape < 1.0) {
    const double g = draw_gamma(rng, shape + 1.0);
    return g * std::pow(open_uniform(rng), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0, v = 0.0;
    do {
      x = draw_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = open_uniform(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Fixed notation with the fewest decimals (but at least `min_decimals`)
// that parses back to exactly the same double.
std::string format_number(double v, int min_decimals) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  for (int prec = min_decimals; prec <= 17; ++prec) {
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, prec);
    if (res.ec != std::errc()) break;
    double back = 0.0;
    std::from_chars(buf, res.ptr, back);
    if (back == v) return std::string(buf, res.ptr);
  }
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_location(double v) { return format_number(v, 0); }
std::string fmt_scale(double v) { return format_number(v, 2); }
std::string fmt_df(double v) { return format_number(v, v == std::floor(v) ? 0 : 2); }

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::PointMass: return "PointMass";
    case Family::Normal: return "Normal";
    case Family::StudentT: return "Student-t";
    case Family::HalfNormal: return "Normal+";
    case Family::Gamma: return "Gamma";
    case Family::InvGamma: return "Inv-Gamma";
    case Family::Uniform: return "Uniform";
  }
  return "?";
}

PriorSpec::PriorSpec(Family f, std::initializer_list<double> p) : family_(f), size_(p.size()) {
  std::size_t i = 0;
  for (double v : p) params_[i++] = v;
}

PriorSpec PriorSpec::point_mass(double location) {
  PriorSpec s(Family::PointMass, {location});
  s.validate();
  return s;
}
PriorSpec PriorSpec::normal(double mean, double sd) {
  PriorSpec s(Family::Normal, {mean, sd});
  s.validate();
  return s;
}
PriorSpec PriorSpec::student_t(double location, double scale, double df) {
  PriorSpec s(Family::StudentT, {location, scale, df});
  s.validate();
  return s;
}
PriorSpec PriorSpec::half_normal(double sd) {
  PriorSpec s(Family::HalfNormal, {sd});
  s.validate();
  return s;
}
PriorSpec PriorSpec::gamma(double shape, double scale) {
  PriorSpec s(Family::Gamma, {shape, scale});
  s.validate();
  return s;
}
PriorSpec PriorSpec::inv_gamma(double shape, double scale) {
  PriorSpec s(Family::InvGamma, {shape, scale});
  s.validate();
  return s;
}
PriorSpec PriorSpec::uniform(double lower, double upper) {
  PriorSpec s(Family::Uniform, {lower, upper});
  s.validate();
  return s;
}

PriorSpec PriorSpec::unchecked(Family family, std::span<const double> params) {
  std::size_t want = 0;
  switch (family) {
    case Family::PointMass:
    case Family::HalfNormal: want = 1; break;
    case Family::Normal:
    case Family::Gamma:
    case Family::InvGamma:
    case Family::Uniform: want = 2; break;
    case Family::StudentT: want = 3; break;
  }
  if (params.size() != want)
    throw PriorParseError(std::string(family_name(family)) + " takes " + std::to_string(want) +
                          " parameter(s), got " + std::to_string(params.size()));
  PriorSpec s(family, {});
  s.size_ = want;
  for (std::size_t i = 0; i < want; ++i) s.params_[i] = params[i];
  return s;
}

std::optional<std::string> PriorSpec::invalid_reason() const {
  for (std::size_t i = 0; i < size_; ++i)
    if (!std::isfinite(params_[i])) return "parameters must be finite";
  const auto& p = params_;
  switch (family_) {
    case Family::PointMass: return std::nullopt;
    case Family::Normal:
      if (!(p[1] > 0)) return "Normal sd must be positive";
      return std::nullopt;
    case Family::StudentT:
      if (!(p[1] > 0)) return "Student-t scale must be positive (got " + fmt_scale(p[1]) + ")";
      if (!(p[2] > 0)) return "Student-t df must be positive (got " + fmt_df(p[2]) + ")";
      return std::nullopt;
    case Family::HalfNormal:
      if (!(p[0] > 0)) return "Normal+ sd must be positive";
      return std::nullopt;
    case Family::Gamma:
    case Family::InvGamma:
      if (!(p[0] > 0)) return std::string(family_name(family_)) + " shape must be positive";
      if (!(p[1] > 0)) return std::string(family_name(family_)) + " scale must be positive";
      return std::nullopt;
    case Family::Uniform:
      if (!(p[0] < p[1])) return "Uniform requires lower < upper";
      return std::nullopt;
  }
  return "unknown family";
}

void PriorSpec::validate() const {
  if (auto why = invalid_reason()) throw InvalidPriorError(to_string(*this) + ": " + *why);
}

bool PriorSpec::positive_support() const {
  switch (family_) {
    case Family::HalfNormal:
    case Family::Gamma:
    case Family::InvGamma: return true;
    case Family::Uniform: return params_[0] >= 0.0;
    case Family::PointMass: return params_[0] >= 0.0;
    default: return false;
  }
}

double PriorSpec::location() const {
  switch (family_) {
    case Family::PointMass:
    case Family::Normal:
    case Family::StudentT: return params_[0];
    case Family::Uniform: return 0.5 * (params_[0] + params_[1]);
    default: return 0.0;
  }
}

double PriorSpec::support_lower() const {
  switch (family_) {
    case Family::PointMass: return params_[0];
    case Family::Uniform: return params_[0];
    case Family::HalfNormal:
    case Family::Gamma:
    case Family::InvGamma: return 0.0;
    default: return -kInf;
  }
}

double PriorSpec::support_upper() const {
  switch (family_) {
    case Family::PointMass: return params_[0];
    case Family::Uniform: return params_[1];
    default: return kInf;
  }
}

double log_density(const PriorSpec& spec, double x) {
  spec.validate();
  const auto p = spec.params();
  switch (spec.family()) {
    case Family::PointMass: return x == p[0] ? 0.0 : -kInf;
    case Family::Normal: {
      const double z = (x - p[0]) / p[1];
      return -kLogSqrt2Pi - std::log(p[1]) - 0.5 * z * z;
    }
    case Family::StudentT: {
      const double nu = p[2];
      const double z = (x - p[0]) / p[1];
      return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
             0.5 * std::log(nu * std::numbers::pi) - std::log(p[1]) -
             0.5 * (nu + 1.0) * std::log1p(z * z / nu);
    }
    case Family::HalfNormal: {
      if (x < 0.0) return -kInf;
      const double z = x / p[0];
      return std::numbers::ln2 - kLogSqrt2Pi - std::log(p[0]) - 0.5 * z * z;
    }
    case Family::Gamma: {
      const double k = p[0], theta = p[1];
      if (x < 0.0) return -kInf;
      if (x == 0.0) {
        if (k < 1.0) return kInf;
        return k == 1.0 ? -std::log(theta) : -kInf;
      }
      return (k - 1.0) * std::log(x) - x / theta - std::lgamma(k) - k * std::log(theta);
    }
    case Family::InvGamma: {
      const double a = p[0], b = p[1];
      if (x <= 0.0) return -kInf;
      return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
    }
    case Family::Uniform:
      if (x < p[0] || x > p[1]) return -kInf;
      return -std::log(p[1] - p[0]);
  }
  return -kInf;
}

double density(const PriorSpec& spec, double x) { return std::exp(log_density(spec, x)); }

double cdf(const PriorSpec& spec, double x) {
  spec.validate();
  const auto p = spec.params();
  switch (spec.family()) {
    case Family::PointMass: return x >= p[0] ? 1.0 : 0.0;
    case Family::Normal: return std_normal_cdf((x - p[0]) / p[1]);
    case Family::StudentT: {
      if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
      boost::math::students_t_distribution<double> t(p[2]);
      return boost::math::cdf(t, (x - p[0]) / p[1]);
    }
    case Family::HalfNormal:
      if (x <= 0.0) return 0.0;
      return std::erf(x / (p[0] * std::numbers::sqrt2));
    case Family::Gamma:
      if (x <= 0.0) return 0.0;
      if (std::isinf(x)) return 1.0;
      return boost::math::gamma_p(p[0], x / p[1]);
    case Family::InvGamma:
      if (x <= 0.0) return 0.0;
      if (std::isinf(x)) return 1.0;
      return boost::math::gamma_q(p[0], p[1] / x);
    case Family::Uniform:
      if (x <= p[0]) return 0.0;
      if (x >= p[1]) return 1.0;
      return (x - p[0]) / (p[1] - p[0]);
  }
  return 0.0;
}

double quantile(const PriorSpec& spec, double prob) {
  check_probability(prob);
  spec.validate();
  const auto p = spec.params();
  switch (spec.family()) {
    case Family::PointMass: return p[0];
    case Family::Normal: return p[0] + p[1] * std_normal_quantile(prob);
    case Family::StudentT: {
      boost::math::students_t_distribution<double> t(p[2]);
      return p[0] + p[1] * boost::math::quantile(t, prob);
    }
    case Family::HalfNormal:
      return p[0] * std::numbers::sqrt2 * boost::math::erf_inv(prob);
    case Family::Gamma: return p[1] * boost::math::gamma_p_inv(p[0], prob);
    case Family::InvGamma: return p[1] / boost::math::gamma_q_inv(p[0], prob);
    case Family::Uniform: return p[0] + prob * (p[1] - p[0]);
  }
  return 0.0;
}

std::vector<double> sample(const PriorSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample size must be at least 1");
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  const auto p = spec.params();
  switch (spec.family()) {
    case Family::PointMass:
      std::fill(out.begin(), out.end(), p[0]);
      break;
    case Family::Normal:
      for (auto& v : out) v = p[0] + p[1] * draw_normal(rng);
      break;
    case Family::StudentT:
      for (auto& v : out) {
        const double z = draw_normal(rng);
        const double chi2 = 2.0 * draw_gamma(rng, 0.5 * p[2]);
        v = p[0] + p[1] * z / std::sqrt(chi2 / p[2]);
      }
      break;
    case Family::HalfNormal:
      for (auto& v : out) v = p[0] * std::numbers::sqrt2 * boost::math::erf_inv(open_uniform(rng));
      break;
    case Family::Gamma:
      for (auto& v : out) v = p[1] * draw_gamma(rng, p[0]);
      break;
    case Family::InvGamma:
      for (auto& v : out) v = p[1] / draw_gamma(rng, p[0]);
      break;
    case Family::Uniform:
      for (auto& v : out) v = p[0] + (p[1] - p[0]) * open_uniform(rng);
      break;
  }
  return out;
}

double mean(const PriorSpec& spec) {
  spec.validate();
  const auto p = spec.params();
  switch (spec.family()) {
    case Family::PointMass: return p[0];
    case Family::Normal: return p[0];
    case Family::StudentT:
      if (p[2] <= 1.0)
        throw DomainError(to_string(spec) + " has no mean (df <= 1)");
      return p[0];
    case Family::HalfNormal: return p[0] * std::sqrt(2.0 / std::numbers::pi);
    case Family::Gamma: return p[0] * p[1];
    case Family::InvGamma:
      if (p[0] <= 1.0) throw DomainError(to_string(spec) + " has no mean (shape <= 1)");
      return p[1] / (p[0] - 1.0);
    case Family::Uniform: return 0.5 * (p[0] + p[1]);
  }
  return 0.0;
}

std::string to_string(const PriorSpec& spec) {
  const auto p = spec.params();
  const std::string name(family_name(spec.family()));
  switch (spec.family()) {
    case Family::PointMass: return name + "(" + fmt_location(p[0]) + ")";
    case Family::Normal: return name + "(" + fmt_location(p[0]) + ", " + fmt_scale(p[1]) + ")";
    case Family::StudentT:
      return name + "(" + fmt_location(p[0]) + ", " + fmt_scale(p[1]) + ", " + fmt_df(p[2]) + ")";
    case Family::HalfNormal: return name + "(0, " + fmt_scale(p[0]) + ")";
    case Family::Gamma:
    case Family::InvGamma: return name + "(" + fmt_scale(p[0]) + ", " + fmt_scale(p[1]) + ")";
    case Family::Uniform: return name + "(" + fmt_location(p[0]) + ", " + fmt_location(p[1]) + ")";
  }
  return name;
}

PriorSpec parse_prior(std::string_view text) {
  const auto s = trim(text);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')')
    throw PriorParseError("expected 'family(p1, p2, ...)', got '" + std::string(text) + "'");
  auto name = lower(trim(s.substr(0, open)));
  std::erase_if(name, [](char ch) { return ch == ' ' || ch == '_'; });

  std::vector<double> args;
  auto body = s.substr(open + 1, s.size() - open - 2);
  while (true) {
    const auto comma = body.find(',');
    auto tok = trim(body.substr(0, comma));
    if (tok.empty()) throw PriorParseError("empty parameter in '" + std::string(text) + "'");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw PriorParseError("bad number '" + std::string(tok) + "' in '" + std::string(text) + "'");
    args.push_back(v);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }

  Family family;
  if (name == "normal" || name == "n" || name == "gaussian") {
    family = Family::Normal;
  } else if (name == "student-t" || name == "studentt" || name == "t" || name == "student") {
    family = Family::StudentT;
  } else if (name == "normal+" || name == "n+" || name == "half-normal" || name == "halfnormal") {
    family = Family::HalfNormal;
    if (args.size() == 2) {
      if (args[0] != 0.0) throw PriorParseError("Normal+ must be centred at 0");
      args.erase(args.begin());
    }
  } else if (name == "gamma") {
    family = Family::Gamma;
  } else if (name == "inv-gamma" || name == "invgamma" || name == "inverse-gamma" ||
             name == "inversegamma") {
    family = Family::InvGamma;
  } else if (name == "uniform" || name == "u") {
    family = Family::Uniform;
  } else if (name == "pointmass" || name == "point" || name == "spike") {
    family = Family::PointMass;
  } else {
    throw PriorParseError("unknown prior family '" + std::string(trim(s.substr(0, open))) + "'");
  }
  return PriorSpec::unchecked(family, args);
}

}  // namespace bmameta
