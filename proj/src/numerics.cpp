#include "bmameta/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "bmameta/errors.hpp"

namespace bmameta::numerics {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Set inside worker threads so nested parallel_for calls run inline.
thread_local bool tl_in_worker = false;
}

double log_sum_exp(std::span<const double> xs) {
  double m = -kInf;
  for (double x : xs) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_trapezoid(std::span<const double> x, std::span<const double> log_f) {
  const std::size_t n = x.size();
  if (n != log_f.size() || n < 2) throw QuadratureError("trapezoid needs matching axes of length >= 2");
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? x[i] - x[i - 1] : 0.0;
    const double right = i + 1 < n ? x[i + 1] - x[i] : 0.0;
    terms[i] = log_f[i] + std::log(0.5 * (left + right));
  }
  return log_sum_exp(terms);
}

LogIntegral log_integrate_unimodal(const std::function<double(double)>& f, double lo, double hi,
                                   double guess, double scale, double drop) {
  if (!(lo < hi)) throw QuadratureError("empty integration interval");
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  auto F = [&](double x) {
    const double v = f(x);
    return std::isnan(v) ? -kInf : v;
  };
  guess = std::clamp(guess, lo, hi);

  double x0 = guess;
  double f0 = F(x0);
  if (f0 == -kInf) {
    // Coarse scan for any point with finite mass.
    const double a = std::max(lo, guess - 200.0 * scale);
    const double b = std::min(hi, guess + 200.0 * scale);
    for (int i = 0; i <= 400; ++i) {
      const double x = a + (b - a) * i / 400.0;
      const double v = F(x);
      if (v > f0) {
        f0 = v;
        x0 = x;
      }
    }
    if (f0 == -kInf) throw QuadratureError("integrand is zero everywhere it was probed");
  }

  // Bracket the maximum by walking uphill with doubling steps.
  auto walk = [&](double dir, double& a, double& b) {
    double prev = x0, cur = x0, fcur = f0, step = scale;
    for (int it = 0; it < 200; ++it) {
      double nxt = cur + dir * step;
      nxt = std::clamp(nxt, lo, hi);
      if (nxt == cur) break;
      const double fn = F(nxt);
      if (fn <= fcur) {
        a = std::min(prev, nxt);
        b = std::max(prev, nxt);
        return;
      }
      prev = cur;
      cur = nxt;
      fcur = fn;
      step *= 2.0;
    }
    a = std::min(prev, cur);
    b = std::max(prev, cur);
  };
  double a = std::max(lo, x0 - scale), b = std::min(hi, x0 + scale);
  const double fr = b > x0 ? F(b) : -kInf;
  const double fl = a < x0 ? F(a) : -kInf;
  if (fr > f0) {
    walk(1.0, a, b);
  } else if (fl > f0) {
    walk(-1.0, a, b);
  }

  double mode = x0, fmax = f0;
  if (b > a) {
    auto neg = [&](double x) { return -F(x); };
    auto [xm, fm] = boost::math::tools::brent_find_minima(neg, a, b, 40);
    if (-fm >= fmax) {
      mode = xm;
      fmax = -fm;
    }
  }
  if (!std::isfinite(fmax)) throw QuadratureError("integrand maximum is not finite");
  // A maximum sitting on a bound comes back from the bracketed search a hair
  // inside it; snap so no sliver panel is left next to the bound.
  for (double bound : {lo, hi}) {
    if (!std::isfinite(bound) || std::abs(mode - bound) > 1e-3 * scale) continue;
    const double fb = F(bound);
    if (fb >= fmax || std::abs(mode - bound) < 1e-6 * scale) {
      mode = bound;
      fmax = std::max(fmax, fb);
    }
  }

  // Distance from the mode to where the integrand has dropped below the
  // cut-off on one side, plus the first step that stayed above it.
  auto edge = [&](double dir, double& width) {
    const double bound = dir > 0 ? hi : lo;
    if (mode == bound) {
      width = 0.0;
      return mode;
    }
    double step = scale;
    for (int it = 0; it < 60; ++it) {
      const double x = std::clamp(mode + dir * step, lo, hi);
      if (fmax - F(x) < drop) break;
      step *= 0.25;
    }
    width = std::min(step, std::abs(bound - mode));
    for (int it = 0; it < 200; ++it) {
      const double x = mode + dir * step;
      if ((dir > 0 && x >= hi) || (dir < 0 && x <= lo)) return bound;
      if (fmax - F(x) >= drop) return x;
      step *= 2.0;
    }
    return mode + dir * step;
  };
  double wl = 0.0, wr = 0.0;
  const double left = edge(-1.0, wl);
  const double right = edge(1.0, wr);

  // Geometric panels away from the mode.
  std::vector<double> cuts{left, mode, right};
  for (double w = wl; w > 0.0 && mode - w > left; w *= 2.0) cuts.push_back(mode - w);
  for (double w = wr; w > 0.0 && mode + w < right; w *= 2.0) cuts.push_back(mode + w);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto g = [&](double x) { return std::exp(F(x) - fmax); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, cuts[i], cuts[i + 1],
                                                                            8, 1e-10);
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw QuadratureError("integral underflowed after rescaling");
  const double width = std::max(wl, wr);
  return {fmax + std::log(total), mode, width > 0.0 ? width : scale};
}

unsigned thread_count() {
  if (const char* env = std::getenv("BMA_META_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1 || tl_in_worker) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      tl_in_worker = true;
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace bmameta::numerics
