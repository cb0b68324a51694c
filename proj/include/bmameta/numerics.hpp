#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bmameta::numerics {

double log_sum_exp(std::span<const double> xs);
double log_add_exp(double a, double b);

struct LogIntegral {
  double log_value = 0.0;
  double mode = 0.0;
  double scale = 0.0;  // curvature scale at the mode
};

// log of the integral of exp(f) over [lo, hi] (either may be infinite) for a
// unimodal, typically log-concave f. `guess` and `scale` seed the search for
// the mode; the integration window stops where f has dropped `drop` below its
// maximum. Throws QuadratureError when f is -inf everywhere it was probed.
LogIntegral log_integrate_unimodal(const std::function<double(double)>& f, double lo, double hi,
                                   double guess, double scale, double drop = 40.0);

// Trapezoid rule in log space over an arbitrary (not necessarily uniform)
// abscissa. Returns log of the integral of exp(log_f).
double log_trapezoid(std::span<const double> x, std::span<const double> log_f);

// Number of worker threads: BMA_META_THREADS if set and positive, otherwise
// the hardware concurrency.
unsigned thread_count();

// Runs fn(i) for i in [0, n) over up to thread_count() threads. The first
// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bmameta::numerics
