#pragma once

// Scalar kernels: bracketed root finding, Simpson quadrature (adaptive on
// callables and fixed-grid on samples), and central finite differences.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <string>

#include "qbrayton/errors.hpp"

namespace qbrayton {

struct Tolerances {
  double root_rel = 1e-12;  // root bracket width relative to max(1, |x|)
  double quad_rel = 1e-9;   // agreement between successive Simpson estimates
  double fd_step = 1e-6;    // finite-difference step relative to max(1, |x|)

  void validate() const {
    if (!(root_rel > 0.0) || !(root_rel <= 1e-6)) {
      throw DomainError("root tolerance must lie in (0, 1e-6], got " + std::to_string(root_rel));
    }
    if (!(quad_rel > 0.0) || !(quad_rel <= 1e-6)) {
      throw DomainError("quadrature tolerance must lie in (0, 1e-6], got " +
                        std::to_string(quad_rel));
    }
    if (!(fd_step > 0.0)) {
      throw DomainError("finite-difference step must be positive, got " + std::to_string(fd_step));
    }
  }
};

inline constexpr int kMaxRootIterations = 200;
inline constexpr int kMaxQuadratureDoublings = 20;

namespace detail {

inline std::string format_interval(double lo, double hi) {
  std::ostringstream os;
  os.precision(12);
  os << "[" << lo << ", " << hi << "]";
  return os.str();
}

}  // namespace detail

// Brent's method: bisection safeguarding secant and inverse-quadratic steps.
// Requires f(lo) and f(hi) of opposite sign (or one of them zero).
template <class F>
double find_root(F&& f, double lo, double hi, const Tolerances& tol = {}) {
  double a = lo;
  double b = hi;
  double fa = f(a);
  double fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fb)) {
    throw DomainError("root finder: function not finite at bracket ends " +
                      detail::format_interval(lo, hi));
  }
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    throw BracketError("root finder: no sign change on " + detail::format_interval(lo, hi));
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  for (int iter = 0; iter < kMaxRootIterations; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * tol.root_rel * std::max(1.0, std::abs(b));
    const double half = 0.5 * (c - b);
    if (std::abs(half) <= tol1 || fb == 0.0) return b;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      const double s = fb / fa;
      double p = 0.0;
      double q = 0.0;
      if (a == c) {
        p = 2.0 * half * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) {
        q = -q;
      } else {
        p = -p;
      }
      if (2.0 * p < std::min(3.0 * half * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = half;
        e = d;
      }
    } else {
      d = half;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : std::copysign(tol1, half);
    fb = f(b);
    if (!std::isfinite(fb)) {
      throw DomainError("root finder: function not finite inside " + detail::format_interval(lo, hi));
    }
  }
  throw NoConvergence("root finder: iteration cap reached on " + detail::format_interval(lo, hi));
}

// Composite Simpson, doubling the number of panels until two successive
// estimates agree to quad_rel (relative to the larger of |I| and the integral
// of |f|). Signed: integrate(f, b, a) == -integrate(f, a, b).
template <class F>
double integrate(F&& f, double a, double b, const Tolerances& tol = {}) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  double ends = fa + fb;
  double ends_abs = std::abs(fa) + std::abs(fb);
  double even = 0.0;
  double even_abs = 0.0;
  const double fm = f(0.5 * (a + b));
  double odd = fm;
  double odd_abs = std::abs(fm);
  std::size_t panels = 2;
  double h = 0.5 * (b - a);
  double previous = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);

  for (int doubling = 1; doubling <= kMaxQuadratureDoublings; ++doubling) {
    even += odd;
    even_abs += odd_abs;
    panels *= 2;
    h *= 0.5;
    odd = 0.0;
    odd_abs = 0.0;
    for (std::size_t i = 1; i < panels; i += 2) {
      const double v = f(a + static_cast<double>(i) * h);
      odd += v;
      odd_abs += std::abs(v);
    }
    const double current = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    const double scale =
        std::max(std::abs(current), std::abs(h / 3.0 * (ends_abs + 4.0 * odd_abs + 2.0 * even_abs)));
    if (!std::isfinite(current)) {
      throw DomainError("quadrature: integrand not finite on " + detail::format_interval(a, b));
    }
    if (doubling >= 3 && std::abs(current - previous) <= tol.quad_rel * scale) {
      return current;
    }
    previous = current;
  }
  throw NoConvergence("quadrature: no agreement after " + std::to_string(kMaxQuadratureDoublings) +
                      " doublings on " + detail::format_interval(a, b));
}

// (f(x+h) - f(x-h)) / 2h with h = fd_step * max(1, |x|).
template <class F>
double central_diff(F&& f, double x, const Tolerances& tol = {}) {
  const double h = tol.fd_step * std::max(1.0, std::abs(x));
  const double up = f(x + h);
  const double down = f(x - h);
  if (!std::isfinite(up) || !std::isfinite(down)) {
    std::ostringstream os;
    os.precision(12);
    os << "central difference: function undefined near x = " << x << " (h = " << h << ")";
    throw DomainError(os.str());
  }
  return (up - down) / (2.0 * h);
}

// Composite Simpson over uniformly spaced samples; y.size() must be odd and >= 3.
inline double simpson(std::span<const double> y, double h) {
  if (y.size() < 3 || y.size() % 2 == 0) {
    throw DomainError("simpson: need an odd number (>= 3) of samples, got " +
                      std::to_string(y.size()));
  }
  double sum = y.front() + y.back();
  for (std::size_t i = 1; i + 1 < y.size(); ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  return sum * h / 3.0;
}

struct RefinedIntegral {
  double value = 0.0;        // Richardson-extrapolated estimate
  double discrepancy = 0.0;  // |fine - coarse|
  double scale = 0.0;        // integral of |y| on the fine grid
};

// Simpson on all samples and on every other sample, combined by Richardson
// extrapolation. y.size() must be 4k + 1.
inline RefinedIntegral simpson_richardson(std::span<const double> y, double h) {
  if (y.size() < 5 || (y.size() - 1) % 4 != 0) {
    throw DomainError("simpson_richardson: need 4k+1 samples, got " + std::to_string(y.size()));
  }
  const double fine = simpson(y, h);
  double coarse_sum = y.front() + y.back();
  double abs_sum = std::abs(y.front()) + std::abs(y.back());
  const std::size_t coarse_n = (y.size() - 1) / 2 + 1;
  for (std::size_t i = 1; i + 1 < coarse_n; ++i) coarse_sum += (i % 2 == 1 ? 4.0 : 2.0) * y[2 * i];
  for (std::size_t i = 1; i + 1 < y.size(); ++i) abs_sum += (i % 2 == 1 ? 4.0 : 2.0) * std::abs(y[i]);
  const double coarse = coarse_sum * (2.0 * h) / 3.0;
  return {fine + (fine - coarse) / 15.0, std::abs(fine - coarse), std::abs(abs_sum * h / 3.0)};
}

}  // namespace qbrayton
