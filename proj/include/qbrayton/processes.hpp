#pragma once

// Quasi-static paths (isobars, adiabats, isochores, isotherms) sampled on a
// uniform grid of one path parameter, and the heat/work line integrals
// along them for the whole substance and for one spin of a pair.
//
// Every sample stores its tangent (dB/ds, dJ/ds, dbeta/ds). Along an isobar
// dbeta/ds follows from the held-force constraint by implicit
// differentiation, so dp_n/ds is exact and the only approximation in a
// line integral is the quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qbrayton/errors.hpp"
#include "qbrayton/numerics.hpp"
#include "qbrayton/substance.hpp"

namespace qbrayton {

inline constexpr int kDefaultPathSamples = 257;
inline constexpr int kMinPathSamples = 33;
// Simpson on n vs (n+1)/2 samples must agree to this relative level.
inline constexpr double kPathRefinementRel = 1e-7;

enum class PathKind { IsobarX, IsobarY, Adiabat, Isochore, Isotherm };

struct Held {
  enum class Quantity { ForceX, ForceY, Populations, Levels, Beta };
  Quantity quantity = Quantity::Beta;
  double value = 0.0;  // held force, entropy, or beta; unused for Levels
};

struct Tangent {
  double d_field = 0.0;
  double d_coupling = 0.0;
  double d_beta = 0.0;
};

// param is the uniform integration variable; tangents are d/d(param).
// Isobars use u in [0, 1] with the coordinate clustered towards both ends.
struct PathPoint {
  ThermalPoint state;
  double param = 0.0;
  Tangent tangent;
};

struct Path {
  PathKind kind = PathKind::Isochore;
  Held held;
  std::vector<PathPoint> points;

  const ThermalPoint& front() const { return points.front().state; }
  const ThermalPoint& back() const { return points.back().state; }
  double step() const {
    return (points.back().param - points.front().param) / static_cast<double>(points.size() - 1);
  }
};

struct HeatWork {
  double heat = 0.0;     // absorbed by the substance (+ = absorbed)
  double work_by = 0.0;  // done by the substance
  double delta_u = 0.0;  // U(end) - U(start)
};

namespace detail {

inline void require_samples(int n) {
  if (n < kMinPathSamples || (n - 1) % 4 != 0) {
    throw DomainError("path sample count must be 4k+1 and >= " + std::to_string(kMinPathSamples) +
                      ", got " + std::to_string(n));
  }
}

inline double force_at(const Substance& s, double beta, Coordinate which) {
  if (const auto* pair = std::get_if<CoupledPair>(&s)) return generalized_force(*pair, beta, which);
  if (which == Coordinate::Y) throw DomainError("a single spin has no coupling force F_y");
  return single_spin_force(1.0 / std::get<SpinHalf>(s).field(), beta);
}

inline std::string describe(const Substance& s) {
  std::string out = "B=" + num(field_of(s));
  if (is_pair(s)) out += ", J=" + num(coupling_of(s));
  return out;
}

inline const char* force_name(Coordinate which) { return which == Coordinate::X ? "F_x" : "F_y"; }

inline constexpr double kLogBetaMin = -23.025850929940457;  // ln 1e-10
inline constexpr double kLogBetaMax = 13.815510557964274;   // ln 1e6
inline constexpr double kMaxLogBetaStep = 0.05;

}  // namespace detail

// Beta at which the force conjugate to `which` equals f_target, on the branch
// through beta_seed: the root nearest the seed in log(beta).
inline double solve_beta_on_isobar(const Substance& at, Coordinate which, double f_target,
                                   double beta_seed, const Tolerances& tol = {}) {
  detail::require_positive(beta_seed, "continuation seed beta");
  if (!(f_target < 0.0) || !std::isfinite(f_target)) {
    throw InfeasibleForce(std::string(detail::force_name(which)) + " = " + detail::num(f_target) +
                          " is not attainable: forces are strictly negative for beta > 0 (" +
                          detail::describe(at) + ")");
  }
  const double scale = std::abs(f_target);
  const auto residual = [&](double log_beta) {
    return (detail::force_at(at, std::exp(log_beta), which) - f_target) / scale;
  };
  const double u0 = std::log(beta_seed);
  const double g0 = residual(u0);
  if (g0 == 0.0) return beta_seed;

  double lo = u0;
  double hi = u0;
  double g_lo = g0;
  double g_hi = g0;
  double width = 1e-3;
  while (lo > detail::kLogBetaMin || hi < detail::kLogBetaMax) {
    const double next_lo = std::max(u0 - width, detail::kLogBetaMin);
    const double next_hi = std::min(u0 + width, detail::kLogBetaMax);
    double root = 0.0;
    bool found = false;
    if (next_lo < lo) {
      const double g = residual(next_lo);
      if ((g > 0.0) != (g_lo > 0.0) || g == 0.0) {
        root = find_root(residual, next_lo, lo, tol);
        found = true;
      }
      lo = next_lo;
      g_lo = g;
    }
    if (next_hi > hi) {
      const double g = residual(next_hi);
      if ((g > 0.0) != (g_hi > 0.0) || g == 0.0) {
        const double up = find_root(residual, hi, next_hi, tol);
        if (!found || std::abs(up - u0) < std::abs(root - u0)) root = up;
        found = true;
      }
      hi = next_hi;
      g_hi = g;
    }
    if (found) {
      const double beta = std::exp(root);
      if (std::abs(detail::force_at(at, beta, which) - f_target) > 1e-10 * scale) {
        throw NoConvergence("isobar solve: residual above 1e-10 relative for " +
                            std::string(detail::force_name(which)) + " = " + detail::num(f_target) +
                            " at " + detail::describe(at));
      }
      return beta;
    }
    width += std::min(width, detail::kMaxLogBetaStep);
  }
  throw InfeasibleForce(std::string(detail::force_name(which)) + " = " + detail::num(f_target) +
                        " is not attainable at " + detail::describe(at) +
                        " for any beta in [1e-10, 1e6] (seed " + detail::num(beta_seed) + ")");
}

// Smallest beta attaining f_target: the high-temperature branch.
inline double solve_beta_lowest(const Substance& at, Coordinate which, double f_target,
                                const Tolerances& tol = {}) {
  if (!(f_target < 0.0) || !std::isfinite(f_target)) {
    throw InfeasibleForce(std::string(detail::force_name(which)) + " = " + detail::num(f_target) +
                          " is not attainable: forces are strictly negative for beta > 0");
  }
  const double scale = std::abs(f_target);
  const auto residual = [&](double log_beta) {
    return (detail::force_at(at, std::exp(log_beta), which) - f_target) / scale;
  };
  constexpr double step = detail::kMaxLogBetaStep;
  double u = std::log(1e-8);
  double g = residual(u);
  while (u < std::log(1e4)) {
    const double next = u + step;
    const double gn = residual(next);
    if ((gn > 0.0) != (g > 0.0) || gn == 0.0) return std::exp(find_root(residual, u, next, tol));
    u = next;
    g = gn;
  }
  throw InfeasibleForce(std::string(detail::force_name(which)) + " = " + detail::num(f_target) +
                        " is not attainable at " + detail::describe(at) + " for beta in [1e-8, 1e4]");
}

namespace detail {

// dcoord/du given; d(param)/du = -param^2 dcoord/du since param = 1/coord.
inline Tangent isobar_tangent(const ThermalPoint& tp, Coordinate which, const ForceSensitivity& s,
                              double dcoord_du) {
  Tangent t;
  if (which == Coordinate::X) {
    t.d_field = -tp.field() * tp.field() * dcoord_du;
    t.d_beta = -s.d_param * t.d_field / s.d_beta;
  } else {
    t.d_coupling = -tp.coupling() * tp.coupling() * dcoord_du;
    t.d_beta = -s.d_param * t.d_coupling / s.d_beta;
  }
  return t;
}

// m(u) = u - sin(2 pi u) / (2 pi): m(0) = 0, m(1) = 1, m'(0) = m'(1) = 0.
inline constexpr double kTwoPi = 6.283185307179586;
inline double end_clustered(double u) { return u - std::sin(kTwoPi * u) / kTwoPi; }
inline double end_clustered_rate(double u) { return 1.0 - std::cos(kTwoPi * u); }

inline double grid(double start, double end, int i, int n) {
  if (i == n - 1) return end;
  return start + (end - start) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace detail

// Hold F_x (which = X, J fixed) or F_y (which = Y, B fixed) at its value in
// s0 while the coordinate moves to varied_end. beta at each sample
// continues from the previous one; a sign change of dF/dbeta means the
// branch folded and the held force is lost.
inline Path build_isobar(const ThermalPoint& s0, Coordinate which, double varied_end,
                         int n_samples = kDefaultPathSamples, const Tolerances& tol = {}) {
  detail::require_samples(n_samples);
  detail::require_positive(varied_end, "isobar end coordinate");
  if (which == Coordinate::Y && (!is_pair(s0.substance()) || s0.coupling() == 0.0)) {
    throw DomainError("an F_y isobar requires a coupled pair with J > 0");
  }
  Path path;
  path.kind = which == Coordinate::X ? PathKind::IsobarX : PathKind::IsobarY;
  const double held = force(s0, which);
  path.held = {which == Coordinate::X ? Held::Quantity::ForceX : Held::Quantity::ForceY, held};

  const double start = coordinate_of(s0.substance(), which);
  const double span = varied_end - start;
  const ForceSensitivity s_start = force_sensitivity(s0, which);
  if (s_start.d_beta == 0.0) {
    throw InfeasibleForce("isobar starts at a turning point of " + std::string(detail::force_name(which)) +
                          "(beta) at " + detail::describe(s0.substance()));
  }
  const bool rising = s_start.d_beta > 0.0;
  path.points.reserve(static_cast<std::size_t>(n_samples));
  path.points.push_back({s0, 0.0, detail::isobar_tangent(s0, which, s_start, 0.0)});

  double beta = s0.beta();
  for (int i = 1; i < n_samples; ++i) {
    const double u = detail::grid(0.0, 1.0, i, n_samples);
    const double coord = i == n_samples - 1 ? varied_end : start + span * detail::end_clustered(u);
    const double b = which == Coordinate::X ? 1.0 / coord : s0.field();
    const double j = which == Coordinate::X ? s0.coupling() : 1.0 / coord;
    const Substance at = with_parameters(s0.substance(), b, j);
    beta = solve_beta_on_isobar(at, which, held, beta, tol);
    ThermalPoint tp(at, beta);
    const ForceSensitivity sens = force_sensitivity(tp, which);
    if (sens.d_beta == 0.0 || (sens.d_beta > 0.0) != rising) {
      throw InfeasibleForce("isobar " + std::string(detail::force_name(which)) + " = " +
                            detail::num(held) + " passes a fold near " + detail::describe(at) +
                            "; the starting branch cannot hold the force");
    }
    const Tangent t = detail::isobar_tangent(tp, which, sens, span * detail::end_clustered_rate(u));
    path.points.push_back({std::move(tp), u, t});
  }
  return path;
}

// B -> B/lambda, J -> J/lambda, beta -> lambda beta: every beta E_n and hence
// every population is unchanged. Parameter t runs from 1 to lambda.
inline Path build_adiabat(const ThermalPoint& s0, double lambda, int n_samples = kDefaultPathSamples) {
  detail::require_samples(n_samples);
  detail::require_positive(lambda, "adiabat scale factor lambda");
  Path path;
  path.kind = PathKind::Adiabat;
  path.held = {Held::Quantity::Populations, entropy(s0)};
  const double b0 = s0.field();
  const double j0 = s0.coupling();
  const double beta0 = s0.beta();
  path.points.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double t = detail::grid(1.0, lambda, i, n_samples);
    const Tangent tangent{-b0 / (t * t), -j0 / (t * t), beta0};
    if (i == 0) {
      path.points.push_back({s0, t, tangent});
      continue;
    }
    path.points.push_back({ThermalPoint(with_parameters(s0.substance(), b0 / t, j0 / t), beta0 * t), t, tangent});
  }
  return path;
}

// Fixed levels, beta moving uniformly to beta_end.
inline Path build_isochore(const ThermalPoint& s0, double beta_end, int n_samples = kDefaultPathSamples) {
  detail::require_samples(n_samples);
  detail::require_positive(beta_end, "isochore end beta");
  Path path;
  path.kind = PathKind::Isochore;
  path.held = {Held::Quantity::Levels, 0.0};
  for (int i = 0; i < n_samples; ++i) {
    const double beta = detail::grid(s0.beta(), beta_end, i, n_samples);
    path.points.push_back({i == 0 ? s0 : ThermalPoint(s0.substance(), beta), beta, Tangent{0.0, 0.0, 1.0}});
  }
  return path;
}

// Fixed beta, (B, J) moving linearly to (field_end, coupling_end); t in [0, 1].
inline Path build_isotherm(const ThermalPoint& s0, double field_end, double coupling_end,
                           int n_samples = kDefaultPathSamples) {
  detail::require_samples(n_samples);
  detail::require_positive(field_end, "isotherm end field");
  if (is_pair(s0.substance()) && !(coupling_end >= 0.0)) {
    throw DomainError("isotherm end coupling must be >= 0, got " + detail::num(coupling_end));
  }
  const double b0 = s0.field();
  const double j0 = s0.coupling();
  const double j1 = is_pair(s0.substance()) ? coupling_end : 0.0;
  Path path;
  path.kind = PathKind::Isotherm;
  path.held = {Held::Quantity::Beta, s0.beta()};
  const Tangent tangent{field_end - b0, j1 - j0, 0.0};
  for (int i = 0; i < n_samples; ++i) {
    const double t = detail::grid(0.0, 1.0, i, n_samples);
    const double b = i == n_samples - 1 ? field_end : b0 + t * (field_end - b0);
    const double j = i == n_samples - 1 ? j1 : j0 + t * (j1 - j0);
    path.points.push_back({i == 0 ? s0 : ThermalPoint(with_parameters(s0.substance(), b, j), s0.beta()), t, tangent});
  }
  return path;
}

// Same states traversed backwards.
inline Path reversed(const Path& p) {
  Path r = p;
  std::reverse(r.points.begin(), r.points.end());
  return r;
}

// ---------------------------------------------------------------------------
// Line integrals

namespace detail {

// d(beta E_n)/ds at a sample.
inline std::array<double, 4> exponent_rates(const PathPoint& pt) {
  const SpectralDerivatives d = spectral_derivatives(pt.state.substance());
  const auto e = energies(pt.state);
  std::array<double, 4> g{};
  for (std::size_t n = 0; n < pt.state.spectrum().size(); ++n) {
    const double de = d.d_field[n] * pt.tangent.d_field + d.d_coupling[n] * pt.tangent.d_coupling;
    g[n] = pt.tangent.d_beta * e[n] + pt.state.beta() * de;
  }
  return g;
}

// dp_n/ds = -p_n (g_n - <g>).
inline std::array<double, 4> population_rates(const PathPoint& pt) {
  const auto g = exponent_rates(pt);
  const double mean = expectation(pt.state, g);
  std::array<double, 4> dp{};
  for (std::size_t n = 0; n < pt.state.spectrum().size(); ++n) dp[n] = -pt.state.prob(n) * (g[n] - mean);
  return dp;
}

inline double heat_rate(const PathPoint& pt) {
  return -covariance(pt.state, energies(pt.state), exponent_rates(pt));
}

inline double work_by_rate(const PathPoint& pt) {
  const SpectralDerivatives d = spectral_derivatives(pt.state.substance());
  std::array<double, 4> de{};
  for (std::size_t n = 0; n < 4; ++n) {
    de[n] = d.d_field[n] * pt.tangent.d_field + d.d_coupling[n] * pt.tangent.d_coupling;
  }
  return -expectation(pt.state, de);
}

inline const CoupledPair& require_pair(const PathPoint& pt) {
  const auto* pair = std::get_if<CoupledPair>(&pt.state.substance());
  if (pair == nullptr) throw DomainError("local quantities require a coupled-pair path");
  return *pair;
}

// Local levels are +-B/2: sum_loc E dp = B dp_e/ds.
inline double local_heat_rate(const PathPoint& pt) {
  const CoupledPair& pair = require_pair(pt);
  const auto w = excited_weights(pair);
  const auto dw = excited_weights_rate(pair, pt.tangent.d_field, pt.tangent.d_coupling);
  const auto dp = population_rates(pt);
  double dpe = 0.0;
  for (std::size_t n = 0; n < 4; ++n) dpe += w[n] * dp[n] + dw[n] * pt.state.prob(n);
  return pair.field() * dpe;
}

inline double local_work_by_rate(const PathPoint& pt) {
  require_pair(pt);
  return -(excited_population(pt.state) - 0.5) * pt.tangent.d_field;
}

// Heat and work integrals over one path, each refined by Simpson on n vs
// (n+1)/2 samples. The refinement discrepancy of both must stay below
// kPathRefinementRel times max(|Q|, |W|, |dU|, integral of |rate|).
template <class HeatRate, class WorkRate>
HeatWork line_integrals(const Path& p, HeatRate&& heat_rate_of, WorkRate&& work_rate_of, double delta_u,
                        const char* what) {
  if (p.points.size() < 2) throw DomainError("path needs at least two points");
  const double h = p.step();
  if (h == 0.0) return {0.0, 0.0, delta_u};
  std::vector<double> q;
  std::vector<double> w;
  q.reserve(p.points.size());
  w.reserve(p.points.size());
  for (const PathPoint& pt : p.points) {
    q.push_back(heat_rate_of(pt));
    w.push_back(work_rate_of(pt));
  }
  const RefinedIntegral rq = simpson_richardson(q, h);
  const RefinedIntegral rw = simpson_richardson(w, h);
  const double scale = std::max({std::abs(rq.value), std::abs(rw.value), std::abs(delta_u), rq.scale, rw.scale});
  const double worst = std::max(rq.discrepancy, rw.discrepancy);
  if (worst > kPathRefinementRel * scale) {
    throw NoConvergence(std::string(what) + ": Simpson on " + std::to_string(q.size()) + " vs " +
                        std::to_string((q.size() + 1) / 2) + " samples differs by " + num(worst) + " (scale " +
                        num(scale) + ")");
  }
  return {rq.value, rw.value, delta_u};
}

}  // namespace detail

// Q = integral of sum_n E_n dp_n, W_by = -integral of sum_n p_n dE_n, and
// dU = U(end) - U(start).
inline HeatWork heat_work(const Path& p) {
  return detail::line_integrals(p, detail::heat_rate, detail::work_by_rate,
                                internal_energy(p.back()) - internal_energy(p.front()), "heat/work along path");
}

inline double heat_along(const Path& p) { return heat_work(p).heat; }
inline double work_along(const Path& p) { return heat_work(p).work_by; }

// One spin of the pair: Q_loc = integral of sum_loc E_loc dp_loc with the
// instantaneous local levels +-B/2, W_loc by the local first law.
inline HeatWork local_heat_work(const Path& p) {
  if (!is_pair(p.front().substance())) throw DomainError("local quantities require a coupled-pair path");
  return detail::line_integrals(p, detail::local_heat_rate, detail::local_work_by_rate,
                                local_energy(p.back()) - local_energy(p.front()), "local heat/work along path");
}

inline double local_heat_along(const Path& p) { return local_heat_work(p).heat; }
inline double local_work_along(const Path& p) { return local_heat_work(p).work_by; }

// ---------------------------------------------------------------------------
// Isothermal heat directions at B = J

struct EntropyPartials {
  double d_field = 0.0;
  double d_coupling = 0.0;
};

inline EntropyPartials entropy_partials(const CoupledPair& pair, double beta, const Tolerances& tol = {}) {
  detail::require_positive(beta, "inverse temperature beta");
  if (!(pair.coupling() > 0.0)) throw DomainError("entropy partials require J > 0");
  const auto s_of = [&](double b, double j) { return entropy(ThermalPoint(pair.with(b, j), beta)); };
  EntropyPartials out;
  out.d_field = central_diff([&](double b) { return s_of(b, pair.coupling()); }, pair.field(), tol);
  out.d_coupling = central_diff([&](double j) { return s_of(pair.field(), j); }, pair.coupling(), tol);
  return out;
}

enum class Bump { Field, Coupling };
enum class HeatFlow { Absorb, Release, None };

inline HeatFlow flow_of(double heat) {
  if (heat > 0.0) return HeatFlow::Absorb;
  if (heat < 0.0) return HeatFlow::Release;
  return HeatFlow::None;
}

inline const char* to_string(HeatFlow f) {
  switch (f) {
    case HeatFlow::Absorb: return "absorb";
    case HeatFlow::Release: return "release";
    case HeatFlow::None: return "none";
  }
  return "none";
}

struct HeatDirections {
  double total_heat = 0.0;  // T dS over the step
  double local_heat = 0.0;  // one spin, along the isotherm
  HeatFlow total = HeatFlow::None;
  HeatFlow local = HeatFlow::None;
  LocalState start;
  double ground_population = 0.0;  // p_1 + p_2 at the start
};

// Low-temperature isothermal step B -> B + step or J -> J + step from B = J.
// Exercised at large finite beta; the two degenerate ground levels must hold
// at least 0.99 of the population.
inline HeatDirections isothermal_heat_directions(const CoupledPair& pair, double beta, Bump bump,
                                                 double step, int n_samples = kDefaultPathSamples) {
  detail::require_positive(beta, "inverse temperature beta");
  detail::require_positive(step, "isothermal step");
  if (std::abs(pair.field() - pair.coupling()) > 1e-12) {
    throw DomainError("isothermal direction analysis requires B = J, got B=" + detail::num(pair.field()) +
                      ", J=" + detail::num(pair.coupling()));
  }
  const ThermalPoint start(pair, beta);
  HeatDirections out;
  out.ground_population = start.prob(0) + start.prob(1);
  if (out.ground_population < 0.99) {
    throw DomainError("temperature too high for the low-temperature analysis: ground population " +
                      detail::num(out.ground_population) + " < 0.99");
  }
  const double b1 = pair.field() + (bump == Bump::Field ? step : 0.0);
  const double j1 = pair.coupling() + (bump == Bump::Coupling ? step : 0.0);
  const Path path = build_isotherm(start, b1, j1, n_samples);
  out.total_heat = (entropy(path.back()) - entropy(start)) / beta;
  out.local_heat = local_heat_along(path);
  out.total = flow_of(out.total_heat);
  out.local = flow_of(out.local_heat);
  out.start = reduced_local_state(start);
  return out;
}

}  // namespace qbrayton
