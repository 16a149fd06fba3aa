#pragma once

// Acceptance suite shared by the acceptance test binary and `qbrayton verify`.
// Each criterion returns a tally of individual checks plus the first failure.
// Closed forms are checked against independent oracles: finite differences
// of the spectrum and of the free energy, path integration, dense scans.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qbrayton/cycles.hpp"
#include "qbrayton/errors.hpp"
#include "qbrayton/numerics.hpp"
#include "qbrayton/processes.hpp"
#include "qbrayton/substance.hpp"

namespace qbrayton::verify {

struct CriterionResult {
  int id = 0;
  std::string title;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool pass() const { return checks > 0 && failures == 0; }
};

// |a - b| <= tol * max(1, |a|, |b|)
inline bool near(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// |a - b| <= tol * max(|a|, |b|)
inline bool rel_near(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

class Tally {
 public:
  Tally(int id, std::string title) { result_.id = id; result_.title = std::move(title); }

  template <class Describe>
  void expect(bool ok, Describe&& describe) {
    ++result_.checks;
    if (ok) return;
    if (result_.failures++ == 0) result_.first_failure = describe();
  }

  // Runs body, counting an unexpected library error as one failed check.
  template <class Body>
  void guarded(const std::string& what, Body&& body) {
    try {
      body();
    } catch (const Error& e) {
      expect(false, [&] { return what + ": " + e.what(); });
    }
  }

  void merge(const CriterionResult& r) {
    result_.checks += r.checks;
    if (r.failures > 0 && result_.failures == 0) result_.first_failure = r.title + ": " + r.first_failure;
    result_.failures += r.failures;
  }

  CriterionResult result() const { return result_; }

 private:
  CriterionResult result_;
};

inline std::string fmt(double v) { return detail::num(v); }

inline CoupledPair make_pair(Coupling model, double b, double j) {
  return model == Coupling::XX ? CoupledPair::xx(b, j) : CoupledPair::general_xy(b, j, 0.0, 0.0);
}

inline const char* model_name(Coupling model) { return model == Coupling::XX ? "XX" : "XY(0,0)"; }

// ---------------------------------------------------------------------------
// Oracles

// Substance with its coordinate `which` set to `coord`.
inline Substance at_coordinate(const Substance& s, Coordinate which, double coord) {
  if (which == Coordinate::X) return with_parameters(s, 1.0 / coord, coupling_of(s));
  return with_parameters(s, field_of(s), 1.0 / coord);
}

// -sum_n p_n dE_n/dL with each dE_n/dL by central differences.
inline double spectral_force_oracle(const Substance& s, double beta, Coordinate which) {
  const ThermalPoint tp(s, beta);
  const double l = coordinate_of(s, which);
  double f = 0.0;
  for (std::size_t n = 0; n < tp.spectrum().size(); ++n) {
    const double de = central_diff([&](double c) { return spectrum(at_coordinate(s, which, c)).energy(n); }, l);
    f -= tp.prob(n) * de;
  }
  return f;
}

// -dA/dL at fixed beta, A = -ln(Z)/beta written as E_g - log1p(sum_{n != g}
// exp(-beta (E_n - E_g))) / beta with g the lowest level at L, so forces
// that are exponentially small next to A keep their relative accuracy.
// Fourth-order Richardson central difference.
inline double free_energy_force_oracle(const Substance& s, double beta, Coordinate which) {
  const double l = coordinate_of(s, which);
  const Spectrum base = spectrum(s);
  std::size_t g = 0;
  for (std::size_t n = 1; n < base.size(); ++n) {
    if (base.energy(n) < base.energy(g)) g = n;
  }
  const auto ground = [&](double c) { return spectrum(at_coordinate(s, which, c)).energy(g); };
  const auto excess = [&](double c) {
    const Spectrum sp = spectrum(at_coordinate(s, which, c));
    double sum = 0.0;
    for (std::size_t n = 0; n < sp.size(); ++n) {
      if (n != g) sum += std::exp(-beta * (sp.energy(n) - sp.energy(g)));
    }
    return -std::log1p(sum) / beta;
  };
  const double h = 1e-3 * std::min(l, l * l / beta);
  const auto richardson = [&](const auto& f) {
    const auto d = [&](double step) { return (f(l + step) - f(l - step)) / (2.0 * step); };
    return (4.0 * d(0.5 * h) - d(h)) / 3.0;
  };
  return -(richardson(ground) + richardson(excess));
}

// Largest |F| over a dense log-spaced beta scan.
inline double force_supremum_scan(const Substance& s, Coordinate which, double beta_lo = 1e-4,
                                  double beta_hi = 1e4, int points = 20001) {
  double best = 0.0;
  const double a = std::log(beta_lo);
  const double b = std::log(beta_hi);
  for (int i = 0; i < points; ++i) {
    const double beta = std::exp(a + (b - a) * i / (points - 1));
    best = std::max(best, std::abs(force(ThermalPoint(s, beta), which)));
  }
  return best;
}

// beta at which a spin of coordinate L has force F: F = -tanh(beta/2L)/(2L^2).
inline double single_spin_beta_for_force(double length, double f) {
  return 2.0 * length * std::atanh(-2.0 * length * length * f);
}

// ---------------------------------------------------------------------------
// Criteria

inline constexpr std::uint64_t kSeed = 20100312;

inline CriterionResult identities(Coupling model = Coupling::XX) {
  Tally t(1, std::string("identities U = F_x X + F_y Y, U = F L, F_loc = F_x/2, S(B,J) = S(J,B) [") +
                 model_name(model) + "]");
  constexpr int n = 20;
  for (int i = 0; i < n; ++i) {
    const double b = 0.2 + 2.8 * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double jj = 3.0 * j / (n - 1);
      for (int k = 0; k < n; ++k) {
        const double beta = 0.1 + 19.9 * k / (n - 1);
        const auto where = [&] { return "B=" + fmt(b) + " J=" + fmt(jj) + " beta=" + fmt(beta); };
        t.guarded(where(), [&] {
          const ThermalPoint tp(make_pair(model, b, jj), beta);
          const double u = internal_energy(tp);
          const double fx_x = force_times_coordinate(tp, Coordinate::X);
          const double fy_y = force_times_coordinate(tp, Coordinate::Y);
          t.expect(near(u, fx_x + fy_y, 1e-12), [&] {
            return "U=" + fmt(u) + " vs F_x X + F_y Y=" + fmt(fx_x + fy_y) + " at " + where();
          });
          const double f_loc = reduced_local_state(tp).force_loc;
          const double fx = force(tp, Coordinate::X);
          t.expect(near(f_loc, 0.5 * fx, 1e-12),
                   [&] { return "F_loc=" + fmt(f_loc) + " vs F_x/2=" + fmt(0.5 * fx) + " at " + where(); });
          if (jj > 0.0) {
            const double s = entropy(tp);
            const double swapped = entropy(ThermalPoint(make_pair(model, jj, b), beta));
            t.expect(near(s, swapped, 1e-12),
                     [&] { return "S(B,J)=" + fmt(s) + " vs S(J,B)=" + fmt(swapped) + " at " + where(); });
          }
          if (j == 0) {
            const ThermalPoint spin(SpinHalf(b), beta);
            const double us = internal_energy(spin);
            const double fl = single_spin_force(1.0 / b, beta) / b;
            t.expect(near(us, fl, 1e-12), [&] { return "spin U=" + fmt(us) + " vs F L=" + fmt(fl) + " at " + where(); });
          }
        });
      }
    }
  }
  return t.result();
}

inline CriterionResult force_oracles(Coupling model = Coupling::XX) {
  Tally t(2, std::string("forces vs finite-difference spectrum and free-energy oracles [") + model_name(model) + "]");
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> ub(0.2, 3.0);
  std::uniform_real_distribution<double> uj(0.1, 3.0);
  std::uniform_real_distribution<double> ubeta(0.1, 20.0);
  for (int i = 0; i < 200; ++i) {
    const double b = ub(rng);
    const double j = uj(rng);
    const double beta = ubeta(rng);
    const auto where = [&] { return "B=" + fmt(b) + " J=" + fmt(j) + " beta=" + fmt(beta); };
    t.guarded(where(), [&] {
      const Substance pair = make_pair(model, b, j);
      for (const Coordinate which : {Coordinate::X, Coordinate::Y}) {
        const double f = force(ThermalPoint(pair, beta), which);
        const double spec_oracle = spectral_force_oracle(pair, beta, which);
        const double free_oracle = free_energy_force_oracle(pair, beta, which);
        const char* name = which == Coordinate::X ? "F_x" : "F_y";
        t.expect(rel_near(f, spec_oracle, 1e-8), [&] {
          return std::string(name) + "=" + fmt(f) + " vs spectral oracle " + fmt(spec_oracle) + " at " + where();
        });
        t.expect(rel_near(f, free_oracle, 1e-8), [&] {
          return std::string(name) + "=" + fmt(f) + " vs free-energy oracle " + fmt(free_oracle) + " at " + where();
        });
      }
      const Substance spin = SpinHalf(b);
      const double f = single_spin_force(1.0 / b, beta);
      const double so = spectral_force_oracle(spin, beta, Coordinate::X);
      const double fo = free_energy_force_oracle(spin, beta, Coordinate::X);
      t.expect(rel_near(f, so, 1e-8), [&] { return "F=" + fmt(f) + " vs spectral oracle " + fmt(so) + " at " + where(); });
      t.expect(rel_near(f, fo, 1e-8),
               [&] { return "F=" + fmt(f) + " vs free-energy oracle " + fmt(fo) + " at " + where(); });
    });
  }
  return t.result();
}

inline CriterionResult adiabats(Coupling model = Coupling::XX) {
  Tally t(3, std::string("adiabat invariants [") + model_name(model) + "]");
  std::mt19937_64 rng(kSeed + 3);
  std::uniform_real_distribution<double> ub(0.2, 3.0);
  std::uniform_real_distribution<double> uj(0.1, 3.0);
  std::uniform_real_distribution<double> ubeta(0.1, 20.0);
  std::uniform_real_distribution<double> ulam(0.3, 3.0);
  constexpr int samples = 33;
  for (int i = 0; i < 20; ++i) {
    const double b = ub(rng);
    const double j = uj(rng);
    const double beta = ubeta(rng);
    const double lambda = ulam(rng);
    const auto where = [&] {
      return "B=" + fmt(b) + " J=" + fmt(j) + " beta=" + fmt(beta) + " lambda=" + fmt(lambda);
    };
    t.guarded(where(), [&] {
      const Path p = build_adiabat(ThermalPoint(make_pair(model, b, j), beta), lambda, samples);
      const ThermalPoint& s0 = p.front();
      const auto invariants = [](const ThermalPoint& s) {
        const double x = 1.0 / s.field();
        const double y = 1.0 / s.coupling();
        return std::array<double, 4>{entropy(s), force(s, Coordinate::X) * x * x, force(s, Coordinate::Y) * y * y,
                                     x / y};
      };
      const auto ref = invariants(s0);
      static constexpr std::array<const char*, 4> names = {"S", "F_x X^2", "F_y Y^2", "X/Y"};
      for (const PathPoint& pt : p.points) {
        const auto now = invariants(pt.state);
        for (std::size_t q = 0; q < 4; ++q) {
          t.expect(near(now[q], ref[q], 1e-12), [&] {
            return std::string(names[q]) + " drifts " + fmt(ref[q]) + " -> " + fmt(now[q]) + " at " + where();
          });
        }
        for (std::size_t n = 0; n < 4; ++n) {
          t.expect(near(pt.state.prob(n), s0.prob(n), 1e-12),
                   [&] { return "p_" + std::to_string(n + 1) + " drifts on adiabat at " + where(); });
        }
      }
      const double x_end = 1.0 / p.back().field();
      t.expect(near(x_end, lambda / b, 1e-12) && near(p.back().beta(), lambda * beta, 1e-12),
               [&] { return "adiabat end is not (lambda X, lambda beta) at " + where(); });
    });
  }
  std::uniform_real_distribution<double> ul(0.3, 5.0);
  for (int i = 0; i < 20; ++i) {
    const double l = ul(rng);
    const double beta = ubeta(rng);
    const double lambda = ulam(rng);
    const auto where = [&] { return "spin L=" + fmt(l) + " beta=" + fmt(beta) + " lambda=" + fmt(lambda); };
    t.guarded(where(), [&] {
      const Path p = build_adiabat(ThermalPoint(SpinHalf::from_coordinate(l), beta), lambda, samples);
      const double tl0 = l / beta;
      const double fl0 = single_spin_force(l, beta) * l * l;
      for (const PathPoint& pt : p.points) {
        const double len = 1.0 / pt.state.field();
        const double tl = pt.state.temperature() * len;
        const double fl = single_spin_force(len, pt.state.beta()) * len * len;
        t.expect(near(tl, tl0, 1e-12), [&] { return "T L drifts " + fmt(tl0) + " -> " + fmt(tl) + " at " + where(); });
        t.expect(near(fl, fl0, 1e-12), [&] { return "F L^2 drifts " + fmt(fl0) + " -> " + fmt(fl) + " at " + where(); });
        t.expect(near(entropy(pt.state), entropy(p.front()), 1e-12), [&] { return "S drifts at " + where(); });
      }
    });
  }
  const double lhs = single_spin_force(3.0, 6.0) * 9.0;
  const double rhs = single_spin_force(1.0, 2.0);
  t.expect(near(lhs, rhs, 1e-12), [&] { return "F(3,6)*9=" + fmt(lhs) + " vs F(1,2)=" + fmt(rhs); });
  return t.result();
}

// Random cycle specs of one kind accepted when solve_corners succeeds.
// Anchors where the held force has saturated in beta (|dlnF/dlnbeta| below
// kMinForceResponse) are skipped: there beta_D is fixed only to about
// eps / |dlnF/dlnbeta| and ratios through corner D lose digits accordingly.
inline constexpr double kMinForceResponse = 1e-3;

inline double force_response(const ThermalPoint& tp, Coordinate which) {
  return force_sensitivity(tp, which).d_beta * tp.beta() / force(tp, which);
}

struct AcceptedCycle {
  BraytonSpec spec;
  CornerSet corners;
};

inline std::vector<AcceptedCycle> random_cycles(CycleKind kind, Coupling model, std::size_t wanted,
                                                std::uint64_t seed, std::size_t max_attempts = 400) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto in = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  std::vector<AcceptedCycle> out;
  for (std::size_t a = 0; a < max_attempts && out.size() < wanted; ++a) {
    const double r = in(1.5, 4.0);
    const double phi = in(0.1, 0.9);
    std::optional<ThermalPoint> anchor;
    switch (kind) {
      case CycleKind::SingleSpin:
        anchor.emplace(SpinHalf::from_coordinate(in(0.5, 4.0)), in(0.2, 10.0));
        break;
      case CycleKind::FixedFx: {
        const double b = in(0.5, 2.0);
        anchor.emplace(make_pair(model, b, b * in(0.0, 1.2)), in(0.5, 5.0) / b);
        break;
      }
      case CycleKind::FixedFy: {
        const double b = in(0.5, 2.0);
        anchor.emplace(make_pair(model, b, b * in(0.8, 5.0)), in(0.5, 5.0) / b);
        break;
      }
    }
    BraytonSpec spec{kind, *anchor, r, phi};
    if (std::abs(force_response(*anchor, held_coordinate(kind))) < kMinForceResponse) continue;
    try {
      CornerSet corners = solve_corners(spec);
      out.push_back({spec, std::move(corners)});
    } catch (const Error&) {
    }
  }
  return out;
}

inline std::string describe_spec(const BraytonSpec& s) {
  std::string out = std::string(to_string(s.kind)) + " B=" + fmt(s.anchor.field());
  if (is_pair(s.anchor.substance())) out += " J=" + fmt(s.anchor.coupling());
  return out + " beta=" + fmt(s.anchor.beta()) + " r=" + fmt(s.compression_ratio) + " phi=" + fmt(s.pressure_ratio);
}

inline constexpr std::size_t kRandomCycles = 30;

inline CriterionResult cycle_equivalence(Coupling model = Coupling::XX) {
  Tally t(4, std::string("oracle_report vs brayton_report, eta = 1 - sqrt(phi) [") + model_name(model) + "]");
  for (const CycleKind kind : {CycleKind::SingleSpin, CycleKind::FixedFx, CycleKind::FixedFy}) {
    const auto cycles = random_cycles(kind, model, kRandomCycles, kSeed + 4 + static_cast<std::uint64_t>(kind));
    t.expect(cycles.size() == kRandomCycles, [&] {
      return std::string(to_string(kind)) + ": only " + std::to_string(cycles.size()) + " feasible specs found";
    });
    for (const AcceptedCycle& c : cycles) {
      const auto where = [&] { return describe_spec(c.spec); };
      t.guarded(where(), [&] {
        const CycleReport closed = brayton_report(c.corners, c.spec);
        const CycleReport oracle = oracle_report(c.corners, c.spec);
        const double scale = std::max({std::abs(closed.q_in), std::abs(oracle.q_in), std::abs(closed.q_out),
                                       std::abs(closed.w_net), std::abs(closed.w_loc)});
        const std::array<std::pair<const char*, std::array<double, 2>>, 4> fields = {{
            {"Q_in", {closed.q_in, oracle.q_in}},
            {"Q_out", {closed.q_out, oracle.q_out}},
            {"W_net", {closed.w_net, oracle.w_net}},
            {"W_loc", {closed.w_loc, oracle.w_loc}},
        }};
        for (const auto& [name, v] : fields) {
          t.expect(std::abs(v[0] - v[1]) <= 1e-7 * scale, [&] {
            return std::string(name) + " closed " + fmt(v[0]) + " vs oracle " + fmt(v[1]) + " for " + where();
          });
        }
        const double expected = 1.0 - std::sqrt(c.spec.pressure_ratio);
        const double from_heats = 1.0 - closed.q_out / closed.q_in;
        t.expect(std::abs(from_heats - expected) <= 1e-10 && std::abs(closed.eta - expected) <= 1e-10, [&] {
          return "eta from heats " + fmt(from_heats) + " vs 1 - sqrt(phi) = " + fmt(expected) + " for " + where();
        });
        if (closed.eta_loc) {
          t.expect(std::abs(*closed.eta_loc - closed.eta) <= 1e-10, [&] {
            return "eta_loc " + fmt(*closed.eta_loc) + " differs from eta " + fmt(closed.eta) + " for " + where();
          });
        }
      });
    }
  }
  t.guarded("phi = 1/4 setup", [&] {
    const BraytonSpec spec{CycleKind::FixedFx, ThermalPoint(make_pair(model, 1.0, 0.5), 2.0), 3.0, 0.25};
    const CycleReport r = brayton_report(solve_corners(spec), spec);
    const double from_heats = 1.0 - r.q_out / r.q_in;
    t.expect(std::abs(r.eta - 0.5) <= 1e-10 && std::abs(from_heats - 0.5) <= 1e-10,
             [&] { return "phi=1/4: eta=" + fmt(r.eta) + ", from heats " + fmt(from_heats); });
  });
  return t.result();
}

inline CriterionResult closure(Coupling model = Coupling::XX) {
  Tally t(5, std::string("corner closure and ratio chain [") + model_name(model) + "]");
  for (const CycleKind kind : {CycleKind::SingleSpin, CycleKind::FixedFx, CycleKind::FixedFy}) {
    const auto cycles = random_cycles(kind, model, kRandomCycles, kSeed + 4 + static_cast<std::uint64_t>(kind));
    t.expect(!cycles.empty(), [&] { return std::string(to_string(kind)) + ": no feasible specs"; });
    for (const AcceptedCycle& c : cycles) {
      const auto where = [&] { return describe_spec(c.spec); };
      t.expect(c.corners.closure_residual <= kClosureTolerance,
               [&] { return "closure residual " + fmt(c.corners.closure_residual) + " for " + where(); });
      for (const double ratio : ratio_chain(c.corners, kind)) {
        t.expect(std::abs(ratio - c.spec.pressure_ratio) <= 1e-10, [&] {
          return "ratio " + fmt(ratio) + " vs phi " + fmt(c.spec.pressure_ratio) + " for " + where();
        });
      }
    }
  }
  return t.result();
}

inline CriterionResult uncoupled_limit(Coupling model = Coupling::XX) {
  Tally t(6, std::string("W_net / (2 W_loc) -> 1 as J -> 0 [") + model_name(model) + "]");
  double previous = std::numeric_limits<double>::infinity();
  for (const double j : {1e-6, 1e-7, 1e-8}) {
    t.guarded("J=" + fmt(j), [&] {
      const BraytonSpec spec{CycleKind::FixedFx, ThermalPoint(make_pair(model, 1.0, j), 2.0), 3.0, 0.25};
      const CycleReport r = brayton_report(solve_corners(spec), spec);
      const double dev = std::abs(r.w_ratio(CycleKind::FixedFx) - 1.0);
      t.expect(dev <= 1e-3, [&] { return "J=" + fmt(j) + ": |ratio - 1| = " + fmt(dev); });
      t.expect(dev <= previous + 1e-13,
               [&] { return "J=" + fmt(j) + ": |ratio - 1| = " + fmt(dev) + " grew from " + fmt(previous); });
      previous = dev;
    });
  }
  return t.result();
}

inline SweepSpec figure_sweep(CycleKind kind, Coupling model, double lo, double hi, int points) {
  SweepSpec s;
  s.kind = kind;
  s.model = model;
  s.field = 1.0;
  s.lo = lo;
  s.hi = hi;
  s.points = points;
  s.hold = SweepHold::AnchorTemperature;
  s.anchor_beta = 2.0;
  s.compression_ratio = 3.0;
  s.pressure_ratio = 0.25;
  return s;
}

inline CriterionResult coupling_enhancement(Coupling model = Coupling::XX) {
  Tally t(7, std::string("W_net - 2 W_loc >= 0 and equals the coupling bracket [") + model_name(model) + "]");
  const SweepSpec spec = figure_sweep(CycleKind::FixedFx, model, 0.05, 2.0, 40);
  std::size_t feasible = 0;
  for (const SweepRow& row : sweep(spec)) {
    if (!row.feasible) continue;
    ++feasible;
    const CycleReport& r = row.report;
    const double excess = r.w_net - 2.0 * r.w_loc;
    const auto where = [&] { return "J/B=" + fmt(row.j_over_b); };
    t.expect(excess >= -1e-12, [&] { return "W_net - 2 W_loc = " + fmt(excess) + " at " + where(); });
    t.expect(near(excess, r.coupling_work, 1e-10), [&] {
      return "W_net - 2 W_loc = " + fmt(excess) + " vs bracket " + fmt(r.coupling_work) + " at " + where();
    });
  }
  t.expect(feasible > 0, [] { return std::string("no feasible J/B on the grid"); });
  return t.result();
}

// The W_loc sign change at kT_A = 0.5 B lies near J/B = 3.2, so the sweep
// extends to J/B = 6.
inline constexpr double kRefrigeratorSweepHi = 6.0;
inline constexpr int kRefrigeratorSweepPoints = 120;

inline CriterionResult refrigerator_regime(Coupling model = Coupling::XX) {
  Tally t(8, std::string("refrigerator regime beyond the W_loc threshold [") + model_name(model) + "]");
  const SweepSpec spec =
      figure_sweep(CycleKind::FixedFy, model, 0.05, kRefrigeratorSweepHi, kRefrigeratorSweepPoints);
  const std::vector<SweepRow> rows = sweep(spec);
  std::optional<double> threshold;
  t.guarded("threshold search", [&] { threshold = refrigerator_threshold(spec, rows); });
  t.expect(threshold.has_value(), [] { return std::string("no W_loc sign change between feasible rows"); });
  std::size_t beyond = 0;
  for (const SweepRow& row : rows) {
    if (!row.feasible) continue;
    const CycleReport& r = row.report;
    const auto where = [&] { return "J/B=" + fmt(row.j_over_b); };
    const bool by_population = r.p_e_b < r.p_e_a;
    const bool by_heat = r.q1_loc < 0.0;
    t.expect(r.refrigerator == by_population && by_population == by_heat, [&] {
      return "indicators disagree at " + where() + ": flag=" + std::to_string(r.refrigerator) +
             " p_eB<p_eA=" + std::to_string(by_population) + " Q1_loc<0=" + std::to_string(by_heat);
    });
    if (threshold && row.j_over_b > *threshold) {
      ++beyond;
      t.expect(r.q1_loc < 0.0 && r.q2_loc > 0.0 && r.w_loc < 0.0 && r.w_net > 0.0 && r.refrigerator, [&] {
        return "beyond J*: Q1_loc=" + fmt(r.q1_loc) + " Q2_loc=" + fmt(r.q2_loc) + " W_loc=" + fmt(r.w_loc) +
               " W_net=" + fmt(r.w_net) + " at " + where();
      });
    }
  }
  t.expect(!threshold || beyond > 0, [] { return std::string("no feasible sweep point beyond J*"); });
  return t.result();
}

inline CriterionResult isothermal_directions(Coupling model = Coupling::XX) {
  Tally t(9, std::string("isothermal heat directions at B = J, beta = 20 [") + model_name(model) + "]");
  const CoupledPair pair = make_pair(model, 1.0, 1.0);
  t.guarded("dB bump", [&] {
    const HeatDirections d = isothermal_heat_directions(pair, 20.0, Bump::Field, 0.01);
    t.expect(d.total == HeatFlow::Release, [&] { return "dB: total heat " + fmt(d.total_heat); });
    t.expect(d.local == HeatFlow::Release, [&] { return "dB: local heat " + fmt(d.local_heat); });
    t.expect(std::abs(d.start.p_excited - 0.25) <= 1e-2 && std::abs(1.0 - d.start.p_excited - 0.75) <= 1e-2,
             [&] { return "start excited population " + fmt(d.start.p_excited) + " vs 1/4"; });
  });
  t.guarded("dJ bump", [&] {
    const HeatDirections d = isothermal_heat_directions(pair, 20.0, Bump::Coupling, 0.01);
    t.expect(d.total == HeatFlow::Release, [&] { return "dJ: total heat " + fmt(d.total_heat); });
    t.expect(d.local == HeatFlow::Absorb, [&] { return "dJ: local heat " + fmt(d.local_heat); });
  });
  return t.result();
}

// Criteria 1-9 on GeneralXY with gamma = delta = 0, direct agreement with
// the XX values, and the anisotropic spectrum against the force oracles.
inline CriterionResult general_xy_regression() {
  Tally t(10, "GeneralXY regression and anisotropic force oracle");
  const Coupling xy = Coupling::GeneralXY;
  for (const auto& suite : {identities(xy), force_oracles(xy), adiabats(xy), cycle_equivalence(xy), closure(xy),
                            uncoupled_limit(xy), coupling_enhancement(xy), refrigerator_regime(xy),
                            isothermal_directions(xy)}) {
    t.merge(suite);
  }
  constexpr int n = 20;
  for (int i = 0; i < n; ++i) {
    const double b = 0.2 + 2.8 * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double jj = 3.0 * j / (n - 1);
      for (int k = 0; k < n; ++k) {
        const double beta = 0.1 + 19.9 * k / (n - 1);
        const ThermalPoint a(CoupledPair::xx(b, jj), beta);
        const ThermalPoint g(CoupledPair::general_xy(b, jj, 0.0, 0.0), beta);
        const auto where = [&] { return "B=" + fmt(b) + " J=" + fmt(jj) + " beta=" + fmt(beta); };
        bool same_levels = true;
        for (std::size_t q = 0; q < 4; ++q) same_levels = same_levels && a.spectrum().energy(q) == g.spectrum().energy(q);
        t.expect(same_levels, [&] { return "XY(0,0) spectrum differs from XX at " + where(); });
        std::array<double, 5> va = {internal_energy(a), entropy(a), force(a, Coordinate::X),
                                    reduced_local_state(a).force_loc, excited_population(a)};
        std::array<double, 5> vg = {internal_energy(g), entropy(g), force(g, Coordinate::X),
                                    reduced_local_state(g).force_loc, excited_population(g)};
        for (std::size_t q = 0; q < va.size(); ++q) {
          t.expect(near(va[q], vg[q], 1e-12), [&] { return "XY(0,0) value " + std::to_string(q) + " differs at " + where(); });
        }
        if (jj > 0.0) {
          const double fa = force(a, Coordinate::Y);
          const double fg = force(g, Coordinate::Y);
          t.expect(near(fa, fg, 1e-12), [&] { return "XY(0,0) F_y differs at " + where(); });
        }
      }
    }
  }
  const CoupledPair aniso = CoupledPair::general_xy(1.0, 0.5, 0.3, 0.2);
  const double r = std::hypot(1.0, 0.5 * 0.3);
  const std::array<double, 4> expected = {0.5 * 0.2 - r, -0.5 * 1.2, 0.5 * 0.8, 0.5 * 0.2 + r};
  const Spectrum sp = spectrum(aniso);
  for (std::size_t q = 0; q < 4; ++q) {
    t.expect(near(sp.energy(q), expected[q], 1e-15),
             [&] { return "E_" + std::to_string(q + 1) + "=" + fmt(sp.energy(q)) + " vs " + fmt(expected[q]); });
  }
  for (const double beta : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    for (const Coordinate which : {Coordinate::X, Coordinate::Y}) {
      const double f = force(ThermalPoint(aniso, beta), which);
      const double so = spectral_force_oracle(aniso, beta, which);
      const double fo = free_energy_force_oracle(aniso, beta, which);
      const auto where = [&] {
        return std::string(which == Coordinate::X ? "F_x" : "F_y") + " at beta=" + fmt(beta) + ": " + fmt(f);
      };
      t.expect(rel_near(f, so, 1e-8), [&] { return where() + " vs spectral oracle " + fmt(so); });
      t.expect(rel_near(f, fo, 1e-8), [&] { return where() + " vs free-energy oracle " + fmt(fo); });
    }
  }
  return t.result();
}

// Root finding, quadrature and finite-difference kernels against closed forms.
inline CriterionResult numerics_kernels() {
  Tally t(0, "numeric kernels: roots, quadrature, finite differences");
  const auto root_case = [&](const char* name, auto f, double lo, double hi, double expected) {
    t.guarded(name, [&] {
      const double x = find_root(f, lo, hi);
      t.expect(std::abs(x - expected) <= 1e-10 * std::max(1.0, std::abs(expected)),
               [&] { return std::string(name) + ": root " + fmt(x) + " vs " + fmt(expected); });
      t.expect(std::abs(f(x)) <= 1e-10 * (std::abs(f(lo)) + std::abs(f(hi))),
               [&] { return std::string(name) + ": residual " + fmt(f(x)); });
    });
  };
  root_case("x - 2", [](double x) { return x - 2.0; }, 0.0, 5.0, 2.0);
  root_case("tanh(x) - 1/2", [](double x) { return std::tanh(x) - 0.5; }, 0.0, 5.0, std::atanh(0.5));
  root_case("cos(x) - x", [](double x) { return std::cos(x) - x; }, 0.0, 1.0, 0.7390851332151607);
  root_case("x^3 - 10", [](double x) { return x * x * x - 10.0; }, 0.0, 4.0, std::cbrt(10.0));
  bool bracket_error = false;
  try {
    find_root([](double x) { return x * x; }, 1.0, 2.0);
  } catch (const BracketError&) {
    bracket_error = true;
  }
  t.expect(bracket_error, [] { return std::string("x^2 on [1, 2] did not raise BracketError"); });

  const auto quad_case = [&](const char* name, auto f, double a, double b, double expected) {
    t.guarded(name, [&] {
      const double v = integrate(f, a, b);
      t.expect(std::abs(v - expected) <= 1e-8 * std::max(1.0, std::abs(expected)),
               [&] { return std::string(name) + ": integral " + fmt(v) + " vs " + fmt(expected); });
    });
  };
  quad_case("1 on [0, 3]", [](double) { return 1.0; }, 0.0, 3.0, 3.0);
  quad_case("cosh on [0, 2]", [](double x) { return std::cosh(x); }, 0.0, 2.0, std::sinh(2.0));
  quad_case("x on [1, 1]", [](double x) { return x; }, 1.0, 1.0, 0.0);
  quad_case("exp on [2, 0]", [](double x) { return std::exp(x); }, 2.0, 0.0, 1.0 - std::exp(2.0));

  for (int i = 0; i < 100; ++i) {
    const double x = -3.0 + 6.0 * i / 99.0;
    const auto where = [&] { return "x=" + fmt(x); };
    t.guarded(where(), [&] {
      const double de = central_diff([](double v) { return std::exp(v); }, x);
      const double dc = central_diff([](double v) { return std::cosh(v); }, x);
      const double dt = central_diff([](double v) { return std::tanh(v); }, x);
      const double th = std::tanh(x);
      t.expect(rel_near(de, std::exp(x), 1e-7), [&] { return "d exp at " + where(); });
      t.expect(rel_near(dc, std::sinh(x), 1e-7), [&] { return "d cosh at " + where(); });
      t.expect(rel_near(dt, 1.0 - th * th, 1e-7), [&] { return "d tanh at " + where(); });
    });
  }
  return t.result();
}

inline CriterionResult run_criterion(int id) {
  switch (id) {
    case 1: return identities();
    case 2: return force_oracles();
    case 3: return adiabats();
    case 4: return cycle_equivalence();
    case 5: return closure();
    case 6: return uncoupled_limit();
    case 7: return coupling_enhancement();
    case 8: return refrigerator_regime();
    case 9: return isothermal_directions();
    case 10: return general_xy_regression();
    default: throw DomainError("no acceptance criterion " + std::to_string(id));
  }
}

inline constexpr int kCriteria = 10;

inline std::string summary_line(const CriterionResult& r) {
  std::string line = std::string(r.pass() ? "PASS" : "FAIL") + "  [" + std::to_string(r.id) + "] " + r.title + " (" +
                     std::to_string(r.checks - r.failures) + "/" + std::to_string(r.checks) + " checks)";
  if (!r.first_failure.empty()) line += "\n      first failure: " + r.first_failure;
  return line;
}

}  // namespace qbrayton::verify
