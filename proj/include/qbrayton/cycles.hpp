#pragma once

// Reversible quantum Brayton cycles A -> B -> C -> D -> A:
//   stage 1  A -> B  isobar at F_high, coordinate shrinks by r
//   stage 2  B -> C  adiabat, all coordinates and beta scale by lambda
//   stage 3  C -> D  isobar at F_low = phi F_high
//   stage 4  D -> A  adiabat back, scale 1/lambda
// with lambda = 1/sqrt(phi) (F X^2 is invariant on adiabats).
//
// The subsystem (one spin of a pair) runs a Brayton cycle at F_loc = F_x/2
// when F_x is held, and an Otto cycle when F_y is held (local levels are
// fixed while only J moves).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qbrayton/errors.hpp"
#include "qbrayton/numerics.hpp"
#include "qbrayton/processes.hpp"
#include "qbrayton/substance.hpp"

namespace qbrayton {

enum class CycleKind { SingleSpin, FixedFx, FixedFy };

inline const char* to_string(CycleKind k) {
  switch (k) {
    case CycleKind::SingleSpin: return "single-spin";
    case CycleKind::FixedFx: return "fixed-fx";
    case CycleKind::FixedFy: return "fixed-fy";
  }
  return "?";
}

// Coordinate whose conjugate force is held on the isobars.
inline Coordinate held_coordinate(CycleKind k) { return k == CycleKind::FixedFy ? Coordinate::Y : Coordinate::X; }

struct BraytonSpec {
  CycleKind kind = CycleKind::FixedFx;
  ThermalPoint anchor;             // corner A
  double compression_ratio = 3.0;  // r = X_A/X_B (Y_A/Y_B for FixedFy)
  double pressure_ratio = 0.25;    // phi = F_low/F_high
  int n_samples = kDefaultPathSamples;

  void validate() const {
    if (!(compression_ratio > 1.0) || !std::isfinite(compression_ratio)) {
      throw DomainError("compression ratio r must exceed 1 for heat intake on stage 1, got " +
                        detail::num(compression_ratio));
    }
    if (!(pressure_ratio > 0.0) || !(pressure_ratio <= 1.0)) {
      throw DomainError("pressure ratio phi must lie in (0, 1], got " + detail::num(pressure_ratio));
    }
    const bool pair = is_pair(anchor.substance());
    if (kind == CycleKind::SingleSpin && pair) throw DomainError("single-spin cycle needs a spin-1/2 anchor");
    if (kind != CycleKind::SingleSpin && !pair) throw DomainError("coupled cycle needs a coupled-pair anchor");
    if (kind == CycleKind::FixedFy && !(anchor.coupling() > 0.0)) {
      throw DomainError("fixed-F_y cycle needs J > 0 at the anchor");
    }
  }
};

struct CornerSet {
  ThermalPoint a;
  ThermalPoint b;
  ThermalPoint c;
  ThermalPoint d;
  double lambda = 1.0;
  double closure_residual = 0.0;  // |beta_D - lambda beta_A| / (lambda beta_A)
  Path stage1;                    // A -> B
  Path stage3;                    // C -> D
};

inline constexpr double kClosureTolerance = 1e-8;

inline CornerSet solve_corners(const BraytonSpec& spec, const Tolerances& tol = {}) {
  spec.validate();
  const Coordinate which = held_coordinate(spec.kind);
  const ThermalPoint& a = spec.anchor;
  const double lambda = 1.0 / std::sqrt(spec.pressure_ratio);
  const double coord_a = coordinate_of(a.substance(), which);

  Path stage1 = build_isobar(a, which, coord_a / spec.compression_ratio, spec.n_samples, tol);
  ThermalPoint b = stage1.back();
  ThermalPoint c(with_parameters(b.substance(), b.field() / lambda, b.coupling() / lambda), b.beta() * lambda);
  Path stage3 = build_isobar(c, which, coord_a * lambda, spec.n_samples, tol);
  ThermalPoint d = stage3.back();

  const double expected = lambda * a.beta();
  const double residual = std::abs(d.beta() - expected) / expected;
  if (!(residual <= kClosureTolerance)) {
    throw NonClosure("stage-3 isobar ends at beta_D = " + detail::num(d.beta()) + " but the adiabat from A gives " +
                     detail::num(expected) + " (relative residual " + detail::num(residual) + ")");
  }
  return {a, std::move(b), std::move(c), std::move(d), lambda, residual, std::move(stage1),
          std::move(stage3)};
}

// Every ratio of the closed chain; each equals phi for a reversible cycle.
// Ratios that need Y are omitted for an uncoupled pair.
inline std::vector<double> ratio_chain(const CornerSet& k, CycleKind kind) {
  const Coordinate held = held_coordinate(kind);
  const Coordinate other = held == Coordinate::X ? Coordinate::Y : Coordinate::X;
  const auto coord = [](const ThermalPoint& p, Coordinate w) { return coordinate_of(p.substance(), w); };
  const auto sq = [](double v) { return v * v; };
  std::vector<double> out = {
      sq(coord(k.b, held) / coord(k.c, held)),
      sq(coord(k.a, held) / coord(k.d, held)),
      force(k.c, held) / force(k.a, held),
      force(k.d, held) / force(k.a, held),
  };
  if (kind == CycleKind::SingleSpin) return out;
  if (other == Coordinate::Y && k.a.coupling() == 0.0) return out;
  out.push_back(sq(coord(k.a, other) / coord(k.d, other)));
  out.push_back(force(k.c, other) / force(k.b, other));
  out.push_back(force(k.d, other) / force(k.a, other));
  return out;
}

struct CycleReport {
  double q_in = 0.0;   // absorbed on stage 1
  double q_out = 0.0;  // released on stage 3
  double w_net = 0.0;
  double eta = 0.0;
  double q1_loc = 0.0;  // one spin, absorbed on stage 1 (signed)
  double q2_loc = 0.0;  // one spin, absorbed on stage 3 (signed)
  double w_loc = 0.0;
  std::optional<double> eta_loc;  // only when the spin runs as an engine
  bool refrigerator = false;
  double p_e_a = 0.0;
  double p_e_b = 0.0;
  double coupling_work = 0.0;  // (G_B - G_A) - (G_C - G_D); W_net - 2 W_loc for fixed F_x

  // W_net / (2 W_loc) for a pair, W_net / W_loc for the single spin.
  double w_ratio(CycleKind kind) const {
    return w_net / ((kind == CycleKind::SingleSpin ? 1.0 : 2.0) * w_loc);
  }
};

inline constexpr double kEfficiencyTolerance = 1e-10;

// Closed forms. Stage-1 heat is Q = dU + F_1 dcoord with U = F_x X + F_y Y:
// Q_AB = 2 F_1 (c_B - c_A) + (G_B - G_A), G being the other force times its
// coordinate (zero for the single spin).
inline CycleReport brayton_report(const CornerSet& k, const BraytonSpec& spec) {
  const Coordinate held = held_coordinate(spec.kind);
  const Coordinate other = held == Coordinate::X ? Coordinate::Y : Coordinate::X;
  const bool pair = spec.kind != CycleKind::SingleSpin;
  const auto coord = [&](const ThermalPoint& p) { return coordinate_of(p.substance(), held); };
  const auto g = [&](const ThermalPoint& p) { return pair ? force_times_coordinate(p, other) : 0.0; };

  const double f_high = force(k.a, held);
  const double f_low = force(k.c, held);
  CycleReport r;
  r.q_in = 2.0 * f_high * (coord(k.b) - coord(k.a)) + (g(k.b) - g(k.a));
  r.q_out = 2.0 * f_low * (coord(k.c) - coord(k.d)) + (g(k.c) - g(k.d));
  r.w_net = r.q_in - r.q_out;
  r.eta = 1.0 - std::sqrt(spec.pressure_ratio);
  // Q_out = (1 - eta) Q_in up to rounding of the individual terms.
  const double scale = std::abs(2.0 * f_high * (coord(k.b) - coord(k.a))) + std::abs(g(k.b)) + std::abs(g(k.a));
  if (std::abs(r.q_out - (1.0 - r.eta) * r.q_in) > kEfficiencyTolerance * scale) {
    throw NonClosure("heat ratio efficiency " + detail::num(1.0 - r.q_out / r.q_in) + " differs from 1 - sqrt(phi) = " +
                     detail::num(r.eta));
  }
  r.p_e_a = excited_population(k.a);
  r.p_e_b = excited_population(k.b);

  switch (spec.kind) {
    case CycleKind::SingleSpin:
      r.q1_loc = r.q_in;
      r.q2_loc = -r.q_out;
      r.w_loc = r.w_net;
      if (r.w_loc > 0.0) r.eta_loc = r.eta;
      break;
    case CycleKind::FixedFx: {
      // Local Brayton cycle at F_loc = F_x / 2 on the same X corners.
      const double f_loc_high = reduced_local_state(k.a).force_loc;
      const double f_loc_low = reduced_local_state(k.c).force_loc;
      r.q1_loc = 2.0 * f_loc_high * (coord(k.b) - coord(k.a));
      r.q2_loc = 2.0 * f_loc_low * (coord(k.d) - coord(k.c));
      r.w_loc = r.q1_loc + r.q2_loc;
      if (r.w_loc > 0.0) r.eta_loc = 1.0 - std::sqrt(f_loc_low / f_loc_high);
      break;
    }
    case CycleKind::FixedFy: {
      // Local Otto cycle: levels +-B/2 fixed on each isobar.
      const double p_e_c = excited_population(k.c);
      const double p_e_d = excited_population(k.d);
      r.q1_loc = k.a.field() * (r.p_e_b - r.p_e_a);
      r.q2_loc = k.c.field() * (p_e_d - p_e_c);
      r.w_loc = r.q1_loc + r.q2_loc;
      if (r.w_loc > 0.0) r.eta_loc = 1.0 - (1.0 / k.a.field()) / (1.0 / k.c.field());
      break;
    }
  }
  r.refrigerator = r.p_e_b < r.p_e_a;
  r.coupling_work = pair ? (g(k.b) - g(k.a)) - (g(k.c) - g(k.d)) : 0.0;
  return r;
}

// The same report by line integration over the four stage paths.
inline CycleReport oracle_report(const CornerSet& k, const BraytonSpec& spec) {
  const Path stage2 = build_adiabat(k.b, k.lambda, spec.n_samples);
  const Path stage4 = build_adiabat(k.d, 1.0 / k.lambda, spec.n_samples);
  const HeatWork s1 = heat_work(k.stage1);
  const HeatWork s2 = heat_work(stage2);
  const HeatWork s3 = heat_work(k.stage3);
  const HeatWork s4 = heat_work(stage4);

  CycleReport r;
  r.q_in = s1.heat;
  r.q_out = -s3.heat;
  r.w_net = s1.work_by + s2.work_by + s3.work_by + s4.work_by;
  r.eta = 1.0 - r.q_out / r.q_in;
  r.p_e_a = excited_population(k.a);
  r.p_e_b = excited_population(k.b);
  if (spec.kind == CycleKind::SingleSpin) {
    r.q1_loc = s1.heat;
    r.q2_loc = s3.heat;
    r.w_loc = r.w_net;
  } else {
    r.q1_loc = local_heat_along(k.stage1);
    r.q2_loc = local_heat_along(k.stage3);
    r.w_loc = r.q1_loc + local_heat_along(stage2) + r.q2_loc + local_heat_along(stage4);
    // on an isobar W_by = F dc and dU = 2 F dc + dG
    r.coupling_work = (s1.heat - 2.0 * s1.work_by) + (s3.heat - 2.0 * s3.work_by);
  }
  if (r.w_loc > 0.0) r.eta_loc = r.w_loc / r.q1_loc;
  r.refrigerator = r.q1_loc < 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps over J/B at corner A

enum class SweepHold { AnchorForce, AnchorTemperature };

struct SweepSpec {
  CycleKind kind = CycleKind::FixedFx;
  Coupling model = Coupling::XX;
  double gamma = 0.0;
  double delta = 0.0;
  double field = 1.0;  // B at corner A
  double lo = 0.0;     // J/B range
  double hi = 2.0;
  int points = 41;
  SweepHold hold = SweepHold::AnchorTemperature;
  double anchor_beta = 2.0;   // AnchorTemperature
  double anchor_force = 0.0;  // AnchorForce: F_high, negative
  double compression_ratio = 3.0;
  double pressure_ratio = 0.25;
  int n_samples = kDefaultPathSamples;

  void validate() const {
    if (kind == CycleKind::SingleSpin) throw DomainError("sweeps vary J/B and need a coupled cycle kind");
    if (points < 2) throw DomainError("sweep needs at least 2 points, got " + std::to_string(points));
    if (!(hi >= lo)) throw DomainError("sweep range needs hi >= lo");
    if (!(lo >= 0.0)) throw DomainError("sweep J/B must be >= 0");
    if (kind == CycleKind::FixedFy && !(lo > 0.0)) throw DomainError("fixed-F_y sweeps need J/B > 0");
    detail::require_positive(field, "sweep field B");
    if (hold == SweepHold::AnchorTemperature) detail::require_positive(anchor_beta, "anchor beta");
    if (hold == SweepHold::AnchorForce && !(anchor_force < 0.0)) {
      throw DomainError("anchor force must be negative, got " + detail::num(anchor_force));
    }
  }

  double j_over_b(int i) const {
    if (i == points - 1) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }

  CoupledPair pair(double j_over_b) const {
    return model == Coupling::XX ? CoupledPair::xx(field, j_over_b * field)
                                 : CoupledPair::general_xy(field, j_over_b * field, gamma, delta);
  }
};

struct SweepRow {
  double j_over_b = 0.0;
  double beta_a = std::numeric_limits<double>::quiet_NaN();
  double f_high = std::numeric_limits<double>::quiet_NaN();
  CycleReport report;
  double w_ratio = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
  std::string reason;  // why the point is infeasible
};

inline SweepRow sweep_point(const SweepSpec& spec, double j_over_b, const Tolerances& tol = {}) {
  SweepRow row;
  row.j_over_b = j_over_b;
  try {
    const CoupledPair pair = spec.pair(j_over_b);
    const Coordinate which = held_coordinate(spec.kind);
    if (spec.hold == SweepHold::AnchorTemperature) {
      row.beta_a = spec.anchor_beta;
      row.f_high = generalized_force(pair, row.beta_a, which);
    } else {
      row.f_high = spec.anchor_force;
      row.beta_a = solve_beta_lowest(pair, which, row.f_high, tol);
    }
    const BraytonSpec cycle{spec.kind, ThermalPoint(pair, row.beta_a), spec.compression_ratio, spec.pressure_ratio,
                            spec.n_samples};
    const CornerSet corners = solve_corners(cycle, tol);
    row.report = brayton_report(corners, cycle);
    row.w_ratio = row.report.w_ratio(spec.kind);
    row.feasible = true;
  } catch (const Error& e) {
    row.feasible = false;
    row.reason = e.what();
  }
  return row;
}

// Points are independent; workers = 0 uses the hardware concurrency. Rows
// come back in J/B order regardless of scheduling.
inline std::vector<SweepRow> sweep(const SweepSpec& spec, const Tolerances& tol = {}, unsigned workers = 0) {
  spec.validate();
  std::vector<SweepRow> rows(static_cast<std::size_t>(spec.points));
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(spec.points));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int i = static_cast<int>(w); i < spec.points; i += static_cast<int>(workers)) {
          rows[static_cast<std::size_t>(i)] = sweep_point(spec, spec.j_over_b(i), tol);
        }
      });
    }
  }
  return rows;
}

// First J/B where W_loc changes sign between two adjacent feasible rows,
// refined by root finding on W_loc(J/B) to 1e-7 relative.
inline std::optional<double> refrigerator_threshold(const SweepSpec& spec, const std::vector<SweepRow>& rows,
                                                    const Tolerances& tol = {}) {
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const SweepRow& lo = rows[i];
    const SweepRow& hi = rows[i + 1];
    if (!lo.feasible || !hi.feasible) continue;
    if ((lo.report.w_loc > 0.0) == (hi.report.w_loc > 0.0)) continue;
    Tolerances coarse = tol;
    coarse.root_rel = 1e-7;
    const auto w_loc = [&](double j) {
      const SweepRow r = sweep_point(spec, j, tol);
      if (!r.feasible) throw InfeasibleForce("threshold search left the feasible region at J/B = " + detail::num(j) +
                                             ": " + r.reason);
      return r.report.w_loc;
    };
    return find_root(w_loc, lo.j_over_b, hi.j_over_b, coarse);
  }
  return std::nullopt;
}

}  // namespace qbrayton
