#pragma once

// Working substances (a single spin-1/2 in a field, a coupled spin-1/2 pair)
// and their Gibbs-state thermodynamics. Units: hbar = k = 1, energies in
// units of a reference field, beta in inverse energy.
//
// Internal parameterization is (B, J, beta). The generalized coordinates
// X = 1/B (L for the single spin) and Y = 1/J are derived views; Y is
// undefined for an uncoupled pair.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include "qbrayton/errors.hpp"

namespace qbrayton {

enum class Coupling { XX, GeneralXY };

// Generalized coordinate a force is conjugate to.
enum class Coordinate { X, Y };

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline void require_positive(double v, std::string_view what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite, got " + num(v));
  }
}

}  // namespace detail

class SpinHalf {
 public:
  explicit SpinHalf(double field) : field_(field) { detail::require_positive(field, "spin field B"); }

  static SpinHalf from_coordinate(double length) {
    detail::require_positive(length, "spin coordinate L");
    return SpinHalf(1.0 / length);
  }

  double field() const { return field_; }
  double coordinate() const { return 1.0 / field_; }

 private:
  double field_;
};

class CoupledPair {
 public:
  static CoupledPair xx(double field, double coupling) {
    return CoupledPair(field, coupling, Coupling::XX, 0.0, 0.0);
  }

  static CoupledPair general_xy(double field, double coupling, double gamma, double delta) {
    return CoupledPair(field, coupling, Coupling::GeneralXY, gamma, delta);
  }

  double field() const { return field_; }
  double coupling() const { return coupling_; }
  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  Coupling model() const { return model_; }

  double x() const { return 1.0 / field_; }
  double y() const {
    if (coupling_ == 0.0) throw DomainError("coordinate Y = 1/J is undefined for J = 0");
    return 1.0 / coupling_;
  }

  CoupledPair with_field(double field) const { return {field, coupling_, model_, gamma_, delta_}; }
  CoupledPair with_coupling(double coupling) const { return {field_, coupling, model_, gamma_, delta_}; }
  CoupledPair with(double field, double coupling) const { return {field, coupling, model_, gamma_, delta_}; }

 private:
  CoupledPair(double field, double coupling, Coupling model, double gamma, double delta)
      : field_(field), coupling_(coupling), gamma_(gamma), delta_(delta), model_(model) {
    detail::require_positive(field, "pair field B");
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) {
      throw DomainError("coupling J must be >= 0 (antiferromagnetic or uncoupled), got " +
                        detail::num(coupling));
    }
    if (!std::isfinite(gamma) || !std::isfinite(delta)) {
      throw DomainError("anisotropy parameters must be finite");
    }
  }

  double field_;
  double coupling_;
  double gamma_;
  double delta_;
  Coupling model_;
};

using Substance = std::variant<SpinHalf, CoupledPair>;

inline double field_of(const Substance& s) {
  return std::visit([](const auto& v) { return v.field(); }, s);
}

inline double coupling_of(const Substance& s) {
  if (const auto* pair = std::get_if<CoupledPair>(&s)) return pair->coupling();
  return 0.0;
}

inline bool is_pair(const Substance& s) { return std::holds_alternative<CoupledPair>(s); }

// Same model with the field and coupling replaced.
inline Substance with_parameters(const Substance& s, double field, double coupling) {
  if (const auto* pair = std::get_if<CoupledPair>(&s)) return pair->with(field, coupling);
  return SpinHalf(field);
}

// Value of the generalized coordinate (X or L for Coordinate::X, Y otherwise).
inline double coordinate_of(const Substance& s, Coordinate which) {
  if (which == Coordinate::X) return 1.0 / field_of(s);
  const auto* pair = std::get_if<CoupledPair>(&s);
  if (pair == nullptr) throw DomainError("a single spin has no coupling coordinate Y");
  return pair->y();
}

// ---------------------------------------------------------------------------
// Spectrum

struct Level {
  double energy = 0.0;
  std::string_view label;
};

class Spectrum {
 public:
  Spectrum(std::initializer_list<Level> levels) : size_(levels.size()) {
    std::copy(levels.begin(), levels.end(), levels_.begin());
  }

  std::span<const Level> levels() const { return {levels_.data(), size_}; }
  std::size_t size() const { return size_; }
  double energy(std::size_t n) const { return levels_[n].energy; }
  double lowest() const {
    double e = levels_[0].energy;
    for (std::size_t n = 1; n < size_; ++n) e = std::min(e, levels_[n].energy);
    return e;
  }

 private:
  std::array<Level, 4> levels_{};
  std::size_t size_;
};

namespace detail {

inline double anisotropic_gap(const CoupledPair& p) {
  return std::hypot(p.field(), p.coupling() * p.gamma());
}

}  // namespace detail

// Closed-form levels. Pair levels keep the eigenstate order psi1..psi4
// (never sorted): XX gives {-B, -J, J, B}.
inline Spectrum spectrum(const SpinHalf& s) {
  return {{-0.5 * s.field(), "down"}, {0.5 * s.field(), "up"}};
}

inline Spectrum spectrum(const CoupledPair& p) {
  const double b = p.field();
  const double j = p.coupling();
  if (p.model() == Coupling::XX) {
    return {{-b, "psi1"}, {-j, "psi2"}, {j, "psi3"}, {b, "psi4"}};
  }
  const double r = detail::anisotropic_gap(p);
  const double d = p.delta();
  return {{j * d - r, "psi1"}, {-j * (1.0 + d), "psi2"}, {j * (1.0 - d), "psi3"}, {j * d + r, "psi4"}};
}

inline Spectrum spectrum(const Substance& s) {
  return std::visit([](const auto& v) { return spectrum(v); }, s);
}

// Analytic first and second derivatives of every level with respect to B and J.
struct SpectralDerivatives {
  std::array<double, 4> d_field{};
  std::array<double, 4> d_coupling{};
  std::array<double, 4> d2_field{};
  std::array<double, 4> d2_coupling{};
};

inline SpectralDerivatives spectral_derivatives(const Substance& s) {
  SpectralDerivatives d;
  if (const auto* pair = std::get_if<CoupledPair>(&s)) {
    if (pair->model() == Coupling::XX) {
      d.d_field = {-1.0, 0.0, 0.0, 1.0};
      d.d_coupling = {0.0, -1.0, 1.0, 0.0};
      return d;
    }
    const double b = pair->field();
    const double j = pair->coupling();
    const double g2 = pair->gamma() * pair->gamma();
    const double dl = pair->delta();
    const double r = detail::anisotropic_gap(*pair);
    const double r3 = r * r * r;
    d.d_field = {-b / r, 0.0, 0.0, b / r};
    d.d_coupling = {dl - j * g2 / r, -(1.0 + dl), 1.0 - dl, dl + j * g2 / r};
    d.d2_field = {-j * j * g2 / r3, 0.0, 0.0, j * j * g2 / r3};
    d.d2_coupling = {-g2 * b * b / r3, 0.0, 0.0, g2 * b * b / r3};
    return d;
  }
  d.d_field = {-0.5, 0.5, 0.0, 0.0};
  return d;
}

// ---------------------------------------------------------------------------
// Gibbs state

struct GibbsWeights {
  std::array<double, 4> probs{};
  double log_partition = 0.0;
};

// p_n = exp(-beta E_n) / Z, evaluated with the lowest level factored out.
inline GibbsWeights gibbs_weights(const Spectrum& spec, double beta) {
  detail::require_positive(beta, "inverse temperature beta");
  GibbsWeights g;
  const double e0 = spec.lowest();
  double sum = 0.0;
  for (std::size_t n = 0; n < spec.size(); ++n) {
    g.probs[n] = std::exp(-beta * (spec.energy(n) - e0));
    sum += g.probs[n];
  }
  for (std::size_t n = 0; n < spec.size(); ++n) g.probs[n] /= sum;
  g.log_partition = -beta * e0 + std::log(sum);
  return g;
}

class ThermalPoint {
 public:
  ThermalPoint(Substance substance, double beta)
      : substance_(std::move(substance)), beta_(beta), spectrum_(qbrayton::spectrum(substance_)) {
    const GibbsWeights g = gibbs_weights(spectrum_, beta);
    probs_ = g.probs;
    log_partition_ = g.log_partition;
  }

  const Substance& substance() const { return substance_; }
  double beta() const { return beta_; }
  double temperature() const { return 1.0 / beta_; }
  const Spectrum& spectrum() const { return spectrum_; }
  std::span<const double> probs() const { return {probs_.data(), spectrum_.size()}; }
  double prob(std::size_t n) const { return probs_[n]; }
  double log_partition() const { return log_partition_; }
  double partition() const { return std::exp(log_partition_); }

  double field() const { return field_of(substance_); }
  double coupling() const { return coupling_of(substance_); }

 private:
  Substance substance_;
  double beta_;
  Spectrum spectrum_;
  std::array<double, 4> probs_{};
  double log_partition_ = 0.0;
};

inline ThermalPoint gibbs(const Substance& s, double beta) { return ThermalPoint(s, beta); }

// <a> and Cov(a, b) under the Gibbs distribution of tp.
inline double expectation(const ThermalPoint& tp, const std::array<double, 4>& a) {
  double sum = 0.0;
  for (std::size_t n = 0; n < tp.spectrum().size(); ++n) sum += tp.prob(n) * a[n];
  return sum;
}

inline double covariance(const ThermalPoint& tp, const std::array<double, 4>& a,
                         const std::array<double, 4>& b) {
  const double ma = expectation(tp, a);
  const double mb = expectation(tp, b);
  double sum = 0.0;
  for (std::size_t n = 0; n < tp.spectrum().size(); ++n) sum += tp.prob(n) * (a[n] - ma) * (b[n] - mb);
  return sum;
}

inline std::array<double, 4> energies(const ThermalPoint& tp) {
  std::array<double, 4> e{};
  for (std::size_t n = 0; n < tp.spectrum().size(); ++n) e[n] = tp.spectrum().energy(n);
  return e;
}

// S = -sum p ln p, with 0 ln 0 = 0.
inline double entropy(const ThermalPoint& tp) {
  double s = 0.0;
  for (const double p : tp.probs()) {
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

inline double internal_energy(const ThermalPoint& tp) { return expectation(tp, energies(tp)); }

// -ln(Z) / beta.
inline double free_energy(const Substance& s, double beta) {
  return -gibbs_weights(spectrum(s), beta).log_partition / beta;
}

// ---------------------------------------------------------------------------
// Generalized forces

// F = -tanh(beta / 2L) / (2 L^2) for the spin-1/2 with coordinate L = 1/B.
inline double single_spin_force(double length, double beta) {
  detail::require_positive(length, "spin coordinate L");
  detail::require_positive(beta, "inverse temperature beta");
  return -std::tanh(beta / (2.0 * length)) / (2.0 * length * length);
}

namespace detail {

// sinh(beta*own) / (cosh(beta*own) + cosh(beta*other)); numerator and
// denominator both carry a factor exp(-beta*max(own, other)) when large.
inline double xx_force_ratio(double own, double other, double beta) {
  const double m = std::max(own, other);
  if (beta * m < 300.0) {
    return std::sinh(beta * own) / (std::cosh(beta * own) + std::cosh(beta * other));
  }
  const double scale = std::exp(-beta * m);
  const auto scaled_cosh = [&](double a) {
    return 0.5 * (std::exp(beta * (a - m)) + std::exp(-beta * (a + m)));
  };
  const double scaled_sinh = beta * own < 1.0
                                 ? std::sinh(beta * own) * scale
                                 : 0.5 * (std::exp(beta * (own - m)) - std::exp(-beta * (own + m)));
  return scaled_sinh / (scaled_cosh(own) + scaled_cosh(other));
}

}  // namespace detail

// F_x (conjugate to X = 1/B) or F_y (conjugate to Y = 1/J).
// XX: F_x = -B^2 sinh(beta B) / (cosh(beta B) + cosh(beta J)), F_y likewise.
// GeneralXY: F_x = B^2 <dE/dB>, F_y = J^2 <dE/dJ>.
inline double generalized_force(const CoupledPair& p, double beta, Coordinate which) {
  detail::require_positive(beta, "inverse temperature beta");
  if (which == Coordinate::Y && p.coupling() == 0.0) {
    throw DomainError("force F_y requires J > 0 (Y = 1/J undefined at J = 0)");
  }
  const double b = p.field();
  const double j = p.coupling();
  if (p.model() == Coupling::XX) {
    return which == Coordinate::X ? -b * b * detail::xx_force_ratio(b, j, beta)
                                  : -j * j * detail::xx_force_ratio(j, b, beta);
  }
  const ThermalPoint tp(p, beta);
  const SpectralDerivatives d = spectral_derivatives(p);
  return which == Coordinate::X ? b * b * expectation(tp, d.d_field)
                                : j * j * expectation(tp, d.d_coupling);
}

// Force at a thermal point for either substance; a single spin only has X (= L).
inline double force(const ThermalPoint& tp, Coordinate which) {
  if (const auto* pair = std::get_if<CoupledPair>(&tp.substance())) {
    return generalized_force(*pair, tp.beta(), which);
  }
  if (which == Coordinate::Y) throw DomainError("a single spin has no coupling force F_y");
  return single_spin_force(1.0 / tp.field(), tp.beta());
}

// F times its coordinate: F_x X = B <dE/dB>, F_y Y = J <dE/dJ>. The Y term is
// zero for an uncoupled pair, where Y itself is undefined.
inline double force_times_coordinate(const ThermalPoint& tp, Coordinate which) {
  if (which == Coordinate::X) return force(tp, Coordinate::X) / tp.field();
  if (!is_pair(tp.substance())) throw DomainError("a single spin has no coupling force F_y");
  if (tp.coupling() == 0.0) return 0.0;
  return force(tp, Coordinate::Y) / tp.coupling();
}

// Partial derivatives of the held force at fixed other parameter:
// dF/dbeta and dF/dparam, param being B for X and J for Y.
struct ForceSensitivity {
  double d_beta = 0.0;
  double d_param = 0.0;
};

inline ForceSensitivity force_sensitivity(const ThermalPoint& tp, Coordinate which) {
  const SpectralDerivatives d = spectral_derivatives(tp.substance());
  const auto e = energies(tp);
  const bool x = which == Coordinate::X;
  const double param = x ? tp.field() : tp.coupling();
  const auto& first = x ? d.d_field : d.d_coupling;
  const auto& second = x ? d.d2_field : d.d2_coupling;
  const double mean_first = expectation(tp, first);
  ForceSensitivity s;
  s.d_beta = -param * param * covariance(tp, first, e);
  s.d_param = 2.0 * param * mean_first +
              param * param * (expectation(tp, second) - tp.beta() * covariance(tp, first, first));
  return s;
}

// ---------------------------------------------------------------------------
// Reduced (single-spin) state of a pair

struct LocalState {
  double p_excited = 0.0;  // population of the local excited level +B/2
  double beta_loc = 0.0;   // effective inverse temperature of the reduced state
  double force_loc = 0.0;  // single-spin force at beta_loc and coordinate X

  double temperature_loc() const { return 1.0 / beta_loc; }
};

// Excited-level weight of each pair eigenstate in one spin's reduced state.
// XX: {0, 1/2, 1/2, 1}. GeneralXY: psi1 = cos(t)|11> - sin(t)|00>, so the
// |11> component cos^2(t) = (J gamma)^2 / ((J gamma)^2 + (B + R)^2).
inline std::array<double, 4> excited_weights(const CoupledPair& p) {
  if (p.model() == Coupling::XX) return {0.0, 0.5, 0.5, 1.0};
  const double c = p.coupling() * p.gamma();
  const double q = p.field() + detail::anisotropic_gap(p);
  const double w1 = c * c / (c * c + q * q);
  return {w1, 0.5, 0.5, 1.0 - w1};
}

// d(excited_weights)/ds along a parameter change (dB/ds, dJ/ds).
inline std::array<double, 4> excited_weights_rate(const CoupledPair& p, double d_field,
                                                  double d_coupling) {
  if (p.model() == Coupling::XX) return {0.0, 0.0, 0.0, 0.0};
  const double r = detail::anisotropic_gap(p);
  const double c = p.coupling() * p.gamma();
  const double q = p.field() + r;
  const double dc = p.gamma() * d_coupling;
  const double dq = d_field + (p.field() * d_field + p.coupling() * p.gamma() * p.gamma() * d_coupling) / r;
  const double den = c * c + q * q;
  const double dw1 = 2.0 * c * q * (q * dc - c * dq) / (den * den);
  return {dw1, 0.0, 0.0, -dw1};
}

inline double excited_population(const ThermalPoint& tp) {
  const auto* pair = std::get_if<CoupledPair>(&tp.substance());
  if (pair == nullptr) return tp.prob(1);
  return expectation(tp, excited_weights(*pair));
}

inline LocalState reduced_local_state(const ThermalPoint& tp) {
  const auto* pair = std::get_if<CoupledPair>(&tp.substance());
  if (pair == nullptr) throw DomainError("reduced state requires a coupled pair");
  const auto w = excited_weights(*pair);
  double excited = 0.0;
  double ground = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    excited += w[n] * tp.prob(n);
    ground += (1.0 - w[n]) * tp.prob(n);
  }
  const double x = pair->x();
  LocalState s;
  s.p_excited = excited;
  s.beta_loc = x * std::log(ground / excited);
  s.force_loc = -std::tanh(s.beta_loc / (2.0 * x)) / (2.0 * x * x);
  return s;
}

inline LocalState reduced_local_state(const CoupledPair& p, double beta) {
  return reduced_local_state(ThermalPoint(p, beta));
}

// Local energy of one spin, levels +-B/2: U_loc = B (p_e - 1/2).
inline double local_energy(const ThermalPoint& tp) {
  return tp.field() * (excited_population(tp) - 0.5);
}

}  // namespace qbrayton
