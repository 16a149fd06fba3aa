#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "qbrayton/substance.hpp"
#include "qbrayton/verify.hpp"

using namespace qbrayton;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Direct Boltzmann weights for levels {-1, -0.5, 0.5, 1} at beta = 2.
struct Reference {
  double z = std::exp(2.0) + std::exp(1.0) + std::exp(-1.0) + std::exp(-2.0);
  std::array<double, 4> p = {std::exp(2.0) / z, std::exp(1.0) / z, std::exp(-1.0) / z, std::exp(-2.0) / z};
  std::array<double, 4> e = {-1.0, -0.5, 0.5, 1.0};
};

double sum_probs(const ThermalPoint& tp) {
  double s = 0.0;
  for (std::size_t n = 0; n < tp.spectrum().size(); ++n) s += tp.prob(n);
  return s;
}

}  // namespace

TEST_CASE("spectrum: closed forms", "[substance]") {
  const Spectrum xx = spectrum(CoupledPair::xx(1.0, 0.5));
  REQUIRE(xx.size() == 4);
  CHECK(xx.energy(0) == -1.0);
  CHECK(xx.energy(1) == -0.5);
  CHECK(xx.energy(2) == 0.5);
  CHECK(xx.energy(3) == 1.0);
  CHECK(xx.levels()[0].label == "psi1");
  CHECK(xx.levels()[3].label == "psi4");

  const Spectrum xy = spectrum(CoupledPair::general_xy(1.0, 0.5, 0.0, 0.0));
  for (std::size_t n = 0; n < 4; ++n) CHECK(xy.energy(n) == xx.energy(n));

  const Spectrum spin = spectrum(SpinHalf(2.0));
  REQUIRE(spin.size() == 2);
  CHECK(spin.energy(0) == -1.0);
  CHECK(spin.energy(1) == 1.0);
}

TEST_CASE("spectrum: anisotropic XY levels", "[substance]") {
  const double r = std::sqrt(1.0 + 0.5 * 0.5 * 0.3 * 0.3);
  const Spectrum s = spectrum(CoupledPair::general_xy(1.0, 0.5, 0.3, 0.2));
  CHECK_THAT(s.energy(0), WithinAbs(0.5 * 0.2 - r, 1e-15));
  CHECK_THAT(s.energy(1), WithinAbs(-0.5 * 1.2, 1e-15));
  CHECK_THAT(s.energy(2), WithinAbs(0.5 * 0.8, 1e-15));
  CHECK_THAT(s.energy(3), WithinAbs(0.5 * 0.2 + r, 1e-15));
}

TEST_CASE("levels are never reordered when J > B", "[substance]") {
  const Spectrum s = spectrum(CoupledPair::xx(1.0, 2.0));
  CHECK(s.energy(0) == -1.0);
  CHECK(s.energy(1) == -2.0);
  CHECK(s.lowest() == -2.0);
}

TEST_CASE("substance construction errors", "[substance]") {
  CHECK_THROWS_AS(CoupledPair::xx(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(CoupledPair::xx(1.0, -0.1), DomainError);
  CHECK_THROWS_AS(SpinHalf(-1.0), DomainError);
  CHECK_THROWS_AS(CoupledPair::xx(1.0, 0.0).y(), DomainError);
  CHECK_NOTHROW(CoupledPair::xx(1.0, 0.0));
  CHECK_THAT(SpinHalf::from_coordinate(4.0).field(), WithinAbs(0.25, 1e-16));
}

TEST_CASE("gibbs: examples", "[substance]") {
  const ThermalPoint hot(CoupledPair::xx(1.0, 0.5), 1e-12);
  for (std::size_t n = 0; n < 4; ++n) CHECK_THAT(hot.prob(n), WithinAbs(0.25, 1e-10));

  const Reference ref;
  const ThermalPoint tp = gibbs(CoupledPair::xx(1.0, 0.5), 2.0);
  for (std::size_t n = 0; n < 4; ++n) CHECK_THAT(tp.prob(n), WithinRel(ref.p[n], 1e-13));
  CHECK_THAT(tp.partition(), WithinRel(ref.z, 1e-13));
  CHECK_THAT(ref.z, WithinAbs(10.6105, 1e-4));
  CHECK_THAT(tp.prob(0), WithinAbs(0.6964, 1e-4));
  CHECK_THAT(tp.prob(2), WithinAbs(0.03468, 1e-5));

  const ThermalPoint spin(SpinHalf(1.0), 2.0);
  CHECK_THAT(spin.prob(0), WithinRel(std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0)), 1e-14));
  CHECK_THAT(spin.prob(0), WithinAbs(0.880797, 1e-6));

  CHECK_THROWS_AS(ThermalPoint(SpinHalf(1.0), 0.0), DomainError);
  CHECK_THROWS_AS(ThermalPoint(CoupledPair::xx(1.0, 0.5), -1.0), DomainError);
}

TEST_CASE("gibbs: normalization and ordering", "[substance][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double beta = std::exp(std::log(1e-3) + u(rng) * (std::log(50.0) - std::log(1e-3)));
    const double b = 0.1 + 3.0 * u(rng);
    const double j = 3.0 * u(rng);
    for (const Substance& s : {Substance(SpinHalf(b)), Substance(CoupledPair::xx(b, j)),
                               Substance(CoupledPair::general_xy(b, j, u(rng), u(rng) - 0.5))}) {
      const ThermalPoint tp(s, beta);
      CHECK_THAT(sum_probs(tp), WithinAbs(1.0, 1e-14));
      for (std::size_t m = 0; m < tp.spectrum().size(); ++m) {
        for (std::size_t n = 0; n < tp.spectrum().size(); ++n) {
          if (tp.spectrum().energy(m) < tp.spectrum().energy(n)) CHECK(tp.prob(m) >= tp.prob(n));
        }
      }
    }
  }
}

TEST_CASE("entropy: examples", "[substance]") {
  CHECK_THAT(entropy(ThermalPoint(CoupledPair::xx(1.0, 0.5), 1e-12)), WithinAbs(std::log(4.0), 1e-12));
  CHECK_THAT(std::log(4.0), WithinAbs(1.386294, 1e-6));
  CHECK_THAT(entropy(ThermalPoint(CoupledPair::xx(1.0, 0.5), 200.0)), WithinAbs(0.0, 1e-12));
  const double oracle = std::log(2.0 * std::cosh(1.0)) - std::tanh(1.0);
  CHECK_THAT(entropy(ThermalPoint(SpinHalf(1.0), 2.0)), WithinAbs(oracle, 1e-12));
  CHECK_THAT(oracle, WithinAbs(0.365334, 1e-6));
  CHECK(entropy(ThermalPoint(CoupledPair::xx(1.0, 0.5), 2000.0)) == 0.0);
}

TEST_CASE("entropy: single spin closed form", "[substance][property]") {
  for (double l : {0.3, 1.0, 2.5}) {
    for (double beta : {0.05, 1.0, 7.0, 40.0}) {
      const double x = beta / (2.0 * l);
      CHECK_THAT(entropy(ThermalPoint(SpinHalf::from_coordinate(l), beta)),
                 WithinAbs(std::log(2.0 * std::cosh(x)) - x * std::tanh(x), 1e-12));
    }
  }
}

TEST_CASE("internal energy: examples", "[substance]") {
  CHECK_THAT(internal_energy(ThermalPoint(CoupledPair::xx(1.0, 0.5), 1e-12)), WithinAbs(0.0, 1e-12));
  CHECK_THAT(internal_energy(ThermalPoint(SpinHalf(1.0), 2.0)), WithinAbs(-0.5 * std::tanh(1.0), 1e-15));
  CHECK_THAT(-0.5 * std::tanh(1.0), WithinAbs(-0.380797, 1e-6));

  const Reference ref;
  double dot = 0.0;
  for (std::size_t n = 0; n < 4; ++n) dot += ref.p[n] * ref.e[n];
  const ThermalPoint tp(CoupledPair::xx(1.0, 0.5), 2.0);
  CHECK_THAT(internal_energy(tp), WithinRel(dot, 1e-13));
  CHECK_THAT(dot, WithinAbs(-0.794390, 1e-6));
  const double closed = -(std::sinh(2.0) + 0.5 * std::sinh(1.0)) / (std::cosh(2.0) + std::cosh(1.0));
  CHECK_THAT(internal_energy(tp), WithinRel(closed, 1e-13));
}

TEST_CASE("generalized force: examples", "[substance]") {
  const double fx = generalized_force(CoupledPair::xx(1.0, 0.5), 2.0, Coordinate::X);
  CHECK_THAT(fx, WithinRel(-std::sinh(2.0) / (std::cosh(2.0) + std::cosh(1.0)), 1e-14));
  CHECK_THAT(fx, WithinAbs(-0.683633, 1e-6));
  CHECK_THAT(fx, WithinRel(verify::free_energy_force_oracle(CoupledPair::xx(1.0, 0.5), 2.0, Coordinate::X), 1e-8));

  CHECK(std::abs(generalized_force(CoupledPair::xx(1.0, 0.5), 1e-12, Coordinate::X)) < 1e-11);
  CHECK(std::abs(generalized_force(CoupledPair::xx(1.0, 0.5), 1e-12, Coordinate::Y)) < 1e-11);

  for (double beta : {0.1, 2.0, 9.0}) {
    const double uncoupled = generalized_force(CoupledPair::xx(1.5, 0.0), beta, Coordinate::X);
    CHECK_THAT(uncoupled, WithinRel(-std::tanh(beta * 1.5 / 2.0) * 1.5 * 1.5, 1e-14));
    CHECK_THAT(uncoupled, WithinRel(2.0 * single_spin_force(1.0 / 1.5, beta), 1e-14));
  }
  CHECK_THROWS_AS(generalized_force(CoupledPair::xx(1.0, 0.0), 2.0, Coordinate::Y), DomainError);
  CHECK_THROWS_AS(generalized_force(CoupledPair::xx(1.0, 0.5), 0.0, Coordinate::X), DomainError);
}

TEST_CASE("generalized force: overflow-safe and negative", "[substance][property]") {
  const double cold = generalized_force(CoupledPair::xx(1.0, 0.5), 1000.0, Coordinate::X);
  REQUIRE(std::isfinite(cold));
  CHECK_THAT(cold, WithinRel(-1.0, 1e-12));
  const double cold_y = generalized_force(CoupledPair::xx(1.0, 2.0), 1000.0, Coordinate::Y);
  CHECK_THAT(cold_y, WithinRel(-4.0, 1e-12));
  CHECK(std::isfinite(generalized_force(CoupledPair::xx(1.0, 1.0), 1e6, Coordinate::Y)));
  CHECK(generalized_force(CoupledPair::xx(3.0, 0.1), 50.0, Coordinate::Y) < 0.0);
  for (double b : {0.2, 1.0, 3.0}) {
    for (double j : {0.1, 1.0, 3.0}) {
      for (double beta : {1e-3, 0.5, 20.0, 500.0}) {
        CHECK(generalized_force(CoupledPair::xx(b, j), beta, Coordinate::X) <= 0.0);
        CHECK(generalized_force(CoupledPair::xx(b, j), beta, Coordinate::Y) <= 0.0);
      }
    }
  }
}

TEST_CASE("single spin force", "[substance]") {
  CHECK_THAT(single_spin_force(1.0, 2.0), WithinRel(-std::tanh(1.0) / 2.0, 1e-15));
  CHECK_THAT(single_spin_force(1.0, 2.0), WithinAbs(-0.380797, 1e-6));
  CHECK(std::abs(single_spin_force(1.0, 1e-12)) < 1e-12);
  CHECK_THAT(single_spin_force(1.0, 100.0), WithinAbs(-0.5, 1e-15));
  CHECK_THROWS_AS(single_spin_force(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(single_spin_force(1.0, -1.0), DomainError);
  const ThermalPoint tp(SpinHalf::from_coordinate(2.0), 3.0);
  CHECK_THAT(force(tp, Coordinate::X), WithinRel(single_spin_force(2.0, 3.0), 1e-15));
  CHECK_THAT(force(tp, Coordinate::X) * 2.0, WithinRel(internal_energy(tp), 1e-12));
}

TEST_CASE("forces agree with finite-difference oracles", "[substance][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double b = 0.2 + 2.8 * u(rng);
    const double j = 0.05 + 2.95 * u(rng);
    const double beta = std::exp(std::log(0.1) + u(rng) * std::log(200.0));
    const double gamma = u(rng);
    const double delta = u(rng) - 0.5;
    for (const CoupledPair& p : {CoupledPair::xx(b, j), CoupledPair::general_xy(b, j, gamma, delta)}) {
      for (Coordinate w : {Coordinate::X, Coordinate::Y}) {
        const double f = generalized_force(p, beta, w);
        INFO("B=" << b << " J=" << j << " beta=" << beta << " gamma=" << p.gamma() << " delta=" << p.delta());
        CHECK_THAT(f, WithinRel(verify::free_energy_force_oracle(p, beta, w), 1e-8));
        // differencing levels of size |E_n| limits the spectral oracle to ~1e-10 |E| / L
        const ThermalPoint tp(p, beta);
        double level_scale = 0.0;
        for (std::size_t n = 0; n < 4; ++n) level_scale += tp.prob(n) * std::abs(tp.spectrum().energy(n));
        level_scale /= coordinate_of(p, w);
        CHECK_THAT(f, WithinAbs(verify::spectral_force_oracle(p, beta, w), 1e-8 * std::max(std::abs(f), level_scale)));
        if (p.model() == Coupling::XX) CHECK_THAT(f, WithinRel(verify::spectral_force_oracle(p, beta, w), 1e-8));
      }
    }
  }
}

TEST_CASE("force sensitivity matches finite differences", "[substance][property]") {
  for (const CoupledPair& p : {CoupledPair::xx(1.0, 0.5), CoupledPair::xx(0.7, 1.9),
                               CoupledPair::general_xy(1.0, 0.5, 0.3, 0.2), CoupledPair::general_xy(0.6, 1.4, 0.8, -0.3)}) {
    for (double beta : {0.3, 2.0, 6.0}) {
      for (Coordinate w : {Coordinate::X, Coordinate::Y}) {
        const ForceSensitivity s = force_sensitivity(ThermalPoint(p, beta), w);
        const double d_beta = central_diff([&](double bt) { return generalized_force(p, bt, w); }, beta);
        const double d_param = central_diff(
            [&](double v) {
              return generalized_force(w == Coordinate::X ? p.with_field(v) : p.with_coupling(v), beta, w);
            },
            w == Coordinate::X ? p.field() : p.coupling());
        CHECK_THAT(s.d_beta, WithinRel(d_beta, 1e-6) || WithinAbs(d_beta, 1e-9));
        CHECK_THAT(s.d_param, WithinRel(d_param, 1e-6) || WithinAbs(d_param, 1e-9));
      }
    }
  }
}

TEST_CASE("reduced local state: examples", "[substance]") {
  const Reference ref;
  const LocalState s = reduced_local_state(CoupledPair::xx(1.0, 0.5), 2.0);
  const double p_e = ref.p[3] + 0.5 * (ref.p[1] + ref.p[2]);
  const double p_g = ref.p[0] + 0.5 * (ref.p[1] + ref.p[2]);
  CHECK_THAT(s.p_excited, WithinRel(p_e, 1e-13));
  CHECK_THAT(s.p_excited, WithinAbs(0.15818, 1e-5));
  CHECK_THAT(s.beta_loc, WithinRel(std::log(p_g / p_e), 1e-13));
  CHECK_THAT(s.beta_loc, WithinAbs(1.67181, 1e-5));
  const double fx = generalized_force(CoupledPair::xx(1.0, 0.5), 2.0, Coordinate::X);
  CHECK_THAT(s.force_loc, WithinRel(fx / 2.0, 1e-12));
  CHECK_THAT(s.force_loc, WithinAbs(-0.341816, 1e-6));
  // tanh(ln(x)/2) = (x - 1)/(x + 1)
  const double ratio = p_g / p_e;
  CHECK_THAT(s.force_loc, WithinRel(-(ratio - 1.0) / (ratio + 1.0) / 2.0, 1e-12));

  const LocalState cold = reduced_local_state(CoupledPair::xx(1.0, 2.0), 50.0);
  CHECK_THAT(cold.p_excited, WithinAbs(0.5, 1e-10));
  CHECK_THAT(cold.beta_loc, WithinAbs(0.0, 1e-10));

  const LocalState hot = reduced_local_state(CoupledPair::xx(1.0, 0.5), 1e-12);
  CHECK_THAT(hot.p_excited, WithinAbs(0.5, 1e-12));
  CHECK_THAT(hot.beta_loc, WithinAbs(0.0, 1e-11));

  CHECK_THROWS_AS(reduced_local_state(CoupledPair::xx(1.0, 0.5), 0.0), DomainError);
  CHECK_THROWS_AS(reduced_local_state(ThermalPoint(SpinHalf(1.0), 1.0)), DomainError);
}

TEST_CASE("reduced local state: F_loc = F_x / 2", "[substance][property]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double b = 0.2 + 2.8 * u(rng);
    const double j = 3.0 * u(rng);
    const double beta = 0.1 + 19.9 * u(rng);
    for (const CoupledPair& p : {CoupledPair::xx(b, j), CoupledPair::general_xy(b, j, u(rng), u(rng) - 0.5)}) {
      const ThermalPoint tp(p, beta);
      const LocalState s = reduced_local_state(tp);
      CHECK(s.p_excited >= 0.0);
      CHECK(s.p_excited <= 1.0);
      CHECK_THAT(s.force_loc, WithinAbs(force(tp, Coordinate::X) / 2.0, 1e-12));
    }
  }
}

TEST_CASE("free energy: examples", "[substance]") {
  CHECK_THAT(free_energy(SpinHalf(1.0), 2.0), WithinRel(-std::log(2.0 * std::cosh(1.0)) / 2.0, 1e-14));
  CHECK_THAT(free_energy(SpinHalf(1.0), 2.0), WithinAbs(-0.563464, 1e-6));
  CHECK_THAT(free_energy(CoupledPair::xx(1.0, 0.5), 1e-3), WithinRel(-std::log(4.0) / 1e-3, 1e-6));
  const Reference ref;
  CHECK_THAT(free_energy(CoupledPair::xx(1.0, 0.5), 2.0), WithinRel(-std::log(ref.z) / 2.0, 1e-14));
  CHECK_THAT(free_energy(CoupledPair::xx(1.0, 0.5), 2.0), WithinAbs(-1.180925, 1e-6));
  const ThermalPoint tp(CoupledPair::xx(1.0, 0.5), 2.0);
  CHECK_THAT(free_energy(CoupledPair::xx(1.0, 0.5), 2.0),
             WithinRel(internal_energy(tp) - entropy(tp) / 2.0, 1e-13));
}

TEST_CASE("identities on random points", "[substance][property]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double b = 0.2 + 2.8 * u(rng);
    const double j = 0.01 + 2.99 * u(rng);
    const double beta = 0.1 + 19.9 * u(rng);
    const ThermalPoint tp(CoupledPair::xx(b, j), beta);
    const double u_id = force(tp, Coordinate::X) / b + force(tp, Coordinate::Y) / j;
    CHECK_THAT(internal_energy(tp), WithinAbs(u_id, 1e-12 * std::max(1.0, std::abs(u_id))));
    CHECK_THAT(entropy(tp), WithinAbs(entropy(ThermalPoint(CoupledPair::xx(j, b), beta)), 1e-12));
  }
}

TEST_CASE("J = 0 reduces to two independent spins", "[substance][property]") {
  for (double b : {0.2, 1.0, 2.7}) {
    for (double beta : {0.1, 1.0, 5.0, 20.0}) {
      const ThermalPoint pair(CoupledPair::xx(b, 0.0), beta);
      const ThermalPoint spin(SpinHalf(b), beta);
      CHECK_THAT(force(pair, Coordinate::X), WithinAbs(2.0 * force(spin, Coordinate::X), 1e-12));
      CHECK_THAT(internal_energy(pair), WithinAbs(2.0 * internal_energy(spin), 1e-12));
      CHECK_THAT(entropy(pair), WithinAbs(2.0 * entropy(spin), 1e-12));
      CHECK_THAT(excited_population(pair), WithinAbs(spin.prob(1), 1e-12));
    }
  }
}

TEST_CASE("GeneralXY excited weights", "[substance]") {
  const CoupledPair p = CoupledPair::general_xy(1.0, 0.5, 0.3, 0.2);
  const auto w = excited_weights(p);
  const double theta = 0.5 * std::atan2(0.5 * 0.3, 1.0);
  CHECK_THAT(w[0], WithinAbs(std::sin(theta) * std::sin(theta), 1e-15));
  CHECK_THAT(w[3], WithinAbs(std::cos(theta) * std::cos(theta), 1e-15));
  CHECK(excited_weights(CoupledPair::general_xy(1.0, 0.5, 0.0, 0.3))[0] == 0.0);

  const auto rate = excited_weights_rate(p, 0.7, -0.4);
  const double fd = central_diff(
      [&](double t) { return excited_weights(p.with(1.0 + 0.7 * t, 0.5 - 0.4 * t))[0]; }, 0.0);
  CHECK_THAT(rate[0], WithinRel(fd, 1e-7));
  CHECK(rate[3] == -rate[0]);
}
