#pragma once

// Reference models shared by the unit and acceptance tests.

#include <cstdint>
#include <random>
#include <vector>

#include "ibf/covariance.hpp"
#include "ibf/spectral.hpp"

namespace ibf::testing {

/// d = 2, mu1 = 1, M_P = 2 delta_1: beta_L = 3/4, beta_N = 1/4, lambda = -1/4.
inline IbfModel potential_atom_d2() {
  return IbfModel::create(2, 0.0, 1.0, 0.0, SpectralMeasure::atom(1.0, 2.0), std::nullopt);
}

/// d = 2, mu2 = 1, M_S = 2 delta_1: beta_L = 1/4, beta_N = 3/4, lambda = +1/4.
inline IbfModel solenoidal_atom_d2() {
  return IbfModel::create(2, 0.0, 0.0, 1.0, std::nullopt, SpectralMeasure::atom(1.0, 2.0));
}

/// mu0 = 1: b == I, the flow is a common random translation.
inline IbfModel trivial_model(int d) {
  ModelOptions opt;
  opt.allow_trivial = true;
  return IbfModel::create(d, 1.0, 0.0, 0.0, std::nullopt, std::nullopt, std::nullopt, opt);
}

/// A random model: random mu weights and measures mixing atoms and density
/// pieces, normalized to the required masses.
inline IbfModel random_model(int d, std::mt19937_64& rng, bool allow_mu1 = true, bool allow_mu2 = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto measure = [&] {
    std::vector<Atom> atoms;
    std::vector<DensityPiece> dens;
    const int n_atoms = static_cast<int>(u(rng) * 3.0);
    for (int i = 0; i < n_atoms; ++i) atoms.push_back({0.2 + 3.0 * u(rng), 0.1 + u(rng)});
    if (atoms.empty() || u(rng) < 0.5) {
      const double lo = 0.1 + 2.0 * u(rng);
      dens.push_back({lo, lo + 0.2 + 2.0 * u(rng), 0.1 + u(rng)});
    }
    return SpectralMeasure(atoms, dens);
  };
  double w0 = u(rng) < 0.3 ? 0.0 : u(rng);
  double w1 = allow_mu1 ? 0.1 + u(rng) : 0.0;
  double w2 = allow_mu2 ? 0.1 + u(rng) : 0.0;
  const double tot = w0 + w1 + w2;
  w0 /= tot;
  w1 /= tot;
  w2 = 1.0 - w0 - w1;
  if (!allow_mu2) w2 = 0.0, w1 = 1.0 - w0;
  std::optional<SpectralMeasure> mp, ms;
  if (w1 > 0.0) mp = normalize_potential(measure(), d);
  if (w2 > 0.0) ms = normalize_solenoidal(measure(), d);
  return IbfModel::create(d, w0, w1, w2, mp, ms);
}

}  // namespace ibf::testing
