#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "seqheat/collision.hpp"
#include "seqheat/markov.hpp"
#include "seqheat/model.hpp"
#include "seqheat/thermal.hpp"

namespace seqheat {

/// Everything derived from one ancilla: its shells, the realized unitary,
/// the transition tensor, its Gibbs state and the system propagator.
struct Collision {
  std::vector<EnergyShell> shells;
  CollisionUnitary unitary;
  TransitionTensor transitions;
  ThermalState ancillaThermal;
  Propagator propagator;
};

/// A validated model with all per-collision objects realized once.
struct Chain {
  ModelConfig model;
  ThermalState systemThermal;
  std::vector<Collision> collisions;
  std::vector<Propagator> propagators;
  std::vector<Spectrum> ancillaSpectra;

  std::size_t size() const noexcept { return collisions.size(); }
  std::size_t system_dim() const noexcept { return model.system.size(); }
  const Spectrum& ancilla_spectrum(std::size_t i) const { return model.ancillas[i].spectrum; }
  double ancilla_beta(std::size_t i) const { return model.ancillas[i].beta; }
};

inline Chain compile(const ModelConfig& model) {
  model.validate();
  Chain c;
  c.model = model;
  c.systemThermal = gibbs_state(model.system, model.systemBeta);
  c.collisions.reserve(model.ancillas.size());
  for (std::size_t i = 0; i < model.ancillas.size(); ++i) {
    const auto& a = model.ancillas[i];
    Collision col;
    col.shells = build_energy_shells(model.system, a.spectrum);
    col.unitary = realize_unitary(col.shells, a.unitary, model.masterSeed);
    col.transitions = transition_tensor(col.unitary);
    col.ancillaThermal = gibbs_state(a.spectrum, a.beta);
    col.propagator = propagator_from_tensor(col.transitions, col.ancillaThermal, i);
    c.propagators.push_back(col.propagator);
    c.ancillaSpectra.push_back(a.spectrum);
    c.collisions.push_back(std::move(col));
  }
  return c;
}

/// The first k collisions of an already compiled chain.
inline Chain truncate(const Chain& chain, std::size_t k) {
  if (k == 0 || k > chain.size()) throw ConfigError("truncate: k out of range");
  Chain c;
  c.model = chain.model.truncated(k);
  c.systemThermal = chain.systemThermal;
  c.collisions.assign(chain.collisions.begin(), chain.collisions.begin() + static_cast<std::ptrdiff_t>(k));
  c.propagators.assign(chain.propagators.begin(), chain.propagators.begin() + static_cast<std::ptrdiff_t>(k));
  c.ancillaSpectra.assign(chain.ancillaSpectra.begin(), chain.ancillaSpectra.begin() + static_cast<std::ptrdiff_t>(k));
  return c;
}

}  // namespace seqheat
