#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqheat/errors.hpp"
#include "seqheat/rational.hpp"
#include "seqheat/thermal.hpp"

namespace seqheat {

enum class UnitaryKind { haar, partial_swap, permutation, explicit_matrix, identity };

inline std::string_view to_string(UnitaryKind kind) {
  switch (kind) {
    case UnitaryKind::haar: return "haar";
    case UnitaryKind::partial_swap: return "partial_swap";
    case UnitaryKind::permutation: return "permutation";
    case UnitaryKind::explicit_matrix: return "explicit";
    case UnitaryKind::identity: return "identity";
  }
  return "?";
}

/// How a collision unitary is realized on the energy shells of one
/// system-ancilla pair.
///
/// - haar: independent Haar block per shell, seeded by (master seed, streamTag, shell).
/// - partial_swap: resonant qubits only; rotation by theta on the |g,e>,|e,g> shell.
/// - permutation: within each shell keyed in `permutations`, member j is sent to
///   member image[j]; unlisted shells are cyclically shifted by `shift`.
/// - explicit_matrix: one dense block per shell, keyed by total energy.
/// - identity: no interaction.
struct UnitarySpec {
  UnitaryKind kind = UnitaryKind::identity;
  double theta = 0.0;
  std::map<Rational, std::vector<std::size_t>> permutations;
  std::size_t shift = 0;
  std::map<Rational, Eigen::MatrixXcd> blocks;
  std::uint64_t streamTag = 0;

  static UnitarySpec identity() { return {}; }
  static UnitarySpec haar(std::uint64_t tag) {
    UnitarySpec s;
    s.kind = UnitaryKind::haar;
    s.streamTag = tag;
    return s;
  }
  static UnitarySpec partial_swap(double theta) {
    UnitarySpec s;
    s.kind = UnitaryKind::partial_swap;
    s.theta = theta;
    return s;
  }
  static UnitarySpec cyclic_permutation(std::size_t shift) {
    UnitarySpec s;
    s.kind = UnitaryKind::permutation;
    s.shift = shift;
    return s;
  }
  static UnitarySpec explicit_blocks(std::map<Rational, Eigen::MatrixXcd> blocks) {
    UnitarySpec s;
    s.kind = UnitaryKind::explicit_matrix;
    s.blocks = std::move(blocks);
    return s;
  }
};

struct AncillaConfig {
  Spectrum spectrum;
  double beta = 0.0;
  UnitarySpec unitary;
};

/// A system prepared at systemBeta colliding once with each ancilla in order.
struct ModelConfig {
  Spectrum system;
  double systemBeta = 0.0;
  std::vector<AncillaConfig> ancillas;
  std::uint64_t masterSeed = 0;

  std::size_t collisions() const noexcept { return ancillas.size(); }

  std::vector<double> ancilla_betas() const {
    std::vector<double> b;
    b.reserve(ancillas.size());
    for (const auto& a : ancillas) b.push_back(a.beta);
    return b;
  }

  /// Same model keeping only the first k collisions.
  ModelConfig truncated(std::size_t k) const {
    if (k == 0 || k > ancillas.size()) throw ConfigError("truncated: k out of range");
    ModelConfig m = *this;
    m.ancillas.resize(k);
    return m;
  }

  void validate() const {
    if (system.size() == 0) throw ConfigError("system spectrum is empty");
    if (!std::isfinite(systemBeta)) throw ConfigError("system beta must be finite");
    if (ancillas.empty()) throw ConfigError("model needs at least one ancilla");
    for (std::size_t i = 0; i < ancillas.size(); ++i) {
      const auto& a = ancillas[i];
      const std::string where = "ancillas[" + std::to_string(i) + "]";
      if (a.spectrum.size() == 0) throw ConfigError(where + ": spectrum is empty");
      if (!std::isfinite(a.beta)) throw ConfigError(where + ": beta must be finite");
      if (a.unitary.kind == UnitaryKind::partial_swap) {
        if (!std::isfinite(a.unitary.theta)) throw ConfigError(where + ": theta must be finite");
        if (system.size() != 2 || a.spectrum.size() != 2) {
          throw ConfigError(where + ": partial_swap needs two-level system and ancilla (got " +
                            std::to_string(system.size()) + " and " +
                            std::to_string(a.spectrum.size()) + " levels)");
        }
        const Rational gs = system[1] - system[0];
        const Rational ga = a.spectrum[1] - a.spectrum[0];
        if (gs != ga) {
          throw ConfigError(where + ": partial_swap needs a resonant pair, but system gap " +
                            format_rational(gs) + " != ancilla gap " + format_rational(ga) +
                            " so every energy shell is a singleton");
        }
      }
    }
  }
};

}  // namespace seqheat
