#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "seqheat/errors.hpp"
#include "seqheat/model.hpp"
#include "seqheat/random.hpp"
#include "seqheat/rational.hpp"
#include "seqheat/thermal.hpp"

namespace seqheat {

/// Basis label |alpha, n> of the system-ancilla joint space.
struct JointIndex {
  std::size_t system = 0;
  std::size_t ancilla = 0;
  auto operator<=>(const JointIndex&) const = default;
};

/// All joint basis states sharing one exact total energy, in lexicographic
/// (alpha, n) order.
struct EnergyShell {
  Rational totalEnergy;
  std::vector<JointIndex> members;
};

/// Position of a joint basis state inside the shell decomposition.
struct ShellSlot {
  std::size_t shell = 0;
  std::size_t position = 0;
};

/// Groups the d_s * d_a joint basis by exact total energy. Shells are ordered
/// by increasing total energy.
inline std::vector<EnergyShell> build_energy_shells(const Spectrum& system,
                                                    const Spectrum& ancilla) {
  std::map<Rational, std::vector<JointIndex>> grouped;
  for (std::size_t a = 0; a < system.size(); ++a) {
    for (std::size_t n = 0; n < ancilla.size(); ++n) {
      grouped[system[a] + ancilla[n]].push_back({a, n});
    }
  }
  std::vector<EnergyShell> shells;
  shells.reserve(grouped.size());
  for (auto& [e, members] : grouped) shells.push_back({e, std::move(members)});
  return shells;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> joint_dims(const std::vector<EnergyShell>& shells) {
  std::size_t ds = 0, da = 0;
  for (const auto& s : shells) {
    for (const auto& m : s.members) {
      ds = std::max(ds, m.system + 1);
      da = std::max(da, m.ancilla + 1);
    }
  }
  return {ds, da};
}

inline std::vector<ShellSlot> index_shells(const std::vector<EnergyShell>& shells,
                                           std::size_t ds, std::size_t da) {
  std::vector<ShellSlot> slots(ds * da);
  for (std::size_t k = 0; k < shells.size(); ++k) {
    for (std::size_t p = 0; p < shells[k].members.size(); ++p) {
      const auto& m = shells[k].members[p];
      slots[m.system * da + m.ancilla] = {k, p};
    }
  }
  return slots;
}

}  // namespace detail

/// Energy-preserving collision unitary stored as one dense block per shell.
/// Entries between different shells are structurally zero.
struct CollisionUnitary {
  std::vector<EnergyShell> shells;
  std::vector<Eigen::MatrixXcd> blocks;
  std::size_t systemDim = 0;
  std::size_t ancillaDim = 0;

  CollisionUnitary() = default;
  CollisionUnitary(std::vector<EnergyShell> s, std::vector<Eigen::MatrixXcd> b)
      : shells(std::move(s)), blocks(std::move(b)) {
    std::tie(systemDim, ancillaDim) = detail::joint_dims(shells);
  }

  /// <alpha_out, n_out| U |alpha_in, n_in>.
  std::complex<double> element(JointIndex out, JointIndex in) const {
    const auto slots = detail::index_shells(shells, systemDim, ancillaDim);
    const auto so = slots[out.system * ancillaDim + out.ancilla];
    const auto si = slots[in.system * ancillaDim + in.ancilla];
    if (so.shell != si.shell) return {0.0, 0.0};
    return blocks[so.shell](static_cast<Eigen::Index>(so.position),
                            static_cast<Eigen::Index>(si.position));
  }
};

/// Haar-distributed m x m unitary: Ginibre matrix, QR, then the diagonal
/// phase correction Q * diag(R_jj / |R_jj|).
inline Eigen::MatrixXcd haar_unitary(Eigen::Index m, CounterStream& stream) {
  const double scale = 1.0 / std::numbers::sqrt2;
  Eigen::MatrixXcd z(m, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index r = 0; r < m; ++r) {
      const double re = standard_normal(stream);
      const double im = standard_normal(stream);
      z(r, c) = {re * scale, im * scale};
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::complex<double> d = r(j, j);
    const double mag = std::abs(d);
    q.col(j) *= mag > 0.0 ? d / mag : std::complex<double>(1.0, 0.0);
  }
  return q;
}

namespace detail {

inline double unitarity_residual(const Eigen::MatrixXcd& b) {
  if (b.rows() != b.cols()) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXcd diff = b * b.adjoint() - Eigen::MatrixXcd::Identity(b.rows(), b.cols());
  return diff.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Realizes `spec` on the given shells. Haar blocks draw from the stream
/// (masterSeed, spec.streamTag, shell index).
inline CollisionUnitary realize_unitary(const std::vector<EnergyShell>& shells,
                                        const UnitarySpec& spec, std::uint64_t masterSeed) {
  std::vector<Eigen::MatrixXcd> blocks;
  blocks.reserve(shells.size());
  const auto [ds, da] = detail::joint_dims(shells);

  for (std::size_t k = 0; k < shells.size(); ++k) {
    const auto m = static_cast<Eigen::Index>(shells[k].members.size());
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Identity(m, m);

    switch (spec.kind) {
      case UnitaryKind::identity:
        break;

      case UnitaryKind::haar:
        if (m >= 2) {
          CounterStream stream(stream_key({masterSeed, spec.streamTag, k}));
          block = haar_unitary(m, stream);
        }
        break;

      case UnitaryKind::partial_swap: {
        if (ds != 2 || da != 2) {
          throw ConfigError("partial_swap needs a two-level system and ancilla");
        }
        const auto& mem = shells[k].members;
        const bool has_ge = std::find(mem.begin(), mem.end(), JointIndex{0, 1}) != mem.end();
        if (!has_ge) break;
        if (m != 2) {
          throw ConfigError("partial_swap on a non-resonant pair: |g,e> shares no shell with |e,g>");
        }
        const double c = std::cos(spec.theta);
        const double s = std::sin(spec.theta);
        block(0, 0) = {c, 0.0};
        block(1, 1) = {c, 0.0};
        block(0, 1) = {0.0, -s};
        block(1, 0) = {0.0, -s};
        break;
      }

      case UnitaryKind::permutation: {
        std::vector<std::size_t> image(static_cast<std::size_t>(m));
        if (auto it = spec.permutations.find(shells[k].totalEnergy);
            it != spec.permutations.end()) {
          image = it->second;
          if (image.size() != static_cast<std::size_t>(m)) {
            throw ValidationError("permutation for shell " +
                                  format_rational(shells[k].totalEnergy) + " has " +
                                  std::to_string(image.size()) + " entries, shell has " +
                                  std::to_string(m));
          }
          auto sorted = image;
          std::sort(sorted.begin(), sorted.end());
          for (std::size_t j = 0; j < sorted.size(); ++j) {
            if (sorted[j] != j) {
              throw ValidationError("permutation for shell " +
                                    format_rational(shells[k].totalEnergy) +
                                    " is not a bijection");
            }
          }
        } else {
          for (std::size_t j = 0; j < image.size(); ++j) image[j] = (j + spec.shift) % image.size();
        }
        block.setZero();
        for (std::size_t j = 0; j < image.size(); ++j) {
          block(static_cast<Eigen::Index>(image[j]), static_cast<Eigen::Index>(j)) = 1.0;
        }
        break;
      }

      case UnitaryKind::explicit_matrix: {
        auto it = spec.blocks.find(shells[k].totalEnergy);
        if (it == spec.blocks.end()) {
          if (m == 1) break;
          throw ValidationError("explicit unitary has no block for shell " +
                                format_rational(shells[k].totalEnergy) + " of size " +
                                std::to_string(m));
        }
        if (it->second.rows() != m || it->second.cols() != m) {
          throw ValidationError("explicit block for shell " +
                                format_rational(shells[k].totalEnergy) + " must be " +
                                std::to_string(m) + "x" + std::to_string(m));
        }
        const double res = detail::unitarity_residual(it->second);
        if (!(res <= 1e-10)) {
          throw ValidationError("explicit block for shell " +
                                format_rational(shells[k].totalEnergy) +
                                " is not unitary (residual " + std::to_string(res) + ")");
        }
        block = it->second;
        break;
      }
    }
    blocks.push_back(std::move(block));
  }

  if (spec.kind == UnitaryKind::explicit_matrix) {
    for (const auto& [energy, b] : spec.blocks) {
      const bool known = std::any_of(shells.begin(), shells.end(),
                                     [&](const EnergyShell& s) { return s.totalEnergy == energy; });
      if (!known) {
        throw ValidationError("explicit block keyed by " + format_rational(energy) +
                              " matches no energy shell");
      }
    }
  }
  return CollisionUnitary(shells, std::move(blocks));
}

struct UnitarityReport {
  std::vector<double> shellResiduals;
  double maxResidual = 0.0;
  bool blockStructureOk = true;
  std::string structureMessage;
  bool passed = true;
};

/// Checks that every block is unitary and that the blocks tile the joint
/// basis by exact-energy shells.
inline UnitarityReport validate_energy_preservation(const CollisionUnitary& u, double tolerance) {
  UnitarityReport rep;
  if (u.blocks.size() != u.shells.size()) {
    rep.blockStructureOk = false;
    rep.structureMessage = "block count differs from shell count";
  }
  std::vector<int> seen(u.systemDim * u.ancillaDim, 0);
  for (std::size_t k = 0; k < u.shells.size(); ++k) {
    for (const auto& m : u.shells[k].members) {
      seen[m.system * u.ancillaDim + m.ancilla] += 1;
    }
    if (k < u.blocks.size()) {
      const auto sz = static_cast<Eigen::Index>(u.shells[k].members.size());
      if (u.blocks[k].rows() != sz || u.blocks[k].cols() != sz) {
        rep.blockStructureOk = false;
        rep.structureMessage = "block " + std::to_string(k) + " does not match its shell size";
        rep.shellResiduals.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      rep.shellResiduals.push_back(detail::unitarity_residual(u.blocks[k]));
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    rep.blockStructureOk = false;
    rep.structureMessage = "shells do not partition the joint basis";
  }
  for (double r : rep.shellResiduals) rep.maxResidual = std::max(rep.maxResidual, r);
  rep.passed = rep.blockStructureOk && rep.maxResidual <= tolerance;
  return rep;
}

/// R(alpha_out, n_out | alpha_in, n_in) = |<out|U|in>|^2, stored per shell
/// as probs[shell](out_position, in_position).
struct TransitionTensor {
  std::vector<EnergyShell> shells;
  std::vector<ShellSlot> slots;
  std::vector<Eigen::MatrixXd> probs;
  std::size_t systemDim = 0;
  std::size_t ancillaDim = 0;

  const ShellSlot& slot(std::size_t alpha, std::size_t n) const {
    return slots[alpha * ancillaDim + n];
  }

  double operator()(std::size_t alphaOut, std::size_t nOut, std::size_t alphaIn,
                    std::size_t nIn) const {
    const auto& so = slot(alphaOut, nOut);
    const auto& si = slot(alphaIn, nIn);
    if (so.shell != si.shell) return 0.0;
    return probs[so.shell](static_cast<Eigen::Index>(so.position),
                           static_cast<Eigen::Index>(si.position));
  }
};

inline TransitionTensor transition_tensor(const CollisionUnitary& u) {
  TransitionTensor r;
  r.shells = u.shells;
  r.systemDim = u.systemDim;
  r.ancillaDim = u.ancillaDim;
  r.slots = detail::index_shells(u.shells, u.systemDim, u.ancillaDim);
  r.probs.reserve(u.blocks.size());
  for (const auto& b : u.blocks) r.probs.push_back(b.cwiseAbs2());
  return r;
}

}  // namespace seqheat
