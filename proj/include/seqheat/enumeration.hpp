#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqheat/chain.hpp"
#include "seqheat/errors.hpp"
#include "seqheat/heat_distribution.hpp"
#include "seqheat/markov.hpp"

namespace seqheat {

struct EnumerationOptions {
  std::uint64_t cap = 100'000'000;
  double pruneBelow = 1e-15;
};

namespace detail {

constexpr std::size_t kNoHeat = std::numeric_limits<std::size_t>::max();

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

inline void check_cap(std::uint64_t paths, std::uint64_t cap, const char* what) {
  if (paths > cap) {
    const std::string count = paths == std::numeric_limits<std::uint64_t>::max()
                                  ? std::string("more than 2^64")
                                  : std::to_string(paths);
    throw EnumerationCapError(std::string(what) + ": " + count +
                              " paths exceed the enumeration cap of " + std::to_string(cap));
  }
}

/// Maps heat tuples to mixed-radix integer codes. Every heat a collision can
/// produce is a difference of two system levels, so one sorted table of such
/// differences serves as the digit alphabet for all coordinates.
class HeatCodec {
 public:
  HeatCodec(const Spectrum& system, std::size_t collisions) : collisions_(collisions) {
    const std::size_t d = system.size();
    std::map<Rational, std::size_t> distinct;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) distinct.emplace(system[a] - system[b], 0);
    }
    for (auto& [v, idx] : distinct) {
      idx = values_.size();
      values_.push_back(v);
    }
    index_ = distinct;
    systemDigit_.assign(d * d, 0);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) systemDigit_[a * d + b] = distinct.at(system[a] - system[b]);
    }
    dim_ = d;
    const std::uint64_t radix = values_.size();
    place_.resize(collisions);
    std::uint64_t p = 1;
    for (std::size_t i = 0; i < collisions; ++i) {
      place_[i] = p;
      if (i + 1 < collisions) {
        if (saturating_mul(p, radix) == std::numeric_limits<std::uint64_t>::max()) {
          throw EnumerationCapError("heat tuple alphabet too large to encode");
        }
        p *= radix;
      }
    }
  }

  /// Digit of the heat E_from - E_to released by the system.
  std::size_t system_digit(std::size_t from, std::size_t to) const {
    return systemDigit_[from * dim_ + to];
  }

  /// Digit of an arbitrary exact heat value, or kNoHeat.
  std::size_t digit_of(const Rational& q) const {
    auto it = index_.find(q);
    return it == index_.end() ? kNoHeat : it->second;
  }

  std::uint64_t place(std::size_t i) const { return place_[i]; }

  HeatTuple decode(std::uint64_t code) const {
    HeatTuple q(collisions_);
    const std::uint64_t radix = values_.size();
    for (std::size_t i = 0; i < collisions_; ++i) {
      q[i] = values_[code % radix];
      code /= radix;
    }
    return q;
  }

 private:
  std::size_t collisions_;
  std::size_t dim_ = 0;
  std::vector<Rational> values_;
  std::map<Rational, std::size_t> index_;
  std::vector<std::size_t> systemDigit_;
  std::vector<std::uint64_t> place_;
};

inline JointHeatDistribution finish(const HeatCodec& codec,
                                    const std::unordered_map<std::uint64_t, double>& acc,
                                    Direction dir, std::size_t n, double pruneBelow) {
  JointHeatDistribution out;
  out.direction = dir;
  out.collisions = n;
  for (const auto& [code, p] : acc) out.entries.emplace(codec.decode(code), p);
  prune(out, pruneBelow);
  return out;
}

/// Depth-first enumeration of all system paths (alpha_0..alpha_N), carrying
/// the partial product down. Forward weights follow M_i(a_i|a_{i-1}) p0(a_0);
/// backward weights M_i(a_{i-1}|a_i) p0(a_N) with negated heats.
class SystemPathEnumerator {
 public:
  SystemPathEnumerator(std::span<const Propagator> props, const ThermalState& p0,
                       const HeatCodec& codec, Direction dir)
      : props_(props), p0_(p0), codec_(codec), dir_(dir) {}

  std::unordered_map<std::uint64_t, double> run() {
    const std::size_t d = p0_.populations.size();
    for (std::size_t a0 = 0; a0 < d; ++a0) {
      const double w = dir_ == Direction::forward ? p0_.populations[a0] : 1.0;
      if (w > 0.0) descend(0, a0, w, 0);
    }
    return std::move(acc_);
  }

 private:
  void descend(std::size_t i, std::size_t prev, double w, std::uint64_t code) {
    if (i == props_.size()) {
      if (dir_ == Direction::backward) w *= p0_.populations[prev];
      if (w > 0.0) acc_[code] += w;
      return;
    }
    const std::size_t d = props_[i].dim();
    for (std::size_t a = 0; a < d; ++a) {
      const double m = dir_ == Direction::forward ? props_[i](a, prev) : props_[i](prev, a);
      if (m == 0.0) continue;
      const std::size_t digit = dir_ == Direction::forward ? codec_.system_digit(prev, a)
                                                           : codec_.system_digit(a, prev);
      descend(i + 1, a, w * m, code + digit * codec_.place(i));
    }
  }

  std::span<const Propagator> props_;
  const ThermalState& p0_;
  const HeatCodec& codec_;
  Direction dir_;
  std::unordered_map<std::uint64_t, double> acc_;
};

inline JointHeatDistribution enumerate_system_paths(std::span<const Propagator> props,
                                                    const ThermalState& p0,
                                                    const Spectrum& system, Direction dir,
                                                    const EnumerationOptions& opts) {
  std::uint64_t paths = system.size();
  for (std::size_t i = 0; i < props.size(); ++i) paths = saturating_mul(paths, system.size());
  check_cap(paths, opts.cap, dir == Direction::forward ? "forward enumeration"
                                                        : "backward enumeration");
  const HeatCodec codec(system, props.size());
  SystemPathEnumerator e(props, p0, codec, dir);
  return finish(codec, e.run(), dir, props.size(), opts.pruneBelow);
}

}  // namespace detail

/// P(Q_1..Q_N) from the Markov chain over system levels.
inline JointHeatDistribution exact_forward_joint(const Chain& chain,
                                                 const EnumerationOptions& opts = {}) {
  return detail::enumerate_system_paths(chain.propagators, chain.systemThermal,
                                        chain.model.system, Direction::forward, opts);
}

/// Backward-protocol distribution, keyed per ancilla: the entry at key
/// (-Q_1, ..., -Q_N) is P~(-Q_N, ..., -Q_1) in reversed-time ordering.
inline JointHeatDistribution exact_backward_joint(const Chain& chain,
                                                  const EnumerationOptions& opts = {}) {
  return detail::enumerate_system_paths(chain.propagators, chain.systemThermal,
                                        chain.model.system, Direction::backward, opts);
}

/// Number of augmented trajectories (alpha_0, n_1, n_1', alpha_1, ...).
inline std::uint64_t augmented_path_count(const Chain& chain) {
  const std::uint64_t ds = chain.system_dim();
  std::uint64_t paths = ds;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const std::uint64_t da = chain.ancilla_spectrum(i).size();
    paths = detail::saturating_mul(paths, detail::saturating_mul(ds, da * da));
  }
  return paths;
}

/// Visits every augmented trajectory with nonzero weight
/// R_N...R_1 q_N(n_N)...q_1(n_1) p_0(alpha_0). The visitor receives
/// (alphas, ancillaPairs, weight).
template <class Visitor>
void for_each_augmented_path(const Chain& chain, Visitor&& visit,
                             const EnumerationOptions& opts = {}) {
  detail::check_cap(augmented_path_count(chain), opts.cap, "augmented-path enumeration");
  const std::size_t n = chain.size();
  std::vector<std::size_t> alphas(n + 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs(n);

  auto descend = [&](auto& self, std::size_t i, double w) -> void {
    if (i == n) {
      visit(std::span<const std::size_t>(alphas),
            std::span<const std::pair<std::size_t, std::size_t>>(pairs), w);
      return;
    }
    const auto& col = chain.collisions[i];
    const auto& r = col.transitions;
    const std::size_t prev = alphas[i];
    for (std::size_t nin = 0; nin < r.ancillaDim; ++nin) {
      const double q = col.ancillaThermal.populations[nin];
      if (q == 0.0) continue;
      const ShellSlot& s = r.slot(prev, nin);
      const auto& members = r.shells[s.shell].members;
      for (std::size_t pout = 0; pout < members.size(); ++pout) {
        const double rr = r.probs[s.shell](static_cast<Eigen::Index>(pout),
                                           static_cast<Eigen::Index>(s.position));
        if (rr == 0.0) continue;
        alphas[i + 1] = members[pout].system;
        pairs[i] = {nin, members[pout].ancilla};
        self(self, i + 1, w * q * rr);
      }
    }
  };

  for (std::size_t a0 = 0; a0 < chain.system_dim(); ++a0) {
    const double p = chain.systemThermal.populations[a0];
    if (p == 0.0) continue;
    alphas[0] = a0;
    descend(descend, 0, p);
  }
}

/// P(Q_1..Q_N) rebuilt from ancilla records: heats Q_i = E_{n_i'} - E_{n_i}
/// on the augmented-trajectory weights.
inline JointHeatDistribution exact_forward_joint_via_ancilla_paths(
    const Chain& chain, const EnumerationOptions& opts = {}) {
  const std::size_t n = chain.size();
  const detail::HeatCodec codec(chain.model.system, n);

  // Digit of E_{n'} - E_n for every ancilla transition.
  std::vector<std::vector<std::size_t>> digits(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = chain.ancilla_spectrum(i);
    digits[i].resize(spec.size() * spec.size());
    for (std::size_t a = 0; a < spec.size(); ++a) {
      for (std::size_t b = 0; b < spec.size(); ++b) {
        digits[i][a * spec.size() + b] = codec.digit_of(spec[b] - spec[a]);
      }
    }
  }

  std::unordered_map<std::uint64_t, double> acc;
  for_each_augmented_path(
      chain,
      [&](std::span<const std::size_t>, std::span<const std::pair<std::size_t, std::size_t>> pairs,
          double w) {
        std::uint64_t code = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t da = chain.ancilla_spectrum(i).size();
          const std::size_t dg = digits[i][pairs[i].first * da + pairs[i].second];
          if (dg == detail::kNoHeat) {
            throw ConsistencyError("ancilla heat is not a system level difference");
          }
          code += dg * codec.place(i);
        }
        acc[code] += w;
      },
      opts);
  return detail::finish(codec, acc, Direction::forward, n, opts.pruneBelow);
}

/// P[gamma_s] obtained by summing augmented-trajectory weights over all
/// ancilla labels.
inline std::map<SystemTrajectory, double> system_paths_via_ancilla_paths(
    const Chain& chain, const EnumerationOptions& opts = {}) {
  std::map<SystemTrajectory, double> out;
  for_each_augmented_path(
      chain,
      [&](std::span<const std::size_t> alphas,
          std::span<const std::pair<std::size_t, std::size_t>>, double w) {
        out[SystemTrajectory(alphas.begin(), alphas.end())] += w;
      },
      opts);
  return out;
}

/// P[gamma_e] over ancilla records (alpha_0, n_1, n_1', ..., n_N, n_N'),
/// with the intermediate system levels summed out.
inline std::map<std::vector<std::size_t>, double> ancilla_record_distribution(
    const Chain& chain, const EnumerationOptions& opts = {}) {
  std::map<std::vector<std::size_t>, double> out;
  for_each_augmented_path(
      chain,
      [&](std::span<const std::size_t> alphas,
          std::span<const std::pair<std::size_t, std::size_t>> pairs, double w) {
        std::vector<std::size_t> key;
        key.reserve(1 + 2 * pairs.size());
        key.push_back(alphas[0]);
        for (const auto& [a, b] : pairs) {
          key.push_back(a);
          key.push_back(b);
        }
        out[key] += w;
      },
      opts);
  return out;
}

/// Heat distribution of a separate one-collision process: the system freshly
/// thermal at its own beta meets ancilla i (0-based) once.
inline JointHeatDistribution single_collision_distribution(const Chain& chain, std::size_t i,
                                                           const EnumerationOptions& opts = {}) {
  if (i >= chain.size()) throw DimensionError("single_collision_distribution: bad collision index");
  return detail::enumerate_system_paths(std::span<const Propagator>(&chain.propagators[i], 1),
                                        chain.systemThermal, chain.model.system,
                                        Direction::forward, opts);
}

/// Every single-collision distribution of the chain, in ancilla order.
inline std::vector<JointHeatDistribution> single_collision_distributions(
    const Chain& chain, const EnumerationOptions& opts = {}) {
  std::vector<JointHeatDistribution> out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    out.push_back(single_collision_distribution(chain, i, opts));
  }
  return out;
}

}  // namespace seqheat
