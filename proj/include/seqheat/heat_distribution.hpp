#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqheat/errors.hpp"
#include "seqheat/rational.hpp"

namespace seqheat {

/// (Q_1, ..., Q_N); Q_i is the heat taken up by ancilla i, positive when
/// energy leaves the system.
using HeatTuple = std::vector<Rational>;

enum class Direction { forward, backward };

inline std::string_view to_string(Direction d) {
  return d == Direction::forward ? "forward" : "backward";
}

/// Exact-keyed joint heat distribution. Backward distributions are indexed
/// by ancilla as well, so entry i of a backward key is the heat exchanged with
/// ancilla i during the backward protocol.
struct JointHeatDistribution {
  Direction direction = Direction::forward;
  std::size_t collisions = 0;
  std::map<HeatTuple, double> entries;
  double prunedMass = 0.0;
  std::set<HeatTuple> prunedKeys;

  double probability(const HeatTuple& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? 0.0 : it->second;
  }

  double total_mass() const {
    double s = 0.0;
    for (const auto& [k, p] : entries) s += p;
    return s + prunedMass;
  }

  bool operator==(const JointHeatDistribution&) const = default;
};

inline HeatTuple negated(const HeatTuple& q) {
  HeatTuple out(q.size());
  std::transform(q.begin(), q.end(), out.begin(), [](const Rational& r) { return -r; });
  return out;
}

inline std::string format_tuple(const HeatTuple& q) {
  std::string s = "(";
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (i) s += ", ";
    s += format_rational(q[i]);
  }
  return s + ")";
}

/// Drops entries below `threshold`, recording their keys and mass.
inline void prune(JointHeatDistribution& dist, double threshold) {
  for (auto it = dist.entries.begin(); it != dist.entries.end();) {
    if (it->second < threshold) {
      dist.prunedMass += it->second;
      dist.prunedKeys.insert(it->first);
      it = dist.entries.erase(it);
    } else {
      ++it;
    }
  }
}

/// Marginal over the coordinates listed in `keep` (in that order).
inline JointHeatDistribution marginalize_coordinates(const JointHeatDistribution& dist,
                                                     std::span<const std::size_t> keep) {
  for (std::size_t c : keep) {
    if (c >= dist.collisions) throw DimensionError("marginalize: coordinate out of range");
  }
  JointHeatDistribution out;
  out.direction = dist.direction;
  out.collisions = keep.size();
  out.prunedMass = dist.prunedMass;
  auto project = [&](const HeatTuple& q) {
    HeatTuple k;
    k.reserve(keep.size());
    for (std::size_t c : keep) k.push_back(q[c]);
    return k;
  };
  for (const auto& [q, p] : dist.entries) out.entries[project(q)] += p;
  for (const auto& q : dist.prunedKeys) {
    auto k = project(q);
    if (!out.entries.count(k)) out.prunedKeys.insert(std::move(k));
  }
  return out;
}

/// Keeps the first k coordinates, summing over the trailing ones.
inline JointHeatDistribution marginalize(const JointHeatDistribution& dist, std::size_t k) {
  if (k == 0 || k > dist.collisions) {
    throw DimensionError("marginalize: prefix length must be in 1..N");
  }
  std::vector<std::size_t> keep(k);
  for (std::size_t c = 0; c < k; ++c) keep[c] = c;
  return marginalize_coordinates(dist, keep);
}

inline double total_variation(const JointHeatDistribution& a, const JointHeatDistribution& b) {
  double s = 0.0;
  for (const auto& [q, p] : a.entries) s += std::abs(p - b.probability(q));
  for (const auto& [q, p] : b.entries) {
    if (!a.entries.count(q)) s += p;
  }
  return 0.5 * s;
}

/// Largest |a(Q) - b(Q)| over the union of supports.
inline double max_entry_difference(const JointHeatDistribution& a,
                                   const JointHeatDistribution& b) {
  double d = 0.0;
  for (const auto& [q, p] : a.entries) d = std::max(d, std::abs(p - b.probability(q)));
  for (const auto& [q, p] : b.entries) d = std::max(d, std::abs(p - a.probability(q)));
  return d;
}

}  // namespace seqheat
