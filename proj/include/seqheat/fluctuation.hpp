#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqheat/chain.hpp"
#include "seqheat/enumeration.hpp"
#include "seqheat/errors.hpp"
#include "seqheat/heat_distribution.hpp"

namespace seqheat {

struct FTReport {
  double maxLogResidual = 0.0;
  std::size_t checkedPairs = 0;
  std::vector<HeatTuple> supportMismatches;
  std::optional<HeatTuple> worstTuple;
  bool passed = true;

  void record(const HeatTuple& q, double residual) {
    ++checkedPairs;
    if (!(residual <= maxLogResidual)) {
      maxLogResidual = residual;
      worstTuple = q;
    }
  }

  void finalize(double tolerance) {
    passed = supportMismatches.empty() && maxLogResidual <= tolerance;
  }
};

namespace detail {

/// Mass of `key`, or nullopt when it was pruned (the check is then skipped).
inline std::optional<double> lookup(const JointHeatDistribution& d, const HeatTuple& key) {
  auto it = d.entries.find(key);
  if (it != d.entries.end()) return it->second;
  if (d.prunedKeys.count(key)) return std::nullopt;
  return 0.0;
}

inline double weighted_heat(const HeatTuple& q, std::span<const double> betas, double systemBeta) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += (betas[i] - systemBeta) * to_double(q[i]);
  return s;
}

}  // namespace detail

/// ln P(Q) - ln P~(-Q) = sum_i (beta_i - beta_s) Q_i over the full support.
/// The backward distribution is keyed per ancilla, so its partner entry is
/// the negated tuple. Support mismatches fail the report.
inline FTReport verify_joint_ft(const JointHeatDistribution& fwd,
                                const JointHeatDistribution& bwd,
                                std::span<const double> ancillaBetas, double systemBeta,
                                double tolerance) {
  if (fwd.collisions != bwd.collisions || fwd.collisions != ancillaBetas.size()) {
    throw DimensionError("verify_joint_ft: distributions and temperatures disagree on N");
  }
  FTReport rep;
  for (const auto& [q, pf] : fwd.entries) {
    const auto pb = detail::lookup(bwd, negated(q));
    if (!pb) continue;
    if (*pb <= 0.0) {
      rep.supportMismatches.push_back(q);
      continue;
    }
    const double res =
        std::abs(std::log(pf) - std::log(*pb) - detail::weighted_heat(q, ancillaBetas, systemBeta));
    rep.record(q, res);
  }
  for (const auto& [k, pb] : bwd.entries) {
    const auto q = negated(k);
    const auto pf = detail::lookup(fwd, q);
    if (pf && *pf <= 0.0) rep.supportMismatches.push_back(q);
  }
  rep.finalize(tolerance);
  return rep;
}

inline FTReport verify_joint_ft(const JointHeatDistribution& fwd,
                                const JointHeatDistribution& bwd, const ModelConfig& model,
                                double tolerance) {
  const auto betas = model.ancilla_betas();
  return verify_joint_ft(fwd, bwd, betas, model.systemBeta, tolerance);
}

/// ln P(Q)/P~(-Q) against sum_i ln P_sc,i(Q_i)/P_sc,i(-Q_i).
inline FTReport verify_product_relation(const JointHeatDistribution& fwd,
                                        const JointHeatDistribution& bwd,
                                        std::span<const JointHeatDistribution> singles,
                                        double tolerance) {
  if (fwd.collisions != bwd.collisions || singles.size() != fwd.collisions) {
    throw DimensionError("verify_product_relation: need one single-collision distribution per Q_i");
  }
  FTReport rep;
  for (const auto& [q, pf] : fwd.entries) {
    const auto pb = detail::lookup(bwd, negated(q));
    if (!pb) continue;
    if (*pb <= 0.0) {
      rep.supportMismatches.push_back(q);
      continue;
    }
    double rhs = 0.0;
    bool skip = false, mismatch = false;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto plus = detail::lookup(singles[i], {q[i]});
      const auto minus = detail::lookup(singles[i], {-q[i]});
      if (!plus || !minus) {
        skip = true;
        break;
      }
      if (*plus <= 0.0 || *minus <= 0.0) {
        mismatch = true;
        break;
      }
      rhs += std::log(*plus) - std::log(*minus);
    }
    if (skip) continue;
    if (mismatch) {
      rep.supportMismatches.push_back(q);
      continue;
    }
    rep.record(q, std::abs(std::log(pf) - std::log(*pb) - rhs));
  }
  rep.finalize(tolerance);
  return rep;
}

/// ln P_N/P~_N = ln P_{N-1}/P~_{N-1} + ln P_sc(Q_N)/P_sc(-Q_N), where
/// P_{N-1} is the prefix marginal and P~_{N-1} the backward distribution of
/// the first N-1 collisions.
inline FTReport verify_partial_decomposition(const Chain& chain, double tolerance,
                                             const EnumerationOptions& opts = {}) {
  const std::size_t n = chain.size();
  if (n < 2) throw DimensionError("verify_partial_decomposition needs at least two collisions");
  const auto fwd = exact_forward_joint(chain, opts);
  const auto bwd = exact_backward_joint(chain, opts);
  const auto fwdPrefix = marginalize(fwd, n - 1);
  const auto bwdPrefix = exact_backward_joint(truncate(chain, n - 1), opts);
  const auto last = single_collision_distribution(chain, n - 1, opts);

  FTReport rep;
  for (const auto& [q, pf] : fwd.entries) {
    const HeatTuple prefix(q.begin(), q.end() - 1);
    const auto pb = detail::lookup(bwd, negated(q));
    const auto pfp = detail::lookup(fwdPrefix, prefix);
    const auto pbp = detail::lookup(bwdPrefix, negated(prefix));
    const auto sp = detail::lookup(last, {q.back()});
    const auto sm = detail::lookup(last, {-q.back()});
    if (!pb || !pfp || !pbp || !sp || !sm) continue;
    if (*pb <= 0.0 || *pfp <= 0.0 || *pbp <= 0.0 || *sp <= 0.0 || *sm <= 0.0) {
      rep.supportMismatches.push_back(q);
      continue;
    }
    const double lhs = std::log(pf) - std::log(*pb);
    const double rhs = std::log(*pfp) - std::log(*pbp) + std::log(*sp) - std::log(*sm);
    rep.record(q, std::abs(lhs - rhs));
  }
  rep.finalize(tolerance);
  return rep;
}

inline FTReport verify_partial_decomposition(const ModelConfig& model, double tolerance,
                                             const EnumerationOptions& opts = {}) {
  return verify_partial_decomposition(compile(model), tolerance, opts);
}

/// For every k < N: the k-prefix marginal of the forward distribution against
/// the backward distribution of the first k collisions, with the first k
/// temperatures.
inline std::vector<FTReport> verify_prefix_closure(const Chain& chain, double tolerance,
                                                   const EnumerationOptions& opts = {}) {
  const auto fwd = exact_forward_joint(chain, opts);
  const auto betas = chain.model.ancilla_betas();
  std::vector<FTReport> out;
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const auto bwd = exact_backward_joint(truncate(chain, k), opts);
    out.push_back(verify_joint_ft(marginalize(fwd, k), bwd,
                                  std::span<const double>(betas.data(), k),
                                  chain.model.systemBeta, tolerance));
  }
  return out;
}

/// < exp(-sum_i (beta_i - beta_s) Q_i) >_fwd, which equals 1 when the joint
/// relation holds.
inline double integral_ft_average(const JointHeatDistribution& fwd,
                                  std::span<const double> ancillaBetas, double systemBeta) {
  double s = 0.0;
  for (const auto& [q, p] : fwd.entries) {
    s += p * std::exp(-detail::weighted_heat(q, ancillaBetas, systemBeta));
  }
  return s;
}

/// max_Q |P(Q) - prod_i P_i(Q_i)| over the support of P, with P_i the
/// one-coordinate marginals. Nonzero means the heats are not independent.
inline double dependence_gap(const JointHeatDistribution& fwd) {
  std::vector<JointHeatDistribution> marginals;
  for (std::size_t i = 0; i < fwd.collisions; ++i) {
    const std::size_t keep[] = {i};
    marginals.push_back(marginalize_coordinates(fwd, keep));
  }
  double gap = 0.0;
  for (const auto& [q, p] : fwd.entries) {
    double prod = 1.0;
    for (std::size_t i = 0; i < q.size(); ++i) prod *= marginals[i].probability({q[i]});
    gap = std::max(gap, std::abs(p - prod));
  }
  return gap;
}

}  // namespace seqheat
