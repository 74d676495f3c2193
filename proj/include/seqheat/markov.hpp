#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqheat/collision.hpp"
#include "seqheat/errors.hpp"
#include "seqheat/thermal.hpp"

namespace seqheat {

/// Column-stochastic system transition matrix of one collision:
/// matrix(out, in) = M(alpha_out | alpha_in).
struct Propagator {
  Eigen::MatrixXd matrix;
  std::size_t collisionIndex = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
  double operator()(std::size_t out, std::size_t in) const {
    return matrix(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  }
};

/// System levels (alpha_0, ..., alpha_N) observed between collisions.
using SystemTrajectory = std::vector<std::size_t>;

/// M(a'|a) = sum_{n, n'} R(a', n' | a, n) q(n), summed within shells only.
inline Propagator propagator_from_tensor(const TransitionTensor& r,
                                         const ThermalState& ancillaThermal, std::size_t i) {
  if (ancillaThermal.populations.size() != r.ancillaDim) {
    throw DimensionError("propagator_from_tensor: ancilla thermal state has " +
                         std::to_string(ancillaThermal.populations.size()) +
                         " levels, transition tensor has " + std::to_string(r.ancillaDim));
  }
  const auto ds = static_cast<Eigen::Index>(r.systemDim);
  Propagator m{Eigen::MatrixXd::Zero(ds, ds), i};
  for (std::size_t k = 0; k < r.shells.size(); ++k) {
    const auto& members = r.shells[k].members;
    for (std::size_t pin = 0; pin < members.size(); ++pin) {
      const double q = ancillaThermal.populations[members[pin].ancilla];
      for (std::size_t pout = 0; pout < members.size(); ++pout) {
        m.matrix(static_cast<Eigen::Index>(members[pout].system),
                 static_cast<Eigen::Index>(members[pin].system)) +=
            r.probs[k](static_cast<Eigen::Index>(pout), static_cast<Eigen::Index>(pin)) * q;
      }
    }
  }
  return m;
}

struct DetailedBalanceReport {
  double maxResidual = 0.0;
  std::size_t worstFirst = 0;
  std::size_t worstSecond = 0;
  bool passed = true;
};

/// Checks M(a|a') e^{-beta E_a'} = M(a'|a) e^{-beta E_a} for every pair,
/// with the residual taken relative to the larger side.
inline DetailedBalanceReport assert_detailed_balance(const Propagator& m, double beta,
                                                     const Spectrum& system, double tolerance) {
  if (m.dim() != system.size()) {
    throw DimensionError("assert_detailed_balance: propagator and spectrum sizes differ");
  }
  const ThermalState g = gibbs_state(system, beta);
  DetailedBalanceReport rep;
  for (std::size_t a = 0; a < m.dim(); ++a) {
    for (std::size_t b = a + 1; b < m.dim(); ++b) {
      const double lhs = m(a, b) * g.populations[b];
      const double rhs = m(b, a) * g.populations[a];
      const double scale = std::max(std::abs(lhs), std::abs(rhs));
      const double res = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
      if (res > rep.maxResidual) {
        rep.maxResidual = res;
        rep.worstFirst = a;
        rep.worstSecond = b;
      }
    }
  }
  rep.passed = rep.maxResidual <= tolerance;
  return rep;
}

inline std::vector<double> evolve(std::span<const double> p, const Propagator& m) {
  if (p.size() != m.dim()) throw DimensionError("evolve: population vector has wrong length");
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t a = 0; a < out.size(); ++a) {
    for (std::size_t b = 0; b < p.size(); ++b) out[a] += m(a, b) * p[b];
  }
  return out;
}

namespace detail {

inline void check_path(const SystemTrajectory& traj, std::span<const Propagator> props) {
  if (traj.size() != props.size() + 1) {
    throw DimensionError("trajectory length must be the number of collisions plus one");
  }
  for (std::size_t a : traj) {
    if (props.empty() || a >= props.front().dim()) {
      throw DimensionError("trajectory level out of range");
    }
  }
}

}  // namespace detail

/// M_N(a_N|a_{N-1}) ... M_1(a_1|a_0) p_0(a_0).
inline double forward_path_probability(const SystemTrajectory& traj,
                                       std::span<const Propagator> props,
                                       const ThermalState& p0) {
  detail::check_path(traj, props);
  double w = p0.populations.at(traj.front());
  for (std::size_t i = 0; i < props.size(); ++i) w *= props[i](traj[i + 1], traj[i]);
  return w;
}

/// M_1(a_0|a_1) ... M_N(a_{N-1}|a_N) p_0(a_N): the same propagators applied
/// in reverse order, starting from the thermal weight on a_N.
inline double backward_path_probability(const SystemTrajectory& traj,
                                        std::span<const Propagator> props,
                                        const ThermalState& p0) {
  detail::check_path(traj, props);
  double w = p0.populations.at(traj.back());
  for (std::size_t i = props.size(); i-- > 0;) w *= props[i](traj[i], traj[i + 1]);
  return w;
}

}  // namespace seqheat
