#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "seqheat/chain.hpp"
#include "seqheat/enumeration.hpp"
#include "seqheat/errors.hpp"
#include "seqheat/heat_distribution.hpp"
#include "seqheat/markov.hpp"
#include "seqheat/random.hpp"
#include "seqheat/thermal.hpp"

namespace seqheat {

/// (alpha_0, n_1, n_1', alpha_1, ..., n_N, n_N', alpha_N).
struct AugmentedTrajectory {
  std::vector<std::size_t> alphas;
  std::vector<std::pair<std::size_t, std::size_t>> ancillaPairs;

  bool operator==(const AugmentedTrajectory&) const = default;
};

struct TrajectoryRecord {
  AugmentedTrajectory trajectory;
  HeatTuple heats;
  double sigma = 0.0;
  double logPathProbability = 0.0;
};

struct SamplerConfig {
  std::uint64_t shots = 1;
  std::uint64_t masterSeed = 0;
  std::size_t workerCount = 1;
};

namespace detail {

template <class Weight>
std::size_t draw_categorical(std::size_t count, Weight&& weight, double u) {
  double acc = 0.0;
  std::size_t last = count;
  for (std::size_t j = 0; j < count; ++j) {
    const double w = weight(j);
    if (w <= 0.0) continue;
    acc += w;
    last = j;
    if (u < acc) return j;
  }
  // Rounding left u just above the accumulated mass.
  return last;
}

}  // namespace detail

/// Draws alpha_0 ~ p_0, then per collision n_i ~ q_i and
/// (alpha_i, n_i') ~ R_i(. , . | alpha_{i-1}, n_i) within the input's shell.
inline AugmentedTrajectory sample_trajectory(const Chain& chain, CounterStream& stream) {
  AugmentedTrajectory t;
  t.alphas.reserve(chain.size() + 1);
  t.ancillaPairs.reserve(chain.size());
  const auto& p0 = chain.systemThermal.populations;
  t.alphas.push_back(
      detail::draw_categorical(p0.size(), [&](std::size_t j) { return p0[j]; }, uniform01(stream)));

  for (const auto& col : chain.collisions) {
    const auto& q = col.ancillaThermal.populations;
    const std::size_t nin =
        detail::draw_categorical(q.size(), [&](std::size_t j) { return q[j]; }, uniform01(stream));
    const auto& r = col.transitions;
    const ShellSlot& s = r.slot(t.alphas.back(), nin);
    const auto& members = r.shells[s.shell].members;
    const auto& block = r.probs[s.shell];
    const std::size_t pout = detail::draw_categorical(
        members.size(),
        [&](std::size_t j) {
          return block(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s.position));
        },
        uniform01(stream));
    t.alphas.push_back(members[pout].system);
    t.ancillaPairs.emplace_back(nin, members[pout].ancilla);
  }
  return t;
}

/// Q_i = E_{alpha_{i-1}} - E_{alpha_i}.
inline HeatTuple heats_from_system_path(std::span<const std::size_t> alphas,
                                        const Spectrum& system) {
  HeatTuple q;
  if (alphas.empty()) return q;
  q.reserve(alphas.size() - 1);
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    q.push_back(system[alphas[i - 1]] - system[alphas[i]]);
  }
  return q;
}

/// Q_i = E_{n_i'} - E_{n_i}.
inline HeatTuple heats_from_ancilla_path(
    std::span<const std::pair<std::size_t, std::size_t>> pairs,
    std::span<const Spectrum> ancillaSpectra) {
  if (pairs.size() != ancillaSpectra.size()) {
    throw DimensionError("heats_from_ancilla_path: one spectrum per collision required");
  }
  HeatTuple q;
  q.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& sp = ancillaSpectra[i];
    q.push_back(sp[pairs[i].second] - sp[pairs[i].first]);
  }
  return q;
}

/// sum_i (beta_i - beta_s) Q_i, cross-checked against the log form
/// sum_i ln q_i(n_i)/q_i(n_i') + ln p_0(alpha_0)/p_0(alpha_N).
inline double entropy_production(const AugmentedTrajectory& t, const HeatTuple& heats,
                                 const Chain& chain) {
  if (heats.size() != chain.size() || t.ancillaPairs.size() != chain.size()) {
    throw DimensionError("entropy_production: trajectory length does not match the model");
  }
  double sigma = 0.0;
  for (std::size_t i = 0; i < heats.size(); ++i) {
    sigma += (chain.ancilla_beta(i) - chain.model.systemBeta) * to_double(heats[i]);
  }
  const auto& p0 = chain.systemThermal.populations;
  double logForm = std::log(p0[t.alphas.front()]) - std::log(p0[t.alphas.back()]);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& q = chain.collisions[i].ancillaThermal.populations;
    logForm += std::log(q[t.ancillaPairs[i].first]) - std::log(q[t.ancillaPairs[i].second]);
  }
  if (std::abs(sigma - logForm) > 1e-10 * std::max(1.0, std::abs(sigma))) {
    throw ConsistencyError("entropy production: heat form " + std::to_string(sigma) +
                           " disagrees with log-ratio form " + std::to_string(logForm));
  }
  return sigma;
}

/// Heats from both the system path and the ancilla record (which must agree
/// exactly), entropy production and ln P[gamma_se].
inline TrajectoryRecord make_record(const Chain& chain, AugmentedTrajectory t) {
  TrajectoryRecord rec;
  rec.heats = heats_from_system_path(t.alphas, chain.model.system);
  if (heats_from_ancilla_path(t.ancillaPairs, chain.ancillaSpectra) != rec.heats) {
    throw ConsistencyError("system-path and ancilla-path heats differ on " +
                           format_tuple(rec.heats));
  }
  rec.sigma = entropy_production(t, rec.heats, chain);
  double lp = std::log(chain.systemThermal.populations[t.alphas.front()]);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& col = chain.collisions[i];
    const auto [nin, nout] = t.ancillaPairs[i];
    lp += std::log(col.ancillaThermal.populations[nin]);
    lp += std::log(col.transitions(t.alphas[i + 1], nout, t.alphas[i], nin));
  }
  rec.logPathProbability = lp;
  rec.trajectory = std::move(t);
  return rec;
}

/// Diagonal of rho_i': q'(n') = sum R(a, n' | a', n) q(n) p(a'), with p the
/// system populations entering the collision.
inline std::vector<double> ancilla_post_state(const TransitionTensor& r,
                                              std::span<const double> ancillaPopulations,
                                              std::span<const double> systemPopulations) {
  if (ancillaPopulations.size() != r.ancillaDim || systemPopulations.size() != r.systemDim) {
    throw DimensionError("ancilla_post_state: population vectors do not match the tensor");
  }
  std::vector<double> out(r.ancillaDim, 0.0);
  for (std::size_t k = 0; k < r.shells.size(); ++k) {
    const auto& members = r.shells[k].members;
    for (std::size_t pin = 0; pin < members.size(); ++pin) {
      const double w = ancillaPopulations[members[pin].ancilla] * systemPopulations[members[pin].system];
      for (std::size_t pout = 0; pout < members.size(); ++pout) {
        out[members[pout].ancilla] +=
            r.probs[k](static_cast<Eigen::Index>(pout), static_cast<Eigen::Index>(pin)) * w;
      }
    }
  }
  return out;
}

/// Post-collision populations of ancilla i (0-based), with the system evolved
/// through collisions 0..i-1 first.
inline std::vector<double> ancilla_post_state(const Chain& chain, std::size_t i) {
  if (i >= chain.size()) throw DimensionError("ancilla_post_state: bad collision index");
  std::vector<double> p = chain.systemThermal.populations;
  for (std::size_t k = 0; k < i; ++k) p = evolve(p, chain.propagators[k]);
  return ancilla_post_state(chain.collisions[i].transitions,
                            chain.collisions[i].ancillaThermal.populations, p);
}

struct EntropyReport {
  double fromHeat = 0.0;       // < sum (beta_i - beta_s) Q_i > over P(Q)
  double fromLogRatio = 0.0;   // < log-ratio form > over augmented trajectories
  double informational = 0.0;  // entropy changes plus relative entropies
  double maxDisagreement = 0.0;
  bool passed = true;
};

/// Mean entropy production by three independent routes.
inline EntropyReport average_entropy_production(const Chain& chain, double tolerance = 1e-9,
                                                const EnumerationOptions& opts = {}) {
  EntropyReport rep;
  const auto betas = chain.model.ancilla_betas();

  const auto fwd = exact_forward_joint(chain, opts);
  for (const auto& [q, p] : fwd.entries) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += (betas[i] - chain.model.systemBeta) * to_double(q[i]);
    rep.fromHeat += p * s;
  }

  const auto& p0 = chain.systemThermal.populations;
  for_each_augmented_path(
      chain,
      [&](std::span<const std::size_t> alphas,
          std::span<const std::pair<std::size_t, std::size_t>> pairs, double w) {
        double s = std::log(p0[alphas.front()]) - std::log(p0[alphas.back()]);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          const auto& q = chain.collisions[i].ancillaThermal.populations;
          s += std::log(q[pairs[i].first]) - std::log(q[pairs[i].second]);
        }
        rep.fromLogRatio += w * s;
      },
      opts);

  std::vector<double> p = p0;
  double info = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& col = chain.collisions[i];
    const auto& q = col.ancillaThermal.populations;
    const auto qpost = ancilla_post_state(col.transitions, q, p);
    info += shannon_entropy(qpost) - shannon_entropy(q) + kl_divergence(qpost, q);
    p = evolve(p, chain.propagators[i]);
  }
  info += shannon_entropy(p) - shannon_entropy(p0) + kl_divergence(p, p0);
  rep.informational = info;

  rep.maxDisagreement = std::max({std::abs(rep.fromHeat - rep.fromLogRatio),
                                  std::abs(rep.fromHeat - rep.informational),
                                  std::abs(rep.fromLogRatio - rep.informational)});
  rep.passed = rep.maxDisagreement <= tolerance && rep.informational >= -1e-12;
  return rep;
}

/// Frequency estimate of P(Q) with per-key standard error sqrt(p(1-p)/shots).
struct EmpiricalJoint {
  JointHeatDistribution distribution;
  std::map<HeatTuple, double> standardErrors;
  std::uint64_t shots = 0;
};

class EmpiricalAccumulator {
 public:
  explicit EmpiricalAccumulator(std::size_t collisions) : collisions_(collisions) {}

  void add(const HeatTuple& heats) {
    ++counts_[heats];
    ++shots_;
  }

  EmpiricalJoint result() const {
    EmpiricalJoint out;
    out.shots = shots_;
    out.distribution.direction = Direction::forward;
    out.distribution.collisions = collisions_;
    if (shots_ == 0) return out;
    const double n = static_cast<double>(shots_);
    for (const auto& [q, c] : counts_) {
      const double p = static_cast<double>(c) / n;
      out.distribution.entries.emplace(q, p);
      out.standardErrors.emplace(q, std::sqrt(p * (1.0 - p) / n));
    }
    return out;
  }

 private:
  std::size_t collisions_;
  std::map<HeatTuple, std::uint64_t> counts_;
  std::uint64_t shots_ = 0;
};

inline EmpiricalJoint empirical_joint(std::span<const TrajectoryRecord> records) {
  EmpiricalAccumulator acc(records.empty() ? 0 : records.front().heats.size());
  for (const auto& r : records) acc.add(r.heats);
  return acc.result();
}

struct SampleSummary {
  EmpiricalJoint empirical;
  double meanExpNegSigma = 0.0;
  double stdErrExpNegSigma = 0.0;
  double meanSigma = 0.0;
};

/// Monte Carlo over augmented trajectories. Worker w owns the stream
/// (masterSeed, w) and generates shots j with j % workerCount == w in
/// increasing order; results are reduced in shot order, so the output depends
/// only on (masterSeed, workerCount, shots). `onRecord` sees every record in
/// shot order.
inline SampleSummary run_sampler(
    const Chain& chain, const SamplerConfig& cfg,
    const std::function<void(std::uint64_t, const TrajectoryRecord&)>& onRecord = {}) {
  if (cfg.shots == 0) throw ConfigError("sampler needs at least one shot");
  if (cfg.workerCount == 0) throw ConfigError("sampler needs at least one worker");
  constexpr std::uint64_t kSamplerDomain = 0x534d504cULL;
  const std::size_t workers = cfg.workerCount;

  std::vector<CounterStream> streams;
  streams.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    streams.emplace_back(stream_key({cfg.masterSeed, kSamplerDomain, w}));
  }

  EmpiricalAccumulator acc(chain.size());
  double sumExp = 0.0, sumExp2 = 0.0, sumSigma = 0.0;

  const std::uint64_t batch = std::max<std::uint64_t>(workers, 1u << 16);
  std::vector<TrajectoryRecord> records;
  for (std::uint64_t start = 0; start < cfg.shots; start += batch) {
    const std::uint64_t end = std::min(cfg.shots, start + batch);
    records.assign(end - start, TrajectoryRecord{});

    auto work = [&](std::size_t w) {
      std::uint64_t first = start + (w + workers - start % workers) % workers;
      for (std::uint64_t j = first; j < end; j += workers) {
        records[j - start] = make_record(chain, sample_trajectory(chain, streams[w]));
      }
    };

    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> threads;
      threads.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
          try {
            work(w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    for (std::uint64_t j = start; j < end; ++j) {
      const auto& r = records[j - start];
      acc.add(r.heats);
      const double e = std::exp(-r.sigma);
      sumExp += e;
      sumExp2 += e * e;
      sumSigma += r.sigma;
      if (onRecord) onRecord(j, r);
    }
  }

  SampleSummary out;
  out.empirical = acc.result();
  const double n = static_cast<double>(cfg.shots);
  out.meanExpNegSigma = sumExp / n;
  out.meanSigma = sumSigma / n;
  const double var = n > 1 ? std::max(0.0, (sumExp2 - n * out.meanExpNegSigma * out.meanExpNegSigma) / (n - 1)) : 0.0;
  out.stdErrExpNegSigma = std::sqrt(var / n);
  return out;
}

}  // namespace seqheat
