#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqheat/errors.hpp"
#include "seqheat/rational.hpp"

namespace seqheat {

/// Energy levels of one subsystem. Strictly increasing, so every level is
/// non-degenerate and the index of a level is determined by its energy.
class Spectrum {
 public:
  Spectrum() = default;

  explicit Spectrum(std::vector<Rational> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw ConfigError("spectrum must have at least one level");
    for (std::size_t j = 0; j < levels_.size(); ++j) {
      for (std::size_t k = j + 1; k < levels_.size(); ++k) {
        if (levels_[j] == levels_[k]) {
          throw ConfigError("degenerate spectrum: levels " + std::to_string(j) + " and " +
                            std::to_string(k) + " both equal " + format_rational(levels_[j]));
        }
      }
    }
    for (std::size_t j = 1; j < levels_.size(); ++j) {
      if (levels_[j] < levels_[j - 1]) {
        throw ConfigError("spectrum not sorted ascending at level " + std::to_string(j) + " (" +
                          format_rational(levels_[j - 1]) + " > " + format_rational(levels_[j]) +
                          ")");
      }
    }
  }

  std::size_t size() const noexcept { return levels_.size(); }
  const Rational& operator[](std::size_t j) const { return levels_[j]; }
  const std::vector<Rational>& levels() const noexcept { return levels_; }
  double energy(std::size_t j) const { return to_double(levels_[j]); }

  bool operator==(const Spectrum&) const = default;

 private:
  std::vector<Rational> levels_;
};

/// Diagonal Gibbs state exp(-beta H)/Z of a spectrum.
struct ThermalState {
  double beta = 0.0;
  std::vector<double> populations;
  double logZ = 0.0;
};

inline ThermalState gibbs_state(const Spectrum& spectrum, double beta) {
  if (!std::isfinite(beta)) throw ConfigError("inverse temperature must be finite");
  const std::size_t d = spectrum.size();
  if (d == 0) throw ConfigError("empty spectrum");

  // Shift by the smallest beta*E so the largest weight is exactly 1.
  double shift = beta * spectrum.energy(0);
  for (std::size_t j = 1; j < d; ++j) shift = std::min(shift, beta * spectrum.energy(j));

  ThermalState out;
  out.beta = beta;
  out.populations.resize(d);
  double z = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    out.populations[j] = std::exp(-(beta * spectrum.energy(j) - shift));
    z += out.populations[j];
  }
  for (double& p : out.populations) p /= z;
  out.logZ = std::log(z) - shift;
  return out;
}

inline void check_probability_vector(std::span<const double> p, double tolerance = 1e-9) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw DomainError("probability vector has a negative entry");
    total += x;
  }
  if (std::abs(total - 1.0) > tolerance) {
    throw DomainError("probability vector sums to " + std::to_string(total));
  }
}

/// -sum p ln p, with 0 ln 0 = 0.
inline double shannon_entropy(std::span<const double> populations) {
  check_probability_vector(populations);
  double s = 0.0;
  for (double p : populations) {
    if (p > 0.0) s -= p * std::log(p);
  }
  return std::max(s, 0.0);
}

/// sum p_post (ln p_post - ln p_ref). Throws DivergenceError when p_post has
/// mass outside the support of p_ref.
inline double kl_divergence(std::span<const double> p_post, std::span<const double> p_ref) {
  if (p_post.size() != p_ref.size()) {
    throw DimensionError("kl_divergence: vectors have different lengths");
  }
  check_probability_vector(p_post);
  check_probability_vector(p_ref);
  double d = 0.0;
  for (std::size_t j = 0; j < p_post.size(); ++j) {
    if (p_post[j] == 0.0) continue;
    if (p_ref[j] == 0.0) {
      throw DivergenceError("kl_divergence: support violation at index " + std::to_string(j));
    }
    d += p_post[j] * (std::log(p_post[j]) - std::log(p_ref[j]));
  }
  return std::max(d, 0.0);
}

}  // namespace seqheat
