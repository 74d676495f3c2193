#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "seqheat/collision.hpp"
#include "seqheat/errors.hpp"
#include "seqheat/model.hpp"
#include "seqheat/rational.hpp"

namespace seqheat {

/// A parsed model document: the model plus run defaults.
struct ModelDocument {
  ModelConfig config;
  std::uint64_t enumerationCap = 100'000'000;
  double tolerance = 1e-9;
  double detailedBalanceTolerance = 1e-10;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "." + key + ": missing field");
  return *it;
}

inline Rational rational_field(const json& v, const std::string& path) {
  if (v.is_string()) {
    try {
      return parse_rational(v.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  throw ConfigError(path + ": expected a rational string such as \"1/3\"");
}

inline double real_field(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    try {
      if (s.find('/') != std::string::npos) return to_double(parse_rational(s));
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return d;
    } catch (const std::exception&) {
      throw ConfigError(path + ": malformed number '" + s + "'");
    }
  }
  throw ConfigError(path + ": expected a number");
}

inline std::uint64_t uint_field(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const auto s = v.get<std::string>();
      const auto u = std::stoull(s, &used);
      if (used == s.size()) return u;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(path + ": expected a non-negative integer");
}

inline Spectrum spectrum_field(const json& obj, const std::string& path) {
  const auto& e = require(obj, "energies", path);
  if (!e.is_array() || e.empty()) throw ConfigError(path + ".energies: expected a non-empty array");
  std::vector<Rational> levels;
  for (std::size_t j = 0; j < e.size(); ++j) {
    levels.push_back(rational_field(e[j], path + ".energies[" + std::to_string(j) + "]"));
  }
  try {
    return Spectrum(std::move(levels));
  } catch (const ConfigError& err) {
    throw ConfigError(path + ".energies: " + err.what());
  }
}

inline Eigen::MatrixXcd complex_matrix(const json& m, const std::string& path) {
  if (!m.is_array() || m.empty()) throw ConfigError(path + ": expected a square array of rows");
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXcd out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = m[static_cast<std::size_t>(r)];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError(rp + ": row must have " + std::to_string(n) + " entries");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& z = row[static_cast<std::size_t>(c)];
      const std::string zp = rp + "[" + std::to_string(c) + "]";
      if (!z.is_array() || z.size() != 2) throw ConfigError(zp + ": expected [re, im]");
      out(r, c) = {real_field(z[0], zp + "[0]"), real_field(z[1], zp + "[1]")};
    }
  }
  return out;
}

inline UnitarySpec unitary_field(const json& u, const std::string& path,
                                 std::uint64_t defaultTag) {
  const auto kind = require(u, "kind", path).get<std::string>();
  if (kind == "identity") return UnitarySpec::identity();
  if (kind == "haar") {
    auto tag = u.contains("stream_tag") ? uint_field(u["stream_tag"], path + ".stream_tag")
                                        : defaultTag;
    return UnitarySpec::haar(tag);
  }
  if (kind == "partial_swap") {
    return UnitarySpec::partial_swap(real_field(require(u, "theta", path), path + ".theta"));
  }
  if (kind == "permutation") {
    UnitarySpec s = UnitarySpec::cyclic_permutation(
        u.contains("shift") ? uint_field(u["shift"], path + ".shift") : 1);
    if (u.contains("shells")) {
      const auto& shells = u["shells"];
      if (!shells.is_object()) throw ConfigError(path + ".shells: expected an object");
      for (auto it = shells.begin(); it != shells.end(); ++it) {
        const std::string sp = path + ".shells[\"" + it.key() + "\"]";
        const Rational e = rational_field(json(it.key()), sp);
        std::vector<std::size_t> image;
        for (const auto& x : it.value()) image.push_back(uint_field(x, sp));
        s.permutations[e] = std::move(image);
      }
    }
    return s;
  }
  if (kind == "explicit") {
    const auto& blocks = require(u, "blocks", path);
    if (!blocks.is_object()) throw ConfigError(path + ".blocks: expected an object");
    std::map<Rational, Eigen::MatrixXcd> m;
    for (auto it = blocks.begin(); it != blocks.end(); ++it) {
      const std::string bp = path + ".blocks[\"" + it.key() + "\"]";
      m[rational_field(json(it.key()), bp)] = complex_matrix(it.value(), bp);
    }
    return UnitarySpec::explicit_blocks(std::move(m));
  }
  throw ConfigError(path + ".kind: unknown unitary kind '" + kind + "'");
}

inline ModelDocument parse_model_unchecked(const nlohmann::json& doc) {
  ModelDocument out;
  auto& cfg = out.config;
  const auto& sys = require(doc, "system", "model");
  cfg.system = detail::spectrum_field(sys, "system");
  cfg.systemBeta = detail::real_field(require(sys, "beta", "system"), "system.beta");

  const auto& ancillas = require(doc, "ancillas", "model");
  if (!ancillas.is_array() || ancillas.empty()) {
    throw ConfigError("ancillas: expected a non-empty array");
  }
  for (std::size_t i = 0; i < ancillas.size(); ++i) {
    const std::string path = "ancillas[" + std::to_string(i) + "]";
    const auto& a = ancillas[i];
    const std::uint64_t repeat = a.contains("repeat") ? detail::uint_field(a["repeat"], path + ".repeat") : 1;
    if (repeat == 0) throw ConfigError(path + ".repeat: must be at least 1");
    AncillaConfig anc;
    anc.spectrum = detail::spectrum_field(a, path);
    anc.beta = detail::real_field(require(a, "beta", path), path + ".beta");
    const auto& u = a.contains("unitary") ? a["unitary"] : nlohmann::json{{"kind", "identity"}};
    const bool explicitTag = u.is_object() && u.contains("stream_tag");
    for (std::uint64_t r = 0; r < repeat; ++r) {
      anc.unitary = detail::unitary_field(u, path + ".unitary", cfg.ancillas.size() + 1);
      if (explicitTag) anc.unitary.streamTag += r;
      cfg.ancillas.push_back(anc);
    }
  }
  if (doc.contains("master_seed")) cfg.masterSeed = detail::uint_field(doc["master_seed"], "master_seed");
  if (doc.contains("enumeration_cap")) {
    out.enumerationCap = detail::uint_field(doc["enumeration_cap"], "enumeration_cap");
  }
  if (doc.contains("tolerance")) out.tolerance = detail::real_field(doc["tolerance"], "tolerance");
  if (doc.contains("detailed_balance_tolerance")) {
    out.detailedBalanceTolerance =
        detail::real_field(doc["detailed_balance_tolerance"], "detailed_balance_tolerance");
  }

  cfg.validate();
  // Realizing the unitaries surfaces shell-structure errors at load time.
  for (std::size_t i = 0; i < cfg.ancillas.size(); ++i) {
    const auto shells = build_energy_shells(cfg.system, cfg.ancillas[i].spectrum);
    try {
      (void)realize_unitary(shells, cfg.ancillas[i].unitary, cfg.masterSeed);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("ancillas[" + std::to_string(i) + "].unitary: " + e.what());
    }
  }
  return out;
}

}  // namespace detail

/// Parses and validates a model document. Energies are exact "num/den"
/// strings; betas and angles are decimals. Haar unitaries default to stream
/// tag (ancilla position + 1). An ancilla entry may carry "repeat": k.
inline ModelDocument parse_model(const nlohmann::json& doc) {
  try {
    return detail::parse_model_unchecked(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model document: ") + e.what());
  }
}

inline ModelDocument parse_model_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("model document: parse error at byte " + std::to_string(e.byte) + ": " +
                      e.what());
  }
  return parse_model(doc);
}

inline ModelDocument load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model document '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_text(ss.str());
}

}  // namespace seqheat
