#pragma once

#include <cstddef>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqheat/errors.hpp"
#include "seqheat/heat_distribution.hpp"
#include "seqheat/rational.hpp"
#include "seqheat/sampler.hpp"

namespace seqheat {

namespace detail {

/// Shortest decimal that reads back to the same double.
inline std::string format_probability(double p) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// CSV with header Q_1..Q_N (12 significant digits), probability, then
/// optional std_error and Q_i_exact ("num/den") columns.
inline void write_csv(std::ostream& out, const JointHeatDistribution& dist, bool exactColumns = true,
                      const std::map<HeatTuple, double>* standardErrors = nullptr) {
  const std::size_t n = dist.collisions;
  for (std::size_t i = 0; i < n; ++i) out << "Q_" << (i + 1) << ',';
  out << "probability";
  if (standardErrors) out << ",std_error";
  if (exactColumns) {
    for (std::size_t i = 0; i < n; ++i) out << ",Q_" << (i + 1) << "_exact";
  }
  out << '\n';
  for (const auto& [q, p] : dist.entries) {
    for (const auto& v : q) out << format_decimal12(v) << ',';
    out << detail::format_probability(p);
    if (standardErrors) {
      auto it = standardErrors->find(q);
      out << ',' << detail::format_probability(it == standardErrors->end() ? 0.0 : it->second);
    }
    if (exactColumns) {
      for (const auto& v : q) out << ',' << format_rational(v);
    }
    out << '\n';
  }
}

/// Reads a CSV written by write_csv. Exact columns are used when present;
/// otherwise the decimal columns are read as exact decimals.
inline JointHeatDistribution read_csv(std::istream& in, Direction dir = Direction::forward) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("distribution CSV: missing header row");
  const auto header = detail::split_csv_line(line);
  std::vector<std::size_t> decimalCols, exactCols;
  std::size_t probCol = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "probability") {
      probCol = c;
    } else if (h.rfind("Q_", 0) == 0 && h.size() > 6 && h.substr(h.size() - 6) == "_exact") {
      exactCols.push_back(c);
    } else if (h.rfind("Q_", 0) == 0) {
      decimalCols.push_back(c);
    }
  }
  if (probCol == header.size()) throw ConfigError("distribution CSV: no probability column");
  if (!exactCols.empty() && exactCols.size() != decimalCols.size()) {
    throw ConfigError("distribution CSV: exact and decimal heat columns differ in count");
  }
  const auto& keyCols = exactCols.empty() ? decimalCols : exactCols;

  JointHeatDistribution dist;
  dist.direction = dir;
  dist.collisions = keyCols.size();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ConfigError("distribution CSV row " + std::to_string(row) + ": expected " +
                        std::to_string(header.size()) + " cells");
    }
    HeatTuple q;
    for (std::size_t c : keyCols) {
      try {
        q.push_back(parse_rational(cells[c]));
      } catch (const ConfigError& e) {
        throw ConfigError("distribution CSV row " + std::to_string(row) + ": " + e.what());
      }
    }
    double p = 0.0;
    try {
      p = std::stod(cells[probCol]);
    } catch (const std::exception&) {
      throw ConfigError("distribution CSV row " + std::to_string(row) + ": bad probability");
    }
    dist.entries[q] += p;
  }
  return dist;
}

inline nlohmann::json to_json(const JointHeatDistribution& dist) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [q, p] : dist.entries) {
    nlohmann::json exact = nlohmann::json::array(), decimal = nlohmann::json::array();
    for (const auto& v : q) {
      exact.push_back(format_rational(v));
      decimal.push_back(format_decimal12(v));
    }
    entries.push_back({{"Q", exact}, {"Q_decimal", decimal}, {"probability", p}});
  }
  return {{"direction", std::string(to_string(dist.direction))},
          {"collisions", dist.collisions},
          {"pruned_mass", dist.prunedMass},
          {"entries", entries}};
}

inline JointHeatDistribution distribution_from_json(const nlohmann::json& j) {
  try {
    JointHeatDistribution dist;
    const auto dir = j.at("direction").get<std::string>();
    if (dir != "forward" && dir != "backward") {
      throw ConfigError("distribution JSON: unknown direction '" + dir + "'");
    }
    dist.direction = dir == "forward" ? Direction::forward : Direction::backward;
    dist.collisions = j.at("collisions").get<std::size_t>();
    dist.prunedMass = j.value("pruned_mass", 0.0);
    for (const auto& e : j.at("entries")) {
      HeatTuple q;
      for (const auto& v : e.at("Q")) q.push_back(parse_rational(v.get<std::string>()));
      if (q.size() != dist.collisions) {
        throw ConfigError("distribution JSON: key length differs from collisions");
      }
      dist.entries[q] += e.at("probability").get<double>();
    }
    return dist;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("distribution JSON: ") + e.what());
  }
}

/// One line-delimited JSON record per sampled trajectory.
inline std::string trajectory_line(std::uint64_t shot, const TrajectoryRecord& r) {
  nlohmann::json pairs = nlohmann::json::array(), heats = nlohmann::json::array();
  for (const auto& [a, b] : r.trajectory.ancillaPairs) pairs.push_back({a, b});
  for (const auto& q : r.heats) heats.push_back(format_rational(q));
  nlohmann::json line = {{"shot", shot},
                         {"alphas", r.trajectory.alphas},
                         {"ancilla_pairs", pairs},
                         {"heats", heats},
                         {"sigma", r.sigma},
                         {"log_path_probability", r.logPathProbability}};
  return line.dump();
}

}  // namespace seqheat
