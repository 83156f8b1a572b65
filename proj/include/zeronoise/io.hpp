#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeronoise/asymptotics_lab.hpp"
#include "zeronoise/sde_engine.hpp"

namespace zeronoise::io {

// Shortest round-trip representation of a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <int Dim>
std::string trajectory_csv(const Trajectory<Dim>& traj) {
  std::ostringstream out;
  out << 't';
  for (int c = 1; c <= Dim; ++c) out << ",x" << c;
  out << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]);
    for (int c = 0; c < Dim; ++c) out << ',' << format_double(traj.states[k][c]);
    out << '\n';
  }
  return out.str();
}

template <int Dim>
nlohmann::ordered_json trajectory_meta(const Trajectory<Dim>& traj) {
  nlohmann::ordered_json meta;
  meta["field"] = traj.field_name;
  meta["epsilon"] = traj.epsilon;
  meta["alpha"] = traj.noise ? nlohmann::ordered_json(traj.noise->alpha) : nlohmann::ordered_json(nullptr);
  meta["c"] = traj.noise ? nlohmann::ordered_json(traj.noise->c) : nlohmann::ordered_json(nullptr);
  meta["seed"] = traj.seed ? nlohmann::ordered_json(*traj.seed) : nlohmann::ordered_json(nullptr);
  meta["stream"] = traj.stream ? nlohmann::ordered_json(*traj.stream) : nlohmann::ordered_json(nullptr);
  meta["h"] = traj.h;
  meta["d"] = Dim;
  return meta;
}

template <int Dim>
nlohmann::ordered_json trajectory_json(const Trajectory<Dim>& traj) {
  nlohmann::ordered_json j;
  j["metadata"] = trajectory_meta(traj);
  j["t"] = traj.times;
  auto& states = j["x"] = nlohmann::ordered_json::array();
  for (const auto& x : traj.states) {
    std::vector<double> row(x.data(), x.data() + Dim);
    states.push_back(row);
  }
  return j;
}

template <int Dim>
Trajectory<Dim> trajectory_from_json(const nlohmann::ordered_json& j) {
  Trajectory<Dim> traj;
  const auto& meta = j.at("metadata");
  if (meta.at("d").get<int>() != Dim) throw std::runtime_error("trajectory dimension mismatch");
  traj.field_name = meta.at("field").get<std::string>();
  traj.epsilon = meta.at("epsilon").get<double>();
  traj.h = meta.at("h").get<double>();
  if (!meta.at("seed").is_null()) traj.seed = meta.at("seed").get<std::uint64_t>();
  if (!meta.at("stream").is_null()) traj.stream = meta.at("stream").get<std::uint64_t>();
  if (!meta.at("alpha").is_null())
    traj.noise = StableParams{meta.at("alpha").get<double>(), meta.at("c").get<double>(), Dim};
  traj.times = j.at("t").get<std::vector<double>>();
  for (const auto& row : j.at("x")) {
    const auto v = row.get<std::vector<double>>();
    if (v.size() != static_cast<std::size_t>(Dim)) throw std::runtime_error("state row has wrong length");
    Point<Dim> x;
    for (int c = 0; c < Dim; ++c) x[c] = v[c];
    traj.states.push_back(x);
  }
  if (traj.states.size() != traj.times.size()) throw std::runtime_error("times and states differ in length");
  return traj;
}

template <int Dim>
std::string angle_sample_csv(const AngleSample<Dim>& sample) {
  std::ostringstream out;
  for (int c = 1; c <= Dim; ++c) out << (c > 1 ? "," : "") << "phi" << c;
  out << ",exit_time\n";
  for (std::size_t i = 0; i < sample.samples.size(); ++i) {
    for (int c = 0; c < Dim; ++c) out << (c > 0 ? "," : "") << format_double(sample.samples[i][c]);
    out << ',' << format_double(sample.exit_times[i]) << '\n';
  }
  return out.str();
}

template <int Dim>
nlohmann::ordered_json angle_sample_meta(const AngleSample<Dim>& sample) {
  const auto& m = sample.meta;
  nlohmann::ordered_json j;
  j["field"] = m.field;
  j["alpha"] = m.alpha;
  j["c"] = m.c;
  j["beta"] = m.beta;
  j["R"] = m.radius;
  j["N"] = m.n;
  j["seed"] = m.seed;
  j["streams"] = {m.first_stream, m.first_stream + m.n - 1};
  j["h"] = m.h;
  j["horizon"] = m.horizon;
  j["non_exits"] = m.non_exits;
  j["d"] = Dim;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace zeronoise::io
