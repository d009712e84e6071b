#pragma once

// Model persistence as JSON:
//   {format_version, s, f, C, r_squared, oof, sv: [[...], ...], alphas: [...]}
// Doubles are written with round-trip precision, so a reloaded model makes
// the same scoring decisions as the original.

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "svdd/error.hpp"
#include "svdd/solver.hpp"

namespace svdd {

inline constexpr int model_format_version = 1;

inline nlohmann::json model_to_json(const SvddModel& m) {
  nlohmann::json sv = nlohmann::json::array();
  for (Index i = 0; i < m.nsv; ++i) {
    const auto row = m.sv(i);
    sv.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"format_version", model_format_version},
          {"s", m.s},
          {"f", m.f},
          {"C", m.C},
          {"r_squared", m.r_squared},
          {"oof", m.oof},
          {"alpha_k_alpha", m.alpha_k_alpha},
          {"sv", sv},
          {"alphas", std::vector<double>(m.alphas.data(), m.alphas.data() + m.alphas.size())}};
}

// alpha_k_alpha is optional in the document; when absent it is recomputed
// from the support vectors.
inline SvddModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != model_format_version)
      throw ParseError("unsupported model format_version", 0, 0);
    SvddModel m;
    m.s = j.at("s").get<double>();
    m.f = j.at("f").get<double>();
    m.C = j.at("C").get<double>();
    m.r_squared = j.at("r_squared").get<double>();
    m.oof = j.at("oof").get<double>();
    const auto sv = j.at("sv").get<std::vector<std::vector<double>>>();
    const auto alphas = j.at("alphas").get<std::vector<double>>();
    if (sv.empty() || sv.size() != alphas.size())
      throw ParseError("model needs one alpha per support vector", 0, 0);
    check_bandwidth(m.s);
    const auto dims = sv.front().size();
    if (dims == 0) throw ParseError("support vectors have no coordinates", 0, 0);
    m.nsv = static_cast<Index>(sv.size());
    m.sv_points.resize(m.nsv, static_cast<Index>(dims));
    m.alphas.resize(m.nsv);
    for (Index i = 0; i < m.nsv; ++i) {
      const auto& row = sv[static_cast<std::size_t>(i)];
      if (row.size() != dims) throw ParseError("support vectors differ in dimension", 0, 0);
      for (std::size_t c = 0; c < dims; ++c) m.sv_points(i, static_cast<Index>(c)) = row[c];
      m.alphas[i] = alphas[static_cast<std::size_t>(i)];
      m.sv_indices.push_back(i);
      m.sv_interior.push_back(m.alphas[i] < m.C);
    }
    if (j.contains("alpha_k_alpha")) {
      m.alpha_k_alpha = j.at("alpha_k_alpha").get<double>();
    } else {
      double quad = 0.0;
      for (Index a = 0; a < m.nsv; ++a)
        for (Index b = 0; b < m.nsv; ++b)
          quad += m.alphas[a] * m.alphas[b] * gaussian_kernel(m.sv(a), m.sv(b), m.s);
      m.alpha_k_alpha = quad;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what(), 0, 0);
  }
}

inline void save_model(const SvddModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << model_to_json(m).dump(2) << '\n';
}

inline SvddModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what(), 0, 0);
  }
  return model_from_json(j);
}

}  // namespace svdd
