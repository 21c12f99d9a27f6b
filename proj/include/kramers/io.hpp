#pragma once

#include <fstream>
#include <json.hpp>

#include "kramers/heights.hpp"
#include "kramers/reduced_chain.hpp"

namespace kramers {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

inline Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

inline Mat mat_from_json(const json& a) {
  if (a.empty()) return Mat(0, 0);
  Mat m(a.size(), a[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      m(i, j) = a[i][j].get<double>();
  return m;
}

inline json critical_point_to_json(const CriticalPoint& cp) {
  json j;
  j["id"] = cp.id;
  j["x"] = to_json(cp.x);
  j["u"] = cp.u;
  j["index"] = cp.index;
  j["kind"] = cp.kind == CriticalKind::Minimum  ? "minimum"
              : cp.kind == CriticalKind::Saddle ? "saddle"
                                                : "higher-index";
  j["hess_eigvals"] = to_json(cp.hess_eigvals);
  if (cp.kind == CriticalKind::Saddle) j["mu"] = cp.mu;
  return j;
}

inline json landscape_graph_to_json(const std::string& potential,
                                    const std::vector<CriticalPoint>& cps,
                                    const LandscapeGraph& g) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["potential"] = potential;
  j["critical_points"] = json::array();
  for (const auto& cp : cps) j["critical_points"].push_back(critical_point_to_json(cp));
  j["edges"] = json::array();
  for (const auto& e : g.edges)
    j["edges"].push_back({{"saddle", e.saddle_id},
                          {"minus_target", e.minus_target},
                          {"plus_target", e.plus_target}});
  j["minima"] = g.minima;
  j["saddles"] = g.saddles;
  j["theta"] = to_json(g.theta);
  j["gamma"] = to_json(g.gamma);
  j["d1"] = g.d1;
  j["gates"] = g.gates;
  json V = json::array();
  for (const auto& s : g.neighbors) V.push_back(std::vector<int>(s.begin(), s.end()));
  j["V"] = V;
  json S = json::array();
  for (const auto& [key, sads] : g.separating)
    S.push_back({{"m", key.first}, {"mp", key.second}, {"saddles", sads}});
  j["S"] = S;
  j["warnings"] = g.warnings;
  return j;
}

inline json reduced_chain_to_json(const ReducedChain& rc) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["states"] = rc.states;
  j["nu"] = to_json(rc.nu);
  j["omega1"] = to_json(rc.omega1);
  j["L"] = to_json(rc.L);
  j["d1"] = rc.d1;
  return j;
}

inline ReducedChain reduced_chain_from_json(const json& j) {
  ReducedChain rc;
  rc.states = j.at("states").get<std::vector<int>>();
  rc.nu = vec_from_json(j.at("nu"));
  rc.omega1 = mat_from_json(j.at("omega1"));
  rc.L = mat_from_json(j.at("L"));
  rc.d1 = j.at("d1").get<double>();
  return rc;
}

inline json chain_structure_to_json(const ChainStructure& cs) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["classes"] = cs.classes;
  j["pis"] = json::array();
  for (const auto& pi : cs.pis) j["pis"].push_back(to_json(pi));
  j["absorption"] = to_json(cs.absorption);
  j["transient"] = cs.transient;
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingStageOutputError("cannot read " + path);
  json j;
  in >> j;
  return j;
}

/// Parse a potential spec file: {name, dim, monomials, ell_mode, box}.
inline PotentialSpec potential_from_json(const json& j) {
  std::string name = j.value("name", "custom");
  int dim = j.at("dim").get<int>();
  Polynomial u;
  for (const auto& t : j.at("monomials")) {
    Monomial m;
    m.coeff = t.at("coeffs").get<double>();
    m.exponents = t.at("exponents").get<std::vector<int>>();
    if (static_cast<int>(m.exponents.size()) != dim)
      throw std::runtime_error("monomial exponent arity != dim");
    u.push_back(m);
  }
  Box box;
  for (const auto& iv : j.at("box")) {
    box.lo.push_back(iv[0].get<double>());
    box.hi.push_back(iv[1].get<double>());
  }
  std::string ell_mode = "none";
  double ell_c = 0;
  std::vector<Polynomial> ell_polys;
  if (j.contains("ell_mode")) {
    std::string em = j["ell_mode"].get<std::string>();
    if (em.rfind("rot90_scaled", 0) == 0) {
      ell_mode = "rot90_scaled";
      auto sp = em.find(' ');
      ell_c = sp == std::string::npos ? 1.0 : std::stod(em.substr(sp + 1));
    } else if (em == "monomials") {
      ell_mode = "monomials";
      for (const auto& comp : j.at("ell_monomials")) {
        Polynomial p;
        for (const auto& t : comp) {
          Monomial m;
          m.coeff = t.at("coeffs").get<double>();
          m.exponents = t.at("exponents").get<std::vector<int>>();
          p.push_back(m);
        }
        ell_polys.push_back(p);
      }
    } else if (em != "none") {
      throw std::runtime_error("unknown ell_mode: " + em);
    }
  }
  return make_polynomial_potential(name, dim, u, box, ell_mode, ell_c,
                                   ell_polys);
}

}  // namespace kramers
