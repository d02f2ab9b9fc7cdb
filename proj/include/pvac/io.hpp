#ifndef PVAC_IO_HPP
#define PVAC_IO_HPP

#include "pvac/coords.hpp"
#include "pvac/evolution.hpp"
#include "pvac/picard.hpp"
#include "pvac/scenarios.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace pvac {

using json = nlohmann::json;

namespace io_detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace io_detail

inline void write_field_csv(const std::filesystem::path& path, const Field& f) {
  auto out = io_detail::open_out(path);
  out << "xi,value\n";
  for (Index j = 0; j < f.size(); ++j)
    out << f.grid->nodes[j] << "," << f.values[j] << "\n";
}

inline void write_profile_csv(const std::filesystem::path& path,
                              const EulerianProfile& prof) {
  auto out = io_detail::open_out(path);
  out << "x,rho,u\n";
  for (Index i = 0; i < prof.x.size(); ++i)
    out << prof.x[i] << "," << prof.rho[i] << "," << prof.u[i] << "\n";
}

inline json profile_to_json(const EulerianProfile& prof) {
  json j;
  j["vacuum_point"] = prof.vacuum_point;
  j["x"] = std::vector<Real>(prof.x.begin(), prof.x.end());
  j["rho"] = std::vector<Real>(prof.rho.begin(), prof.rho.end());
  j["u"] = std::vector<Real>(prof.u.begin(), prof.u.end());
  return j;
}

/// Per-step energy and boundary records:
/// t, zeroth, full, level_0..level_s, phi_over_xi_min/max, a(t), u(t,0), cfl.
inline void write_timeseries_csv(const std::filesystem::path& path,
                                 const SimulationResult& res) {
  auto out = io_detail::open_out(path);
  const auto levels = res.records.empty() ? 0 : res.records[0].energy.phi_levels.size();
  out << "t,zeroth,full,equivalent";
  for (std::size_t i = 0; i < levels; ++i) out << ",level_" << i;
  out << ",phi_over_xi_min,phi_over_xi_max,a_pos,u0,u0_alt,u1_residual,cfl\n";
  const Real c1 = 1.0;  // levels reported as the unweighted per-order sums
  (void)c1;
  for (const auto& r : res.records) {
    out << r.t << "," << r.energy.zeroth << "," << r.energy.full << ","
        << r.energy.equivalent;
    for (std::size_t i = 0; i < levels; ++i)
      out << "," << (r.energy.phi_levels[i] + r.energy.u_levels[i]);
    out << "," << r.energy.phi_over_xi_min << "," << r.energy.phi_over_xi_max
        << "," << r.a_pos << "," << r.u0_extrap << "," << r.u0_integral << ","
        << r.u1_residual << "," << r.cfl << "\n";
  }
}

/// Per-iterate records: n, approximate energy, envelope, differences.
inline void write_trace_csv(const std::filesystem::path& path,
                            const PicardResult& res) {
  auto out = io_detail::open_out(path);
  out << "n,approx_energy_sup,approx_energy_final,phi_over_xi_min,phi_over_xi_max,"
         "diff_to_previous,fg_residual\n";
  for (const auto& r : res.trace)
    out << r.n << "," << r.approx_energy_sup << "," << r.approx_energy_final << ","
        << r.phi_over_xi_min << "," << r.phi_over_xi_max << "," << r.diff_prev
        << "," << r.fg_residual << "\n";
}

/// Operator dump in coordinate text format (row, col, value).
inline void write_matrix_coord(const std::filesystem::path& path, const MatrixR& M,
                               Real drop_tol = 0.0) {
  auto out = io_detail::open_out(path);
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j)
      if (std::abs(M(i, j)) > drop_tol) out << i << " " << j << " " << M(i, j) << "\n";
}

inline json state_to_json(const State& st) {
  json j;
  j["time"] = st.time;
  j["n"] = st.grid().n;
  j["grading"] = st.grid().grading;
  j["phi_over_xi"] = std::vector<Real>(st.phi_over_xi.values.begin(),
                                       st.phi_over_xi.values.end());
  j["u"] = std::vector<Real>(st.u.values.begin(), st.u.values.end());
  return j;
}

inline State state_from_json(const json& j, const Grid& g) {
  if (j.at("n").get<Index>() != g.n)
    throw ConfigError("checkpoint grid size does not match");
  State st;
  auto pv = j.at("phi_over_xi").get<std::vector<Real>>();
  auto uv = j.at("u").get<std::vector<Real>>();
  st.phi_over_xi = Field(g, Eigen::Map<VectorR>(pv.data(), pv.size()), 0.0);
  st.u = Field(g, Eigen::Map<VectorR>(uv.data(), uv.size()), 1.0);
  st.dphi_dt = Field(g, 1.0);
  st.time = j.value("time", 0.0);
  return st;
}

// ---------------------------------------------------------------------------
// Run configuration (JSON schema documented in the README).
// ---------------------------------------------------------------------------

struct CliConfig {
  Scenario scenario;
  Real T_override = 0.0;
  Real dt_override = 0.0;
  Index n_override = 0;
  std::string scheme = "midpoint";
  Index record_every = 1;
  int picard_max_iterations = 10;
  bool dump_operators = false;
};

inline CliConfig parse_config(const json& j) {
  CliConfig cfg;
  auto scen = builtin_scenarios();
  if (j.contains("scenario")) {
    cfg.scenario = find_scenario(scen, j.at("scenario").get<std::string>());
  } else {
    cfg.scenario = scen[0];
  }
  if (j.contains("params")) {
    const auto& p = j.at("params");
    if (p.contains("gamma")) cfg.scenario.gamma = p.at("gamma").get<Real>();
    if (!(cfg.scenario.gamma > 1.0))
      throw ConfigError("config: gamma must exceed 1");
  }
  if (j.contains("initial")) {
    const auto& p = j.at("initial");
    if (p.contains("epsilon")) cfg.scenario.epsilon = p.at("epsilon").get<Real>();
    if (p.contains("poly"))
      cfg.scenario.poly = p.at("poly").get<std::vector<Real>>();
    if (cfg.scenario.epsilon < 0.0 || cfg.scenario.epsilon > 0.2)
      throw ConfigError("config: epsilon outside [0, 0.2]");
  }
  if (j.contains("grid")) {
    const auto& p = j.at("grid");
    if (p.contains("n")) cfg.n_override = p.at("n").get<Index>();
    if (p.contains("grading")) cfg.scenario.grading = p.at("grading").get<Real>();
  }
  if (j.contains("time")) {
    const auto& p = j.at("time");
    if (p.contains("dt")) cfg.dt_override = p.at("dt").get<Real>();
    if (p.contains("T")) cfg.T_override = p.at("T").get<Real>();
    if (p.contains("scheme")) cfg.scheme = p.at("scheme").get<std::string>();
    if (p.contains("record_every"))
      cfg.record_every = p.at("record_every").get<Index>();
  }
  if (j.contains("picard")) {
    const auto& p = j.at("picard");
    if (p.contains("max_iterations"))
      cfg.picard_max_iterations = p.at("max_iterations").get<int>();
  }
  cfg.dump_operators = j.value("dump_operators", false);
  if (cfg.n_override > 0) cfg.scenario.n = cfg.n_override;
  if (cfg.dt_override > 0) cfg.scenario.dt = cfg.dt_override;
  if (cfg.T_override > 0) cfg.scenario.T = cfg.T_override;
  scheme_from_string(cfg.scheme);  // validate
  return cfg;
}

inline CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace pvac

#endif  // PVAC_IO_HPP
