#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eulerlu/eulerian_lu.hpp"
#include "eulerlu/lu.hpp"
#include "eulerlu/solver.hpp"

namespace eulerlu {

using json = nlohmann::ordered_json;

inline json entries_to_json(const std::vector<Entry>& v) {
  json a = json::array();
  for (const Entry& e : v) a.push_back(json::array({e.index, e.value}));
  return a;
}

inline std::vector<Entry> entries_from_json(const json& a) {
  std::vector<Entry> v;
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2) fail(ErrorKind::ParseError, "factor entries must be [index, value] pairs");
    v.push_back({p[0].get<Index>(), p[1].get<double>()});
  }
  return v;
}

inline json config_to_json(const LuConfig& c) {
  return json{{"eps", c.eps},
              {"delta", c.delta},
              {"alpha", c.alpha},
              {"mode", to_string(c.mode)},
              {"sparsifier", to_string(c.sparsifier)},
              {"samples", c.samples},
              {"c_p", c.c_p},
              {"max_samples", c.max_samples},
              {"target_nnz", c.target_nnz},
              {"dense_cutoff", c.dense_cutoff},
              {"max_phases", c.max_phases}};
}

inline LuConfig config_from_json(const json& j) {
  LuConfig c;
  c.eps = j.value("eps", c.eps);
  c.delta = j.value("delta", c.delta);
  c.alpha = j.value("alpha", c.alpha);
  c.mode = parse_elimination_mode(j.value("mode", std::string("sampled")));
  c.sparsifier = parse_sparsifier_mode(j.value("sparsifier", std::string("exact")));
  c.samples = j.value("samples", c.samples);
  c.c_p = j.value("c_p", c.c_p);
  c.max_samples = j.value("max_samples", c.max_samples);
  c.target_nnz = j.value("target_nnz", c.target_nnz);
  c.dense_cutoff = j.value("dense_cutoff", c.dense_cutoff);
  c.max_phases = j.value("max_phases", c.max_phases);
  return c;
}

/// Build statistics. Wall time is left out unless asked for so that equal
/// inputs give byte-identical output.
inline json stats_to_json(const LuStats& s, bool timing = false) {
  json phases = json::array();
  for (const PhaseStats& p : s.phase_stats) {
    phases.push_back(json{{"remaining", p.remaining},
                          {"pool", p.pool},
                          {"eliminated", p.eliminated},
                          {"rcdd_attempts", p.rcdd_attempts},
                          {"nnz_in", p.nnz_in},
                          {"resparsifications", p.resparsifications}});
  }
  json j{{"n", s.n},
         {"phases", s.phases},
         {"samples", s.samples},
         {"target_nnz", s.target_nnz},
         {"eps_phase", s.eps_phase},
         {"delta", s.delta},
         {"delta_phase", s.delta_phase},
         {"nnz_input", s.nnz_input},
         {"nnz_after_sparsify", s.nnz_after_sparsify},
         {"max_nnz", s.max_nnz},
         {"resparsifications", s.resparsifications},
         {"exact_fallbacks", s.exact_fallbacks},
         {"dense_finish_vertices", s.dense_finish_vertices},
         {"max_balance_defect", s.max_balance_defect},
         {"phase_stats", phases}};
  if (timing) j["seconds"] = s.seconds;
  return j;
}

inline json factorization_to_json(const LUFactorization& f, const LuConfig& cfg, std::uint64_t seed,
                                  const LuStats& stats, bool timing = false) {
  json cols = json::array(), rows = json::array();
  for (const auto& c : f.columns) cols.push_back(entries_to_json(c));
  for (const auto& r : f.rows) rows.push_back(entries_to_json(r));
  json s = stats_to_json(stats, timing);
  s["nnz_lower"] = f.nnz_lower();
  s["nnz_upper"] = f.nnz_upper();
  return json{{"n", f.n},
              {"permutation", f.order},
              {"pivots", f.pivots},
              {"columns", cols},
              {"rows", rows},
              {"config", config_to_json(cfg)},
              {"seed", seed},
              {"stats", s}};
}

inline LUFactorization factorization_from_json(const json& j) {
  LUFactorization f;
  try {
    f.n = j.at("n").get<Index>();
    f.order = j.at("permutation").get<std::vector<Index>>();
    f.pivots = j.at("pivots").get<std::vector<double>>();
    for (const auto& c : j.at("columns")) f.columns.push_back(entries_from_json(c));
    for (const auto& r : j.at("rows")) f.rows.push_back(entries_from_json(r));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("factorization JSON: ") + e.what());
  }
  const std::size_t k = f.order.size();
  if (f.pivots.size() != k || f.columns.size() != k || f.rows.size() != k) {
    fail(ErrorKind::ParseError, "factorization JSON: inconsistent record counts");
  }
  for (Index v : f.order) if (v < 0 || v >= f.n) fail(ErrorKind::IndexOutOfRange, "factorization permutation");
  for (const auto* group : {&f.columns, &f.rows})
    for (const auto& list : *group)
      for (const Entry& e : list)
        if (e.index < 0 || e.index >= f.n) fail(ErrorKind::IndexOutOfRange, "factorization entry");
  return f;
}

inline json solve_report_to_json(const SolveReport& r, bool timing = false) {
  json j{{"iterations", r.iterations},
         {"converged", r.converged},
         {"certificate", r.certificate},
         {"final_relative_error", r.final_relative_error},
         {"median_contraction", r.median_contraction},
         {"projected_rhs", r.projected_rhs},
         {"residual_l2", r.residual_l2},
         {"error_u", r.error_u}};
  if (r.certificate == "l2-residual") {
    j["caveat"] = "U_L error not computed above the dense limit; stopping rule uses the relative l2 residual";
  }
  if (timing) j["seconds"] = r.seconds;
  return j;
}

}  // namespace eulerlu
