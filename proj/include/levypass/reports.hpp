#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "levypass/asymptotics.hpp"
#include "levypass/bounds.hpp"
#include "levypass/common.hpp"
#include "levypass/limit_laws.hpp"
#include "levypass/mc_engine.hpp"
#include "levypass/process.hpp"
#include "levypass/zero_finder.hpp"

namespace levypass {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

inline json to_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

inline json to_json(const HypothesesReport& r) {
  return json{{"schema_version", kSchemaVersion},
              {"satisfied", r.satisfied},
              {"asymptotics_supported", r.asymptotics_supported},
              {"r_nu", r.r_nu},
              {"B_nu", r.B_nu},
              {"requested_B", r.requested_B},
              {"kappa_cap", r.kappa_cap},
              {"detail", r.detail}};
}

inline json to_json(const ZeroReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs)
    pairs.push_back(json{{"gamma", to_json(p.gamma)},
                         {"multiplicity", p.multiplicity}});
  return json{{"schema_version", kSchemaVersion},
              {"theta", r.theta},
              {"gamma0", r.gamma0},
              {"gamma0_star", r.gamma0_star},
              {"gamma0_multiplicity", r.gamma0_multiplicity},
              {"pairs", pairs},
              {"strip", json{{"B", r.strip_B}, {"beta_theta", r.beta_theta}}},
              {"total_count", r.total_count},
              {"ordered", r.ordered}};
}

inline json to_json(const ExpansionReport& r) {
  json terms = json::array();
  for (const auto& t : r.terms) {
    json poly = json::array();
    for (const auto& c : t.poly) poly.push_back(to_json(c));
    terms.push_back(json{{"gamma", to_json(t.gamma)},
                         {"a", t.a},
                         {"multiplicity", t.multiplicity},
                         {"poly", poly}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"theta", r.theta},
              {"mu", r.mu},
              {"rho", r.rho},
              {"gamma0", r.gamma0},
              {"C0", r.C0},
              {"C0_error", r.C0_error},
              {"terms", terms},
              {"remainder_B", r.B}};
}

inline json to_json(const FEstimate& e) {
  return json{{"value", e.value},
              {"std_error", e.std_error},
              {"hits", e.hits},
              {"n_paths", e.n_paths}};
}

inline json to_json(const PolyBoundReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back(json{{"x", c.x},
                         {"f_hat", c.f_hat},
                         {"std_error", c.std_error},
                         {"scaled", c.scaled}});
  return json{{"schema_version", kSchemaVersion},
              {"p", r.p},
              {"n", r.n},
              {"C_n", r.C_n},
              {"cells", cells},
              {"violations", r.violations},
              {"right_end_stable", r.right_end_stable}};
}

inline json to_json(const GaussianLimit& g) {
  return json{{"schema_version", kSchemaVersion},
              {"mean_shift_coeff", g.mean_shift_coeff},
              {"variance", g.variance},
              {"anchor", g.anchor}};
}

inline json to_json(const BerryEsseenProbe& p) {
  return json{{"schema_version", kSchemaVersion},
              {"x", p.xs},
              {"distances", p.distances},
              {"slope_mean", p.slope_mean},
              {"slope_sd", p.slope_sd},
              {"slope_upper95", p.slope_upper95},
              {"replicates", p.replicates}};
}

// ---------------------------------------------------------------------------
// CSV with stable formatting (%.17g reproduces doubles bit-exactly).
// ---------------------------------------------------------------------------

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) body_ += ',';
      body_ += header[i];
    }
    body_ += '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) body_ += ',';
      body_ += csv_number(values[i]);
    }
    body_ += '\n';
  }
  const std::string& str() const { return body_; }

 private:
  std::string body_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

// ---------------------------------------------------------------------------
// Run manifest: every output file a run produced, plus enough metadata to
// reproduce it (outputs are byte-identical for identical inputs and seed).
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string spec_file;
  std::string subcommand;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<std::string> outputs;
  double wall_clock_s = 0.0;

  json to_json_obj() const {
    return json{{"schema_version", kSchemaVersion},
                {"tool_version", kToolVersion},
                {"spec_file", spec_file},
                {"subcommand", subcommand},
                {"argv", argv},
                {"seed", seed},
                {"out_dir", out_dir},
                {"outputs", outputs},
                {"wall_clock_s", wall_clock_s}};
  }
};

}  // namespace levypass
