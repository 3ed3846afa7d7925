#pragma once

// Scenario files: JSON documents with sections domain, material, time, data,
// method and tolerances. Unknown keys are rejected so that typos surface as
// schema errors instead of silently falling back to defaults.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbf/dbf_model.hpp"

namespace dbf {

using json = nlohmann::json;

struct ModeRef {
  IVec3 k{0, 0, 0};
  Helicity helicity = Helicity::Const;
  int component = -1;

  std::size_t resolve(const ModeTable& table) const;
  friend bool operator==(const ModeRef&, const ModeRef&) = default;
};

struct ModeDatum {
  ModeRef mode;
  cplx e{0.0, 0.0};
  cplx h{0.0, 0.0};
  friend bool operator==(const ModeDatum&, const ModeDatum&) = default;
};

struct SourceSpec {
  Waveform wf;
  std::vector<ModeDatum> targets;
};

struct Scenario {
  int K = 1;
  std::string model = "dbf";
  double epsilon = 1.0;
  double mu = 1.0;
  double eta = 0.5;
  // generalized model
  CMatrix kappa0;
  MaterialSymbol kappa1 = MaterialSymbol::zero(2);
  CMatrix mstar0;
  MaterialSymbol mstar1 = MaterialSymbol::zero(2);
  std::optional<Eigen::Vector3d> k_cross;
  double cross_scale = 1.0;

  TimeGrid grid{0.0, 0.01, 1024, 0.5};
  double nu = 1.0;
  std::vector<ModeDatum> W0;
  SourceSpec source;
  Method method = Method::Exact;
  Tolerances tol;

  bool generalized() const { return model == "generalized"; }
};

Scenario parse_scenario(const json& doc);
Scenario load_scenario(const std::string& path);
/// Canonical document; parse_scenario(scenario_to_json(s)) reproduces s.
json scenario_to_json(const Scenario& s);
bool operator==(const Scenario& a, const Scenario& b);

DBFScenario build_dbf(const Scenario& s, const ModeTablePtr& table);
GeneralizedScenario build_generalized(const Scenario& s, const ModeTablePtr& table);

/// Copy of the scenario with all data (W0 and source) removed.
Scenario without_data(const Scenario& s);

// JSON helpers shared with the command layer.
json complex_to_json(cplx v);
cplx complex_from_json(const json& j, const std::string& where);
json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const json& j, std::size_t dim, const std::string& where);
json symbol_to_json(const MaterialSymbol& m);
MaterialSymbol symbol_from_json(const json& j, std::size_t dim, const std::string& where);

}  // namespace dbf
