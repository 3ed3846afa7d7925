#include "dbf/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace dbf {

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  require(obj.is_object(), ErrorKind::Schema, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    require(ok.count(it.key()) > 0, ErrorKind::Schema,
            "unknown key '" + it.key() + "' in " + where);
  }
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  require(obj[key].is_number(), ErrorKind::Schema, where + "." + key + " must be a number");
  return obj[key].get<double>();
}

int integer(const json& obj, const char* key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  require(obj[key].is_number_integer(), ErrorKind::Schema,
          where + "." + key + " must be an integer");
  return obj[key].get<int>();
}

const json& section(const json& doc, const char* key) {
  require(doc.contains(key), ErrorKind::Schema, std::string("missing section '") + key + "'");
  return doc[key];
}

ModeRef mode_ref_from_json(const json& j, const std::string& where) {
  require(j.contains("k") && j["k"].is_array() && j["k"].size() == 3, ErrorKind::Schema,
          where + ".k must be an integer 3-vector");
  ModeRef r;
  for (int c = 0; c < 3; ++c) {
    require(j["k"][c].is_number_integer(), ErrorKind::Schema, where + ".k must hold integers");
    r.k[c] = j["k"][c].get<int>();
  }
  require(j.contains("helicity") && j["helicity"].is_string(), ErrorKind::Schema,
          where + ".helicity must be a string");
  r.helicity = helicity_from_string(j["helicity"].get<std::string>());
  r.component = integer(j, "component", -1, where);
  if (r.helicity == Helicity::Const) {
    require(r.component >= 0 && r.component <= 2, ErrorKind::Schema,
            where + ": const modes need component 0, 1 or 2");
  }
  return r;
}

json mode_ref_to_json(const ModeRef& r) {
  json j = {{"k", {r.k[0], r.k[1], r.k[2]}}, {"helicity", to_string(r.helicity)}};
  if (r.helicity == Helicity::Const) j["component"] = r.component;
  return j;
}

ModeDatum datum_from_json(const json& j, const std::string& where) {
  check_keys(j, {"k", "helicity", "component", "e", "h"}, where);
  ModeDatum d;
  d.mode = mode_ref_from_json(j, where);
  if (j.contains("e")) d.e = complex_from_json(j["e"], where + ".e");
  if (j.contains("h")) d.h = complex_from_json(j["h"], where + ".h");
  return d;
}

json datum_to_json(const ModeDatum& d) {
  json j = mode_ref_to_json(d.mode);
  j["e"] = complex_to_json(d.e);
  j["h"] = complex_to_json(d.h);
  return j;
}

const char* waveform_name(Waveform::Kind k) {
  switch (k) {
    case Waveform::Kind::None: return "none";
    case Waveform::Kind::Step: return "step";
    case Waveform::Kind::Gaussian: return "gaussian";
    case Waveform::Kind::DelayedStep: return "delayed_step";
  }
  return "none";
}

Waveform::Kind waveform_from_name(const std::string& s) {
  if (s == "none") return Waveform::Kind::None;
  if (s == "step") return Waveform::Kind::Step;
  if (s == "gaussian") return Waveform::Kind::Gaussian;
  if (s == "delayed_step") return Waveform::Kind::DelayedStep;
  throw Error(ErrorKind::Schema, "unknown waveform '" + s + "' (step|gaussian|delayed_step)");
}

FieldPair assemble_pair(const std::vector<ModeDatum>& data, const ModeTablePtr& table) {
  FieldPair p = FieldPair::zeros(table);
  for (const auto& d : data) {
    const auto i = static_cast<Eigen::Index>(d.mode.resolve(*table));
    p.e_part.coeffs(i) += d.e;
    p.h_part.coeffs(i) += d.h;
  }
  return p;
}

}  // namespace

std::size_t ModeRef::resolve(const ModeTable& table) const {
  return table.index_of(k, helicity, component);
}

json complex_to_json(cplx v) {
  if (v.imag() == 0.0) return v.real();
  return json::array({v.real(), v.imag()});
}

cplx complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(),
          ErrorKind::Schema, where + " must be a number or [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, std::size_t dim, const std::string& where) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number())) {
    return complex_from_json(j, where) * CMatrix::Identity(d, d);
  }
  require(j.is_array() && j.size() == dim, ErrorKind::Schema,
          where + " must be a scalar or a " + std::to_string(dim) + "x" + std::to_string(dim) +
              " matrix");
  CMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    require(j[i].is_array() && j[i].size() == dim, ErrorKind::Schema,
            where + " has a malformed row");
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = complex_from_json(j[i][k], where);
  }
  return m;
}

json symbol_to_json(const MaterialSymbol& m) {
  json poly = json::array();
  for (const auto& c : m.poly()) poly.push_back(matrix_to_json(c));
  json delays = json::array();
  for (const auto& t : m.delays()) delays.push_back({{"h", t.h}, {"coeff", matrix_to_json(t.coeff)}});
  json j = {{"poly", poly}, {"delays", delays}};
  if (std::isfinite(m.radius())) j["radius"] = m.radius();
  return j;
}

MaterialSymbol symbol_from_json(const json& j, std::size_t dim, const std::string& where) {
  if (j.is_number() || (j.is_array() && !j.empty() && !j[0].is_object() && !j[0].is_array()) ||
      (j.is_array() && !j.empty() && j[0].is_array())) {
    // Shorthand: a constant matrix.
    return MaterialSymbol::constant(matrix_from_json(j, dim, where));
  }
  check_keys(j, {"poly", "delays", "radius"}, where);
  std::vector<CMatrix> poly;
  if (j.contains("poly")) {
    require(j["poly"].is_array(), ErrorKind::Schema, where + ".poly must be a list");
    for (std::size_t i = 0; i < j["poly"].size(); ++i) {
      poly.push_back(matrix_from_json(j["poly"][i], dim, where + ".poly[" + std::to_string(i) + "]"));
    }
  }
  std::vector<DelayTerm> delays;
  if (j.contains("delays")) {
    require(j["delays"].is_array(), ErrorKind::Schema, where + ".delays must be a list");
    for (std::size_t i = 0; i < j["delays"].size(); ++i) {
      const auto& t = j["delays"][i];
      const std::string w = where + ".delays[" + std::to_string(i) + "]";
      check_keys(t, {"h", "coeff"}, w);
      require(t.contains("h") && t.contains("coeff"), ErrorKind::Schema, w + " needs h and coeff");
      delays.push_back(DelayTerm{number(t, "h", 0.0, w), matrix_from_json(t["coeff"], dim, w)});
    }
  }
  const double radius = number(j, "radius", std::numeric_limits<double>::infinity(), where);
  return MaterialSymbol(dim, std::move(poly), std::move(delays), radius);
}

Scenario parse_scenario(const json& doc) {
  check_keys(doc, {"domain", "material", "time", "data", "method", "tolerances"}, "scenario");
  Scenario s;

  const auto& domain = section(doc, "domain");
  check_keys(domain, {"K"}, "domain");
  s.K = integer(domain, "K", 1, "domain");
  require(s.K >= 1, ErrorKind::Schema, "domain.K must be at least 1");

  const auto& mat = section(doc, "material");
  require(mat.contains("model") && mat["model"].is_string(), ErrorKind::Schema,
          "material.model must be \"dbf\" or \"generalized\"");
  s.model = mat["model"].get<std::string>();
  if (s.model == "dbf") {
    check_keys(mat, {"model", "epsilon", "mu", "eta"}, "material");
    s.epsilon = number(mat, "epsilon", 1.0, "material");
    s.mu = number(mat, "mu", 1.0, "material");
    s.eta = number(mat, "eta", 0.5, "material");
  } else if (s.model == "generalized") {
    check_keys(mat, {"model", "kappa0", "kappa1", "mstar0", "mstar1", "k_cross", "cross_scale"},
               "material");
    require(mat.contains("kappa0") && mat.contains("mstar0"), ErrorKind::Schema,
            "generalized material needs kappa0 and mstar0");
    s.kappa0 = matrix_from_json(mat["kappa0"], 2, "material.kappa0");
    s.mstar0 = matrix_from_json(mat["mstar0"], 2, "material.mstar0");
    if (mat.contains("kappa1")) s.kappa1 = symbol_from_json(mat["kappa1"], 2, "material.kappa1");
    if (mat.contains("mstar1")) s.mstar1 = symbol_from_json(mat["mstar1"], 2, "material.mstar1");
    if (mat.contains("k_cross")) {
      const auto& k = mat["k_cross"];
      require(k.is_array() && k.size() == 3, ErrorKind::Schema,
              "material.k_cross must be a real 3-vector");
      s.k_cross = Eigen::Vector3d(k[0].get<double>(), k[1].get<double>(), k[2].get<double>());
    }
    s.cross_scale = number(mat, "cross_scale", 1.0, "material");
  } else {
    throw Error(ErrorKind::Schema, "material.model must be \"dbf\" or \"generalized\"");
  }

  const auto& time = section(doc, "time");
  check_keys(time, {"t_start", "dt", "n", "pad_fraction", "nu"}, "time");
  s.grid.t_start = number(time, "t_start", 0.0, "time");
  s.grid.dt = number(time, "dt", 0.01, "time");
  const int n = integer(time, "n", 1024, "time");
  require(n >= 2, ErrorKind::Schema, "time.n must be at least 2");
  s.grid.n_samples = static_cast<std::size_t>(n);
  s.grid.pad_fraction = number(time, "pad_fraction", 0.5, "time");
  s.nu = number(time, "nu", 1.0, "time");
  try {
    s.grid.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, std::string("time: ") + e.what());
  }

  if (doc.contains("data")) {
    const auto& data = doc["data"];
    check_keys(data, {"W0", "source"}, "data");
    if (data.contains("W0")) {
      require(data["W0"].is_array(), ErrorKind::Schema, "data.W0 must be a list");
      for (std::size_t i = 0; i < data["W0"].size(); ++i) {
        s.W0.push_back(datum_from_json(data["W0"][i], "data.W0[" + std::to_string(i) + "]"));
      }
    }
    if (data.contains("source")) {
      const auto& src = data["source"];
      check_keys(src, {"waveform", "amplitude", "t0", "width", "targets"}, "data.source");
      require(src.contains("waveform") && src["waveform"].is_string(), ErrorKind::Schema,
              "data.source.waveform must be a string");
      s.source.wf.kind = waveform_from_name(src["waveform"].get<std::string>());
      s.source.wf.amplitude = number(src, "amplitude", 1.0, "data.source");
      s.source.wf.t0 = number(src, "t0", 0.0, "data.source");
      s.source.wf.width = number(src, "width", 1.0, "data.source");
      require(s.source.wf.width > 0.0, ErrorKind::Schema, "data.source.width must be positive");
      if (s.source.wf.kind == Waveform::Kind::DelayedStep) {
        require(s.source.wf.t0 >= 0.0, ErrorKind::Schema,
                "delayed_step onset t0 must be nonnegative");
      }
      if (src.contains("targets")) {
        require(src["targets"].is_array(), ErrorKind::Schema, "data.source.targets must be a list");
        for (std::size_t i = 0; i < src["targets"].size(); ++i) {
          s.source.targets.push_back(
              datum_from_json(src["targets"][i], "data.source.targets[" + std::to_string(i) + "]"));
        }
      }
    }
  }

  if (doc.contains("method")) {
    require(doc["method"].is_string(), ErrorKind::Schema, "method must be a string");
    s.method = method_from_string(doc["method"].get<std::string>());
  }

  if (doc.contains("tolerances")) {
    const auto& t = doc["tolerances"];
    check_keys(t,
               {"kernel_tol", "near_kernel", "range_tol", "iv_tol", "caus_tol", "resid_tol",
                "fp_tol", "max_iter", "neumann_tol", "neumann_max_terms", "energy_tol"},
               "tolerances");
    Tolerances d;
    s.tol.kernel_tol = number(t, "kernel_tol", d.kernel_tol, "tolerances");
    s.tol.near_kernel = number(t, "near_kernel", d.near_kernel, "tolerances");
    s.tol.range_tol = number(t, "range_tol", d.range_tol, "tolerances");
    s.tol.iv_tol = number(t, "iv_tol", d.iv_tol, "tolerances");
    s.tol.caus_tol = number(t, "caus_tol", d.caus_tol, "tolerances");
    s.tol.resid_tol = number(t, "resid_tol", d.resid_tol, "tolerances");
    s.tol.fp_tol = number(t, "fp_tol", d.fp_tol, "tolerances");
    s.tol.max_iter = integer(t, "max_iter", d.max_iter, "tolerances");
    s.tol.neumann_tol = number(t, "neumann_tol", d.neumann_tol, "tolerances");
    s.tol.neumann_max_terms = integer(t, "neumann_max_terms", d.neumann_max_terms, "tolerances");
    s.tol.energy_tol = number(t, "energy_tol", d.energy_tol, "tolerances");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::InvalidArgument, "cannot open scenario file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

json scenario_to_json(const Scenario& s) {
  json mat;
  if (s.generalized()) {
    mat = {{"model", "generalized"},
           {"kappa0", matrix_to_json(s.kappa0)},
           {"kappa1", symbol_to_json(s.kappa1)},
           {"mstar0", matrix_to_json(s.mstar0)},
           {"mstar1", symbol_to_json(s.mstar1)},
           {"cross_scale", s.cross_scale}};
    if (s.k_cross) mat["k_cross"] = {(*s.k_cross)(0), (*s.k_cross)(1), (*s.k_cross)(2)};
  } else {
    mat = {{"model", "dbf"}, {"epsilon", s.epsilon}, {"mu", s.mu}, {"eta", s.eta}};
  }
  json w0 = json::array();
  for (const auto& d : s.W0) w0.push_back(datum_to_json(d));
  json targets = json::array();
  for (const auto& d : s.source.targets) targets.push_back(datum_to_json(d));
  const auto& t = s.tol;
  return {
      {"domain", {{"K", s.K}}},
      {"material", mat},
      {"time",
       {{"t_start", s.grid.t_start},
        {"dt", s.grid.dt},
        {"n", s.grid.n_samples},
        {"pad_fraction", s.grid.pad_fraction},
        {"nu", s.nu}}},
      {"data",
       {{"W0", w0},
        {"source",
         {{"waveform", waveform_name(s.source.wf.kind)},
          {"amplitude", s.source.wf.amplitude},
          {"t0", s.source.wf.t0},
          {"width", s.source.wf.width},
          {"targets", targets}}}}},
      {"method", to_string(s.method)},
      {"tolerances",
       {{"kernel_tol", t.kernel_tol},
        {"near_kernel", t.near_kernel},
        {"range_tol", t.range_tol},
        {"iv_tol", t.iv_tol},
        {"caus_tol", t.caus_tol},
        {"resid_tol", t.resid_tol},
        {"fp_tol", t.fp_tol},
        {"max_iter", t.max_iter},
        {"neumann_tol", t.neumann_tol},
        {"neumann_max_terms", t.neumann_max_terms},
        {"energy_tol", t.energy_tol}}}};
}

bool operator==(const Scenario& a, const Scenario& b) {
  return scenario_to_json(a) == scenario_to_json(b);
}

DBFScenario build_dbf(const Scenario& s, const ModeTablePtr& table) {
  require(!s.generalized(), ErrorKind::InvalidArgument, "scenario uses the generalized model");
  DBFScenario d;
  d.epsilon = s.epsilon;
  d.mu = s.mu;
  d.eta = s.eta;
  d.nu = s.nu;
  d.table = table;
  d.grid = s.grid;
  d.source = ModalSource{s.source.wf, assemble_pair(s.source.targets, table)};
  d.W0 = assemble_pair(s.W0, table);
  d.tol = s.tol;
  return d;
}

GeneralizedScenario build_generalized(const Scenario& s, const ModeTablePtr& table) {
  require(s.generalized(), ErrorKind::InvalidArgument, "scenario uses the classical model");
  GeneralizedScenario g{table,
                        s.grid,
                        s.nu,
                        s.kappa0,
                        s.kappa1,
                        s.mstar0,
                        s.mstar1,
                        s.k_cross,
                        s.cross_scale,
                        ModalSource{s.source.wf, assemble_pair(s.source.targets, table)},
                        assemble_pair(s.W0, table),
                        s.tol};
  return g;
}

Scenario without_data(const Scenario& s) {
  Scenario z = s;
  z.W0.clear();
  z.source = SourceSpec{};
  return z;
}

}  // namespace dbf
