#include "lgq/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <locale>
#include <numbers>
#include <sstream>

#include "lgq/classical_estimation.hpp"
#include "lgq/quantum_estimation.hpp"

namespace lgq {

using nlohmann::json;

namespace {

constexpr const char* kPaperSystem = "paper-example";

template <typename M>
bool same_matrix(const M& a, const M& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

template <typename M>
bool same_optional(const std::optional<M>& a, const std::optional<M>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_matrix(*a, *b);
}

const json& require_field(const json& parent, const char* key, const std::string& path) {
  if (!parent.is_object() || !parent.contains(key)) {
    throw ConfigError(path + "." + key, "missing required field");
  }
  return parent.at(key);
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

bool bool_at(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

VectorXd vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number_at(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json complex_to_json(const MatrixXcd& m) {
  return {{"re", matrix_to_json(m.real())}, {"im", matrix_to_json(m.imag())}};
}

MatrixXcd complex_from_json(const json& j, const std::string& path) {
  const MatrixXd re = matrix_from_json(require_field(j, "re", path), path + ".re");
  MatrixXd im = MatrixXd::Zero(re.rows(), re.cols());
  if (j.contains("im")) im = matrix_from_json(j.at("im"), path + ".im");
  if (im.rows() != re.rows() || im.cols() != re.cols()) {
    throw ConfigError(path, "real and imaginary parts differ in shape");
  }
  MatrixXcd out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

ObserverConfig observer_from_json(const json& j, const std::string& path) {
  ObserverConfig out;
  const bool has_homodyne = j.is_object() && j.contains("homodyne");
  const bool has_matrix = j.is_object() && j.contains("M");
  if (has_homodyne == has_matrix) {
    throw ConfigError(path, "give exactly one of \"homodyne\" or \"M\"");
  }
  if (has_matrix) {
    out.M = complex_from_json(j.at("M"), path + ".M");
    return out;
  }
  const json& list = j.at("homodyne");
  if (!list.is_array()) throw ConfigError(path + ".homodyne", "expected an array of channels");
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string p = path + ".homodyne[" + std::to_string(k) + "]";
    out.homodyne.push_back({number_at(require_field(list[k], "eta", p), p + ".eta"),
                            list[k].contains("theta") ? number_at(list[k]["theta"], p + ".theta")
                                                      : 0.0});
  }
  return out;
}

json observer_to_json(const ObserverConfig& o) {
  if (o.M) return {{"M", complex_to_json(*o.M)}};
  json list = json::array();
  for (const auto& ch : o.homodyne) list.push_back({{"eta", ch.eta}, {"theta", ch.theta}});
  return {{"homodyne", list}};
}

MatrixXcd observer_matrix(const ObserverConfig& o) {
  return o.M ? *o.M : homodyne_matrix(o.homodyne);
}

std::uint64_t seed_from_json(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) {
    throw ConfigError(path, "seed must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

// Fig. 1 initial conditions: x0 = 0 and V0 = diag(10, (1 + g)/2).
MatrixXd example_initial_covariance(double g) { return VectorXd{{10.0, 0.5 * (1.0 + g)}}.asDiagonal(); }

}  // namespace

bool SystemConfig::operator==(const SystemConfig& other) const {
  return preset == other.preset && g == other.g && modes == other.modes && hbar == other.hbar &&
         same_matrix(G, other.G) && same_matrix(B, other.B);
}

bool ObserverConfig::operator==(const ObserverConfig& other) const {
  return homodyne == other.homodyne && same_optional(M, other.M);
}

bool RunConfig::operator==(const RunConfig& other) const {
  return t0 == other.t0 && dt == other.dt && T == other.T && seed == other.seed &&
         same_optional(x0, other.x0) && same_optional(V0, other.V0);
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(path, "expected a non-empty array of rows");
  }
  const std::size_t cols = j[0].size();
  MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(path + "[" + std::to_string(r) + "]", "rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number_at(j[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

ScenarioConfig parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ConfigError("$", "scenario must be a JSON object");
  ScenarioConfig cfg;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ConfigError("$.name", "expected a string");
    cfg.name = doc["name"].get<std::string>();
  }

  const json& sys = require_field(doc, "system", "$");
  if (sys.contains("preset")) {
    cfg.system.preset = string_at(sys["preset"], "$.system.preset");
    if (cfg.system.preset != kPaperSystem) {
      throw ConfigError("$.system.preset", "unknown system preset \"" + cfg.system.preset + "\"");
    }
    if (sys.contains("g")) cfg.system.g = number_at(sys["g"], "$.system.g");
  } else {
    const json& modes = require_field(sys, "modes", "$.system");
    if (!modes.is_number_integer() || modes.get<int>() < 1) {
      throw ConfigError("$.system.modes", "expected a positive integer");
    }
    cfg.system.modes = modes.get<int>();
    if (sys.contains("hbar")) cfg.system.hbar = number_at(sys["hbar"], "$.system.hbar");
    cfg.system.G = matrix_from_json(require_field(sys, "G", "$.system"), "$.system.G");
    cfg.system.B = complex_from_json(require_field(sys, "B", "$.system"), "$.system.B");
  }

  const json& unr = require_field(doc, "unravelling", "$");
  cfg.unravelling.observed =
      observer_from_json(require_field(unr, "observed", "$.unravelling"), "$.unravelling.observed");
  cfg.unravelling.unobserved = observer_from_json(require_field(unr, "unobserved", "$.unravelling"),
                                                  "$.unravelling.unobserved");

  if (doc.contains("run")) {
    const json& run = doc["run"];
    if (run.contains("t0")) cfg.run.t0 = number_at(run["t0"], "$.run.t0");
    if (run.contains("dt")) cfg.run.dt = number_at(run["dt"], "$.run.dt");
    if (run.contains("T")) cfg.run.T = number_at(run["T"], "$.run.T");
    if (run.contains("seed")) cfg.run.seed = seed_from_json(run["seed"], "$.run.seed");
    if (run.contains("x0")) cfg.run.x0 = vector_from_json(run["x0"], "$.run.x0");
    if (run.contains("V0")) cfg.run.V0 = matrix_from_json(run["V0"], "$.run.V0");
  }

  if (doc.contains("outputs")) {
    const json& out = doc["outputs"];
    if (out.contains("directory")) cfg.outputs.directory = string_at(out["directory"], "$.outputs.directory");
    if (out.contains("estimators")) {
      cfg.outputs.estimators.clear();
      if (!out["estimators"].is_array()) {
        throw ConfigError("$.outputs.estimators", "expected an array of strings");
      }
      for (const auto& e : out["estimators"]) {
        const auto name = string_at(e, "$.outputs.estimators");
        if (std::find(kEstimatorNames.begin(), kEstimatorNames.end(), name) == kEstimatorNames.end()) {
          throw ConfigError("$.outputs.estimators", "unknown estimator \"" + name + "\"");
        }
        cfg.outputs.estimators.push_back(name);
      }
    }
    if (out.contains("csv")) cfg.outputs.csv = bool_at(out["csv"], "$.outputs.csv");
    if (out.contains("report")) cfg.outputs.report = bool_at(out["report"], "$.outputs.report");
  }
  return cfg;
}

json to_json(const ScenarioConfig& cfg) {
  json sys;
  if (!cfg.system.preset.empty()) {
    sys = {{"preset", cfg.system.preset}, {"g", cfg.system.g}};
  } else {
    sys = {{"modes", cfg.system.modes},
           {"hbar", cfg.system.hbar},
           {"G", matrix_to_json(cfg.system.G)},
           {"B", complex_to_json(cfg.system.B)}};
  }
  json run = {{"t0", cfg.run.t0}, {"dt", cfg.run.dt}, {"T", cfg.run.T}, {"seed", cfg.run.seed}};
  if (cfg.run.x0) run["x0"] = vector_to_json(*cfg.run.x0);
  if (cfg.run.V0) run["V0"] = matrix_to_json(*cfg.run.V0);
  return {{"name", cfg.name},
          {"system", sys},
          {"unravelling",
           {{"observed", observer_to_json(cfg.unravelling.observed)},
            {"unobserved", observer_to_json(cfg.unravelling.unobserved)}}},
          {"run", run},
          {"outputs",
           {{"directory", cfg.outputs.directory},
            {"estimators", cfg.outputs.estimators},
            {"csv", cfg.outputs.csv},
            {"report", cfg.outputs.report}}}};
}

ScenarioConfig load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), "cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string(), e.what());
  }
  try {
    return parse_scenario(doc);
  } catch (const json::exception& e) {
    throw ConfigError(file.string(), e.what());
  }
}

std::vector<std::string> preset_names() { return {"fig1-top", "fig1-bottom"}; }

std::string preset_description(const std::string& name) {
  if (name == "fig1-top") {
    return "g = 1; Alice homodynes the gamma-channel at theta = pi/8, Bob the kappa-channel at "
           "theta = 0. The smoothed mean becomes differentiable in steady state.";
  }
  if (name == "fig1-bottom") {
    return "g = 0.1; Alice homodynes the kappa-channel at theta = 0, Bob the gamma-channel at "
           "theta = pi/8. The smoothed mean stays stochastic.";
  }
  throw ConfigError("preset", "unknown preset \"" + name + "\"");
}

ScenarioConfig preset_scenario(const std::string& name) {
  const double pi8 = std::numbers::pi / 8.0;
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.system.preset = kPaperSystem;
  if (name == "fig1-top") {
    cfg.system.g = 1.0;
    cfg.unravelling.observed.homodyne = {{1.0, pi8}, {0.0, 0.0}};
    cfg.unravelling.unobserved.homodyne = {{0.0, 0.0}, {1.0, 0.0}};
  } else if (name == "fig1-bottom") {
    cfg.system.g = 0.1;
    cfg.unravelling.observed.homodyne = {{0.0, 0.0}, {1.0, 0.0}};
    cfg.unravelling.unobserved.homodyne = {{1.0, pi8}, {0.0, 0.0}};
  } else {
    throw ConfigError("preset", "unknown preset \"" + name + "\"");
  }
  cfg.run.x0 = VectorXd::Zero(2);
  cfg.run.V0 = example_initial_covariance(cfg.system.g);
  return cfg;
}

ResolvedScenario resolve_scenario(const ScenarioConfig& cfg) {
  ResolvedScenario out;
  if (!cfg.system.preset.empty()) {
    if (cfg.system.preset != kPaperSystem) {
      throw ConfigError("$.system.preset", "unknown system preset \"" + cfg.system.preset + "\"");
    }
    if (!(cfg.system.g > 0.0)) throw ConfigError("$.system.g", "g must be positive");
    out.system = example_system(cfg.system.g);
  } else {
    if (cfg.system.modes < 1) throw ConfigError("$.system.modes", "must be at least 1");
    if (!(cfg.system.hbar > 0.0)) throw ConfigError("$.system.hbar", "must be positive");
    out.system = {cfg.system.modes, cfg.system.hbar, cfg.system.G, cfg.system.B};
    const auto n = 2 * cfg.system.modes;
    if (out.system.G.rows() != n || out.system.G.cols() != n) {
      throw ConfigError("$.system.G", "must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (out.system.B.cols() != n) {
      throw ConfigError("$.system.B", "must have " + std::to_string(n) + " columns");
    }
  }
  const int K = out.system.channels();
  const auto observer = [&](const ObserverConfig& o, const std::string& path) {
    if (!o.M && static_cast<int>(o.homodyne.size()) != K) {
      throw ConfigError(path + ".homodyne", "expected " + std::to_string(K) + " channels");
    }
    for (std::size_t k = 0; k < o.homodyne.size(); ++k) {
      if (o.homodyne[k].eta < 0.0) {
        throw ConfigError(path + ".homodyne[" + std::to_string(k) + "].eta", "must be >= 0");
      }
    }
    return observer_matrix(o);
  };
  out.unravelling = {observer(cfg.unravelling.observed, "$.unravelling.observed"),
                     observer(cfg.unravelling.unobserved, "$.unravelling.unobserved")};
  out.model = build_derived_model(out.system, out.unravelling);

  try {
    out.grid = TimeGrid::over(cfg.run.t0, cfg.run.T, cfg.run.dt);
  } catch (const InvalidInputError& e) {
    throw ConfigError("$.run", e.what());
  }
  const bool example = !cfg.system.preset.empty();
  const int n = out.model.state_dim();
  if (cfg.run.x0) {
    out.x0 = *cfg.run.x0;
  } else if (example) {
    out.x0 = VectorXd::Zero(n);
  } else {
    throw ConfigError("$.run.x0", "required for an explicit system");
  }
  if (cfg.run.V0) {
    out.V0 = *cfg.run.V0;
  } else if (example) {
    out.V0 = example_initial_covariance(cfg.system.g);
  } else {
    throw ConfigError("$.run.V0", "required for an explicit system");
  }
  if (out.x0.size() != n) throw ConfigError("$.run.x0", "must have length " + std::to_string(n));
  if (out.V0.rows() != n || out.V0.cols() != n) {
    throw ConfigError("$.run.V0", "must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  try {
    require_symmetric(out.V0, "V0");
  } catch (const InvalidInputError& e) {
    throw ConfigError("$.run.V0", e.what());
  }
  if (!check_uncertainty(out.V0, out.model.hbar)) {
    throw ConfigError("$.run.V0", "violates the uncertainty relation");
  }
  return out;
}

std::filesystem::path output_root(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return fallback;
}

json report_to_json(const SteadyStateReport& r) {
  return {{"condition_met", r.condition_met},
          {"difference_norm", r.difference_norm},
          {"gain_norm", r.gain_norm},
          {"gain_scale", r.gain_scale},
          {"tol", r.tol},
          {"convergence_time", r.convergence_time},
          {"V_T_ss", matrix_to_json(r.V_T_ss)},
          {"V_U_ss", matrix_to_json(r.V_U_ss)}};
}

namespace {

bool selected(const OutputConfig& out, const char* name) {
  return std::find(out.estimators.begin(), out.estimators.end(), name) != out.estimators.end();
}

std::vector<std::string> csv_header(int modes) {
  if (modes == 1) {
    return {"t",     "q_T",   "p_T",   "q_F",   "p_F",   "q_S",   "p_S",
            "q_Scl", "p_Scl", "Vt_qq", "Vt_qp", "Vt_pp", "Vf_qq", "Vf_qp",
            "Vf_pp", "Vs_qq", "Vs_qp", "Vs_pp", "halo_rank"};
  }
  // Several modes: the same layout with indexed quadratures (x1 = q1, x2 = p1, ...)
  // and the upper triangle of each covariance.
  std::vector<std::string> cols{"t"};
  const int n = 2 * modes;
  for (const char* tag : {"T", "F", "S", "Scl"}) {
    for (int i = 1; i <= n; ++i) cols.push_back("x" + std::to_string(i) + "_" + tag);
  }
  for (const char* tag : {"Vt", "Vf", "Vs"}) {
    for (int i = 1; i <= n; ++i) {
      for (int j = i; j <= n; ++j) {
        cols.push_back(std::string(tag) + "_" + std::to_string(i) + std::to_string(j));
      }
    }
  }
  cols.push_back("halo_rank");
  return cols;
}

struct CsvWriter {
  std::ostringstream out;

  CsvWriter() {
    out.imbue(std::locale::classic());
    out << std::setprecision(17);
  }
  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\r\n";
  }
  void vector(const VectorXd* v, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ",";
      if (v) out << (*v)(i);
    }
  }
  void upper(const MatrixXd* m, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        out << ",";
        if (m) out << (*m)(i, j);
      }
    }
  }
};

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream f(file, std::ios::binary);
  if (!f) throw Error("cannot write " + file.string());
  f << text;
}

json gaussian_gap(const StateTrajectory& a, const StateTrajectory& b) {
  double mean_gap = 0.0, cov_gap = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    mean_gap = std::max(mean_gap, (a.states[k].mean - b.states[k].mean).cwiseAbs().maxCoeff());
    cov_gap = std::max(cov_gap, (a.states[k].cov - b.states[k].cov).cwiseAbs().maxCoeff());
  }
  return {{"mean_gap", mean_gap}, {"cov_gap", cov_gap}};
}

}  // namespace

RunManifest run_scenario(const ScenarioConfig& config, const std::filesystem::path& root) {
  const ResolvedScenario rs = resolve_scenario(config);
  const DerivedModel& model = rs.model;
  const int n = model.state_dim();

  RunManifest manifest;
  const std::string leaf = config.outputs.directory.empty()
                               ? "runs/" + config.name + "-seed" + std::to_string(config.run.seed)
                               : config.outputs.directory;
  manifest.directory = root / leaf;
  std::filesystem::create_directories(manifest.directory);

  // Steady-state analysis first: a diverging flow should fail before any output.
  std::optional<SteadyStateReport> steady;
  if (config.outputs.report) steady = check_differentiability(model, rs.V0);

  const TrueStateRun true_run = simulate_true_state(model, rs.x0, rs.V0, rs.grid, config.run.seed);
  const StateTrajectory filtered = quantum_filter(model, true_run.observed, rs.x0, rs.V0);
  const HaloSystem halo = build_halo(model, filtered, true_run);

  std::optional<SmoothedQuantumState> rts, mfp;
  std::optional<StateTrajectory> classical;
  if (selected(config.outputs, "quantum_rts")) rts = quantum_rts_smooth(model, halo, filtered, true_run);
  if (selected(config.outputs, "quantum_mfp")) mfp = quantum_mfp_smooth(model, halo, filtered, true_run);
  if (selected(config.outputs, "classical_rts")) {
    // Classical contrast: the same filter smoothed as if Alice's record were classical.
    classical = rts_smooth(model.record_model(Record::observed), filtered, true_run.observed);
  }
  const SmoothedQuantumState* smoothed = rts ? &*rts : (mfp ? &*mfp : nullptr);

  json files = json::object();
  if (config.outputs.csv) {
    CsvWriter csv;
    csv.header(csv_header(model.modes));
    for (std::size_t k = 0; k < rs.grid.points(); ++k) {
      csv.out << rs.grid.time(k);
      const GaussianState* s = smoothed ? &smoothed->trajectory.states[k] : nullptr;
      const GaussianState* c = classical ? &classical->states[k] : nullptr;
      csv.vector(&true_run.truth.states[k].mean, n);
      csv.vector(&filtered.states[k].mean, n);
      csv.vector(s ? &s->mean : nullptr, n);
      csv.vector(c ? &c->mean : nullptr, n);
      csv.upper(&true_run.truth.states[k].cov, n);
      csv.upper(&filtered.states[k].cov, n);
      csv.upper(s ? &s->cov : nullptr, n);
      csv.out << ",";
      if (smoothed) csv.out << smoothed->halo_rank[k];
      csv.out << "\r\n";
    }
    const auto path = manifest.directory / "trajectory.csv";
    write_file(path, csv.out.str());
    manifest.files.push_back(path);
    files["trajectory"] = path.string();

    if (rts && mfp) {
      CsvWriter extra;
      std::vector<std::string> cols{"t"};
      for (int i = 1; i <= n; ++i) cols.push_back("x" + std::to_string(i) + "_S");
      for (int i = 1; i <= n; ++i) {
        for (int j = i; j <= n; ++j) cols.push_back("Vs_" + std::to_string(i) + std::to_string(j));
      }
      extra.header(cols);
      for (std::size_t k = 0; k < rs.grid.points(); ++k) {
        extra.out << rs.grid.time(k);
        extra.vector(&mfp->trajectory.states[k].mean, n);
        extra.upper(&mfp->trajectory.states[k].cov, n);
        extra.out << "\r\n";
      }
      const auto mfp_path = manifest.directory / "quantum_mfp.csv";
      write_file(mfp_path, extra.out.str());
      manifest.files.push_back(mfp_path);
      files["quantum_mfp"] = mfp_path.string();
    }
  }

  if (steady) {
    const auto path = manifest.directory / "report.json";
    write_file(path, report_to_json(*steady).dump(2) + "\n");
    manifest.files.push_back(path);
    files["report"] = path.string();
  }

  json diagnostics = json::object();
  if (rts) {
    json events = json::array();
    for (const auto& e : rts->rank_events) {
      events.push_back({{"t", rs.grid.time(e.index)}, {"from", e.from}, {"to", e.to}});
    }
    diagnostics["quantum_rts_rank_events"] = events;
  }
  if (rts && mfp) diagnostics["quantum_rts_vs_mfp"] = gaussian_gap(rts->trajectory, mfp->trajectory);

  manifest.document = {
      {"software", {{"name", kSoftwareName}, {"version", kSoftwareVersion}}},
      {"config", to_json(config)},
      {"resolved",
       {{"modes", rs.system.modes},
        {"hbar", rs.system.hbar},
        {"G", matrix_to_json(rs.system.G)},
        {"B", complex_to_json(rs.system.B)},
        {"M_o", complex_to_json(rs.unravelling.M_o)},
        {"M_u", complex_to_json(rs.unravelling.M_u)},
        {"x0", vector_to_json(rs.x0)},
        {"V0", matrix_to_json(rs.V0)}}},
      {"derived",
       {{"A", matrix_to_json(model.A)},
        {"D", matrix_to_json(model.D)},
        {"C_o", matrix_to_json(model.C_o)},
        {"C_u", matrix_to_json(model.C_u)},
        {"Gamma_o", matrix_to_json(model.Gamma_o)},
        {"Gamma_u", matrix_to_json(model.Gamma_u)}}},
      {"seed", config.run.seed},
      {"rng", {{"generator", "philox4x32-10"}, {"key", config.run.seed}, {"stream", 0}}},
      {"grid", {{"t0", rs.grid.t0}, {"dt", rs.grid.dt}, {"steps", rs.grid.steps}, {"T", rs.grid.end()}}},
      {"outputs", files},
      {"diagnostics", diagnostics}};
  const auto manifest_path = manifest.directory / "manifest.json";
  write_file(manifest_path, manifest.document.dump(2) + "\n");
  manifest.files.push_back(manifest_path);
  return manifest;
}

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--sweep", "expected name=a:b:step");
  SweepSpec spec;
  spec.parameter = text.substr(0, eq);
  if (spec.parameter != "g") throw ConfigError("--sweep", "only g can be swept");
  std::istringstream in(text.substr(eq + 1));
  in.imbue(std::locale::classic());
  double a = 0, b = 0, step = 0;
  char c1 = 0, c2 = 0;
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw ConfigError("--sweep", "expected g=a:b:step");
  }
  if (!(step > 0.0) || b < a) throw ConfigError("--sweep", "need step > 0 and b >= a");
  // Integer stepping so the grid hits its endpoints without accumulated drift.
  const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long i = 0; i <= count; ++i) spec.values.push_back(a + static_cast<double>(i) * step);
  return spec;
}

json analyze(const ScenarioConfig& config, const std::optional<SweepSpec>& sweep) {
  const auto one = [](const ScenarioConfig& cfg) {
    const ResolvedScenario rs = resolve_scenario(cfg);
    return report_to_json(check_differentiability(rs.model, rs.V0));
  };
  if (!sweep) return {{"scenario", config.name}, {"report", one(config)}};
  if (config.system.preset.empty()) {
    throw ConfigError("$.system", "a g-sweep needs the paper-example system");
  }
  json points = json::array();
  for (const double g : sweep->values) {
    ScenarioConfig cfg = config;
    cfg.system.g = g;
    // The example's default V0 depends on g; keep it in step.
    if (cfg.run.V0 && config.run.V0 && same_matrix(*config.run.V0, example_initial_covariance(config.system.g))) {
      cfg.run.V0 = example_initial_covariance(g);
    }
    points.push_back({{"g", g}, {"report", one(cfg)}});
  }
  return {{"scenario", config.name}, {"sweep", {{"parameter", sweep->parameter}, {"points", points}}}};
}

}  // namespace lgq
