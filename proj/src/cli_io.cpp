#include "vesicle/cli_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vesicle/membrane_ops.hpp"

namespace vesicle {
namespace {

using nlohmann::json;

// Typed access to one JSON object; remembers which keys were read so the
// leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  [[nodiscard]] std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* find(const std::string& k) {
    seen_.insert(k);
    auto it = obj_.find(k);
    return it == obj_.end() ? nullptr : &*it;
  }

  bool has(const std::string& k) const { return obj_.contains(k); }

  void number(const std::string& k, double& out) {
    if (const json* v = find(k)) {
      if (!v->is_number()) throw ConfigError(key(k), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(key(k), "must be finite");
    }
  }

  void integer(const std::string& k, int& out) {
    if (const json* v = find(k)) {
      if (!v->is_number_integer()) throw ConfigError(key(k), "expected an integer");
      const auto wide = v->get<long long>();
      if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max())
        throw ConfigError(key(k), "integer out of range");
      out = static_cast<int>(wide);
    }
  }

  void unsigned_integer(const std::string& k, unsigned long long& out) {
    if (const json* v = find(k)) {
      if (!v->is_number_unsigned()) throw ConfigError(key(k), "expected a non-negative integer");
      out = v->get<unsigned long long>();
    }
  }

  void boolean(const std::string& k, bool& out) {
    if (const json* v = find(k)) {
      if (!v->is_boolean()) throw ConfigError(key(k), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& k, std::string& out) {
    if (const json* v = find(k)) {
      if (!v->is_string()) throw ConfigError(key(k), "expected a string");
      out = v->get<std::string>();
    }
  }

  void point(const std::string& k, Eigen::Vector2d& out) {
    if (const json* v = find(k)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        throw ConfigError(key(k), "expected [x, y]");
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
      if (!out.allFinite()) throw ConfigError(key(k), "must be finite");
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

std::string flow_name(FarFieldFlow::Kind k) {
  switch (k) {
    case FarFieldFlow::Kind::shear: return "shear";
    case FarFieldFlow::Kind::extensional: return "extensional";
    case FarFieldFlow::Kind::quiescent: return "quiescent";
  }
  return "quiescent";
}

VesicleSpec parse_vesicle(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  VesicleSpec s;
  std::string shape = "ellipse";
  r.string("shape", shape);
  if (shape == "ellipse") {
    s.shape = VesicleSpec::Shape::ellipse;
    r.number("a", s.a);
    r.number("b", s.b);
    r.integer("N", s.nodes);
    r.number("perturbation", s.perturbation);
    require(s.a > 0, r.key("a"), "must be positive");
    require(s.b > 0, r.key("b"), "must be positive");
    require(s.nodes >= 8 && s.nodes % 2 == 0, r.key("N"), "must be an even integer >= 8");
    require(s.perturbation >= 0 && s.perturbation < 0.5, r.key("perturbation"), "must lie in [0, 0.5)");
  } else if (shape == "points") {
    s.shape = VesicleSpec::Shape::points;
    r.string("file", s.file);
    require(!s.file.empty(), r.key("file"), "required for shape 'points'");
  } else {
    throw ConfigError(r.key("shape"), "expected 'ellipse' or 'points', got '" + shape + "'");
  }
  r.point("center", s.center);
  r.number("rotation", s.rotation);
  r.number("nu", s.nu);
  r.number("kappa_b", s.kappa_b);
  require(s.nu > 0, r.key("nu"), "must be positive");
  require(s.kappa_b > 0, r.key("kappa_b"), "must be positive");
  r.finish();
  return s;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

ClosedCurve read_points(const std::string& file, int index) {
  std::ifstream in(file);
  const std::string key = "vesicles[" + std::to_string(index) + "].file";
  if (!in) throw ConfigError(key, "cannot open '" + file + "'");
  std::vector<double> xs, ys;
  double x = 0, y = 0;
  while (in >> x >> y) {
    xs.push_back(x);
    ys.push_back(y);
  }
  if (!in.eof()) throw ConfigError(key, "'" + file + "' must contain whitespace-separated x y pairs");
  Eigen::VectorXd c(2 * xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    c[static_cast<Eigen::Index>(i)] = xs[i];
    c[static_cast<Eigen::Index>(xs.size() + i)] = ys[i];
  }
  try {
    return ClosedCurve(std::move(c));
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

// Smooth random radial perturbation: modes 2..8 with normal amplitudes.
ClosedCurve perturb(const ClosedCurve& curve, const Eigen::Vector2d& center, double amplitude,
                    std::mt19937_64& rng) {
  if (amplitude == 0) return curve;
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = curve.size();
  std::vector<std::pair<double, double>> modes;
  for (int k = 2; k <= 8; ++k) modes.emplace_back(normal(rng) / k, normal(rng) / k);
  Eigen::VectorXd c = curve.coords();
  for (int i = 0; i < n; ++i) {
    const double th = 2 * std::numbers::pi * i / n;
    double f = 0;
    for (int k = 2; k <= 8; ++k) f += modes[k - 2].first * std::cos(k * th) + modes[k - 2].second * std::sin(k * th);
    const double scale = 1 + amplitude * f;
    c[i] = center.x() + scale * (c[i] - center.x());
    c[n + i] = center.y() + scale * (c[n + i] - center.y());
  }
  return ClosedCurve(std::move(c));
}

void print_check(std::ostream& os, const VerifyCheck& c) {
  os << (c.passed ? "PASS " : "FAIL ") << c.name;
  if (!c.detail.empty()) os << " (" << c.detail << ")";
  os << "\n";
}

json summary_json(const RunConfig& config, const RunDiagnostics& d) {
  json s;
  s["mode"] = config.mode == RunConfig::TimeMode::fixed ? "fixed" : "adaptive";
  if (config.mode == RunConfig::TimeMode::fixed) {
    s["m"] = config.steps;
  } else {
    s["tolerance"] = config.tolerance;
  }
  s["T"] = config.horizon;
  s["n_sdc"] = config.n_sdc;
  s["e_A"] = d.error_area;
  s["e_L"] = d.error_length;
  s["accepts"] = d.accepts;
  s["rejects"] = d.rejects;
  s["matvecs"] = d.matvecs;
  s["gmres_iterations"] = d.gmres_iterations;
  s["cpu_seconds"] = d.wall_seconds;
  s["final_time"] = d.sample_times.empty() ? 0.0 : d.sample_times.back();
  s["completed"] = d.completed;
  if (!d.failure.empty()) s["failure"] = d.failure;
  if (!d.trackers.empty()) {
    json winding = json::array();
    json inclination = json::array();
    for (std::size_t j = 0; j < d.trackers.front().size(); ++j) {
      std::vector<Eigen::Vector2d> pts, ctr;
      for (std::size_t k = 0; k < d.trackers.size(); ++k) {
        pts.push_back(d.trackers[k][j]);
        ctr.push_back(d.centroids[k][j]);
      }
      winding.push_back(winding_count(pts, ctr));
      inclination.push_back(d.inclinations.back()[j]);
    }
    s["tracker_winding"] = winding;
    s["final_inclination"] = inclination;
  }
  return s;
}

struct RunOutcome {
  RunResult result;
  std::vector<Snapshot> snapshots;
};

RunOutcome execute(const RunConfig& config) {
  SnapshotRecorder recorder(config.snapshot_interval);
  SimulationConfig sim = simulation_config(config);
  sim.observer = [&recorder](const Suspension& s) { recorder(s); };
  Suspension s = build_suspension(config);
  RunResult r = config.mode == RunConfig::TimeMode::fixed
                    ? run_fixed(std::move(s), config.steps, config.horizon, sim)
                    : run_adaptive(std::move(s), config.tolerance, config.horizon, sim);
  recorder.finalize(r.final);
  return {std::move(r), recorder.snapshots()};
}

std::vector<int> parse_steps(const std::string& list) {
  std::vector<int> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int m = 0;
    try {
      m = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || m < 1) throw InvalidInput("--steps: '" + item + "' is not a positive integer");
    out.push_back(m);
  }
  if (out.size() < 2) throw InvalidInput("--steps: need at least two step counts");
  return out;
}

int report_error(const char* category, const std::string& what) {
  std::cerr << "error: " << category << ": " << what << "\n";
  return 1;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  ObjectReader root(doc, "");
  RunConfig c;

  if (const json* flow = root.find("flow")) {
    ObjectReader r(*flow, "flow");
    std::string kind = "shear";
    double rate = 1.0;
    r.string("kind", kind);
    r.number("rate", rate);
    if (kind == "shear") {
      c.flow = FarFieldFlow::shear(rate);
    } else if (kind == "extensional") {
      c.flow = FarFieldFlow::extensional(rate);
    } else if (kind == "quiescent") {
      c.flow = FarFieldFlow::quiescent();
      require(!r.has("rate") || rate == 0, "flow.rate", "must be 0 for quiescent flow");
    } else {
      throw ConfigError("flow.kind", "expected 'shear', 'extensional' or 'quiescent', got '" + kind + "'");
    }
    r.finish();
  }

  const json* ves = root.find("vesicles");
  if (!ves) throw ConfigError("vesicles", "required");
  if (!ves->is_array() || ves->empty()) throw ConfigError("vesicles", "expected a non-empty array");
  for (std::size_t j = 0; j < ves->size(); ++j)
    c.vesicles.push_back(parse_vesicle((*ves)[j], "vesicles[" + std::to_string(j) + "]"));

  if (const json* time = root.find("time")) {
    ObjectReader r(*time, "time");
    std::string mode = "adaptive";
    r.string("mode", mode);
    if (mode == "fixed") {
      c.mode = RunConfig::TimeMode::fixed;
      r.integer("steps", c.steps);
      require(c.steps >= 1, "time.steps", "must be at least 1");
    } else if (mode == "adaptive") {
      c.mode = RunConfig::TimeMode::adaptive;
      r.number("tolerance", c.tolerance);
      require(c.tolerance > 0, "time.tolerance", "must be positive");
    } else {
      throw ConfigError("time.mode", "expected 'fixed' or 'adaptive', got '" + mode + "'");
    }
    r.finish();
  }

  root.number("T", c.horizon);
  require(c.horizon > 0, "T", "must be positive");
  root.integer("n_sdc", c.n_sdc);
  require(c.n_sdc >= 0, "n_sdc", "must be non-negative");
  root.integer("p", c.p);
  require(c.p >= 3, "p", "must be at least 3");

  if (const json* g = root.find("gmres")) {
    ObjectReader r(*g, "gmres");
    r.number("tolerance", c.gmres_tolerance);
    r.integer("max_iterations", c.gmres_max_iterations);
    require(c.gmres_tolerance >= 1e-14 && c.gmres_tolerance < 1, "gmres.tolerance", "must lie in [1e-14, 1)");
    require(c.gmres_max_iterations >= 1, "gmres.max_iterations", "must be at least 1");
    r.finish();
  }

  if (const json* ctl = root.find("controller")) {
    ObjectReader r(*ctl, "controller");
    r.integer("order", c.order);
    r.number("beta_down", c.beta_down);
    r.number("beta_up", c.beta_up);
    r.number("beta_scale", c.beta_scale);
    r.number("dt_initial", c.dt_initial);
    r.number("dt_floor_factor", c.dt_floor_factor);
    require(c.order >= 0, "controller.order", "must be non-negative (0 selects n_sdc + 1)");
    require(c.beta_down > 0 && c.beta_down < 1, "controller.beta_down", "must lie in (0, 1)");
    require(c.beta_up > 1, "controller.beta_up", "must exceed 1");
    require(c.beta_scale > 0 && c.beta_scale < 1, "controller.beta_scale", "must lie in (0, 1)");
    require(c.dt_initial >= 0, "controller.dt_initial", "must be non-negative");
    require(c.dt_floor_factor > 0, "controller.dt_floor_factor", "must be positive");
    r.finish();
  }

  if (const json* q = root.find("quadrature")) {
    ObjectReader r(*q, "quadrature");
    r.integer("upsampling", c.upsampling);
    r.number("near_threshold", c.near_threshold);
    require(c.upsampling >= 1, "quadrature.upsampling", "must be at least 1");
    require(c.near_threshold > 0, "quadrature.near_threshold", "must be positive");
    r.finish();
  }

  root.boolean("consistent_initial_tension", c.consistent_initial_tension);
  root.boolean("consistent_velocity", c.consistent_velocity);

  if (const json* o = root.find("output")) {
    ObjectReader r(*o, "output");
    r.string("directory", c.output);
    r.number("snapshot_interval", c.snapshot_interval);
    require(!c.output.empty(), "output.directory", "must not be empty");
    require(c.snapshot_interval >= 0, "output.snapshot_interval", "must be non-negative");
    r.finish();
  }

  root.unsigned_integer("seed", c.seed);
  root.finish();
  return c;
}

std::string render_config(const RunConfig& c) {
  json doc;
  doc["flow"] = {{"kind", flow_name(c.flow.kind)}, {"rate", c.flow.rate}};
  json ves = json::array();
  for (const auto& v : c.vesicles) {
    json e;
    if (v.shape == VesicleSpec::Shape::ellipse) {
      e["shape"] = "ellipse";
      e["a"] = v.a;
      e["b"] = v.b;
      e["N"] = v.nodes;
      e["perturbation"] = v.perturbation;
    } else {
      e["shape"] = "points";
      e["file"] = v.file;
    }
    e["center"] = {v.center.x(), v.center.y()};
    e["rotation"] = v.rotation;
    e["nu"] = v.nu;
    e["kappa_b"] = v.kappa_b;
    ves.push_back(std::move(e));
  }
  doc["vesicles"] = std::move(ves);
  if (c.mode == RunConfig::TimeMode::fixed) {
    doc["time"] = {{"mode", "fixed"}, {"steps", c.steps}};
  } else {
    doc["time"] = {{"mode", "adaptive"}, {"tolerance", c.tolerance}};
  }
  doc["T"] = c.horizon;
  doc["n_sdc"] = c.n_sdc;
  doc["p"] = c.p;
  doc["gmres"] = {{"tolerance", c.gmres_tolerance}, {"max_iterations", c.gmres_max_iterations}};
  doc["controller"] = {{"order", c.order},           {"beta_down", c.beta_down},
                       {"beta_up", c.beta_up},       {"beta_scale", c.beta_scale},
                       {"dt_initial", c.dt_initial}, {"dt_floor_factor", c.dt_floor_factor}};
  doc["quadrature"] = {{"upsampling", c.upsampling}, {"near_threshold", c.near_threshold}};
  doc["consistent_initial_tension"] = c.consistent_initial_tension;
  doc["consistent_velocity"] = c.consistent_velocity;
  doc["output"] = {{"directory", c.output}, {"snapshot_interval", c.snapshot_interval}};
  doc["seed"] = c.seed;
  return doc.dump(2) + "\n";
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Suspension build_suspension(const RunConfig& config) {
  Suspension s;
  s.flow = config.flow;
  std::mt19937_64 rng(config.seed);
  for (std::size_t j = 0; j < config.vesicles.size(); ++j) {
    const VesicleSpec& v = config.vesicles[j];
    ClosedCurve curve = v.shape == VesicleSpec::Shape::ellipse
                            ? ClosedCurve::ellipse(v.nodes, v.a, v.b, v.center, v.rotation)
                            : read_points(v.file, static_cast<int>(j)).rotated(v.rotation).translated(v.center);
    if (v.perturbation > 0) curve = perturb(curve, v.center, v.perturbation, rng);
    s.vesicles.emplace_back(std::move(curve), v.nu, v.kappa_b);
  }
  return s;
}

SimulationConfig simulation_config(const RunConfig& c) {
  SimulationConfig s;
  s.p = c.p;
  s.n_sdc = c.n_sdc;
  s.stepper.gmres.tolerance = c.gmres_tolerance;
  s.stepper.gmres.max_iterations = c.gmres_max_iterations;
  s.stepper.kernels.upsampling_factor = c.upsampling;
  s.stepper.kernels.near_threshold_factor = c.near_threshold;
  s.controller.beta_down = c.beta_down;
  s.controller.beta_up = c.beta_up;
  s.controller.beta_scale = c.beta_scale;
  s.controller.tolerance = c.tolerance;
  s.controller.horizon = c.horizon;
  s.order = c.order;
  s.dt_initial = c.dt_initial;
  s.dt_floor_factor = c.dt_floor_factor;
  s.consistent_initial_tension = c.consistent_initial_tension;
  s.stepper.consistent_velocity = c.consistent_velocity;
  return s;
}

void SnapshotRecorder::operator()(const Suspension& s) {
  latest_ = Snapshot{s.t, s.vesicles};
  if (snapshots_.empty() || (interval_ > 0 && s.t >= next_ * (1 - 1e-12))) {
    snapshots_.push_back(*latest_);
    if (interval_ > 0) {
      while (next_ <= s.t * (1 + 1e-12)) next_ += interval_;
    }
  }
}

void SnapshotRecorder::finalize(const Suspension& s) {
  if (snapshots_.empty() || snapshots_.back().t != s.t) snapshots_.push_back(Snapshot{s.t, s.vesicles});
}

void write_outputs(const std::filesystem::path& directory, const RunConfig& config,
                   const RunDiagnostics& diagnostics, const std::vector<Snapshot>& snapshots) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw std::runtime_error("cannot create '" + directory.string() + "': " + ec.message());

  const auto steps_path = directory / "steps.csv";
  std::ofstream steps = open_output(steps_path);
  steps << "t,dt,accepted,e_A,e_L,gmres_iters,matvecs_cum\n";
  for (const auto& r : diagnostics.steps) {
    steps << format_double(r.t) << ',' << format_double(r.dt) << ',' << (r.accepted ? 1 : 0) << ','
          << format_double(r.error_area) << ',' << format_double(r.error_length) << ',' << r.gmres_iterations
          << ',' << r.matvecs_total << '\n';
  }
  close_output(steps, steps_path);

  const auto snap_path = directory / "snapshots.csv";
  std::ofstream snap = open_output(snap_path);
  snap << "t,vesicle,node,x,y,sigma\n";
  for (const auto& s : snapshots) {
    for (std::size_t j = 0; j < s.vesicles.size(); ++j) {
      const VesicleState& v = s.vesicles[j];
      for (int i = 0; i < v.curve.size(); ++i) {
        const Eigen::Vector2d p = v.curve.point(i);
        snap << format_double(s.t) << ',' << j << ',' << i << ',' << format_double(p.x()) << ','
             << format_double(p.y()) << ',' << format_double(v.tension[i]) << '\n';
      }
    }
  }
  close_output(snap, snap_path);

  const auto summary_path = directory / "summary.json";
  std::ofstream summary = open_output(summary_path);
  summary << summary_json(config, diagnostics).dump(2) << '\n';
  close_output(summary, summary_path);
}

double fitted_order(const std::vector<int>& steps, const std::vector<double>& errors) {
  if (steps.size() != errors.size() || steps.size() < 2)
    throw InvalidInput("fitted_order: need at least two matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(errors[i] > 0)) throw InvalidInput("fitted_order: errors must be positive");
    const double x = std::log(static_cast<double>(steps[i]));
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<VerifyCheck> run_verify() {
  std::vector<VerifyCheck> out;
  auto check = [&](std::string name, double value, double tol) {
    std::ostringstream d;
    d << std::setprecision(3) << "error " << value << ", tolerance " << tol;
    out.push_back({std::move(name), value <= tol, d.str()});
  };

  const ClosedCurve circle = ClosedCurve::ellipse(32, 1, 1);
  check("circle: x_ssss = x", (arclength_derivative(circle, circle.coords(), 4) - circle.coords()).lpNorm<Eigen::Infinity>(), 1e-10);
  {
    const CurveGeometry g = geometry(circle);
    check("circle: unit tangent", (g.tangent.head(32).array().square() + g.tangent.tail(32).array().square() - 1).abs().maxCoeff(), 1e-10);
  }

  const ClosedCurve ellipse = ClosedCurve::ellipse(64, 1, 3);
  {
    const VesicleState v(ellipse, 1.0, 1.0);
    const Eigen::VectorXd sigma = Eigen::VectorXd::LinSpaced(64, 0, 1).array().sin();
    const VesicleState vs(ellipse, sigma, 1.0, 1.0);
    const Eigen::VectorXd f = traction(vs);
    const Eigen::VectorXd w = geometry(ellipse).weights;
    check("ellipse: zero net membrane force",
          std::max(std::abs(w.dot(f.head(64))), std::abs(w.dot(f.tail(64)))), 1e-8);
  }
  {
    const LayerSource src(ellipse, 1.0, {});
    check("double layer vanishes without contrast", src.dlp_self().lpNorm<Eigen::Infinity>(), 0);
  }
  {
    const double nu = 4;
    const LayerSource src(ellipse, nu, {});
    Eigen::VectorXd u(128);
    u.head(64).setConstant(0.3);
    u.tail(64).setConstant(-0.7);
    Eigen::VectorXd targets(4);
    targets << 0.1, 0.5, -0.2, 1.5;
    const Eigen::VectorXd val = src.target_matrix(KernelKind::double_layer, targets) * u;
    Eigen::VectorXd expect(4);
    expect << 0.3, 0.3, -0.7, -0.7;
    expect *= -(1 - nu);
    check("double layer of a constant density is constant inside", (val - expect).lpNorm<Eigen::Infinity>(), 1e-8);
  }
  {
    const LobattoGrid g = lobatto_grid(3);
    Eigen::Vector3d w = g.integration.row(2).transpose();
    check("Lobatto p=3 weights are Simpson's", (w - Eigen::Vector3d(1.0 / 6, 2.0 / 3, 1.0 / 6)).lpNorm<Eigen::Infinity>(), 1e-14);
  }
  {
    ControllerConfig c;
    c.tolerance = 1e-2;
    c.order = 2;
    const double a = std::abs(dt_optimal(ConservationSample{1, 1 + 4e-3, 1, 1, 1, 1}, 0, 0.1, c) - 0.05);
    const double b = std::abs(next_dt(0.1, 0.01, true, c) - 0.06 * std::pow(0.9, 0.25));
    check("controller worked examples", std::max(a, b), 1e-14);
  }
  {
    const Configuration config{VesicleState(ellipse, 4.0, 1.0)};
    const SuspensionOperators ops(config, {});
    GmresConfig gc;
    const Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(ops.layout().operand_size(), -1, 1);
    const ImexOperator op(ops, 1e-2, SystemKind::provisional);
    const GmresResult r = solve_imex(op, rhs, gc);
    out.push_back({"single vesicle preconditioned GMRES converges in one iteration", r.iterations <= 1,
                   std::to_string(r.iterations) + " iterations"});
  }
  return out;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Boundary-integral simulation of 2D vesicle suspensions"};
  app.require_subcommand(1);

  std::string run_path, conv_path, steps_list, out_override;
  auto* run = app.add_subcommand("run", "run one simulation from a JSON config");
  run->add_option("config", run_path, "config file")->required();
  run->add_option("-o,--output", out_override, "output directory (overrides the config)");

  auto* conv = app.add_subcommand("convergence", "fixed-step runs at several step counts");
  conv->add_option("config", conv_path, "config file")->required();
  conv->add_option("--steps", steps_list, "comma-separated step counts, e.g. 50,100,200")->required();
  conv->add_option("-o,--output", out_override, "output directory (overrides the config)");

  auto* verify = app.add_subcommand("verify", "run the built-in identity checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n" << app.help();
    return 2;
  }

  for (const std::string* path : {&run_path, &conv_path}) {
    if (!path->empty() && !std::filesystem::is_regular_file(*path)) {
      std::cerr << "error: usage: config file '" << *path << "' not found\n" << app.help();
      return 2;
    }
  }

  try {
    if (verify->parsed()) {
      const auto checks = run_verify();
      bool ok = true;
      for (const auto& c : checks) {
        print_check(std::cout, c);
        ok = ok && c.passed;
      }
      return ok ? 0 : 1;
    }

    if (run->parsed()) {
      RunConfig config = load_config(run_path);
      if (!out_override.empty()) config.output = out_override;
      const RunOutcome o = execute(config);
      write_outputs(config.output, config, o.result.diagnostics, o.snapshots);
      const RunDiagnostics& d = o.result.diagnostics;
      std::cout << "e_A " << format_double(d.error_area) << " e_L " << format_double(d.error_length)
                << " accepts " << d.accepts << " rejects " << d.rejects << " matvecs " << d.matvecs
                << " -> " << config.output << "\n";
      if (!d.completed) return report_error("run", d.failure);
      return 0;
    }

    if (conv->parsed()) {
      RunConfig base = load_config(conv_path);
      if (!out_override.empty()) base.output = out_override;
      const std::vector<int> steps = parse_steps(steps_list);
      json runs = json::array();
      std::vector<double> ea, el;
      bool ok = true;
      for (int m : steps) {
        RunConfig c = base;
        c.mode = RunConfig::TimeMode::fixed;
        c.steps = m;
        c.output = (std::filesystem::path(base.output) / ("m" + std::to_string(m))).string();
        const RunOutcome o = execute(c);
        write_outputs(c.output, c, o.result.diagnostics, o.snapshots);
        const RunDiagnostics& d = o.result.diagnostics;
        ok = ok && d.completed;
        ea.push_back(d.error_area);
        el.push_back(d.error_length);
        runs.push_back({{"m", m}, {"e_A", d.error_area}, {"e_L", d.error_length}, {"matvecs", d.matvecs},
                        {"cpu_seconds", d.wall_seconds}, {"completed", d.completed}});
        std::cout << "m " << m << " e_A " << format_double(d.error_area) << " e_L "
                  << format_double(d.error_length) << "\n";
      }
      json summary;
      summary["runs"] = runs;
      auto order = [&](const std::vector<double>& e) -> json {
        for (double v : e)
          if (!(v > 0)) return nullptr;
        return fitted_order(steps, e);
      };
      summary["order_area"] = order(ea);
      summary["order_length"] = order(el);
      const auto path = std::filesystem::path(base.output) / "summary.json";
      std::ofstream f = open_output(path);
      f << summary.dump(2) << "\n";
      close_output(f, path);
      std::cout << "fitted order: area " << summary["order_area"].dump() << " length "
                << summary["order_length"].dump() << "\n";
      return ok ? 0 : report_error("convergence", "at least one run did not complete");
    }
  } catch (const ConfigError& e) {
    return report_error("config", e.what());
  } catch (const InvalidInput& e) {
    return report_error("input", e.what());
  } catch (const std::exception& e) {
    return report_error("runtime", e.what());
  }
  return 2;
}

}  // namespace vesicle
