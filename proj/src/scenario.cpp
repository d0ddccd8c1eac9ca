#include "bearingform/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bearingform {

namespace {

std::string location_prefix(const std::string& source, int line, int column) {
  std::ostringstream out;
  out << source;
  if (line >= 0) out << ':' << line + 1 << ':' << column + 1;
  return out.str();
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& what) const {
    const YAML::Mark mark = node.Mark();
    throw ScenarioError(source_, mark.line, mark.column, "field '" + field + "': " + what);
  }

  void reject_unknown(const YAML::Node& map, const std::string& prefix,
                      const std::set<std::string>& allowed) const {
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, prefix + key, "unknown key");
    }
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a number");
    try {
      const double v = node.as<double>();
      if (!std::isfinite(v)) fail(node, field, "expected a finite number");
      return v;
    } catch (const YAML::BadConversion&) {
      fail(node, field, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  std::uint64_t unsigned_int(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a non-negative integer");
    const std::string& s = node.Scalar();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      fail(node, field, "expected a non-negative integer, got '" + s + "'");
    }
    try {
      return node.as<std::uint64_t>();
    } catch (const YAML::BadConversion&) {
      fail(node, field, "integer out of range");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& field) const {
    try {
      return node.as<bool>();
    } catch (const YAML::BadConversion&) {
      fail(node, field, "expected true or false");
    }
  }

  std::string string(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a string");
    return node.Scalar();
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

SimConfig parse_sim(const Reader& r, const YAML::Node& node) {
  SimConfig cfg;
  if (!node) return cfg;
  if (!node.IsMap()) r.fail(node, "sim", "expected a mapping");
  r.reject_unknown(node, "sim.",
                   {"dt", "t_max", "convergence_tol", "deadband", "collision_floor", "seed", "settle_time",
                    "record_every", "integrator", "max_substeps", "force"});
  if (auto v = node["dt"]) {
    cfg.dt = r.number(v, "sim.dt");
    if (!(cfg.dt > 0.0)) r.fail(v, "sim.dt", "must be > 0");
  }
  if (auto v = node["t_max"]) {
    cfg.t_max = r.number(v, "sim.t_max");
    if (!(cfg.t_max > 0.0)) r.fail(v, "sim.t_max", "must be > 0");
  }
  if (auto v = node["convergence_tol"]) {
    cfg.convergence_tol = r.number(v, "sim.convergence_tol");
    if (!(cfg.convergence_tol > 0.0)) r.fail(v, "sim.convergence_tol", "must be > 0");
  }
  if (auto v = node["deadband"]) {
    cfg.deadband = r.number(v, "sim.deadband");
    if (!(cfg.deadband >= 0.0)) r.fail(v, "sim.deadband", "must be >= 0");
  }
  if (auto v = node["collision_floor"]) {
    cfg.collision_floor = r.number(v, "sim.collision_floor");
    if (cfg.collision_floor != 0.0 && !(cfg.collision_floor >= kCollocationEps)) {
      r.fail(v, "sim.collision_floor", "must be 0 (automatic) or >= 1e-9");
    }
  }
  if (auto v = node["seed"]) cfg.seed = r.unsigned_int(v, "sim.seed");
  if (auto v = node["settle_time"]) {
    cfg.settle_time = r.number(v, "sim.settle_time");
    if (!(cfg.settle_time >= 0.0)) r.fail(v, "sim.settle_time", "must be >= 0");
  }
  if (auto v = node["record_every"]) cfg.record_every = r.unsigned_int(v, "sim.record_every");
  if (auto v = node["integrator"]) {
    const auto parsed = integrator_from_string(r.string(v, "sim.integrator"));
    if (!parsed) r.fail(v, "sim.integrator", "expected 'switch-locating' or 'fixed-step'");
    cfg.integrator = *parsed;
  }
  if (auto v = node["max_substeps"]) {
    cfg.max_substeps = r.unsigned_int(v, "sim.max_substeps");
    if (cfg.max_substeps == 0) r.fail(v, "sim.max_substeps", "must be >= 1");
  }
  if (auto v = node["force"]) cfg.force = r.boolean(v, "sim.force");
  return cfg;
}

std::variant<RealizePerturb, ExplicitPositions> parse_initial(const Reader& r, const YAML::Node& node,
                                                              std::size_t n) {
  if (!node.IsMap()) r.fail(node, "initial", "expected a mapping");
  if (auto pos = node["positions"]) {
    r.reject_unknown(node, "initial.", {"positions"});
    if (!pos.IsSequence()) r.fail(pos, "initial.positions", "expected a list of [x, y] pairs");
    if (pos.size() != n) {
      r.fail(pos, "initial.positions", "expected " + std::to_string(n) + " positions, got " +
                                           std::to_string(pos.size()));
    }
    ExplicitPositions out;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const YAML::Node p = pos[i];
      const std::string field = "initial.positions[" + std::to_string(i) + "]";
      if (!p.IsSequence() || p.size() != 2) r.fail(p, field, "expected [x, y]");
      out.positions.push_back({r.number(p[0], field), r.number(p[1], field)});
    }
    return out;
  }

  r.reject_unknown(node, "initial.", {"generator", "scale", "magnitude", "seed"});
  const YAML::Node gen = node["generator"];
  if (!gen) r.fail(node, "initial", "needs either 'positions' or 'generator'");
  if (r.string(gen, "initial.generator") != "realize+perturb") {
    r.fail(gen, "initial.generator", "only 'realize+perturb' is supported");
  }
  RealizePerturb out;
  if (auto v = node["scale"]) {
    out.scale = r.number(v, "initial.scale");
    if (!(out.scale > 0.0)) r.fail(v, "initial.scale", "must be > 0");
  }
  if (auto v = node["magnitude"]) {
    out.magnitude = r.number(v, "initial.magnitude");
    if (!(out.magnitude >= 0.0)) r.fail(v, "initial.magnitude", "must be >= 0");
  }
  if (auto v = node["seed"]) out.seed = r.unsigned_int(v, "initial.seed");
  return out;
}

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line, int column, const std::string& message)
    : std::runtime_error(location_prefix(source, line, column) + ": " + message),
      line_(line < 0 ? -1 : line + 1),
      column_(column < 0 ? -1 : column + 1) {}

std::string to_string(Integrator integrator) {
  return integrator == Integrator::kFixedStep ? "fixed-step" : "switch-locating";
}

std::optional<Integrator> integrator_from_string(const std::string& name) {
  if (name == "switch-locating") return Integrator::kSwitchLocating;
  if (name == "fixed-step") return Integrator::kFixedStep;
  return std::nullopt;
}

TargetSpec Scenario::target() const { return TargetSpec::from_degrees(target_angles_deg); }

FormationState Scenario::initial_state() const {
  if (const auto* gen = std::get_if<RealizePerturb>(&initial)) {
    return perturb(realize_target(target(), gen->scale), gen->magnitude, gen->seed);
  }
  const auto& explicit_pos = std::get<ExplicitPositions>(initial);
  std::vector<Vec2> z;
  z.reserve(explicit_pos.positions.size());
  for (const auto& p : explicit_pos.positions) z.emplace_back(p[0], p[1]);
  return FormationState(std::move(z));
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source, e.mark.line, e.mark.column, e.msg);
  }
  const Reader r(source);
  if (!root.IsMap()) throw ScenarioError(source, 0, 0, "expected a mapping at the top level");
  r.reject_unknown(root, "", {"name", "n", "target_angles_deg", "initial", "sim"});

  Scenario sc;
  if (auto v = root["name"]) sc.name = r.string(v, "name");

  const YAML::Node n_node = root["n"];
  if (!n_node) throw ScenarioError(source, 0, 0, "field 'n': missing");
  const std::uint64_t n = r.unsigned_int(n_node, "n");
  if (n < 3) r.fail(n_node, "n", "a ring needs at least 3 vehicles");

  const YAML::Node angles = root["target_angles_deg"];
  if (!angles) throw ScenarioError(source, 0, 0, "field 'target_angles_deg': missing");
  if (!angles.IsSequence()) r.fail(angles, "target_angles_deg", "expected a list of angles in degrees");
  if (angles.size() != n) {
    r.fail(angles, "target_angles_deg",
           "expected " + std::to_string(n) + " angles, got " + std::to_string(angles.size()));
  }
  for (std::size_t i = 0; i < angles.size(); ++i) {
    sc.target_angles_deg.push_back(r.number(angles[i], "target_angles_deg[" + std::to_string(i) + "]"));
  }

  const YAML::Node init = root["initial"];
  if (!init) throw ScenarioError(source, 0, 0, "field 'initial': missing");
  sc.initial = parse_initial(r, init, static_cast<std::size_t>(n));
  sc.sim = parse_sim(r, root["sim"]);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string(), -1, -1, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario sc = parse_scenario(buf.str(), path.string());
  if (sc.name.empty()) sc.name = path.stem().string();
  return sc;
}

std::string serialize_scenario(const Scenario& sc) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << sc.name;
  out << YAML::Key << "n" << YAML::Value << sc.n();
  out << YAML::Key << "target_angles_deg" << YAML::Value << YAML::Flow << sc.target_angles_deg;

  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  if (const auto* gen = std::get_if<RealizePerturb>(&sc.initial)) {
    out << YAML::Key << "generator" << YAML::Value << "realize+perturb";
    out << YAML::Key << "scale" << YAML::Value << gen->scale;
    out << YAML::Key << "magnitude" << YAML::Value << gen->magnitude;
    out << YAML::Key << "seed" << YAML::Value << gen->seed;
  } else {
    out << YAML::Key << "positions" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : std::get<ExplicitPositions>(sc.initial).positions) {
      out << YAML::Flow << YAML::BeginSeq << p[0] << p[1] << YAML::EndSeq;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  const SimConfig& s = sc.sim;
  out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << s.dt;
  out << YAML::Key << "t_max" << YAML::Value << s.t_max;
  out << YAML::Key << "convergence_tol" << YAML::Value << s.convergence_tol;
  out << YAML::Key << "deadband" << YAML::Value << s.deadband;
  out << YAML::Key << "collision_floor" << YAML::Value << s.collision_floor;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "settle_time" << YAML::Value << s.settle_time;
  out << YAML::Key << "record_every" << YAML::Value << s.record_every;
  out << YAML::Key << "integrator" << YAML::Value << to_string(s.integrator);
  out << YAML::Key << "max_substeps" << YAML::Value << s.max_substeps;
  out << YAML::Key << "force" << YAML::Value << s.force;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace bearingform
