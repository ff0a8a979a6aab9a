#include "qtrack/config.hpp"

#include <cstdio>
#include <set>

#include <json.hpp>

#include "qtrack/errors.hpp"

namespace qtrack {

using nlohmann::json;

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::string grouping_name(Grouping g) {
  return g == Grouping::ImpactOrder ? "impact_order" : "impact_connected";
}

std::string update_name(UpdateMode m) { return m == UpdateMode::Jacobi ? "jacobi" : "gauss_seidel"; }

json config_json(const RunConfig& c) {
  const auto& g = c.geometry;
  json geometry = {
      {"n_layers", g.n_layers},
      {"first_layer_z", g.first_layer_z},
      {"layer_pitch", g.layer_pitch},
      {"layer_center_x", g.layer_center_x},
      {"layer_half_extent_x", g.layer_half_extent_x},
      {"layer_half_extent_y", g.layer_half_extent_y},
      {"hit_resolution", g.hit_resolution},
      {"layer_thickness_x0", g.layer_thickness_x0},
      {"dipole_field", g.dipole_field},
      {"dipole_length", g.dipole_length},
      {"dipole_center_z", g.dipole_center_z},
      {"ip_position", vec3_json(g.ip_position)},
  };
  geometry["layer_z"] = g.layer_z ? json(*g.layer_z) : json(nullptr);

  const auto& s = c.sim;
  json sim = {
      {"mean_multiplicity", s.mean_multiplicity},
      {"energy_spectrum",
       {{"kind", s.energy_spectrum.kind},
        {"shape", s.energy_spectrum.shape},
        {"scale", s.energy_spectrum.scale},
        {"lo", s.energy_spectrum.lo},
        {"hi", s.energy_spectrum.hi}}},
      {"ip_smear", vec3_json(s.ip_smear)},
      {"emittance_angle_sigma", s.emittance_angle_sigma},
      {"xi_label", s.xi_label},
      {"smear_hits", s.smear_hits},
      {"multiple_scattering", s.multiple_scattering},
  };
  sim["fixed_multiplicity"] = s.fixed_multiplicity ? json(*s.fixed_multiplicity) : json(nullptr);

  const auto& r = c.reco;
  json preselect = {
      {"dx_mean", r.window.dx_mean},
      {"dx_sigma", r.window.dx_sigma},
      {"n_sigma", r.window.n_sigma},
      {"max_delta_theta", r.window.max_delta_theta},
      {"calibrate_from_truth", r.calibrate_from_truth},
  };
  json qubo = {{"theta_scale", r.scaling.theta_scale}, {"spread_max", r.scaling.spread_max}};
  const auto& sv = r.solver;
  json solver = {
      {"name", to_string(sv.kind)},
      {"subqubo_size", sv.iterative.subqubo_size},
      {"max_iterations", sv.iterative.max_iterations},
      {"grouping", grouping_name(sv.iterative.grouping)},
      {"update", update_name(sv.iterative.update)},
      {"anneal",
       {{"t_initial", sv.anneal.t_initial}, {"t_final", sv.anneal.t_final}, {"sweeps", sv.anneal.sweeps}}},
      {"vqe",
       {{"shots", sv.vqe.shots},
        {"max_evaluations", sv.vqe.max_evaluations},
        {"readout_error", sv.vqe.readout_error}}},
  };
  return {{"seed", c.seed}, {"geometry", geometry}, {"sim", sim},
          {"preselect", preselect}, {"qubo", qubo}, {"solver", solver}};
}

/// Reads members of one JSON object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + path_ + "." + key + "'");
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  void get_vec3(const char* key, Vec3& out) {
    std::vector<double> v;
    get(key, v);
    if (!j_.contains(key)) return;
    if (v.size() != 3) throw ConfigError(path_ + "." + key + ": expected 3 numbers");
    out = {v[0], v[1], v[2]};
  }

  bool has(const char* key) const { return j_.contains(key); }
  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), path_ + "." + key);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::validate() const {
  (void)build_geometry(geometry);
  qtrack::validate(sim);
  qtrack::validate(reco.window);
  if (!(reco.scaling.theta_scale > 0.0)) throw ConfigError("qubo.theta_scale must be > 0");
  if (!(reco.scaling.spread_max > 0.0)) throw ConfigError("qubo.spread_max must be > 0");
  const auto& it = reco.solver.iterative;
  if (it.subqubo_size < 1) throw ConfigError("solver.subqubo_size must be >= 1");
  if (reco.solver.kind == SolverKind::Exact && it.subqubo_size > kMaxExactSize) {
    throw ConfigError("solver.subqubo_size exceeds the exact solver limit of " + std::to_string(kMaxExactSize));
  }
  if (reco.solver.kind == SolverKind::Vqe && it.subqubo_size > kMaxQubits) {
    throw ConfigError("solver.subqubo_size exceeds the statevector limit of " + std::to_string(kMaxQubits));
  }
  if (it.max_iterations < 1) throw ConfigError("solver.max_iterations must be >= 1");
  const auto& a = reco.solver.anneal;
  if (!(a.t_initial > 0.0 && a.t_final > 0.0 && a.t_final <= a.t_initial) || a.sweeps < 1) {
    throw ConfigError("solver.anneal: need 0 < t_final <= t_initial and sweeps >= 1");
  }
  const auto& v = reco.solver.vqe;
  if (v.max_evaluations < 3) throw ConfigError("solver.vqe.max_evaluations must be >= 3");
  if (!(v.readout_error >= 0.0 && v.readout_error <= 0.5)) {
    throw ConfigError("solver.vqe.readout_error must lie in [0, 0.5]");
  }
}

std::string to_json_text(const RunConfig& config) { return config_json(config).dump(2); }

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  {
    Section top(root, "config");
    top.get("seed", c.seed);
    if (top.has("geometry")) {
      auto s = top.sub("geometry");
      auto& g = c.geometry;
      s.get("n_layers", g.n_layers);
      s.get_optional("layer_z", g.layer_z);
      s.get("first_layer_z", g.first_layer_z);
      s.get("layer_pitch", g.layer_pitch);
      s.get("layer_center_x", g.layer_center_x);
      s.get("layer_half_extent_x", g.layer_half_extent_x);
      s.get("layer_half_extent_y", g.layer_half_extent_y);
      s.get("hit_resolution", g.hit_resolution);
      s.get("layer_thickness_x0", g.layer_thickness_x0);
      s.get("dipole_field", g.dipole_field);
      s.get("dipole_length", g.dipole_length);
      s.get("dipole_center_z", g.dipole_center_z);
      s.get_vec3("ip_position", g.ip_position);
    }
    if (top.has("sim")) {
      auto s = top.sub("sim");
      auto& m = c.sim;
      s.get("mean_multiplicity", m.mean_multiplicity);
      s.get_optional("fixed_multiplicity", m.fixed_multiplicity);
      if (s.has("energy_spectrum")) {
        auto e = s.sub("energy_spectrum");
        e.get("kind", m.energy_spectrum.kind);
        e.get("shape", m.energy_spectrum.shape);
        e.get("scale", m.energy_spectrum.scale);
        e.get("lo", m.energy_spectrum.lo);
        e.get("hi", m.energy_spectrum.hi);
      }
      s.get_vec3("ip_smear", m.ip_smear);
      s.get("emittance_angle_sigma", m.emittance_angle_sigma);
      s.get("xi_label", m.xi_label);
      s.get("smear_hits", m.smear_hits);
      s.get("multiple_scattering", m.multiple_scattering);
    }
    if (top.has("preselect")) {
      auto s = top.sub("preselect");
      auto& w = c.reco.window;
      s.get("dx_mean", w.dx_mean);
      s.get("dx_sigma", w.dx_sigma);
      s.get("n_sigma", w.n_sigma);
      s.get("max_delta_theta", w.max_delta_theta);
      s.get("calibrate_from_truth", c.reco.calibrate_from_truth);
    }
    if (top.has("qubo")) {
      auto s = top.sub("qubo");
      s.get("theta_scale", c.reco.scaling.theta_scale);
      s.get("spread_max", c.reco.scaling.spread_max);
    }
    if (top.has("solver")) {
      auto s = top.sub("solver");
      auto& sv = c.reco.solver;
      std::string name = to_string(sv.kind);
      s.get("name", name);
      sv.kind = parse_solver(name);
      s.get("subqubo_size", sv.iterative.subqubo_size);
      s.get("max_iterations", sv.iterative.max_iterations);
      std::string grouping = grouping_name(sv.iterative.grouping);
      s.get("grouping", grouping);
      if (grouping == "impact_order") sv.iterative.grouping = Grouping::ImpactOrder;
      else if (grouping == "impact_connected") sv.iterative.grouping = Grouping::ImpactConnected;
      else throw ConfigError("solver.grouping: expected impact_order or impact_connected");
      std::string update = update_name(sv.iterative.update);
      s.get("update", update);
      if (update == "jacobi") sv.iterative.update = UpdateMode::Jacobi;
      else if (update == "gauss_seidel") sv.iterative.update = UpdateMode::GaussSeidel;
      else throw ConfigError("solver.update: expected jacobi or gauss_seidel");
      if (s.has("anneal")) {
        auto a = s.sub("anneal");
        a.get("t_initial", sv.anneal.t_initial);
        a.get("t_final", sv.anneal.t_final);
        a.get("sweeps", sv.anneal.sweeps);
      }
      if (s.has("vqe")) {
        auto v = s.sub("vqe");
        v.get("shots", sv.vqe.shots);
        v.get("max_evaluations", sv.vqe.max_evaluations);
        v.get("readout_error", sv.vqe.readout_error);
      }
    }
  }
  c.sim.rng_seed = c.seed;
  c.reco.seed = c.seed;
  c.validate();
  return c;
}

std::string config_hash(const RunConfig& config) {
  const std::string text = config_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_xi_preset(RunConfig& config, double xi) {
  config.sim.mean_multiplicity = xi_to_multiplicity(xi);
  config.sim.xi_label = xi;
}

}  // namespace qtrack
