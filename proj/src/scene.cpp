#include "fricsim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fricsim/error.hpp"
#include "fricsim/mesh_io.hpp"

namespace fricsim {
namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& why) {
  throw Error(ErrorCategory::Config, path + ": " + why);
}

/// Reads keys of one JSON object and remembers which were not consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& unknown)
      : j_(j), path_(std::move(path)), unknown_(unknown) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;
  ~ObjectReader() {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) unknown_.push_back(child_path(key));
  }

  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) config_error(child_path(key), "expected a number");
    return v->get<double>();
  }

  int integer(const std::string& key, int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) config_error(child_path(key), "expected an integer");
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) config_error(child_path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) config_error(child_path(key), "expected a string");
    return v->get<std::string>();
  }

  /// Number or the string "auto" (returned as nullopt).
  std::optional<double> number_or_auto(const std::string& key, std::optional<double> fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_string() && v->get<std::string>() == "auto") return std::nullopt;
    if (!v->is_number()) config_error(child_path(key), "expected a number or \"auto\"");
    return v->get<double>();
  }

  Eigen::Vector3d vec3(const std::string& key, const Eigen::Vector3d& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_array() || v->size() != 3) config_error(child_path(key), "expected an array of 3 numbers");
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
      if (!(*v)[i].is_number()) config_error(child_path(key), "expected an array of 3 numbers");
      out[i] = (*v)[i].get<double>();
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& unknown_;
  std::set<std::string> seen_;
};

/// Re-throw domain errors from validate() with the field path prefixed.
template <class Fn>
void validated(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::Domain) config_error(path, e.what());
    throw;
  }
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json auto_or(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

MaterialParams read_material(ObjectReader& r) {
  MaterialParams m;
  m.density = r.number("density", m.density);
  m.youngs_modulus = r.number("youngs_modulus", m.youngs_modulus);
  m.poisson_ratio = r.number("poisson_ratio", m.poisson_ratio);
  m.rayleigh_alpha = r.number("rayleigh_alpha", m.rayleigh_alpha);
  m.rayleigh_beta = r.number("rayleigh_beta", m.rayleigh_beta);
  validated(r.path(), [&] { m.validate(); });
  return m;
}

FrictionParams read_friction(ObjectReader& r) {
  FrictionParams f;
  f.mu_dynamic = r.number("mu_dynamic", 0.0);
  f.mu_static = r.number("mu_static", f.mu_dynamic);
  f.mu_viscous = r.number("mu_viscous", 0.0);
  f.epsilon = r.number("epsilon", 1e-4);
  f.stribeck_velocity = r.number("stribeck_velocity", 10.0 * f.epsilon);
  validated(r.path(), [&] { f.validate(); });
  return f;
}

MeshSpec read_mesh(ObjectReader& r, const std::filesystem::path& base_dir) {
  MeshSpec m;
  m.generator = r.text("generator", "box");
  if (m.generator == "box") {
    m.size = r.vec3("size", m.size);
    if (const json* res = r.find("resolution")) {
      if (!res->is_array() || res->size() != 3) config_error(r.child_path("resolution"), "expected 3 integers");
      for (int i = 0; i < 3; ++i) {
        if (!(*res)[i].is_number_integer() || (*res)[i].get<int>() < 1)
          config_error(r.child_path("resolution"), "expected 3 integers >= 1");
        m.resolution[i] = (*res)[i].get<int>();
      }
    }
    if (!(m.size.minCoeff() > 0.0)) config_error(r.child_path("size"), "must be positive");
  } else if (m.generator == "ball") {
    m.radius = r.number("radius", m.radius);
    m.ball_resolution = r.integer("resolution", m.ball_resolution);
    if (!(m.radius > 0.0)) config_error(r.child_path("radius"), "must be > 0");
    if (m.ball_resolution < 1) config_error(r.child_path("resolution"), "must be >= 1");
  } else if (m.generator == "file") {
    m.file = r.text("path", "");
    if (m.file.empty()) config_error(r.child_path("path"), "required for generator \"file\"");
    const std::filesystem::path full = base_dir / m.file;
    if (!std::filesystem::exists(full))
      throw Error(ErrorCategory::Io, r.child_path("path") + ": cannot open mesh file '" + full.string() + "'");
  } else {
    config_error(r.child_path("generator"), "expected \"box\", \"ball\" or \"file\"");
  }
  return m;
}

Obstacle read_obstacle(ObjectReader& r, int index, std::vector<std::string>& unknown) {
  Obstacle ob;
  ob.name = r.text("name", "obstacle" + std::to_string(index));
  const std::string type = r.text("type", "plane");
  if (type == "plane") {
    ob.kind = ObstacleKind::HalfSpace;
    ob.point = r.vec3("point", Eigen::Vector3d::Zero());
    ob.normal = r.vec3("normal", Eigen::Vector3d::UnitY());
    if (!(ob.normal.norm() > 0.0)) config_error(r.child_path("normal"), "must be nonzero");
    ob.normal.normalize();
  } else if (type == "sphere") {
    ob.kind = ObstacleKind::Sphere;
    ob.point = r.vec3("center", Eigen::Vector3d::Zero());
    ob.radius = r.number("radius", 1.0);
    ob.inside = r.boolean("inside", false);
  } else {
    config_error(r.child_path("type"), "expected \"plane\" or \"sphere\"");
  }
  if (const json* f = r.find("friction")) {
    ObjectReader fr(*f, r.child_path("friction"), unknown);
    ob.friction = read_friction(fr);
  } else {
    ob.friction = FrictionParams{0.0, 0.0, 0.0, 1e-4, 1e-3};
  }
  if (const json* m = r.find("motion")) {
    ObjectReader mr(*m, r.child_path("motion"), unknown);
    ob.motion.angular_velocity = mr.vec3("angular_velocity", Eigen::Vector3d::Zero());
    if (const json* keys = mr.find("keyframes")) {
      if (!keys->is_array()) config_error(mr.child_path("keyframes"), "expected an array");
      for (size_t k = 0; k < keys->size(); ++k) {
        ObjectReader kr((*keys)[k], mr.child_path("keyframes") + "[" + std::to_string(k) + "]", unknown);
        ObstacleMotion::Keyframe key;
        key.time = kr.number("time", 0.0);
        key.offset = kr.vec3("offset", Eigen::Vector3d::Zero());
        ob.motion.keyframes.push_back(key);
      }
    }
  }
  validated(r.path(), [&] { ob.validate(); });
  return ob;
}

json friction_json(const FrictionParams& f) {
  return {{"mu_dynamic", f.mu_dynamic},
          {"mu_static", f.mu_static},
          {"mu_viscous", f.mu_viscous},
          {"epsilon", f.epsilon},
          {"stribeck_velocity", f.stribeck_velocity}};
}

}  // namespace

SceneConfig load_scene(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::Config, std::string("malformed scene JSON: ") + e.what());
  }
  SceneConfig c;
  c.base_dir = base_dir;
  std::vector<std::string> unknown;
  {
    ObjectReader r(root, "", unknown);
    c.duration = r.number("duration", c.duration);
    if (!(c.duration > 0.0)) config_error("duration", "must be > 0");
    c.gravity = r.vec3("gravity", c.gravity);

    if (const json* j = r.find("integrator")) {
      ObjectReader ir(*j, "integrator", unknown);
      c.integrator.scheme = parse_scheme(ir.text("scheme", "be"));
      c.integrator.h = ir.number("h", c.integrator.h);
      c.integrator.friction = FrictionMode::parse(ir.text("friction_mode", "implicit"));
      const std::string detail = ir.text("jacobian", "full");
      if (detail == "full")
        c.integrator.friction.detail = JacobianDetail::WithSlidingBasisDerivatives;
      else if (detail == "frozen_basis")
        c.integrator.friction.detail = JacobianDetail::FrozenBasis;
      else
        config_error("integrator.jacobian", "expected \"full\" or \"frozen_basis\"");
    }
    if (!(c.integrator.h > 0.0)) config_error("integrator.h", "must be > 0");
    c.integrator.validate();

    if (const json* j = r.find("solver")) {
      ObjectReader sr(*j, "solver", unknown);
      SolverConfig& s = c.solver.config;
      s.linear = parse_linear_solver(sr.text("linear", "direct"));
      s.max_iterations = sr.integer("max_iterations", s.max_iterations);
      c.solver.r_tol_abs = sr.number_or_auto("r_tol_abs", std::nullopt);
      s.r_tol_rel = sr.number("r_tol_rel", s.r_tol_rel);
      c.solver.v_tol = sr.number_or_auto("v_tol", std::nullopt);
      s.c1 = sr.number("c1", s.c1);
      s.sigma = sr.number("sigma", s.sigma);
      s.backtrack = sr.number("backtrack", s.backtrack);
      s.min_step = sr.number("min_step", s.min_step);
      s.max_krylov_iterations = sr.integer("max_krylov_iterations", s.max_krylov_iterations);
      const std::string vj = sr.text("volume_jacobian", "sparse");
      if (vj != "sparse" && vj != "exact") config_error("solver.volume_jacobian", "expected \"sparse\" or \"exact\"");
      s.exact_low_rank = vj == "exact";
    }
    validated("solver", [&] { c.solver.config.validate(); });

    if (const json* j = r.find("contact")) {
      ObjectReader cr(*j, "contact", unknown);
      c.contact.delta = cr.number("delta", c.contact.delta);
      c.contact.kappa = cr.number_or_auto("kappa", std::nullopt);
      c.contact.kappa_max = cr.number("kappa_max", c.contact.kappa_max);
      c.contact.candidate_factor = cr.number("candidate_factor", c.contact.candidate_factor);
    }
    if (!(c.contact.delta > 0.0)) config_error("contact.delta", "must be > 0");
    if (c.contact.kappa && !(*c.contact.kappa > 0.0)) config_error("contact.kappa", "must be > 0");
    if (!(c.contact.kappa_max > 0.0)) config_error("contact.kappa_max", "must be > 0");
    if (!(c.contact.candidate_factor >= 1.0)) config_error("contact.candidate_factor", "must be >= 1");

    const json* bodies = r.find("bodies");
    if (!bodies || !bodies->is_array() || bodies->empty()) config_error("bodies", "expected a non-empty array");
    for (size_t b = 0; b < bodies->size(); ++b) {
      const std::string path = "bodies[" + std::to_string(b) + "]";
      ObjectReader br((*bodies)[b], path, unknown);
      BodySpec body;
      body.name = br.text("name", "body" + std::to_string(b));
      if (const json* m = br.find("mesh")) {
        ObjectReader mr(*m, path + ".mesh", unknown);
        body.mesh = read_mesh(mr, base_dir);
      }
      if (const json* m = br.find("material")) {
        ObjectReader mr(*m, path + ".material", unknown);
        body.material = read_material(mr);
      }
      body.translation = br.vec3("translation", body.translation);
      if (const json* rot = br.find("rotation")) {
        ObjectReader rr(*rot, path + ".rotation", unknown);
        body.rotation_axis = rr.vec3("axis", body.rotation_axis);
        body.rotation_degrees = rr.number("degrees", 0.0);
        if (!(body.rotation_axis.norm() > 0.0)) config_error(path + ".rotation.axis", "must be nonzero");
        body.rotation_axis.normalize();
      }
      body.velocity = br.vec3("velocity", body.velocity);
      if (const json* fixed = br.find("fixed_vertices")) {
        if (!fixed->is_array()) config_error(path + ".fixed_vertices", "expected an array of integers");
        for (const auto& i : *fixed) {
          if (!i.is_number_integer() || i.get<int>() < 0)
            config_error(path + ".fixed_vertices", "expected non-negative integers");
          body.fixed_vertices.push_back(i.get<int>());
        }
      }
      for (const auto& other : c.bodies)
        if (other.name == body.name) config_error(path + ".name", "duplicate body name '" + body.name + "'");
      c.bodies.push_back(std::move(body));
    }

    if (const json* obs = r.find("obstacles")) {
      if (!obs->is_array()) config_error("obstacles", "expected an array");
      for (size_t o = 0; o < obs->size(); ++o) {
        ObjectReader orr((*obs)[o], "obstacles[" + std::to_string(o) + "]", unknown);
        c.obstacles.push_back(read_obstacle(orr, static_cast<int>(o), unknown));
      }
    }

    if (const json* vols = r.find("volumes")) {
      if (!vols->is_array()) config_error("volumes", "expected an array");
      for (size_t v = 0; v < vols->size(); ++v) {
        const std::string path = "volumes[" + std::to_string(v) + "]";
        ObjectReader vr((*vols)[v], path, unknown);
        VolumeSpec spec;
        spec.body = vr.text("body", c.bodies.front().name);
        spec.group = vr.text("group", spec.group);
        try {
          spec.model = parse_volume_model(vr.text("model", "quadratic"));
        } catch (const Error& e) {
          config_error(path + ".model", e.what());
        }
        spec.compressibility_atm = vr.number("compressibility_atm", spec.compressibility_atm);
        spec.initial_pressure_atm = vr.number("initial_pressure_atm", spec.initial_pressure_atm);
        spec.rest_volume = vr.number_or_auto("rest_volume", std::nullopt);
        if (!(spec.compressibility_atm > 0.0)) config_error(path + ".compressibility_atm", "must be > 0");
        if (!(spec.initial_pressure_atm > 0.0)) config_error(path + ".initial_pressure_atm", "must be > 0");
        if (spec.rest_volume && !(*spec.rest_volume > 0.0)) config_error(path + ".rest_volume", "must be > 0");
        if (std::none_of(c.bodies.begin(), c.bodies.end(), [&](const BodySpec& b) { return b.name == spec.body; }))
          config_error(path + ".body", "no body named '" + spec.body + "'");
        c.volumes.push_back(spec);
      }
    }

    if (const json* out = r.find("output")) {
      ObjectReader orr(*out, "output", unknown);
      c.output.record_every = orr.integer("record_every", c.output.record_every);
      c.output.snapshot_every = orr.integer("snapshot_every", c.output.snapshot_every);
    }
    if (c.output.record_every < 1) config_error("output.record_every", "must be >= 1");
    if (c.output.snapshot_every < 0) config_error("output.snapshot_every", "must be >= 0");
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw Error(ErrorCategory::Config, "unknown keys: " + list);
  }
  return c;
}

SceneConfig load_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open scene file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_scene(buffer.str(), path.parent_path());
}

std::string dump_scene(const SceneConfig& c) {
  json root;
  root["duration"] = c.duration;
  root["gravity"] = vec_json(c.gravity);
  root["integrator"] = {
      {"scheme", to_string(c.integrator.scheme)},
      {"h", c.integrator.h},
      {"friction_mode", c.integrator.friction.to_string()},
      {"jacobian", c.integrator.friction.detail == JacobianDetail::FrozenBasis ? "frozen_basis" : "full"}};
  const SolverConfig& s = c.solver.config;
  root["solver"] = {{"linear", to_string(s.linear)},
                    {"max_iterations", s.max_iterations},
                    {"r_tol_abs", auto_or(c.solver.r_tol_abs)},
                    {"r_tol_rel", s.r_tol_rel},
                    {"v_tol", auto_or(c.solver.v_tol)},
                    {"c1", s.c1},
                    {"sigma", s.sigma},
                    {"backtrack", s.backtrack},
                    {"min_step", s.min_step},
                    {"max_krylov_iterations", s.max_krylov_iterations},
                    {"volume_jacobian", s.exact_low_rank ? "exact" : "sparse"}};
  root["contact"] = {{"delta", c.contact.delta},
                     {"kappa", auto_or(c.contact.kappa)},
                     {"kappa_max", c.contact.kappa_max},
                     {"candidate_factor", c.contact.candidate_factor}};
  json bodies = json::array();
  for (const auto& b : c.bodies) {
    json mesh;
    mesh["generator"] = b.mesh.generator;
    if (b.mesh.generator == "box") {
      mesh["size"] = vec_json(b.mesh.size);
      mesh["resolution"] = b.mesh.resolution;
    } else if (b.mesh.generator == "ball") {
      mesh["radius"] = b.mesh.radius;
      mesh["resolution"] = b.mesh.ball_resolution;
    } else {
      mesh["path"] = b.mesh.file;
    }
    const MaterialParams& m = b.material;
    bodies.push_back({{"name", b.name},
                      {"mesh", mesh},
                      {"material",
                       {{"density", m.density},
                        {"youngs_modulus", m.youngs_modulus},
                        {"poisson_ratio", m.poisson_ratio},
                        {"rayleigh_alpha", m.rayleigh_alpha},
                        {"rayleigh_beta", m.rayleigh_beta}}},
                      {"translation", vec_json(b.translation)},
                      {"rotation", {{"axis", vec_json(b.rotation_axis)}, {"degrees", b.rotation_degrees}}},
                      {"velocity", vec_json(b.velocity)},
                      {"fixed_vertices", b.fixed_vertices}});
  }
  root["bodies"] = bodies;
  json obstacles = json::array();
  for (const auto& ob : c.obstacles) {
    json j;
    j["name"] = ob.name;
    if (ob.kind == ObstacleKind::HalfSpace) {
      j["type"] = "plane";
      j["point"] = vec_json(ob.point);
      j["normal"] = vec_json(ob.normal);
    } else {
      j["type"] = "sphere";
      j["center"] = vec_json(ob.point);
      j["radius"] = ob.radius;
      j["inside"] = ob.inside;
    }
    j["friction"] = friction_json(ob.friction);
    json keys = json::array();
    for (const auto& k : ob.motion.keyframes) keys.push_back({{"time", k.time}, {"offset", vec_json(k.offset)}});
    j["motion"] = {{"keyframes", keys}, {"angular_velocity", vec_json(ob.motion.angular_velocity)}};
    obstacles.push_back(j);
  }
  root["obstacles"] = obstacles;
  json volumes = json::array();
  for (const auto& v : c.volumes)
    volumes.push_back({{"body", v.body},
                       {"group", v.group},
                       {"model", to_string(v.model)},
                       {"compressibility_atm", v.compressibility_atm},
                       {"initial_pressure_atm", v.initial_pressure_atm},
                       {"rest_volume", auto_or(v.rest_volume)}});
  root["volumes"] = volumes;
  root["output"] = {{"record_every", c.output.record_every}, {"snapshot_every", c.output.snapshot_every}};
  return root.dump(2) + "\n";
}

BuiltScene build_scene(const SceneConfig& c) {
  TetMesh mesh;
  std::vector<int> offsets;
  std::vector<Eigen::Vector3d> velocities;
  std::vector<int> fixed_dofs;
  for (const auto& b : c.bodies) {
    TetMesh part;
    if (b.mesh.generator == "box")
      part = make_box_mesh(b.mesh.size, b.mesh.resolution[0], b.mesh.resolution[1], b.mesh.resolution[2],
                           b.material);
    else if (b.mesh.generator == "ball")
      part = make_ball_mesh(b.mesh.radius, b.mesh.ball_resolution, b.material);
    else
      part = read_tet_mesh(c.base_dir / b.mesh.file, b.material);
    const Eigen::Matrix3d R =
        Eigen::AngleAxisd(b.rotation_degrees * M_PI / 180.0, b.rotation_axis).toRotationMatrix();
    for (auto& p : part.rest_positions) p = R * p + b.translation;
    const int offset = mesh.num_vertices();
    for (int i : b.fixed_vertices) {
      if (i >= part.num_vertices())
        config_error("bodies." + b.name + ".fixed_vertices", "index " + std::to_string(i) + " out of range");
      for (int k = 0; k < 3; ++k) fixed_dofs.push_back(3 * (offset + i) + k);
    }
    offsets.push_back(offset);
    velocities.insert(velocities.end(), part.rest_positions.size(), b.velocity);
    mesh.append(part, b.name);
  }

  SystemState initial;
  initial.q = mesh.rest_state();
  initial.v.resize(initial.q.size());
  for (size_t i = 0; i < velocities.size(); ++i) initial.v.segment<3>(3 * i) = velocities[i];

  std::vector<VolumePenalty> volumes;
  for (const auto& spec : c.volumes) {
    const std::string group = spec.body + "/" + spec.group;
    auto it = mesh.surface_groups.find(group);
    if (it == mesh.surface_groups.end())
      config_error("volumes", "body '" + spec.body + "' has no surface group '" + spec.group + "'");
    std::vector<Tri> tris;
    for (int t : it->second) tris.push_back(mesh.surface_tris[t]);
    VolumeRegion region(group, std::move(tris));
    VolumePenaltyParams params;
    params.model = spec.model;
    params.compressibility = spec.compressibility_atm / kPascalPerAtm;
    params.initial_pressure = spec.initial_pressure_atm * kPascalPerAtm;
    params.rest_volume = spec.rest_volume ? *spec.rest_volume : region.volume<double>(initial.q);
    params.validate();
    volumes.push_back({std::move(region), params});
  }

  const Eigen::VectorXd mass = build_lumped_mass(mesh);
  const std::vector<int> surface = mesh.surface_vertices();
  PenaltyParams penalty;
  penalty.delta = c.contact.delta;
  penalty.kappa_max = c.contact.kappa_max;
  if (c.contact.kappa) {
    penalty.kappa = *c.contact.kappa;
  } else {
    // Bodies already near an obstacle rest their whole weight on the near vertices; otherwise use the
    // mean surface vertex weight.
    ContactModel probe(c.obstacles, surface, penalty);
    std::vector<int> near;
    for (const auto& p : probe.candidates({&initial.q}, 0.0, c.contact.candidate_factor * penalty.delta))
      near.push_back(p.vertex);
    std::sort(near.begin(), near.end());
    near.erase(std::unique(near.begin(), near.end()), near.end());
    const double g = c.gravity.norm() > 0.0 ? c.gravity.norm() : 9.8;
    double load_mass = 0.0;
    size_t load_vertices = 0;
    if (near.empty()) {
      for (int v : surface) load_mass += mass[3 * v];
      load_vertices = surface.size();
    } else {
      std::vector<int> bounds = offsets;
      bounds.push_back(mesh.num_vertices());
      for (size_t b = 0; b + 1 < bounds.size(); ++b) {
        const auto touching = [&](int v) { return v >= bounds[b] && v < bounds[b + 1]; };
        if (std::none_of(near.begin(), near.end(), touching)) continue;
        for (int v = bounds[b]; v < bounds[b + 1]; ++v) load_mass += mass[3 * v];
      }
      load_vertices = near.size();
    }
    penalty.kappa = initial_kappa(load_mass / std::max<size_t>(load_vertices, 1) * g, penalty.delta);
  }
  validated("contact", [&] { penalty.validate(); });
  ContactModel contact(c.obstacles, surface, penalty);
  ForceModel forces(mesh, c.gravity, std::move(contact), std::move(volumes));

  SimulationConfig sim;
  sim.integrator = c.integrator;
  sim.solver = c.solver.config;
  sim.duration = c.duration;
  sim.candidate_factor = c.contact.candidate_factor;
  const double h = c.integrator.h;
  if (c.solver.r_tol_abs) {
    sim.solver.r_tol_abs = *c.solver.r_tol_abs;
  } else {
    const double g = c.gravity.cwiseAbs().maxCoeff();
    const double scale = c.integrator.friction.lagged ? g : mass.maxCoeff() * g;
    sim.solver.r_tol_abs = std::max(1e-7 * h * scale, 1e-14);
  }
  if (c.solver.v_tol) {
    sim.solver.v_tol = *c.solver.v_tol;
  } else {
    double eps = 1e-4;
    for (const auto& ob : c.obstacles)
      if (ob.friction.active()) eps = std::min(eps, ob.friction.epsilon);
    sim.solver.v_tol = 0.1 * eps;
  }
  validated("solver", [&] { sim.solver.validate(); });

  DirichletConstraint dirichlet;
  dirichlet.dofs = fixed_dofs;
  dirichlet.velocity = initial.v;
  return BuiltScene{std::move(mesh), std::move(offsets), Simulation(std::move(forces), std::move(initial), sim, dirichlet)};
}

}  // namespace fricsim
