#include "convexify/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "convexify/errors.hpp"
#include "convexify/field_io.hpp"

namespace convexify {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"grid", {"b", "xi", "d", "n_h", "h", "n_z", "k_min", "k_max", "n_k"}},
      {"scene", {"smoothing_width", "voxel_size", "forward_tolerance", "forward_max_iterations",
                 "forward_restart"}},
      {"noise", {"delta", "seed"}},
      {"solver", {"lambda", "mu", "R", "gamma", "max_iter", "grad_tol", "burn_in", "max_halvings",
                  "schedule_mode", "lambda0", "lambda1", "geometry", "form", "tail_variant",
                  "recovery", "k_target", "checkpoint_every"}},
      {"output", {"dir"}},
  };
  return keys;
}

std::string where(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

double real_value(const std::string& section, const std::string& key, const std::string& text) {
  try {
    const double v = parse_double(text);
    if (!std::isfinite(v)) throw Error("not finite");
    return v;
  } catch (const Error&) {
    throw ConfigError(where(section, key) + ": expected a real number, got '" + text + "'");
  }
}

long long int_value(const std::string& section, const std::string& key, const std::string& text) {
  std::istringstream is(text);
  long long v = 0;
  is >> v;
  if (!is || !is.eof()) {
    throw ConfigError(where(section, key) + ": expected an integer, got '" + text + "'");
  }
  return v;
}

bool bool_value(const std::string& section, const std::string& key, const std::string& text) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(where(section, key) + ": expected on/off, got '" + text + "'");
}

template <typename E>
E enum_value(const std::string& section, const std::string& key, const std::string& text,
             const std::map<std::string, E>& names) {
  auto it = names.find(text);
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : ", ") + n;
    throw ConfigError(where(section, key) + ": '" + text + "' is not one of " + allowed);
  }
  return it->second;
}

const std::map<std::string, StepGeometry> kGeometry = {{"riesz", StepGeometry::Riesz},
                                                       {"riesz_drift", StepGeometry::RieszDrift},
                                                       {"coefficient", StepGeometry::Coefficient}};
const std::map<std::string, LhForm> kForm = {{"derived", LhForm::Derived},
                                             {"printed", LhForm::AsPrinted}};
const std::map<std::string, TailVariant> kTail = {{"carleman", TailVariant::Carleman},
                                                  {"dirichlet", TailVariant::DirichletLaplace}};
const std::map<std::string, RecoveryFormula> kRecovery = {
    {"drift", RecoveryFormula::WithDrift}, {"no_drift", RecoveryFormula::WithoutDrift}};

template <typename E>
std::string enum_name(E v, const std::map<std::string, E>& names) {
  for (const auto& [n, e] : names)
    if (e == v) return n;
  return "?";
}

Inclusion parse_inclusion(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  std::string shape;
  is >> shape;
  std::vector<double> nums;
  std::string tok;
  while (is >> tok) nums.push_back(real_value("scene", key, tok));
  Inclusion inc;
  if (shape == "box") {
    if (nums.size() != 7) throw ConfigError(where("scene", key) + ": box needs cx cy cz hx hy hz contrast");
    inc.shape = InclusionShape::Box;
    inc.center = {nums[0], nums[1], nums[2]};
    inc.half_size = {nums[3], nums[4], nums[5]};
    inc.contrast = nums[6];
  } else if (shape == "ball") {
    if (nums.size() != 5) throw ConfigError(where("scene", key) + ": ball needs cx cy cz radius contrast");
    inc.shape = InclusionShape::Ball;
    inc.center = {nums[0], nums[1], nums[2]};
    inc.half_size = {nums[3], nums[3], nums[3]};
    inc.contrast = nums[4];
  } else {
    throw ConfigError(where("scene", key) + ": unknown inclusion shape '" + shape + "'");
  }
  for (int a = 0; a < 3; ++a)
    if (!(inc.half_size[a] > 0.0)) throw ConfigError(where("scene", key) + ": sizes must be positive");
  return inc;
}

bool is_inclusion_key(const std::string& key, int& index) {
  const std::string prefix = "inclusion_";
  if (key.rfind(prefix, 0) != 0 || key.size() == prefix.size()) return false;
  for (std::size_t i = prefix.size(); i < key.size(); ++i)
    if (key[i] < '0' || key[i] > '9') return false;
  index = std::stoi(key.substr(prefix.size()));
  return true;
}

}  // namespace

double RunConfig::effective_mu() const {
  if (!solver.schedule_mode) return solver.mu;
  return choose_mu(delta, grid.d, grid.xi, solver.lambda0);
}

double RunConfig::effective_lambda() const {
  if (!solver.schedule_mode) return solver.lambda;
  return choose_lambda(delta, grid.d, grid.xi, solver.lambda1);
}

InversionConfig RunConfig::inversion() const {
  InversionConfig c;
  c.lambda = effective_lambda();
  c.R = solver.R;
  c.gamma = solver.gamma;
  c.max_iter = solver.max_iter;
  c.grad_tol = solver.grad_tol;
  c.delta = delta;
  c.burn_in = solver.burn_in;
  c.max_halvings = solver.max_halvings;
  c.geometry = solver.geometry;
  c.form = solver.form;
  c.checkpoint_every = solver.checkpoint_every;
  return c;
}

void RunConfig::validate() const {
  try {
    const GridSpec g(grid);
    scene.validate(g);
    if (!(forward.voxel_size > 0.0)) throw DomainError("voxel_size must be positive");
    if (!(forward.tolerance > 0.0)) throw DomainError("forward_tolerance must be positive");
    if (forward.max_iterations < 1 || forward.restart < 1)
      throw DomainError("forward iteration limits must be positive");
    if (!(delta >= 0.0) || delta >= 1.0) throw DomainError("delta must lie in [0, 1)");
    if (!(solver.mu >= 0.0)) throw DomainError("mu must be nonnegative");
    if (!(solver.lambda0 > 0.0) || !(solver.lambda1 > 0.0))
      throw DomainError("lambda0 and lambda1 must be positive");
    if (solver.k_target < 0 || solver.k_target >= grid.n_k)
      throw DomainError("k_target must index a k node");
    if (solver.schedule_mode) {
      effective_mu();
      effective_lambda();
    }
    inversion().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  RunConfig cfg;
  bool has_h = false, has_n_h = false;
  double h_value = 0.0;
  std::map<int, Inclusion> inclusions;

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' appears outside any section");
    auto sec = known_keys().find(section);
    if (sec == known_keys().end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const std::string v = node.data();
      int inc_index = 0;
      if (section == "scene" && is_inclusion_key(key, inc_index)) {
        inclusions[inc_index] = parse_inclusion(key, v);
        continue;
      }
      if (!sec->second.count(key)) throw ConfigError("config: unknown key " + where(section, key));

      if (section == "grid") {
        if (key == "b") cfg.grid.b = real_value(section, key, v);
        else if (key == "xi") cfg.grid.xi = real_value(section, key, v);
        else if (key == "d") cfg.grid.d = real_value(section, key, v);
        else if (key == "n_h") { cfg.grid.n_h = static_cast<int>(int_value(section, key, v)); has_n_h = true; }
        else if (key == "h") { h_value = real_value(section, key, v); has_h = true; }
        else if (key == "n_z") cfg.grid.n_z = static_cast<int>(int_value(section, key, v));
        else if (key == "k_min") cfg.grid.k_min = real_value(section, key, v);
        else if (key == "k_max") cfg.grid.k_max = real_value(section, key, v);
        else if (key == "n_k") cfg.grid.n_k = static_cast<int>(int_value(section, key, v));
      } else if (section == "scene") {
        if (key == "smoothing_width") cfg.scene.smoothing_width = real_value(section, key, v);
        else if (key == "voxel_size") cfg.forward.voxel_size = real_value(section, key, v);
        else if (key == "forward_tolerance") cfg.forward.tolerance = real_value(section, key, v);
        else if (key == "forward_max_iterations") cfg.forward.max_iterations = static_cast<int>(int_value(section, key, v));
        else if (key == "forward_restart") cfg.forward.restart = static_cast<int>(int_value(section, key, v));
      } else if (section == "noise") {
        if (key == "delta") cfg.delta = real_value(section, key, v);
        else if (key == "seed") {
          const long long s = int_value(section, key, v);
          if (s < 0) throw ConfigError(where(section, key) + ": seed must be nonnegative");
          cfg.seed = static_cast<std::uint64_t>(s);
        }
      } else if (section == "solver") {
        auto& s = cfg.solver;
        if (key == "lambda") s.lambda = real_value(section, key, v);
        else if (key == "mu") s.mu = real_value(section, key, v);
        else if (key == "R") s.R = real_value(section, key, v);
        else if (key == "gamma") s.gamma = real_value(section, key, v);
        else if (key == "max_iter") s.max_iter = static_cast<int>(int_value(section, key, v));
        else if (key == "grad_tol") s.grad_tol = real_value(section, key, v);
        else if (key == "burn_in") s.burn_in = static_cast<int>(int_value(section, key, v));
        else if (key == "max_halvings") s.max_halvings = static_cast<int>(int_value(section, key, v));
        else if (key == "schedule_mode") s.schedule_mode = bool_value(section, key, v);
        else if (key == "lambda0") s.lambda0 = real_value(section, key, v);
        else if (key == "lambda1") s.lambda1 = real_value(section, key, v);
        else if (key == "geometry") s.geometry = enum_value(section, key, v, kGeometry);
        else if (key == "form") s.form = enum_value(section, key, v, kForm);
        else if (key == "tail_variant") s.tail_variant = enum_value(section, key, v, kTail);
        else if (key == "recovery") s.recovery = enum_value(section, key, v, kRecovery);
        else if (key == "k_target") s.k_target = static_cast<int>(int_value(section, key, v));
        else if (key == "checkpoint_every") s.checkpoint_every = static_cast<int>(int_value(section, key, v));
      } else if (section == "output") {
        if (key == "dir") cfg.out_dir = v;
      }
    }
  }

  if (has_h) {
    if (!(h_value > 0.0)) throw ConfigError("[grid] h must be positive");
    const double n = 2.0 * cfg.grid.b / h_value;
    const long long rounded = std::llround(n);
    if (std::abs(n - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, n))
      throw ConfigError("[grid] h does not divide the cross-section 2b evenly");
    const int n_h = static_cast<int>(rounded) + 1;
    if (has_n_h && n_h != cfg.grid.n_h) throw ConfigError("[grid] h and n_h disagree");
    cfg.grid.n_h = n_h;
  }
  for (auto& [_, inc] : inclusions) cfg.scene.inclusions.push_back(inc);

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  auto r = [](double v) { return format_double(v); };
  os << "[grid]\n"
     << "b = " << r(c.grid.b) << "\nxi = " << r(c.grid.xi) << "\nd = " << r(c.grid.d)
     << "\nn_h = " << c.grid.n_h << "\nn_z = " << c.grid.n_z << "\nk_min = " << r(c.grid.k_min)
     << "\nk_max = " << r(c.grid.k_max) << "\nn_k = " << c.grid.n_k << "\n\n";
  os << "[scene]\n"
     << "smoothing_width = " << r(c.scene.smoothing_width) << "\nvoxel_size = " << r(c.forward.voxel_size)
     << "\nforward_tolerance = " << r(c.forward.tolerance)
     << "\nforward_max_iterations = " << c.forward.max_iterations
     << "\nforward_restart = " << c.forward.restart << '\n';
  for (std::size_t i = 0; i < c.scene.inclusions.size(); ++i) {
    const auto& inc = c.scene.inclusions[i];
    os << "inclusion_" << i + 1 << " = ";
    if (inc.shape == InclusionShape::Box) {
      os << "box";
      for (double v : inc.center) os << ' ' << r(v);
      for (double v : inc.half_size) os << ' ' << r(v);
    } else {
      os << "ball";
      for (double v : inc.center) os << ' ' << r(v);
      os << ' ' << r(inc.half_size[0]);
    }
    os << ' ' << r(inc.contrast) << '\n';
  }
  const auto& s = c.solver;
  os << "\n[noise]\ndelta = " << r(c.delta) << "\nseed = " << c.seed << "\n\n";
  os << "[solver]\n"
     << "lambda = " << r(s.lambda) << "\nmu = " << r(s.mu) << "\nR = " << r(s.R)
     << "\ngamma = " << r(s.gamma) << "\nmax_iter = " << s.max_iter
     << "\ngrad_tol = " << r(s.grad_tol) << "\nburn_in = " << s.burn_in
     << "\nmax_halvings = " << s.max_halvings
     << "\nschedule_mode = " << (s.schedule_mode ? "on" : "off") << "\nlambda0 = " << r(s.lambda0)
     << "\nlambda1 = " << r(s.lambda1) << "\ngeometry = " << enum_name(s.geometry, kGeometry)
     << "\nform = " << enum_name(s.form, kForm)
     << "\ntail_variant = " << enum_name(s.tail_variant, kTail)
     << "\nrecovery = " << enum_name(s.recovery, kRecovery) << "\nk_target = " << s.k_target
     << "\ncheckpoint_every = " << s.checkpoint_every << "\n\n";
  os << "[output]\ndir = " << c.out_dir.string() << '\n';
  return os.str();
}

}  // namespace convexify
