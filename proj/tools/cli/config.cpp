#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hlab/error.hpp"

namespace hlab::cli {

namespace {

using nlohmann::json;

enum class Kind { Number, Integer, Bool, String, Numbers, Integers, ProfileObject };

struct Key {
  const char* name;
  Kind kind;
  // String keys: accepted values; empty accepts any string.
  std::vector<std::string> choices{};
};

const std::map<std::string, Experiment>& experiment_names() {
  static const std::map<std::string, Experiment> names{
      {"spectrum", Experiment::Spectrum},
      {"solve", Experiment::Solve},
      {"runge_sweep", Experiment::RungeSweep},
      {"three_balls", Experiment::ThreeBalls},
      {"chain", Experiment::Chain},
      {"carleman", Experiment::Carleman},
      {"improved_ucp", Experiment::ImprovedUcp},
      {"bessel_optimality", Experiment::BesselOptimality},
      {"calderon", Experiment::Calderon},
  };
  return names;
}

const std::vector<Key>& param_keys(Experiment e) {
  static const std::map<Experiment, std::vector<Key>> table{
      {Experiment::Spectrum, {{"count", Kind::Integer}, {"upper", Kind::Number}}},
      {Experiment::Solve,
       {{"source", Kind::ProfileObject}, {"eigen_index", Kind::Integer}, {"distances", Kind::Numbers}}},
      {Experiment::RungeSweep,
       {{"scenario", Kind::String, {"boundary", "interior", "convex"}},
        {"r_inner", Kind::Number},
        {"r_tilde", Kind::Number},
        {"data_decay", Kind::Number},
        {"data_modes", Kind::Integer},
        {"scale_modes_with_k", Kind::Bool},
        {"adjust_k", Kind::Bool}}},
      {Experiment::ThreeBalls,
       {{"radii", Kind::Numbers},
        {"centers_per_ball", Kind::Integer},
        {"random_solutions", Kind::Integer},
        {"base_modes", Kind::Integer},
        {"heldout_seed", Kind::Integer},
        {"center_spread", Kind::Number},
        {"min_cells", Kind::Number}}},
      {Experiment::Chain,
       {{"radii", Kind::Numbers},
        {"boundary_radii", Kind::Numbers},
        {"boundary_angles", Kind::Numbers},
        {"start_radius", Kind::Number},
        {"solutions", Kind::Integer},
        {"sobolev_constant", Kind::Number},
        {"mu", Kind::Number}}},
      {Experiment::Carleman,
       {{"taus", Kind::Numbers},
        {"samples_per_k", Kind::Integer},
        {"split", Kind::String, {"source", "divergence"}},
        {"tau0", Kind::Number},
        {"collar", Kind::Number}}},
      {Experiment::ImprovedUcp,
       {{"deltas", Kind::Numbers},
        {"ell_min_offset", Kind::Integer},
        {"ell_max_offset", Kind::Integer},
        {"mu", Kind::Number},
        {"nu", Kind::Number}}},
      {Experiment::BesselOptimality,
       {{"ells", Kind::Integers}, {"dimension", Kind::Integer}, {"inner_radius", Kind::Number},
        {"discrete", Kind::Bool}}},
      {Experiment::Calderon,
       {{"amplitudes", Kind::Numbers},
        {"perturbation", Kind::ProfileObject},
        {"target", Kind::String, {"V", "q"}},
        {"omega_prime_radius", Kind::Number},
        {"omega_prime_center", Kind::Numbers},
        {"identity_pairs", Kind::Integer}}},
  };
  return table.at(e);
}

class Checker {
 public:
  std::vector<std::string> problems;

  void add(const std::string& where, const std::string& what) { problems.push_back(where + ": " + what); }

  void keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
      if (!allowed.count(k)) add(where, "unknown key '" + k + "'");
    }
  }

  bool object(const json& j, const std::string& where) {
    if (j.is_object()) return true;
    add(where, "expected an object");
    return false;
  }

  double number(const json& j, const std::string& key, double fallback, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number() || !std::isfinite(it->get<double>())) {
      add(where + "." + key, "expected a finite number");
      return fallback;
    }
    return it->get<double>();
  }

  bool boolean(const json& j, const std::string& key, bool fallback, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) {
      add(where + "." + key, "expected true or false");
      return fallback;
    }
    return it->get<bool>();
  }

  std::string string(const json& j, const std::string& key, const std::string& fallback,
                     const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_string()) {
      add(where + "." + key, "expected a string");
      return fallback;
    }
    return it->get<std::string>();
  }

  std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
    std::vector<double> out;
    auto it = j.find(key);
    if (it == j.end()) return out;
    if (!it->is_array()) {
      add(where + "." + key, "expected a list of numbers");
      return out;
    }
    for (const auto& v : *it) {
      if (!v.is_number()) {
        add(where + "." + key, "expected a list of numbers");
        return {};
      }
      out.push_back(v.get<double>());
    }
    return out;
  }

  Point point(const json& j, const std::string& key, const std::string& where) {
    Point p{};
    const auto v = numbers(j, key, where);
    if (v.size() > 3) add(where + "." + key, "at most three coordinates");
    for (std::size_t i = 0; i < v.size() && i < 3; ++i) p[i] = v[i];
    return p;
  }

  Profile profile(const json& j, const std::string& where) {
    Profile p;
    if (!object(j, where)) return p;
    keys(j, {"profile", "value", "base", "a", "amplitude", "radius", "center", "path"}, where);
    p.kind = string(j, "profile", "constant", where);
    p.value = number(j, "value", 1.0, where);
    p.base = number(j, "base", p.kind == "radial" ? 1.0 : 0.0, where);
    p.a = number(j, "a", 0.0, where);
    p.amplitude = number(j, "amplitude", 0.0, where);
    p.radius = number(j, "radius", 0.25, where);
    p.center = point(j, "center", where);
    p.path = string(j, "path", "", where);
    static const std::set<std::string> kinds{"constant", "radial", "bump", "file"};
    if (!kinds.count(p.kind)) add(where + ".profile", "unknown profile '" + p.kind + "'");
    if (p.kind == "bump" && !(p.radius > 0.0)) add(where + ".radius", "must be positive");
    if (p.kind == "file" && p.path.empty()) add(where + ".path", "file profile needs a path");
    return p;
  }

  GammaSpec gamma(const json& j, const std::string& where) {
    GammaSpec g;
    if (!object(j, where)) return g;
    keys(j, {"kind", "arcs", "faces"}, where);
    const std::string kind = string(j, "kind", "full", where);
    if (kind == "full") return g;
    if (kind == "arcs") {
      g.kind = GammaSpec::Kind::Arcs;
      auto it = j.find("arcs");
      if (it == j.end() || !it->is_array()) {
        add(where + ".arcs", "expected a list of [theta0, theta1] pairs");
        return g;
      }
      for (const auto& a : *it) {
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
          add(where + ".arcs", "expected a list of [theta0, theta1] pairs");
          continue;
        }
        g.arcs.emplace_back(a[0].get<double>(), a[1].get<double>());
      }
      return g;
    }
    if (kind == "faces") {
      g.kind = GammaSpec::Kind::Faces;
      auto it = j.find("faces");
      if (it == j.end() || !it->is_array()) {
        add(where + ".faces", "expected a list of faces");
        return g;
      }
      for (const auto& f : *it) {
        GammaSpec::Face face;
        if (f.is_string()) {
          face.name = f.get<std::string>();
        } else if (f.is_object()) {
          keys(f, {"name", "lo", "hi"}, where + ".faces");
          face.name = string(f, "name", "", where + ".faces");
          const auto lo = numbers(f, "lo", where + ".faces");
          const auto hi = numbers(f, "hi", where + ".faces");
          if (lo.size() == 2 && hi.size() == 2) {
            face.windowed = true;
            face.lo = {lo[0], lo[1]};
            face.hi = {hi[0], hi[1]};
          } else if (!lo.empty() || !hi.empty()) {
            add(where + ".faces", "face windows need two lo and two hi coordinates");
          }
        } else {
          add(where + ".faces", "faces are names or {name, lo, hi} objects");
          continue;
        }
        g.faces.push_back(face);
      }
      return g;
    }
    add(where + ".kind", "unknown gamma kind '" + kind + "'");
    return g;
  }

  Box box(const json& j, const std::string& where) {
    Box b;
    if (!object(j, where)) return b;
    keys(j, {"lo", "hi"}, where);
    b.lo = point(j, "lo", where);
    b.hi = point(j, "hi", where);
    return b;
  }

  DomainSpec domain(const json& j, const std::string& where) {
    DomainSpec d;
    if (!object(j, where)) return d;
    keys(j, {"kind", "radius", "center", "r_inner", "r_outer", "lo", "hi", "dim", "boxes", "gamma"}, where);
    const std::string kind = string(j, "kind", "disk", where);
    const Point c = point(j, "center", where);
    if (kind == "disk") {
      d = DomainSpec::disk(number(j, "radius", 1.0, where), c);
    } else if (kind == "annulus") {
      d = DomainSpec::annulus(number(j, "r_inner", 0.5, where), number(j, "r_outer", 1.0, where), c);
    } else if (kind == "rectangle") {
      const int dim = static_cast<int>(number(j, "dim", 2, where));
      Box b;
      b.lo = point(j, "lo", where);
      b.hi = point(j, "hi", where);
      d = DomainSpec::rectangle(b, dim);
    } else if (kind == "masked_union") {
      std::vector<Box> boxes;
      auto it = j.find("boxes");
      if (it == j.end() || !it->is_array()) {
        add(where + ".boxes", "expected a list of boxes");
      } else {
        for (const auto& b : *it) boxes.push_back(box(b, where + ".boxes"));
      }
      d = DomainSpec::masked_union(boxes);
    } else {
      add(where + ".kind", "unknown domain kind '" + kind + "'");
      return d;
    }
    if (j.contains("gamma")) d = d.with_gamma(gamma(j.at("gamma"), where + ".gamma"));
    try {
      d.validate();
    } catch (const Error& e) {
      add(where, e.what());
    }
    return d;
  }

  void params(const json& j, Experiment e, const std::string& where) {
    if (!object(j, where)) return;
    std::set<std::string> allowed;
    for (const auto& k : param_keys(e)) allowed.insert(k.name);
    keys(j, allowed, where);
    for (const auto& k : param_keys(e)) {
      auto it = j.find(k.name);
      if (it == j.end()) continue;
      const std::string at = where + "." + k.name;
      switch (k.kind) {
        case Kind::Number:
          if (!it->is_number()) add(at, "expected a number");
          break;
        case Kind::Integer:
          if (!it->is_number_integer()) add(at, "expected an integer");
          break;
        case Kind::Bool:
          if (!it->is_boolean()) add(at, "expected true or false");
          break;
        case Kind::String:
          if (!it->is_string()) {
            add(at, "expected a string");
          } else if (!k.choices.empty() &&
                     std::find(k.choices.begin(), k.choices.end(), it->get<std::string>()) == k.choices.end()) {
            std::string list;
            for (const auto& choice : k.choices) list += (list.empty() ? "'" : ", '") + choice + "'";
            add(at, "expected one of " + list);
          }
          break;
        case Kind::Numbers:
          numbers(j, k.name, where);
          break;
        case Kind::Integers:
          if (!it->is_array()) {
            add(at, "expected a list of integers");
          } else {
            for (const auto& v : *it) {
              if (!v.is_number_integer()) add(at, "expected a list of integers");
            }
          }
          break;
        case Kind::ProfileObject:
          profile(*it, at);
          break;
      }
    }
  }
};

json profile_json(const Profile& p) {
  return json{{"profile", p.kind},   {"value", p.value},   {"base", p.base},
              {"a", p.a},            {"amplitude", p.amplitude}, {"radius", p.radius},
              {"center", p.center},  {"path", p.path}};
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(problems.empty() ? "invalid config" : problems.front()),
      problems_(std::move(problems)) {}

const char* to_string(Experiment e) {
  for (const auto& [name, value] : experiment_names()) {
    if (value == e) return name.c_str();
  }
  return "unknown";
}

double Profile::operator()(const Point& x) const {
  if (kind == "constant") return value;
  double r2 = 0.0;
  for (int d = 0; d < 3; ++d) r2 += (x[d] - center[d]) * (x[d] - center[d]);
  if (kind == "radial") return base + a * r2;
  if (kind == "bump") {
    const double s = r2 / (radius * radius);
    return s < 1.0 ? base + amplitude * std::pow(1.0 - s, 3) : base;
  }
  fail(ErrorCode::InvalidArgument, "profile '" + kind + "' has no analytic form");
}

Profile Profile::with_amplitude(double amp) const {
  Profile p = *this;
  if (kind == "bump") {
    p.amplitude = amp;
  } else if (kind == "radial") {
    p.a = amp;
  } else {
    p.value = amp;
  }
  return p;
}

ExperimentConfig parse_config(const json& j) {
  Checker c;
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
  c.keys(j, {"experiment", "domain", "h", "medium", "k_list", "epsilon_list", "seeds", "output_dir",
             "a1_constant", "tolerances", "params"},
         "config");

  auto it = j.find("experiment");
  if (it == j.end() || !it->is_string()) {
    c.add("config.experiment", "missing or not a string");
  } else {
    auto e = experiment_names().find(it->get<std::string>());
    if (e == experiment_names().end()) {
      c.add("config.experiment", "unknown experiment '" + it->get<std::string>() + "'");
    } else {
      cfg.experiment = e->second;
    }
  }
  if (j.contains("domain")) {
    cfg.domain = c.domain(j.at("domain"), "config.domain");
  } else {
    c.add("config.domain", "missing");
  }
  cfg.h = c.number(j, "h", cfg.h, "config");
  if (!(cfg.h > 0.0)) c.add("config.h", "must be positive");

  if (j.contains("medium")) {
    const json& m = j.at("medium");
    if (c.object(m, "config.medium")) {
      c.keys(m, {"q", "V", "kappa", "monotone"}, "config.medium");
      if (m.contains("q")) cfg.medium.q = c.profile(m.at("q"), "config.medium.q");
      if (m.contains("V")) {
        cfg.medium.V = c.profile(m.at("V"), "config.medium.V");
      } else {
        cfg.medium.V.value = 0.0;
      }
      cfg.medium.kappa = c.number(m, "kappa", 2.0, "config.medium");
      cfg.medium.monotone = c.boolean(m, "monotone", false, "config.medium");
      if (!(cfg.medium.kappa > 1.0)) c.add("config.medium.kappa", "must exceed 1");
    }
  } else {
    cfg.medium.V.value = 0.0;
  }

  cfg.k_list = c.numbers(j, "k_list", "config");
  for (double k : cfg.k_list) {
    if (!(k > 0.0)) c.add("config.k_list", "frequencies must be positive");
  }
  cfg.epsilon_list = c.numbers(j, "epsilon_list", "config");
  for (double e : cfg.epsilon_list) {
    if (!(e > 0.0 && e < 1.0)) c.add("config.epsilon_list", "tolerances must lie in (0, 1)");
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    cfg.seeds.clear();
    if (!s.is_array()) {
      c.add("config.seeds", "expected a list of non-negative integers");
    } else {
      for (const auto& v : s) {
        if (!v.is_number_unsigned()) {
          c.add("config.seeds", "expected a list of non-negative integers");
          break;
        }
        cfg.seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }
  cfg.output_dir = c.string(j, "output_dir", cfg.output_dir, "config");
  cfg.a1_constant = c.number(j, "a1_constant", cfg.a1_constant, "config");
  if (!(cfg.a1_constant > 0.0)) c.add("config.a1_constant", "must be positive");
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (c.object(t, "config.tolerances")) {
      c.keys(t, {"residual", "spectrum_residual", "tie"}, "config.tolerances");
      cfg.tolerances.residual = c.number(t, "residual", cfg.tolerances.residual, "config.tolerances");
      cfg.tolerances.spectrum_residual =
          c.number(t, "spectrum_residual", cfg.tolerances.spectrum_residual, "config.tolerances");
      cfg.tolerances.tie = c.number(t, "tie", cfg.tolerances.tie, "config.tolerances");
    }
  }
  if (j.contains("params") && c.problems.empty()) {
    c.params(j.at("params"), cfg.experiment, "config.params");
    cfg.params = j.at("params");
  }
  if (!c.problems.empty()) throw ConfigError(c.problems);

  json canon = j;
  canon.erase("output_dir");
  canon["medium"] = json{{"q", profile_json(cfg.medium.q)},
                         {"V", profile_json(cfg.medium.V)},
                         {"kappa", cfg.medium.kappa},
                         {"monotone", cfg.medium.monotone}};
  canon["h"] = cfg.h;
  canon["seeds"] = cfg.seeds;
  canon["a1_constant"] = cfg.a1_constant;
  canon["tolerances"] = json{{"residual", cfg.tolerances.residual},
                             {"spectrum_residual", cfg.tolerances.spectrum_residual},
                             {"tie", cfg.tolerances.tie}};
  cfg.canonical = canon;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot read file"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return parse_config(j);
}

Profile parse_profile(const json& j) {
  Checker c;
  Profile p = c.profile(j, "profile");
  if (!c.problems.empty()) throw ConfigError(c.problems);
  return p;
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seeds = {seed};
  config.canonical["seeds"] = config.seeds;
}

Medium make_medium(const Grid& grid, const MediumConfig& m) {
  auto field = [&](const Profile& p) {
    if (p.kind != "file") return GridField::sample(grid, [&](const Point& x) { return p(x); });
    std::ifstream in(p.path);
    require(static_cast<bool>(in), ErrorCode::InvalidArgument, "cannot read " + p.path);
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
    std::string line;
    Eigen::Index n = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      require(n < v.size(), ErrorCode::InvalidArgument, p.path + " has more values than nodes");
      v[n++] = std::stod(line);
    }
    require(n == v.size(), ErrorCode::InvalidArgument, p.path + " has fewer values than nodes");
    return GridField(grid, v);
  };
  Medium med;
  med.q = field(m.q);
  med.V = field(m.V);
  med.kappa = m.kappa;
  med.monotone = m.monotone;
  med.validate();
  return med;
}

}  // namespace hlab::cli
