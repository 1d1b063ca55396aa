#include "mschemo/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mschemo/bubbles.hpp"

namespace mschemo::cli {

namespace {

bool present(const YAML::Node& n) { return n.IsDefined() && !n.IsNull(); }

// Keys replaced by --set during the current parse; their marks point into the
// override text, not the file.
thread_local const std::vector<std::string>* overridden_keys = nullptr;

bool from_override(const std::string& key) {
  if (!overridden_keys) return false;
  return std::any_of(overridden_keys->begin(), overridden_keys->end(), [&](const std::string& o) {
    return key == o || key.rfind(o + ".", 0) == 0;
  });
}

[[noreturn]] void fail_at(const std::string& source, const YAML::Mark& mark, const std::string& key,
                          const std::string& msg) {
  std::ostringstream os;
  if (mark.is_null() || from_override(key))
    os << "override " << key << ": " << msg;
  else
    os << source << ':' << mark.line + 1 << ':' << mark.column + 1 << ": " << key << ": " << msg;
  throw ConfigError(os.str());
}

// A YAML map with its dotted path; tracks which keys were read.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (present(node_) && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_.IsMap() && present(node_[key]); }

  [[nodiscard]] YAML::Node get(const std::string& key) {
    used_.insert(key);
    if (!node_.IsMap()) return YAML::Node();
    const YAML::Node& self = node_;
    const YAML::Node n = self[key];
    return n.IsDefined() ? n : YAML::Node();
  }

  Section section(const std::string& key) { return Section(get(key), join(key), source_); }

  double number(const std::string& key, double fallback) {
    const YAML::Node n = get(key);
    return present(n) ? to_number(n, key) : fallback;
  }

  double to_number(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "expected a number", key);
    try {
      return parse_number(n.Scalar());
    } catch (const ConfigError& e) {
      fail(n, e.what(), key);
    }
  }

  int integer(const std::string& key, int fallback, int lo) {
    const YAML::Node n = get(key);
    if (!present(n)) return fallback;
    const double x = to_number(n, key);
    if (x != std::floor(x) || x < lo || x > 2e9)
      fail(n, "expected an integer >= " + std::to_string(lo), key);
    return static_cast<int>(x);
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const YAML::Node n = get(key);
    if (!present(n)) return fallback;
    if (!n.IsScalar()) fail(n, "expected a string", key);
    return n.Scalar();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const YAML::Node n = get(key);
    if (!present(n)) return fallback;
    if (!n.IsSequence()) fail(n, "expected a list of numbers", key);
    std::vector<double> out;
    for (const auto& e : n) out.push_back(to_number(e, key));
    return out;
  }

  Point point(const std::string& key, Point fallback) {
    const YAML::Node n = get(key);
    if (!present(n)) return fallback;
    if (!n.IsSequence() || n.size() != 2) fail(n, "expected [x, y]", key);
    return {to_number(n[0], key), to_number(n[1], key)};
  }

  template <typename Enum>
  Enum choice(const std::string& key, Enum fallback,
              const std::vector<std::pair<std::string, Enum>>& options) {
    const YAML::Node n = get(key);
    if (!present(n)) return fallback;
    if (n.IsScalar())
      for (const auto& [name, value] : options)
        if (n.Scalar() == name) return value;
    std::string names;
    for (const auto& o : options) names += (names.empty() ? "" : ", ") + o.first;
    fail(n, "expected one of: " + names, key);
  }

  void reject_unknown() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.Scalar();
      if (!used_.count(key)) fail(kv.first, "unknown key", key);
    }
  }

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg, const std::string& key = "") const {
    fail_at(source_, n.Mark(), key.empty() ? (path_.empty() ? "<root>" : path_) : join(key), msg);
  }
  [[noreturn]] void fail_here(const std::string& msg) const {
    fail_at(source_, present(node_) ? node_.Mark() : YAML::Mark(), path_.empty() ? "<root>" : path_, msg);
  }

  [[nodiscard]] std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[nodiscard]] const YAML::Node& node() const { return node_; }
  [[nodiscard]] const std::string& source() const { return source_; }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> used_;
};

void apply_override(YAML::Node& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + spec + "': expected key=value");
  const std::string key = spec.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(spec.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override " + key + ": " + e.msg);
  }
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("override '" + spec + "': empty key component");
    parts.push_back(p);
  }
  YAML::Node cur;
  cur.reset(root);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (cur.IsDefined() && !cur.IsNull() && !cur.IsMap())
      throw ConfigError("override " + key + ": " + parts[i] + " is not a mapping");
    YAML::Node next = cur[parts[i]];
    if (!next.IsDefined() || next.IsNull()) cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
    YAML::Node child = cur[parts[i]];
    cur.reset(child);
  }
  if (cur.IsDefined() && !cur.IsNull() && !cur.IsMap())
    throw ConfigError("override " + key + ": parent is not a mapping");
  cur[parts.back()] = value;
}

std::vector<Atom> parse_atoms(const YAML::Node& n, Section& owner, const std::string& key) {
  if (!n.IsSequence() || n.size() == 0) owner.fail(n, "expected a nonempty list of {alpha, weight}", key);
  std::vector<Atom> atoms;
  for (const auto& e : n) {
    Section s(e, owner.join(key), owner.source());
    if (!e.IsMap()) s.fail(e, "expected {alpha, weight}");
    if (!s.has("alpha") || !s.has("weight")) s.fail(e, "atom needs alpha and weight");
    atoms.push_back({s.number("alpha", 0.0), s.number("weight", 0.0)});
    s.reject_unknown();
  }
  try {
    (void)make_measure(atoms);
  } catch (const MeasureError& e) {
    owner.fail(n, e.what(), key);
  }
  return atoms;
}

DensitySpec parse_density(Section s) {
  DensitySpec d;
  d.preset = s.choice<DensitySpec::Preset>("preset", DensitySpec::Preset::gaussian_bump,
                                           {{"uniform", DensitySpec::Preset::uniform},
                                            {"gaussian_bump", DensitySpec::Preset::gaussian_bump},
                                            {"field_file", DensitySpec::Preset::field_file}});
  d.mass = s.number("mass", 0.0);
  if (d.mass < 0.0) s.fail(s.get("mass"), "mass must be >= 0", "mass");
  if (s.has("center")) d.center = s.point("center", {});
  d.width = s.number("width", d.width);
  if (!(d.width > 0.0)) s.fail(s.get("width"), "width must be positive", "width");
  d.path = s.text("path", "");
  if (d.preset == DensitySpec::Preset::field_file && d.path.empty()) s.fail_here("field_file needs path");
  s.reject_unknown();
  return d;
}

}  // namespace

double parse_number(const std::string& raw) {
  std::string t = raw;
  t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }), t.end());
  double scale = 1.0;
  if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    scale = kPi;
    t.resize(t.size() - 2);
    if (t.empty() || t == "+") t = "1";
    if (t == "-") t = "-1";
    if (t.back() == '*') t.pop_back();
  }
  if (t.empty()) throw ConfigError("'" + raw + "' is not a number");
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("'" + raw + "' is not a number");
  }
  if (used != t.size() || !std::isfinite(x)) throw ConfigError("'" + raw + "' is not a number");
  return x * scale;
}

const DensitySpec& RunConfig::density_spec(std::size_t j) const {
  return initial_rho.size() == 1 ? initial_rho.front() : initial_rho.at(j);
}

Grid GeometrySpec::build() const {
  if (kind == GeometryKind::disk) return Grid::disk(radius, n, center);
  return Grid::rectangle(lx, ly, n);
}

const char* to_string(DensitySpec::Preset p) {
  switch (p) {
    case DensitySpec::Preset::uniform: return "uniform";
    case DensitySpec::Preset::gaussian_bump: return "gaussian_bump";
    case DensitySpec::Preset::field_file: return "field_file";
  }
  return "unknown";
}

const char* to_string(PotentialSpec::Preset p) {
  switch (p) {
    case PotentialSpec::Preset::zero: return "zero";
    case PotentialSpec::Preset::field_file: return "field_file";
    case PotentialSpec::Preset::bubble_potential: return "bubble_potential";
  }
  return "unknown";
}

RunConfig parse_config(const std::string& yaml_text, const std::string& source,
                       const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ':' + std::to_string(e.mark.line + 1) + ':' +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError(source + ": top level must be a mapping");
  std::vector<std::string> keys;
  for (const auto& o : overrides) {
    apply_override(root, o);
    keys.push_back(o.substr(0, o.find('=')));
  }
  struct Scope {
    explicit Scope(const std::vector<std::string>* k) { overridden_keys = k; }
    ~Scope() { overridden_keys = nullptr; }
  } scope(&keys);

  RunConfig cfg;
  Section top(root, "", source);
  if (!top.has("schema_version")) top.fail_here("schema_version is required");
  cfg.schema_version = top.integer("schema_version", kSchemaVersion, 1);
  if (cfg.schema_version != kSchemaVersion)
    top.fail(top.get("schema_version"), "unsupported schema_version " +
                                            std::to_string(cfg.schema_version) + " (expected " +
                                            std::to_string(kSchemaVersion) + ")",
             "schema_version");
  cfg.seed = static_cast<std::uint64_t>(top.integer("seed", 1, 0));
  cfg.threads = top.integer("threads", 1, 1);

  {
    Section g = top.section("geometry");
    cfg.geometry.kind = g.choice<GeometryKind>("kind", GeometryKind::rectangle,
                                               {{"rectangle", GeometryKind::rectangle},
                                                {"disk", GeometryKind::disk}});
    cfg.geometry.n = g.integer("n", 64, 2);
    cfg.geometry.lx = g.number("lx", 1.0);
    cfg.geometry.ly = g.number("ly", 1.0);
    cfg.geometry.radius = g.number("radius", 1.0);
    cfg.geometry.center = g.point("center", {});
    if (cfg.geometry.kind == GeometryKind::disk && (g.has("lx") || g.has("ly")))
      g.fail_here("lx/ly apply to rectangles only");
    if (cfg.geometry.kind == GeometryKind::rectangle && (g.has("radius") || g.has("center")))
      g.fail_here("radius/center apply to disks only");
    try {
      (void)cfg.geometry.build();
    } catch (const GridError& e) {
      g.fail_here(e.what());
    }
    g.reject_unknown();
  }

  if (top.has("measure")) cfg.atoms = parse_atoms(top.get("measure"), top, "measure");
  const SpeciesMeasure measure = cfg.measure();

  {
    Section d = top.section("dynamics");
    SimConfig& s = cfg.sim;
    s.regime = d.choice<Regime>("regime", Regime::full,
                                {{"full", Regime::full},
                                 {"smoluchowski", Regime::smoluchowski},
                                 {"meanfield_average", Regime::meanfield_average},
                                 {"meanfield_individual", Regime::meanfield_individual}});
    s.delta = d.numbers("delta", {});
    s.epsilon = d.number("epsilon", s.epsilon);
    s.lambda = d.number("lambda", s.lambda);
    s.policy = d.choice<StepPolicy>("policy", StepPolicy::fixed,
                                    {{"fixed", StepPolicy::fixed},
                                     {"cfl_adaptive", StepPolicy::cfl_adaptive}});
    s.dt = d.number("dt", s.dt);
    s.cfl_safety = d.number("cfl_safety", s.cfl_safety);
    s.horizon = d.number("horizon", s.horizon);
    s.cadence = d.integer("cadence", s.cadence, 1);
    s.snapshot_times = d.numbers("snapshot_times", {});
    s.steady_tolerance = d.number("steady_tolerance", s.steady_tolerance);
    s.max_steps = static_cast<std::size_t>(d.integer("max_steps", 10'000'000, 1));
    s.collapse_mass_fraction = d.number("collapse_mass_fraction", s.collapse_mass_fraction);
    try {
      validate(s, measure);
    } catch (const ConfigError& e) {
      d.fail_here(e.what());
    }
    d.reject_unknown();
  }

  {
    Section init = top.section("initial");
    const YAML::Node rho = init.get("rho");
    if (present(rho) && rho.IsSequence()) {
      cfg.initial_rho.clear();
      for (const auto& e : rho) cfg.initial_rho.push_back(parse_density(Section(e, "initial.rho", source)));
      if (cfg.initial_rho.size() != measure.size())
        init.fail(rho, "one entry per atom expected (" + std::to_string(measure.size()) + ")", "rho");
    } else if (present(rho)) {
      cfg.initial_rho = {parse_density(Section(rho, "initial.rho", source))};
    }

    Section v = init.section("v");
    PotentialSpec& p = cfg.initial_v;
    p.preset = v.choice<PotentialSpec::Preset>("preset", PotentialSpec::Preset::zero,
                                               {{"zero", PotentialSpec::Preset::zero},
                                                {"field_file", PotentialSpec::Preset::field_file},
                                                {"bubble_potential", PotentialSpec::Preset::bubble_potential}});
    p.path = v.text("path", "");
    p.epsilon = v.number("epsilon", p.epsilon);
    p.mass = v.number("mass", kCriticalMass);
    if (p.preset == PotentialSpec::Preset::field_file && p.path.empty()) v.fail_here("field_file needs path");
    if (!(p.epsilon > 0.0)) v.fail(v.get("epsilon"), "epsilon must be positive", "epsilon");
    v.reject_unknown();
    init.reject_unknown();
  }

  {
    Section c = top.section("checks");
    CheckSpec& k = cfg.checks;
    k.trials = c.integer("trials", k.trials, 1);
    k.lambda = c.number("lambda", k.lambda);
    if (!(k.lambda > 0.0)) c.fail(c.get("lambda"), "lambda must be positive", "lambda");
    k.variant = c.choice<MassConstraint>("variant", MassConstraint::average,
                                         {{"average", MassConstraint::average},
                                          {"individual", MassConstraint::individual}});
    k.amplitude = c.number("amplitude", k.amplitude);
    k.fd_step = c.number("fd_step", k.fd_step);
    if (!(k.fd_step > 0.0)) c.fail(c.get("fd_step"), "fd_step must be positive", "fd_step");
    k.duality_tolerance = c.number("duality_tolerance", k.duality_tolerance);
    k.gradient_tolerance = c.number("gradient_tolerance", k.gradient_tolerance);
    c.reject_unknown();
  }

  {
    Section b = top.section("bubbles");
    BubbleSpec& s = cfg.bubbles;
    s.epsilons = b.numbers("epsilons", default_epsilon_ladder());
    s.lambdas = b.numbers("lambdas", s.lambdas);
    s.eta = b.number("eta", s.eta);
    if (!(s.eta > 0.0 && s.eta < 1.0)) b.fail(b.get("eta"), "eta must lie in (0, 1)", "eta");
    for (double l : s.lambdas)
      if (!(l > 0.0)) b.fail(b.get("lambdas"), "every lambda must be positive", "lambdas");
    for (std::size_t i = 0; i < s.epsilons.size(); ++i)
      if (!(s.epsilons[i] > 0.0) || (i > 0 && !(s.epsilons[i] < s.epsilons[i - 1])))
        b.fail(b.get("epsilons"), "epsilons must be positive and strictly decreasing", "epsilons");
    b.reject_unknown();
  }

  {
    Section o = top.section("output");
    cfg.output_dir = o.text("directory", cfg.output_dir.string());
    o.reject_unknown();
  }
  top.reject_unknown();

  YAML::Emitter em;
  em << root;
  cfg.echo = em.c_str();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), overrides);
}

std::vector<Atom> parse_measure_literal(const std::string& text) {
  YAML::Node n;
  try {
    n = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("measure literal: " + e.msg);
  }
  const std::string source = "measure literal";
  Section holder(YAML::Node(YAML::NodeType::Map), "", source);
  return parse_atoms(n, holder, "measure");
}

}  // namespace mschemo::cli
