#include "pmelab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pmelab/estimates.hpp"
#include "pmelab/oracle.hpp"

namespace pmelab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model.kind", "model.length", "model.radius0", "model.points",
      "pme.m", "pme.n",
      "family.kind", "family.alpha0", "family.theta", "family.slope",
      "family.csv", "family.ricci_bound",
      "initial.profile", "initial.base", "initial.amplitude", "initial.wavenumber",
      "initial.width", "initial.t0", "initial.b", "initial.floor",
      "initial.modes", "initial.seed", "initial.csv",
      "run.t_start", "run.t_end", "run.snapshots", "run.safety",
      "estimate.mode", "estimate.radius", "estimate.constant", "estimate.slack",
      "estimate.lemma_residual",
      "output.dir", "output.formats", "output.stamp",
  };
  return keys;
}

std::vector<double> parse_snapshot_spec(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    // first:step:last
    double first, step, last;
    char c1, c2;
    std::istringstream ss(spec);
    if (!(ss >> first >> c1 >> step >> c2 >> last) || c1 != ':' || c2 != ':')
      throw std::invalid_argument("run.snapshots: expected 'first:step:last', got '" + spec + "'");
    if (!(step > 0.0) || !(last >= first))
      throw std::invalid_argument("run.snapshots: bad range '" + spec + "'");
    const int count = static_cast<int>(std::llround((last - first) / step)) + 1;
    for (int i = 0; i < count; ++i) out.push_back(first + i * step);
    if (!out.empty()) out.back() = std::min(out.back(), last);
  } else {
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      out.push_back(std::stod(tok));
    }
  }
  if (out.empty()) throw std::invalid_argument("run.snapshots: no times given");
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  kv_ = {
      {"model.kind", "flat_circle"},
      {"model.length", "6.283185307179586"},
      {"model.radius0", "2"},
      {"model.points", "256"},
      {"pme.m", "2"},
      {"pme.n", "auto"},
      {"family.kind", "li_yau"},
      {"family.alpha0", "2"},
      {"family.theta", "1"},
      {"family.slope", "1"},
      {"family.csv", ""},
      {"family.ricci_bound", "auto"},
      {"initial.profile", "constant"},
      {"initial.base", "1"},
      {"initial.amplitude", "0.5"},
      {"initial.wavenumber", "1"},
      {"initial.width", "4"},
      {"initial.t0", "1"},
      {"initial.b", "1"},
      {"initial.floor", "1e-6"},
      {"initial.modes", "3"},
      {"initial.seed", "0"},
      {"initial.csv", ""},
      {"run.t_start", "0"},
      {"run.t_end", "1"},
      {"run.snapshots", "0.05:0.05:1.0"},
      {"run.safety", "0.2"},
      {"estimate.mode", "auto"},
      {"estimate.radius", "0"},
      {"estimate.constant", "calibrate"},
      {"estimate.slack", "1e-12"},
      {"estimate.lemma_residual", "false"},
      {"output.dir", "out"},
      {"output.formats", "csv,json"},
      {"output.stamp", "false"},
  };
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": key outside a section");
    cfg.set(section + "." + key, value);
  }
  return cfg;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must be section.key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& section_key, const std::string& value) {
  if (!known_keys().count(section_key))
    throw std::invalid_argument("unknown config key '" + section_key + "'");
  kv_[section_key] = value;
}

std::string RunConfig::get(const std::string& section_key) const {
  auto it = kv_.find(section_key);
  return it == kv_.end() ? "" : it->second;
}

double RunConfig::num(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config " + key + ": expected a number, got '" + v + "'");
  }
}

int RunConfig::integer(const std::string& key) const {
  const double x = num(key);
  if (x != std::floor(x)) throw std::invalid_argument("config " + key + ": expected an integer");
  return static_cast<int>(x);
}

bool RunConfig::boolean(const std::string& key) const {
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config " + key + ": expected true/false, got '" + v + "'");
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
  return out.str();
}

std::uint64_t RunConfig::hash() const {
  const std::string text = canonical_text();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  std::ostringstream out;
  out << std::hex << hash();
  return out.str();
}

ManifoldModel RunConfig::build_model() const {
  const std::string kind = get("model.kind");
  const int points = integer("model.points");
  if (kind == "flat_circle") return ManifoldModel::flat_circle(num("model.length"), points);
  if (kind == "flat_torus") return ManifoldModel::flat_torus(num("model.length"), points);
  if (kind == "shrinking_sphere")
    return ManifoldModel::shrinking_sphere(num("model.radius0"), points);
  throw std::invalid_argument("model.kind must be flat_circle|flat_torus|shrinking_sphere");
}

PmeParameters RunConfig::build_pme() const {
  PmeParameters pme;
  pme.m = num("pme.m");
  const std::string n = get("pme.n");
  if (n == "auto") {
    pme.n = build_model().dimension();
  } else {
    pme.n = integer("pme.n");
    if (pme.n != build_model().dimension())
      throw std::invalid_argument("pme.n conflicts with the model dimension; use 'auto'");
  }
  pme.validate();
  return pme;
}

FlowEnv RunConfig::build_env(double pressure_bound) const {
  const ManifoldModel model = build_model();
  FlowEnv env;
  env.T = num("run.t_end");
  const double model_k = model.ricci_bound_sup(num("run.t_start"), env.T);
  const std::string kb = get("family.ricci_bound");
  if (kb == "auto") {
    env.K = model_k;
  } else {
    env.K = num("family.ricci_bound");
    if (env.K < model_k)
      throw std::invalid_argument("family.ricci_bound must be >= the model's Ricci bound " +
                                  std::to_string(model_k));
  }
  env.M = pressure_bound;
  env.validate();
  return env;
}

FunctionTriple RunConfig::build_triple(const FlowEnv& env) const {
  const PmeParameters pme = build_pme();
  const std::string kind = get("family.kind");
  if (kind == "li_yau")
    return FunctionTriple::li_yau(pme, env, num("family.alpha0"), num("family.theta"));
  if (kind == "hamilton") return FunctionTriple::hamilton(pme, env);
  if (kind == "li_xu") return FunctionTriple::li_xu(pme, env);
  if (kind == "linear_li_xu") return FunctionTriple::linear_li_xu(pme, env, num("family.slope"));
  if (kind == "sampled") {
    const std::string path = get("family.csv");
    if (path.empty()) throw std::invalid_argument("family.csv required for the sampled family");
    return FunctionTriple::sampled(pme, env, SampledTriple::from_csv(path));
  }
  throw std::invalid_argument("family.kind must be li_yau|hamilton|li_xu|linear_li_xu|sampled");
}

std::vector<double> RunConfig::build_initial(const ManifoldModel& model) const {
  const std::string profile = get("initial.profile");
  const int N = model.size();
  std::vector<double> v0(N);
  const double base = num("initial.base");
  if (profile == "constant") {
    std::fill(v0.begin(), v0.end(), base);
  } else if (profile == "sine") {
    const double amp = num("initial.amplitude");
    const double k = num("initial.wavenumber");
    const double scale = 2.0 * std::numbers::pi / model.grid().length;
    for (int i = 0; i < N; ++i) v0[i] = base + amp * std::sin(k * scale * model.coord(i));
  } else if (profile == "gaussian_bump") {
    const double amp = num("initial.amplitude");
    const double w = num("initial.width");
    const double center = model.grid().periodic ? 0.5 * model.grid().length : 0.0;
    for (int i = 0; i < N; ++i) {
      const double d = model.coord(i) - center;
      v0[i] = base + amp * std::exp(-w * d * d);
    }
  } else if (profile == "barenblatt") {
    BarenblattPressure bb{num("pme.m"), 1, num("initial.b")};
    if (build_pme().n != 1)
      throw std::invalid_argument("barenblatt profile supports n = 1 only");
    const double t0 = num("initial.t0");
    const double floor = num("initial.floor");
    const double center = 0.5 * model.grid().length;
    if (bb.support_halfwidth(t0) >= 0.5 * model.grid().length)
      throw std::invalid_argument("barenblatt support does not fit the domain at t0");
    for (int i = 0; i < N; ++i)
      v0[i] = std::max(bb.value(model.coord(i) - center, t0), floor);
  } else if (profile == "random") {
    // Smooth seeded perturbation: a few low Fourier modes over the base.
    const double amp = num("initial.amplitude");
    const int modes = integer("initial.modes");
    std::mt19937_64 rng(static_cast<unsigned>(integer("initial.seed")));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::fill(v0.begin(), v0.end(), base);
    const double scale = model.grid().periodic ? 2.0 * std::numbers::pi / model.grid().length : 1.0;
    for (int k = 1; k <= modes; ++k) {
      const double a = amp * unif(rng) / modes;
      const double ph = phase(rng);
      for (int i = 0; i < N; ++i) {
        // cos(k·) keeps the pole symmetry of latitude grids
        v0[i] += model.grid().periodic ? a * std::sin(k * scale * model.coord(i) + ph)
                                       : a * std::cos(k * model.coord(i));
      }
    }
  } else if (profile == "csv") {
    const std::string path = get("initial.csv");
    if (path.empty()) throw std::invalid_argument("initial.csv required for the csv profile");
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open initial-data CSV: " + path);
    std::string line;
    std::vector<double> vals;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (vals.empty() && line.find_first_not_of("v \t\r") == std::string::npos) continue;
      try {
        vals.push_back(std::stod(line));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad value in initial-data CSV: '" + line + "'");
      }
    }
    if (static_cast<int>(vals.size()) != N)
      throw std::invalid_argument("initial-data CSV has " + std::to_string(vals.size()) +
                                  " rows, grid needs " + std::to_string(N));
    v0 = std::move(vals);
  } else {
    throw std::invalid_argument(
        "initial.profile must be constant|sine|gaussian_bump|barenblatt|random|csv");
  }
  for (double v : v0)
    if (!(v > 0.0))
      throw std::invalid_argument("initial profile is not strictly positive; adjust base/amplitude");
  return v0;
}

double RunConfig::t_start() const { return num("run.t_start"); }
double RunConfig::t_end() const { return num("run.t_end"); }
std::vector<double> RunConfig::snapshot_times() const {
  return parse_snapshot_spec(get("run.snapshots"));
}
double RunConfig::safety() const { return num("run.safety"); }
unsigned RunConfig::seed() const { return static_cast<unsigned>(integer("initial.seed")); }

RunConfig::EstimateSettings RunConfig::estimate() const {
  EstimateSettings s;
  const std::string mode = get("estimate.mode");
  s.radius = num("estimate.radius");
  if (mode == "auto") {
    s.mode_auto = true;
    s.mode = RhsMode::global_bound;  // resolved against the family by the harness
  } else if (mode == "local_plain") {
    s.mode = RhsMode::local_plain;
  } else if (mode == "local_weighted") {
    s.mode = RhsMode::local_weighted;
  } else if (mode == "global") {
    s.mode = RhsMode::global_bound;
  } else {
    throw std::invalid_argument("estimate.mode must be auto|local_plain|local_weighted|global");
  }
  const std::string c = get("estimate.constant");
  if (c != "calibrate") s.constant = num("estimate.constant");
  s.slack = num("estimate.slack");
  s.lemma_residual = boolean("estimate.lemma_residual");
  return s;
}

RunConfig::OutputSettings RunConfig::output() const {
  OutputSettings s;
  s.dir = get("output.dir");
  s.stamp = boolean("output.stamp");
  s.csv = s.json = false;
  std::istringstream ss(get("output.formats"));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok == "csv") s.csv = true;
    else if (tok == "json") s.json = true;
    else if (!tok.empty())
      throw std::invalid_argument("output.formats entries must be csv or json");
  }
  if (!s.csv && !s.json) throw std::invalid_argument("output.formats selects no format");
  return s;
}

void RunConfig::validate() const {
  const ManifoldModel model = build_model();
  const PmeParameters pme = build_pme();
  (void)pme;
  const double t0 = t_start(), t1 = t_end();
  if (!(t1 > t0)) throw std::invalid_argument("run.t_end must exceed run.t_start");
  if (t1 >= model.extinction_time())
    throw std::invalid_argument("run.t_end reaches the sphere's extinction time");
  const auto snaps = snapshot_times();
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : snaps) {
    if (t < t0 || t > t1) throw std::invalid_argument("snapshot time outside [t_start, t_end]");
    if (t <= prev) throw std::invalid_argument("snapshot times must be strictly increasing");
    prev = t;
  }
  if (!(safety() > 0.0 && safety() <= 1.0))
    throw std::invalid_argument("run.safety must lie in (0, 1]");
  (void)build_initial(model);
  const auto est = estimate();
  if (!est.mode_auto && est.mode != RhsMode::global_bound && !(est.radius > 0.0))
    throw std::invalid_argument("estimate.radius must be > 0 in local modes");
  (void)output();
  (void)build_env(1.0);
  (void)build_triple(build_env(1.0));
}

}  // namespace pmelab
