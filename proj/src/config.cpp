#include "addsub/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace addsub {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected a table");
  return j;
}

void allow_keys(const json& j, const std::string& path, const std::set<std::string>& keys) {
  for (const auto& [key, value] : j.items())
    if (!keys.count(key)) fail(join(path, key), "unknown key");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  return obj.contains(key) ? number(obj.at(key), join(path, key)) : fallback;
}

double required_number(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) fail(join(path, key), "missing");
  return number(obj.at(key), join(path, key));
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    fail(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], index(path, i)));
  return out;
}

Eigen::VectorXd vector(const json& j, const std::string& path) {
  const auto v = numbers(j, path);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(numbers(j[i], index(path, i)));
  const std::size_t cols = rows.front().size();
  if (cols == 0) fail(path, "rows must not be empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) fail(index(path, i), "all rows must have the same length");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return m;
}

template <class F>
void validated(const std::string& path, F&& check) {
  try {
    check();
  } catch (const DomainError& e) {
    fail(path, e.what());
  }
}

OUSpec read_ou(const json& j, const std::string& path) {
  require_object(j, path);
  allow_keys(j, path, {"k", "theta", "sigma"});
  OUSpec o{required_number(j, "k", path), number_or(j, "theta", path, 0.0), required_number(j, "sigma", path), 0.0};
  validated(path, [&] { o.validate(); });
  return o;
}

BaseSpec read_base(const json& j) {
  const std::string path = "base";
  require_object(j, path);
  if (!j.contains("kind") || !j.at("kind").is_string()) fail(join(path, "kind"), "expected \"factor-mou\" or \"mbm\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "factor-mou") {
    allow_keys(j, path, {"kind", "ou", "common", "loadings"});
    FactorMOUSpec f;
    if (!j.contains("ou") || !j.at("ou").is_array() || j.at("ou").empty())
      fail(join(path, "ou"), "expected a non-empty list of OU tables");
    for (std::size_t i = 0; i < j.at("ou").size(); ++i) f.idio.push_back(read_ou(j.at("ou")[i], index(join(path, "ou"), i)));
    if (j.contains("common")) f.common = read_ou(j.at("common"), join(path, "common"));
    f.loadings = j.contains("loadings") ? numbers(j.at("loadings"), join(path, "loadings"))
                                        : std::vector<double>(f.idio.size(), 0.0);
    if (f.loadings.size() != f.idio.size()) fail(join(path, "loadings"), "needs one loading per OU component");
    for (std::size_t i = 0; i < f.loadings.size(); ++i)
      if (f.loadings[i] < 0.0) fail(index(join(path, "loadings"), i), "loadings must be non-negative");
    validated(path, [&] { f.validate(); });
    return f;
  }
  if (kind == "mbm") {
    allow_keys(j, path, {"kind", "blocks"});
    MultiparamBMSpec bm;
    const std::string bpath = join(path, "blocks");
    if (!j.contains("blocks") || !j.at("blocks").is_array() || j.at("blocks").empty())
      fail(bpath, "expected a non-empty list of blocks");
    for (std::size_t i = 0; i < j.at("blocks").size(); ++i) {
      const json& b = j.at("blocks")[i];
      const std::string p = index(bpath, i);
      require_object(b, p);
      allow_keys(b, p, {"A", "mu", "Sigma"});
      for (const char* key : {"A", "mu", "Sigma"})
        if (!b.contains(key)) fail(join(p, key), "missing");
      bm.blocks.push_back(BrownianBlock{matrix(b.at("A"), join(p, "A")), vector(b.at("mu"), join(p, "mu")),
                                        matrix(b.at("Sigma"), join(p, "Sigma"))});
    }
    validated(bpath, [&] { bm.validate(); });
    return bm;
  }
  fail(join(path, "kind"), "expected \"factor-mou\" or \"mbm\", got \"" + kind + "\"");
}

SatoSubordinatorSpec read_subordinator(const json& j) {
  const std::string path = "subordinator";
  require_object(j, path);
  allow_keys(j, path, {"rho", "t0", "components"});
  SatoSubordinatorSpec sub;
  sub.rho = required_number(j, "rho", path);
  if (!(sub.rho > 0.0)) fail(join(path, "rho"), "must be positive");
  sub.t0 = number_or(j, "t0", path, SatoSubordinatorSpec::default_t0(sub.rho));
  const std::string cpath = join(path, "components");
  if (!j.contains("components") || !j.at("components").is_array() || j.at("components").empty())
    fail(cpath, "expected a non-empty list of components");
  for (std::size_t i = 0; i < j.at("components").size(); ++i) {
    const json& c = j.at("components")[i];
    const std::string p = index(cpath, i);
    require_object(c, p);
    TemperedStableSpec ts;
    if (c.contains("kind")) {
      allow_keys(c, p, {"kind", "lam", "beta"});
      if (c.at("kind") != "inverse-gaussian") fail(join(p, "kind"), "only \"inverse-gaussian\" is recognised");
      const double lam = required_number(c, "lam", p), beta = required_number(c, "beta", p);
      if (!(lam > 0.0 && beta > 0.0)) fail(p, "inverse Gaussian lam and beta must be positive");
      ts = TemperedStableSpec::inverse_gaussian(lam, beta);
    } else {
      allow_keys(c, p, {"alpha", "beta", "lam"});
      ts = TemperedStableSpec{required_number(c, "alpha", p), required_number(c, "beta", p), required_number(c, "lam", p)};
    }
    validated(p, [&] { ts.validate(); });
    sub.components.push_back(ts);
  }
  validated(path, [&] { sub.validate(); });
  return sub;
}

void read_run(const json& j, RunConfig& cfg) {
  const std::string path = "run";
  require_object(j, path);
  allow_keys(j, path,
             {"grid", "n_paths", "xi_grid", "times", "state", "tolerances", "sampler", "check_scale", "seed", "output",
              "format"});
  RunParams& r = cfg.run;
  const auto d = static_cast<Eigen::Index>(cfg.model.dim());
  if (j.contains("grid")) r.grid = numbers(j.at("grid"), join(path, "grid"));
  if (r.grid.empty()) fail(join(path, "grid"), "must not be empty");
  if (r.grid.front() < 0.0) fail(join(path, "grid"), "must start at a non-negative time");
  for (std::size_t i = 1; i < r.grid.size(); ++i)
    if (!(r.grid[i] > r.grid[i - 1])) fail(index(join(path, "grid"), i), "grid must be strictly increasing");
  if (j.contains("n_paths")) r.n_paths = unsigned_integer(j.at("n_paths"), join(path, "n_paths"));
  if (r.n_paths == 0) fail(join(path, "n_paths"), "must be a positive integer");

  r.xi_grid.clear();
  if (j.contains("xi_grid")) {
    const json& xs = j.at("xi_grid");
    const std::string p = join(path, "xi_grid");
    if (!xs.is_array() || xs.empty()) fail(p, "expected a non-empty list");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Eigen::VectorXd xi = xs[i].is_array() ? vector(xs[i], index(p, i)) : Eigen::VectorXd::Constant(1, number(xs[i], index(p, i)));
      if (xi.size() != d) fail(index(p, i), "frequency must have dimension " + std::to_string(d));
      r.xi_grid.push_back(xi);
    }
  } else {
    for (double s : {0.0, 0.5, 1.0, 1.5, 2.0})
      r.xi_grid.push_back(Eigen::VectorXd::Constant(d, s / std::sqrt(static_cast<double>(d))));
  }

  r.times.clear();
  if (j.contains("times")) {
    r.times = numbers(j.at("times"), join(path, "times"));
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      if (!(r.times[i] > 0.0)) fail(index(join(path, "times"), i), "times must be positive");
      if (i > 0 && !(r.times[i] > r.times[i - 1])) fail(index(join(path, "times"), i), "times must be increasing");
    }
  } else {
    for (double t : r.grid)
      if (t > 0.0) r.times.push_back(t);
  }

  r.state = initial_state(cfg.model);
  if (j.contains("state")) {
    const std::string p = join(path, "state");
    const json& s = require_object(j.at("state"), p);
    allow_keys(s, p, {"u", "u_common", "clock"});
    if (s.contains("u")) r.state.u = vector(s.at("u"), join(p, "u"));
    if (r.state.u.size() != d) fail(join(p, "u"), "must have dimension " + std::to_string(d));
    r.state.u_common = number_or(s, "u_common", p, 0.0);
    if (s.contains("clock")) r.state.clock = vector(s.at("clock"), join(p, "clock"));
    if (r.state.clock.size() != static_cast<Eigen::Index>(cfg.model.parameter_count()))
      fail(join(p, "clock"), "needs one entry per subordinator component");
  }

  if (j.contains("tolerances")) {
    const std::string p = join(path, "tolerances");
    const json& t = require_object(j.at("tolerances"), p);
    allow_keys(t, p, {"quad_tol", "z_max"});
    r.quad_tol = number_or(t, "quad_tol", p, r.quad_tol);
    r.z_max = number_or(t, "z_max", p, r.z_max);
    if (!(r.quad_tol > 0.0)) fail(join(p, "quad_tol"), "must be positive");
    if (!(r.z_max > 0.0)) fail(join(p, "z_max"), "must be positive");
  }

  if (j.contains("sampler")) {
    const std::string p = join(path, "sampler");
    const json& s = require_object(j.at("sampler"), p);
    allow_keys(s, p, {"kind", "substeps"});
    if (s.contains("kind")) {
      const json& k = s.at("kind");
      if (k == "inverse-cdf") {
        r.sampler.kind = SamplerKind::inverse_cdf;
      } else if (k == "frozen-levy") {
        r.sampler.kind = SamplerKind::frozen_levy;
      } else {
        fail(join(p, "kind"), "expected \"inverse-cdf\" or \"frozen-levy\"");
      }
    }
    if (s.contains("substeps")) {
      const auto n = unsigned_integer(s.at("substeps"), join(p, "substeps"));
      if (n < 1 || n > 1000000) fail(join(p, "substeps"), "must lie in [1, 1e6]");
      r.sampler.substeps = static_cast<int>(n);
    }
  }

  r.check_scale = number_or(j, "check_scale", path, r.check_scale);
  if (!(r.check_scale > 0.0 && r.check_scale <= 1.0)) fail(join(path, "check_scale"), "must lie in (0, 1]");
  if (j.contains("seed")) r.seed = unsigned_integer(j.at("seed"), join(path, "seed"));
  if (j.contains("output")) {
    if (!j.at("output").is_string()) fail(join(path, "output"), "expected a path string");
    r.output = j.at("output").get<std::string>();
  }
  if (j.contains("format")) {
    const json& f = j.at("format");
    if (f == "csv") {
      r.format = OutputFormat::csv;
    } else if (f == "json") {
      r.format = OutputFormat::json;
    } else {
      fail(join(path, "format"), "expected \"csv\" or \"json\"");
    }
  }
}

json to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

json to_json(const OUSpec& o) { return {{"k", o.k}, {"theta", o.theta}, {"sigma", o.sigma}}; }

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": invalid JSON");
  }
  require_object(doc, "config");
  allow_keys(doc, "", {"base", "subordinator", "run"});
  for (const char* key : {"base", "subordinator"})
    if (!doc.contains(key)) fail(key, "missing");
  RunConfig cfg;
  cfg.model.base = read_base(doc.at("base"));
  cfg.model.sub = read_subordinator(doc.at("subordinator"));
  validated("subordinator.components", [&] { cfg.model.validate(); });
  read_run(doc.contains("run") ? doc.at("run") : json::object(), cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& c) {
  json base;
  if (const auto* f = std::get_if<FactorMOUSpec>(&c.model.base)) {
    base["kind"] = "factor-mou";
    for (const auto& o : f->idio) base["ou"].push_back(to_json(o));
    base["common"] = to_json(f->common);
    base["loadings"] = f->loadings;
  } else {
    base["kind"] = "mbm";
    for (const auto& b : std::get<MultiparamBMSpec>(c.model.base).blocks)
      base["blocks"].push_back({{"A", to_json(b.A)}, {"mu", to_json(b.mu)}, {"Sigma", to_json(b.Sigma)}});
  }
  json sub{{"rho", c.model.sub.rho}, {"t0", c.model.sub.t0}, {"components", json::array()}};
  for (const auto& ts : c.model.sub.components)
    sub["components"].push_back({{"alpha", ts.alpha}, {"beta", ts.beta}, {"lam", ts.lam}});
  const RunParams& r = c.run;
  json xi = json::array();
  for (const auto& v : r.xi_grid) xi.push_back(to_json(v));
  json run{{"grid", r.grid},
           {"n_paths", r.n_paths},
           {"xi_grid", xi},
           {"times", r.times},
           {"state", {{"u", to_json(r.state.u)}, {"u_common", r.state.u_common}, {"clock", to_json(r.state.clock)}}},
           {"tolerances", {{"quad_tol", r.quad_tol}, {"z_max", r.z_max}}},
           {"sampler",
            {{"kind", r.sampler.kind == SamplerKind::inverse_cdf ? "inverse-cdf" : "frozen-levy"},
             {"substeps", r.sampler.substeps}}},
           {"check_scale", r.check_scale},
           {"seed", r.seed},
           {"output", r.output},
           {"format", r.format == OutputFormat::csv ? "csv" : "json"}};
  return json{{"base", base}, {"subordinator", sub}, {"run", run}}.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  RunConfig payload = config;
  payload.run.seed = 0;
  payload.run.output.clear();
  payload.run.format = OutputFormat::csv;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(payload)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

RunConfig demo_config() {
  return parse_config(R"({
    "base": {"kind": "factor-mou",
             "ou": [{"k": 1.0, "theta": 0.0, "sigma": 1.0}, {"k": 2.0, "theta": 1.0, "sigma": 1.0}],
             "loadings": [1.0, 0.5]},
    "subordinator": {"rho": 1.5, "t0": 0.0,
                     "components": [{"kind": "inverse-gaussian", "lam": 1.0, "beta": 1.0},
                                    {"kind": "inverse-gaussian", "lam": 1.0, "beta": 1.0},
                                    {"kind": "inverse-gaussian", "lam": 1.0, "beta": 1.0}]},
    "run": {"grid": [0.0, 0.25, 0.5, 0.75, 1.0], "n_paths": 2000}
  })");
}

}  // namespace addsub
