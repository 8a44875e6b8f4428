#include "addsub/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "addsub/checks.hpp"
#include "addsub/config.hpp"
#include "addsub/subordinated.hpp"

namespace addsub {

namespace {

using json = nlohmann::json;
using Cell = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, Cell>> summary;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match the header");
    rows.push_back(std::move(row));
  }
};

std::string number_text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_cell(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return number_text(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
  } visit;
  return std::visit(visit, c);
}

json json_cell(const Cell& c) {
  struct {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(double v) const { return std::isfinite(v) ? json(v) : json(nullptr); }
    json operator()(std::int64_t v) const { return v; }
    json operator()(bool v) const { return v; }
    json operator()(const std::string& s) const { return s; }
  } visit;
  return std::visit(visit, c);
}

struct Context {
  RunConfig cfg;
  std::string command;
  std::string filter;
};

void write_table(const Context& ctx, const Table& t, std::ostream& os) {
  const std::string hash = config_hash(ctx.cfg);
  if (ctx.cfg.run.format == OutputFormat::csv) {
    os << "# command=" << ctx.command << "\n# config_hash=" << hash << "\n# seed=" << ctx.cfg.run.seed
       << "\n# version=" << kVersion << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << "\n";
    }
    for (const auto& [key, value] : t.summary) os << "# summary." << key << "=" << csv_cell(value) << "\n";
    return;
  }
  json doc{{"command", ctx.command}, {"config_hash", hash}, {"seed", ctx.cfg.run.seed}, {"version", kVersion}};
  doc["columns"] = t.columns;
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& c : row) r.push_back(json_cell(c));
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  json summary = json::object();
  for (const auto& [key, value] : t.summary) summary[key] = json_cell(value);
  doc["summary"] = std::move(summary);
  os << doc.dump(1) << "\n";
}

std::string indexed(const std::string& base, std::size_t i) { return base + "_" + std::to_string(i + 1); }

std::vector<Cell> vector_cells(const Eigen::VectorXd& v) {
  std::vector<Cell> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.emplace_back(v(i));
  return out;
}

void append(std::vector<Cell>& row, const std::vector<Cell>& more) { row.insert(row.end(), more.begin(), more.end()); }

RngStream main_stream(const RunConfig& cfg) { return RngStream{cfg.run.seed, 0}; }

Table cmd_simulate(const Context& ctx) {
  const auto& m = ctx.cfg.model;
  const auto& r = ctx.cfg.run;
  const auto paths = sample_paths(m, r.grid, r.n_paths, main_stream(ctx.cfg), r.sampler, &r.state);
  const std::size_t d = m.dim(), n_clock = m.sub.size();
  const bool factor = !m.levy_base();
  Table t;
  t.columns = {"path", "t"};
  for (std::size_t j = 0; j < n_clock; ++j) t.columns.push_back(indexed("clock", j));
  if (factor) {
    for (std::size_t j = 0; j < d; ++j) t.columns.push_back(indexed("latent", j));
    t.columns.push_back("latent_common");
  }
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back(indexed("y", j));
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& b = paths[p];
    for (std::size_t k = 0; k < b.grid.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      std::vector<Cell> row{static_cast<std::int64_t>(p), b.grid[k]};
      append(row, vector_cells(b.subordinator_paths.col(col)));
      if (factor) append(row, vector_cells(b.latent_paths.col(col)));
      append(row, vector_cells(b.observed_paths.col(col)));
      t.add(std::move(row));
    }
  }
  t.summary = {{"paths", static_cast<std::int64_t>(paths.size())},
               {"grid_points", static_cast<std::int64_t>(r.grid.size())}};
  return t;
}

Table cmd_cf_compare(const Context& ctx) {
  const auto& m = ctx.cfg.model;
  const auto& r = ctx.cfg.run;
  if (r.grid.size() < 2) throw ConfigError("run.grid: cf-compare needs at least two grid points");
  if (r.n_paths < 2) throw ConfigError("run.n_paths: cf-compare needs at least two paths");
  const double t1 = r.grid.front(), t2 = r.grid.back();
  const CfMethod method = m.levy_base() ? CfMethod::closed_form : CfMethod::quadrature;
  const Eigen::MatrixXd y = sample_terminal(m, {t1, t2}, r.n_paths, main_stream(ctx.cfg), r.sampler, &r.state);
  const Eigen::RowVectorXd y0 = observed_value(m, r.state).transpose();
  const Eigen::MatrixXd dy = y.rowwise() - y0;
  const std::size_t d = m.dim();

  Table t;
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back(indexed("xi", j));
  for (const char* c : {"analytic_re", "analytic_im", "analytic_error", "method", "empirical_re", "empirical_im",
                        "stderr", "z", "pass"})
    t.columns.emplace_back(c);
  bool all = true;
  double max_z = 0.0;
  std::vector<Complex> z(r.n_paths);
  for (const auto& xi : r.xi_grid) {
    const CfEval a = cf_increment(m, t1, t2, r.state, xi, method);
    for (std::size_t p = 0; p < r.n_paths; ++p)
      z[p] = std::exp(Complex(0.0, dy.row(static_cast<Eigen::Index>(p)).dot(xi)));
    const auto e = summarize<Complex>(z);
    const double gap = std::abs(e.mean - a.value);
    const double zscore = e.std_error > 0.0 ? gap / e.std_error : (gap == 0.0 ? 0.0 : INFINITY);
    const bool pass = gap <= r.z_max * e.std_error + r.quad_tol;
    all = all && pass;
    max_z = std::max(max_z, zscore);
    std::vector<Cell> row = vector_cells(xi);
    append(row, {a.value.real(), a.value.imag(), a.error_estimate,
                 std::string(method == CfMethod::closed_form ? "exact" : "quadrature"), e.mean.real(), e.mean.imag(),
                 e.std_error, zscore, pass});
    t.add(std::move(row));
  }
  t.summary = {{"t1", t1}, {"t2", t2}, {"n_paths", static_cast<std::int64_t>(r.n_paths)}, {"z_max", r.z_max},
               {"quad_tol", r.quad_tol}, {"max_z", max_z}, {"pass", all}};
  return t;
}

Table cmd_symbol(const Context& ctx) {
  const auto& m = ctx.cfg.model;
  const auto& r = ctx.cfg.run;
  if (r.times.empty()) throw ConfigError("run.times: symbol needs at least one positive time");
  const bool closed = m.levy_base();
  Table t;
  t.columns = {"t"};
  for (std::size_t j = 0; j < m.dim(); ++j) t.columns.push_back(indexed("xi", j));
  for (const char* c : {"triplet_re", "triplet_im", "triplet_error", "derivative_re", "derivative_im",
                        "derivative_error", "closed_re", "closed_im", "closed_error", "diff_triplet_derivative",
                        "diff_triplet_closed", "diff_derivative_closed", "pass"})
    t.columns.emplace_back(c);
  bool all = true;
  double max_diff = 0.0;
  for (double time : r.times) {
    for (const auto& xi : r.xi_grid) {
      const auto a = symbol(m, time, r.state, xi, SymbolMethod::triplet_integral);
      const auto b = symbol(m, time, r.state, xi, SymbolMethod::cf_derivative);
      auto agree = [&](const SymbolEval& x, const SymbolEval& y) {
        const double diff = std::abs(x.value - y.value);
        max_diff = std::max(max_diff, diff);
        return std::pair{diff, diff <= x.error_estimate + y.error_estimate + r.quad_tol};
      };
      const auto [dab, pab] = agree(a, b);
      bool pass = pab;
      std::vector<Cell> row{time};
      append(row, vector_cells(xi));
      append(row, {a.value.real(), a.value.imag(), a.error_estimate, b.value.real(), b.value.imag(), b.error_estimate});
      if (closed) {
        const auto c = symbol(m, time, r.state, xi, SymbolMethod::levy_closed_form);
        const auto [dac, pac] = agree(a, c);
        const auto [dbc, pbc] = agree(b, c);
        pass = pass && pac && pbc;
        append(row, {c.value.real(), c.value.imag(), c.error_estimate, dab, dac, dbc});
      } else {
        append(row, {std::monostate{}, std::monostate{}, std::monostate{}, dab, std::monostate{}, std::monostate{}});
      }
      row.emplace_back(pass);
      all = all && pass;
      t.add(std::move(row));
    }
  }
  t.summary = {{"closed_form", closed}, {"max_discrepancy", max_diff}, {"pass", all}};
  return t;
}

Table cmd_triplet(const Context& ctx) {
  const auto& m = ctx.cfg.model;
  const auto& r = ctx.cfg.run;
  if (r.times.empty()) throw ConfigError("run.times: triplet needs at least one positive time");
  const std::size_t d = m.dim();
  Table t;
  t.columns = {"t", "component"};
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back(indexed("direction", j));
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back(indexed("gamma", j));
  for (const char* c : {"gamma_error", "small_jump_moment", "small_jump_error", "mass_above_1"}) t.columns.emplace_back(c);
  for (double time : r.times) {
    const LevyTriplet tr = triplet(m, time, r.state);
    for (std::size_t c = 0; c < tr.components(); ++c) {
      const auto moment = tr.small_jump_moment(c);
      std::vector<Cell> row{time, static_cast<std::int64_t>(c + 1)};
      append(row, vector_cells(tr.direction(c)));
      append(row, vector_cells(tr.gamma()));
      append(row, {tr.gamma_error(), moment.value, moment.error, tr.truncated_mass(c, 1.0)});
      t.add(std::move(row));
    }
  }
  t.summary = {{"gaussian_part", std::string("zero")}};
  return t;
}

Table cmd_term_structure(const Context& ctx) {
  const auto& m = ctx.cfg.model;
  const auto& r = ctx.cfg.run;
  if (r.times.empty()) throw ConfigError("run.times: term-structure needs at least one positive time");
  const auto rows = term_structure(m, r.times, r.n_paths, main_stream(ctx.cfg), r.sampler);
  const std::size_t d = m.dim();
  Table t;
  t.columns = {"t"};
  for (std::size_t j = 0; j < d; ++j) {
    t.columns.push_back(indexed("mean", j));
    t.columns.push_back(indexed("mean", j) + "_se");
  }
  for (std::size_t j = 0; j < d; ++j) {
    t.columns.push_back(indexed("var", j));
    t.columns.push_back(indexed("var", j) + "_se");
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      for (const char* stem : {"cov", "corr"}) {
        const std::string name = std::string(stem) + "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
        t.columns.push_back(name);
        t.columns.push_back(name + "_se");
      }
  for (const auto& row : rows) {
    std::vector<Cell> cells{row.t};
    for (const auto& mean : row.mean) append(cells, {mean.value, mean.std_error});
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      append(cells, {row.cov(jj, jj), row.cov_error(jj, jj)});
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
        append(cells, {row.cov(a, b), row.cov_error(a, b), row.corr(a, b), row.corr_error(a, b)});
      }
    t.add(std::move(cells));
  }
  t.summary = {{"n_paths", static_cast<std::int64_t>(r.n_paths)}};
  return t;
}

Table cmd_check(const Context& ctx, bool& all_passed) {
  const auto results = run_checks(ctx.filter, CheckOptions{ctx.cfg.run.check_scale, ctx.cfg.run.seed});
  Table t;
  t.columns = {"id", "name", "group", "passed", "seconds", "budget", "detail"};
  std::int64_t passed = 0;
  for (const auto& r : results) {
    t.add({static_cast<std::int64_t>(r.id), r.name, r.group, r.passed, r.seconds, r.budget, r.detail});
    passed += r.passed ? 1 : 0;
  }
  all_passed = passed == static_cast<std::int64_t>(results.size());
  t.summary = {{"scale", ctx.cfg.run.check_scale},
               {"passed", passed},
               {"failed", static_cast<std::int64_t>(results.size()) - passed}};
  return t;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and analysis of additive-subordinated multiparameter Markov processes", "addsub"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  std::string config_path, out_path, format, filter;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration (the built-in demo model when omitted)");
  app.add_option("--seed", seed, "Overrides run.seed");
  app.add_option("--out", out_path, "Output file (overrides run.output)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--filter", filter, "check: group, name or number of the invariants to run");
  const std::vector<std::pair<const char*, const char*>> commands{
      {"simulate", "Sample paths of the clocks, latent factors and observed process"},
      {"cf-compare", "Analytic versus Monte Carlo characteristic function of an increment"},
      {"symbol", "Symbol by triplet integral, cf derivative and closed form"},
      {"triplet", "Levy triplet summaries per jump component"},
      {"check", "Run the invariant suite"},
      {"term-structure", "Monte Carlo moments and correlations over time"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.filter = filter;
    ctx.cfg = config_path.empty() ? demo_config() : load_config(config_path);
    if (seed) ctx.cfg.run.seed = *seed;
    if (!out_path.empty()) ctx.cfg.run.output = out_path;
    if (!format.empty()) ctx.cfg.run.format = format == "json" ? OutputFormat::json : OutputFormat::csv;

    bool checks_passed = true;
    Table table;
    if (ctx.command == "simulate") {
      table = cmd_simulate(ctx);
    } else if (ctx.command == "cf-compare") {
      table = cmd_cf_compare(ctx);
    } else if (ctx.command == "symbol") {
      table = cmd_symbol(ctx);
    } else if (ctx.command == "triplet") {
      table = cmd_triplet(ctx);
    } else if (ctx.command == "term-structure") {
      table = cmd_term_structure(ctx);
    } else {
      table = cmd_check(ctx, checks_passed);
    }

    if (ctx.cfg.run.output.empty()) {
      write_table(ctx, table, out);
    } else {
      std::ofstream file(ctx.cfg.run.output, std::ios::binary);
      if (!file) throw ConfigError("run.output: cannot open " + ctx.cfg.run.output + " for writing");
      write_table(ctx, table, file);
    }
    err << "# wall_clock_s=" << number_text(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count())
        << "\n";
    return checks_passed ? kExitOk : kExitCheckFailed;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace addsub
