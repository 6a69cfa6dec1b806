#include "lamegap/config.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lamegap {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config:" + std::to_string(line) + ": " + msg);
}

}  // namespace

double TomlValue::number(const std::string& key) const {
  if (!is_number()) fail(line, "key '" + key + "' must be a number");
  return std::get<double>(data);
}
const std::string& TomlValue::string(const std::string& key) const {
  if (!is_string()) fail(line, "key '" + key + "' must be a string");
  return std::get<std::string>(data);
}
bool TomlValue::boolean(const std::string& key) const {
  if (!is_bool()) fail(line, "key '" + key + "' must be a boolean");
  return std::get<bool>(data);
}
const std::vector<TomlValue>& TomlValue::array(const std::string& key) const {
  if (!is_array()) fail(line, "key '" + key + "' must be an array");
  return std::get<std::vector<TomlValue>>(data);
}

const TomlValue* TomlDoc::find(const std::string& table,
                               const std::string& key) const {
  auto it = tables.find(table);
  if (it == tables.end()) return nullptr;
  auto jt = it->second.find(key);
  return jt == it->second.end() ? nullptr : &jt->second;
}

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

TomlValue parse_scalar(const std::string& tok, int line) {
  TomlValue v;
  v.line = line;
  if (tok.empty()) fail(line, "empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"')
      fail(line, "unterminated string");
    v.data = tok.substr(1, tok.size() - 2);
    return v;
  }
  if (tok == "true") { v.data = true; return v; }
  if (tok == "false") { v.data = false; return v; }
  try {
    size_t used = 0;
    const double d = std::stod(tok, &used);
    if (used != tok.size()) fail(line, "malformed number '" + tok + "'");
    v.data = d;
    return v;
  } catch (const std::logic_error&) {
    fail(line, "unrecognized value '" + tok + "'");
  }
}

TomlValue parse_value(const std::string& raw, int line) {
  const std::string s = strip(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    TomlValue v;
    v.line = line;
    std::vector<TomlValue> items;
    std::string inner = s.substr(1, s.size() - 2);
    std::string tok;
    bool in_str = false;
    for (char ch : inner) {
      if (ch == '"') in_str = !in_str;
      if (ch == ',' && !in_str) {
        if (!strip(tok).empty()) items.push_back(parse_scalar(strip(tok), line));
        tok.clear();
      } else {
        tok += ch;
      }
    }
    if (!strip(tok).empty()) items.push_back(parse_scalar(strip(tok), line));
    v.data = std::move(items);
    return v;
  }
  return parse_scalar(s, line);
}

}  // namespace

TomlDoc parse_toml_text(const std::string& text) {
  TomlDoc doc;
  doc.tables[""];
  std::string current;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    // strip comments outside strings
    std::string line;
    bool in_str = false;
    for (char ch : raw) {
      if (ch == '"') in_str = !in_str;
      if (ch == '#' && !in_str) break;
      line += ch;
    }
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "malformed table header");
      current = strip(line.substr(1, line.size() - 2));
      if (current.empty()) fail(lineno, "empty table name");
      doc.tables[current];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
    const std::string key = strip(line.substr(0, eq));
    if (key.empty()) fail(lineno, "empty key");
    if (doc.tables[current].count(key))
      fail(lineno, "duplicate key '" + key + "'");
    doc.tables[current][key] = parse_value(line.substr(eq + 1), lineno);
  }
  return doc;
}

TomlDoc parse_toml_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_toml_text(ss.str());
}

namespace {

const std::map<std::string, CheckSpec::Kind>& checks_registry() {
  static const std::map<std::string, CheckSpec::Kind> reg = {
      {"slope_sup_grad", CheckSpec::Kind::Window},
      {"slope_c_diff_1", CheckSpec::Kind::Window},
      {"slope_c_diff_2", CheckSpec::Kind::Window},
      {"slope_a11_11", CheckSpec::Kind::Window},
      {"slope_a11_22", CheckSpec::Kind::Window},
      {"slope_det_a11", CheckSpec::Kind::Window},
      {"a11_33_max_variation", CheckSpec::Kind::UpperBound},
      {"c_max_variation", CheckSpec::Kind::UpperBound},
      {"recon_h1_max", CheckSpec::Kind::UpperBound},
      {"residual_energy_max_ratio", CheckSpec::Kind::UpperBound},
      {"w3_sup_max_ratio", CheckSpec::Kind::UpperBound},
      {"profile_spread_max", CheckSpec::Kind::UpperBound},
      {"v11_growth_min", CheckSpec::Kind::LowerBound},
      {"min_eig_positive", CheckSpec::Kind::Positivity},
      {"convergence_energy_below_limit", CheckSpec::Kind::Positivity},
      {"convergence_monotone", CheckSpec::Kind::Positivity},
      {"convergence_final_frac", CheckSpec::Kind::UpperBound},
  };
  return reg;
}

double require_number(const TomlDoc& doc, const std::string& table,
                      const std::string& key) {
  const TomlValue* v = doc.find(table, key);
  if (!v)
    throw ConfigError("config: missing key '" + table + "." + key + "'");
  return v->number(key);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  const TomlDoc doc = parse_toml_text(text);
  RunConfig cfg;
  cfg.source_text = text;

  if (!doc.has_table("geometry"))
    throw ConfigError("config: missing [geometry] table");
  const std::string shape = [&] {
    const TomlValue* v = doc.find("geometry", "shape");
    if (!v) throw ConfigError("config: missing key 'geometry.shape'");
    return v->string("shape");
  }();
  const double eps = require_number(doc, "geometry", "epsilon");
  double outer = 4.0;
  if (const TomlValue* v = doc.find("geometry", "outer_radius"))
    outer = v->number("outer_radius");
  if (shape == "disk") {
    double radius = 1.0;
    if (const TomlValue* v = doc.find("geometry", "radius"))
      radius = v->number("radius");
    cfg.geometry = disk_geometry(eps, radius, outer);
  } else if (shape == "mflat") {
    int m = 4;
    double lam = 1.0;
    if (const TomlValue* v = doc.find("geometry", "m"))
      m = static_cast<int>(v->number("m"));
    if (const TomlValue* v = doc.find("geometry", "lambda_flat"))
      lam = v->number("lambda_flat");
    cfg.geometry = mflat_geometry(eps, m, lam, outer);
  } else {
    throw ConfigError("config: geometry.shape must be \"disk\" or \"mflat\"");
  }

  cfg.material.lambda = 1.0;
  cfg.material.mu = 1.0;
  if (doc.has_table("material")) {
    if (const TomlValue* v = doc.find("material", "lambda"))
      cfg.material.lambda = v->number("lambda");
    if (const TomlValue* v = doc.find("material", "mu"))
      cfg.material.mu = v->number("mu");
    const TomlValue* l1 = doc.find("material", "lambda1");
    const TomlValue* m1 = doc.find("material", "mu1");
    if (l1 && m1)
      cfg.material.inclusion = {l1->number("lambda1"), m1->number("mu1")};
    else if (l1 || m1)
      throw ConfigError("config: lambda1 and mu1 must be given together");
    if (const TomlValue* v = doc.find("material", "ladder_factors")) {
      for (const auto& item : v->array("ladder_factors")) {
        const double f = item.number("ladder_factors");
        cfg.ladder.emplace_back(cfg.material.lambda * f, cfg.material.mu * f);
      }
    }
  }

  std::string phi_id = "shear";
  double amp = 1.0;
  if (doc.has_table("boundary")) {
    if (const TomlValue* v = doc.find("boundary", "id"))
      phi_id = v->string("id");
    if (const TomlValue* v = doc.find("boundary", "amplitude"))
      amp = v->number("amplitude");
  }
  cfg.phi = BoundaryData::parse(phi_id, amp);

  if (doc.has_table("mesh")) {
    if (const TomlValue* v = doc.find("mesh", "h_gap"))
      cfg.h_gap = static_cast<int>(v->number("h_gap"));
    if (const TomlValue* v = doc.find("mesh", "h_far"))
      cfg.h_far = v->number("h_far");
  }

  if (doc.has_table("sweep")) {
    if (const TomlValue* v = doc.find("sweep", "epsilons"))
      for (const auto& item : v->array("epsilons"))
        cfg.epsilons.push_back(item.number("epsilons"));
  }

  if (doc.has_table("convergence")) {
    cfg.convergence = true;
    if (const TomlValue* v = doc.find("convergence", "epsilon"))
      cfg.convergence_epsilon = v->number("epsilon");
    if (const TomlValue* v = doc.find("convergence", "enabled"))
      cfg.convergence = v->boolean("enabled");
  }

  if (doc.has_table("solver")) {
    if (const TomlValue* v = doc.find("solver", "tol"))
      cfg.solver.tol = v->number("tol");
    if (const TomlValue* v = doc.find("solver", "max_iter"))
      cfg.solver.max_iter = static_cast<int>(v->number("max_iter"));
    if (const TomlValue* v = doc.find("solver", "mode")) {
      const std::string m = v->string("mode");
      if (m == "cg") cfg.solver.mode = SolveOptions::Mode::Cg;
      else if (m == "direct") cfg.solver.mode = SolveOptions::Mode::Direct;
      else throw ConfigError("config: solver.mode must be \"cg\" or \"direct\"");
    }
    if (const TomlValue* v = doc.find("solver", "precond")) {
      const std::string p = v->string("precond");
      if (p == "jacobi") cfg.solver.precond = SolveOptions::Precond::Jacobi;
      else if (p == "ic")
        cfg.solver.precond = SolveOptions::Precond::IncompleteCholesky;
      else throw ConfigError("config: solver.precond must be \"jacobi\" or \"ic\"");
    }
  }

  if (const TomlValue* v = doc.find("output", "directory"))
    cfg.out_dir = v->string("directory");
  if (const TomlValue* v = doc.find("", "seed"))
    cfg.seed = static_cast<long>(v->number("seed"));

  if (doc.has_table("checks")) {
    for (const auto& [name, value] : doc.tables.at("checks")) {
      auto it = checks_registry().find(name);
      if (it == checks_registry().end())
        fail(value.line, "unknown check '" + name + "'");
      CheckSpec spec;
      spec.name = name;
      spec.kind = it->second;
      switch (spec.kind) {
        case CheckSpec::Kind::Window: {
          const auto& arr = value.array(name);
          if (arr.size() != 2) fail(value.line, "window check needs [lo, hi]");
          spec.lo = arr[0].number(name);
          spec.hi = arr[1].number(name);
          break;
        }
        case CheckSpec::Kind::UpperBound:
          spec.hi = value.number(name);
          break;
        case CheckSpec::Kind::LowerBound:
          spec.lo = value.number(name);
          break;
        case CheckSpec::Kind::Positivity:
          if (!value.boolean(name))
            fail(value.line, "positivity check must be 'true'");
          break;
      }
      cfg.checks.push_back(std::move(spec));
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig cfg = parse_config_text(ss.str());
  cfg.source_path = path;
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  validate_geometry(cfg.geometry);
  validate_elliptic(cfg.material);
  if (cfg.h_gap < 4) throw ConfigError("config: mesh.h_gap must be >= 4");
  if (!(cfg.h_far > 0.0) || cfg.h_far > cfg.geometry.outer_radius / 8.0)
    throw ConfigError("config: mesh.h_far must be in (0, outer_radius/8]");
  if (!(cfg.solver.tol > 0.0) || cfg.solver.tol > 1e-6)
    throw ConfigError("config: solver.tol must lie in (0, 1e-6]");
  if (cfg.solver.max_iter <= 0)
    throw ConfigError("config: solver.max_iter must be positive");
  const double floor = 1e-5 * cfg.geometry.outer_radius;
  for (size_t k = 0; k < cfg.epsilons.size(); ++k) {
    if (cfg.epsilons[k] < floor)
      throw ConfigError("config: sweep epsilon " +
                        std::to_string(cfg.epsilons[k]) +
                        " is below the mesh floor " + std::to_string(floor));
    if (k + 1 < cfg.epsilons.size() &&
        !(cfg.epsilons[k] > cfg.epsilons[k + 1]))
      throw ConfigError("config: sweep epsilons must be strictly decreasing");
  }
  for (size_t k = 0; k + 1 < cfg.ladder.size(); ++k) {
    const auto [l0, m0] = cfg.ladder[k];
    const auto [l1, m1] = cfg.ladder[k + 1];
    if (!(std::min(m1, l1 + m1) > std::min(m0, l0 + m0)))
      throw ConfigError(
          "config: ladder_factors must increase min(mu, lambda+mu)");
  }
  if (cfg.convergence && cfg.ladder.empty())
    throw ConfigError("config: convergence experiment needs material.ladder_factors");
  if (cfg.convergence && cfg.convergence_epsilon < floor)
    throw ConfigError("config: convergence.epsilon is below the mesh floor");
}

std::string plan_summary(const RunConfig& cfg) {
  std::ostringstream os;
  os << "plan:\n";
  std::vector<double> eps_list = cfg.epsilons;
  if (cfg.convergence) eps_list.push_back(cfg.convergence_epsilon);
  for (double e : eps_list) {
    GapGeometry g = cfg.geometry;
    g.epsilon = e;
    // strip columns scale like the gap integral; cheap estimate without
    // building: columns ~ integral of dz / dx(z)
    double cols = 0.0;
    const int L = 2 * cfg.h_gap;
    const double aspect = 2.0;
    double z = 0.0;
    while (z < g.r_local) {
      const double dv =
          aspect * (e + graph_value(g, 0, z) - graph_value(g, 1, z)) / L;
      const double dx = std::min(dv, std::sqrt(e * std::max(e, z)));
      z += dx;
      cols += 1.0;
    }
    const double strip_nodes = 2.0 * cols * (L + 1);
    const double est_nodes = 3.2 * strip_nodes + 900.0;
    os << "  mesh eps=" << e << ": ~" << static_cast<long>(est_nodes)
       << " nodes, ~" << static_cast<long>(2 * est_nodes) << " dofs\n";
  }
  const int solves_per_row = 1 + 7;
  if (!cfg.epsilons.empty())
    os << "  sweep: " << cfg.epsilons.size() << " rows x " << solves_per_row
       << " solves\n";
  if (cfg.convergence)
    os << "  convergence ladder: " << cfg.ladder.size() + 1 << " solves at eps="
       << cfg.convergence_epsilon << "\n";
  return os.str();
}

namespace {

double column_ratio(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::max(), hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

RunOutcome run_experiments(const RunConfig& cfg, const std::string& out_dir,
                           int jobs, bool force) {
  namespace fs = std::filesystem;
  validate_config(cfg);
  const fs::path dir(out_dir);
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw ConfigError("output directory '" + out_dir +
                      "' exists; pass --force to overwrite");
  fs::create_directories(dir / "profiles");

  if (!cfg.source_text.empty()) {
    std::ofstream copy(dir / "config.toml");
    copy << cfg.source_text;
  }

  RunOutcome out;
  nlohmann::json summary;
  summary["schema_version"] = 1;
  summary["seed"] = cfg.seed;

  auto record = [&](const CheckResult& r) {
    out.checks.push_back(r);
    out.all_passed = out.all_passed && r.pass;
  };

  if (!cfg.epsilons.empty()) {
    SweepConfig sc;
    sc.geometry = cfg.geometry;
    sc.epsilons = cfg.epsilons;
    sc.h_gap = cfg.h_gap;
    sc.h_far = cfg.h_far;
    sc.material = cfg.material;
    sc.phi = cfg.phi;
    sc.solver = cfg.solver;
    sc.jobs = jobs;
    out.sweep = sweep_epsilon(sc);

    {
      std::ofstream f(dir / "rates.csv");
      write_rates_csv(f, out.sweep);
      std::ofstream g(dir / "coeff_audit.csv");
      write_coeff_audit_csv(g, out.sweep);
      std::ofstream h(dir / "residuals.csv");
      write_residuals_csv(h, out.sweep);
      for (const auto& row : out.sweep.rows) {
        if (row.failed) continue;
        std::ostringstream name;
        name << "eps_" << row.epsilon << ".csv";
        std::ofstream p(dir / "profiles" / name.str());
        write_profile_csv(p, row.profile);
      }
    }

    for (const auto& row : out.sweep.rows)
      if (row.failed)
        summary["row_failures"].push_back(
            {{"epsilon", row.epsilon}, {"reason", row.fail_reason}});

    nlohmann::json fits;
    for (const char* col :
         {"sup_grad_matrix", "c_diff_1", "c_diff_2", "a11_11", "a11_22",
          "det_a11"}) {
      try {
        const RateFit fit = fit_rate(out.sweep, col);
        fits[col] = {{"slope", fit.slope},
                     {"intercept", fit.intercept},
                     {"stderr", fit.stderr_slope},
                     {"points", fit.n},
                     {"dropped_coarsest", fit.dropped_coarsest}};
      } catch (const PreconditionError& e) {
        fits[col] = {{"refused", e.what()}};
      }
    }
    summary["fits"] = fits;
  }

  if (cfg.convergence) {
    GapGeometry g = cfg.geometry;
    g.epsilon = cfg.convergence_epsilon;
    const Mesh mesh = build_mesh(g, cfg.h_gap, cfg.h_far);
    std::ofstream f(dir / "convergence.csv");
    out.convergence = run_convergence_experiment(
        mesh, g, cfg.material, cfg.ladder, cfg.phi, cfg.solver, &f);
  }

  // checks
  for (const CheckSpec& spec : cfg.checks) {
    CheckResult r;
    r.name = spec.name;
    r.lo = spec.lo;
    r.hi = spec.hi;
    const RateTable& tb = out.sweep;
    try {
      if (spec.name == "slope_sup_grad")
        r.measured = fit_rate(tb, "sup_grad_matrix").slope;
      else if (spec.name == "slope_c_diff_1")
        r.measured = fit_rate(tb, "c_diff_1").slope;
      else if (spec.name == "slope_c_diff_2")
        r.measured = fit_rate(tb, "c_diff_2").slope;
      else if (spec.name == "slope_a11_11")
        r.measured = fit_rate(tb, "a11_11").slope;
      else if (spec.name == "slope_a11_22")
        r.measured = fit_rate(tb, "a11_22").slope;
      else if (spec.name == "slope_det_a11")
        r.measured = fit_rate(tb, "det_a11").slope;
      else if (spec.name == "a11_33_max_variation")
        r.measured = column_ratio(table_column(tb, "a11_33")) - 1.0;
      else if (spec.name == "c_max_variation")
        r.measured = column_ratio(table_column(tb, "c_max")) - 1.0;
      else if (spec.name == "recon_h1_max") {
        r.measured = 0.0;
        for (const auto& row : tb.rows)
          if (!row.failed) r.measured = std::max(r.measured, row.recon_h1_rel);
      } else if (spec.name == "residual_energy_max_ratio") {
        r.measured = 0.0;
        for (int i = 1; i <= 2; ++i)
          for (int a = 1; a <= 3; ++a) {
            std::vector<double> col;
            for (const auto& row : tb.rows)
              if (!row.failed)
                col.push_back(row.residuals.get(i, a).total_energy);
            r.measured = std::max(r.measured, column_ratio(col));
          }
      } else if (spec.name == "w3_sup_max_ratio") {
        r.measured = 0.0;
        for (int i = 1; i <= 2; ++i) {
          std::vector<double> col;
          for (const auto& row : tb.rows)
            if (!row.failed) col.push_back(row.residuals.get(i, 3).sup_grad);
          r.measured = std::max(r.measured, column_ratio(col));
        }
      } else if (spec.name == "v11_growth_min") {
        const auto col = table_column(tb, "sup_grad_v11");
        r.measured = (col.size() >= 2 && col.front() > 0)
                         ? col.back() / col.front()
                         : 0.0;
      } else if (spec.name == "profile_spread_max") {
        r.measured = 0.0;
        size_t npos = std::numeric_limits<size_t>::max();
        for (const auto& row : tb.rows)
          if (!row.failed)
            npos = std::min(npos, row.profile.samples.size());
        for (size_t j = 0; npos != std::numeric_limits<size_t>::max() && j < npos; ++j) {
          std::vector<double> col;
          for (const auto& row : tb.rows)
            if (!row.failed) col.push_back(row.profile.samples[j].product);
          r.measured = std::max(r.measured, column_ratio(col));
        }
      } else if (spec.name == "min_eig_positive") {
        r.measured = std::numeric_limits<double>::max();
        for (const auto& row : tb.rows)
          if (!row.failed)
            r.measured = std::min(r.measured, row.audit.min_eigenvalue);
      } else if (spec.name == "convergence_energy_below_limit") {
        r.measured = 1.0;
        for (const auto& row : out.convergence.rows)
          if (row.energy_n > row.energy_inf * (1.0 + 1e-12)) r.measured = -1.0;
      } else if (spec.name == "convergence_monotone") {
        r.measured = 1.0;
        for (size_t k = 0; k + 1 < out.convergence.rows.size(); ++k)
          if (!(out.convergence.rows[k + 1].h1_dist <
                out.convergence.rows[k].h1_dist))
            r.measured = -1.0;
      } else if (spec.name == "convergence_final_frac") {
        const auto& rows = out.convergence.rows;
        r.measured = (rows.size() >= 2 && rows.front().h1_dist > 0)
                         ? rows.back().h1_dist / rows.front().h1_dist
                         : 0.0;
      }
      switch (spec.kind) {
        case CheckSpec::Kind::Window:
          r.pass = r.measured >= spec.lo && r.measured <= spec.hi;
          break;
        case CheckSpec::Kind::UpperBound:
          r.pass = r.measured <= spec.hi;
          break;
        case CheckSpec::Kind::LowerBound:
          r.pass = r.measured >= spec.lo;
          break;
        case CheckSpec::Kind::Positivity:
          r.pass = r.measured > 0.0;
          break;
      }
    } catch (const std::exception& e) {
      r.pass = false;
      r.measured = std::nan("");
      summary["check_errors"][spec.name] = e.what();
    }
    record(r);
  }

  for (const auto& r : out.checks)
    summary["checks"].push_back({{"name", r.name},
                                 {"measured", r.measured},
                                 {"lo", r.lo},
                                 {"hi", r.hi},
                                 {"pass", r.pass}});
  summary["all_passed"] = out.all_passed;
  std::ofstream sj(dir / "summary.json");
  sj << summary.dump(2) << "\n";
  return out;
}

}  // namespace lamegap
