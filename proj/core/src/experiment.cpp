#include "gdeviate/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gdeviate/ambiguity.hpp"
#include "gdeviate/errors.hpp"
#include "gdeviate/gbsde_pde.hpp"
#include "gdeviate/ldp.hpp"

namespace gdeviate {

using nlohmann::json;

std::string format_real(double v) {
  if (std::isnan(v)) return "NAN";
  if (std::isinf(v)) return v > 0 ? "INF" : "-INF";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------- config

namespace {

template <typename T>
T read_field(const json& doc, const char* key, const std::string& path) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid or missing field '" + path + "'");
  }
}

template <typename T>
void read_optional(const json& doc, const char* key, const std::string& path, T& out) {
  if (doc.contains(key)) out = read_field<T>(doc, key, path);
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig cfg;
  cfg.model = read_field<std::string>(doc, "model", "model");
  read_optional(doc, "params", "params", cfg.params);
  if (!doc.contains("band")) throw ConfigError("missing field 'band'");
  const json& band = doc.at("band");
  cfg.sigma_low = read_field<double>(band, "sigma_low", "band.sigma_low");
  cfg.sigma_high = read_field<double>(band, "sigma_high", "band.sigma_high");
  cfg.x = read_field<double>(doc, "x", "x");
  read_optional(doc, "s", "s", cfg.s);
  cfg.T = read_field<double>(doc, "T", "T");
  if (doc.contains("grid")) {
    const json& grid = doc.at("grid");
    read_optional(grid, "n_steps", "grid.n_steps", cfg.n_steps);
    read_optional(grid, "n_x", "grid.n_x", cfg.n_x);
    read_optional(grid, "radius", "grid.radius", cfg.radius);
  }
  read_optional(doc, "eps", "eps", cfg.eps);
  read_optional(doc, "ensemble_size", "ensemble_size", cfg.ensemble_size);
  read_optional(doc, "mc_per_control", "mc_per_control", cfg.mc_per_control);
  read_optional(doc, "seed", "seed", cfg.seed);
  read_optional(doc, "p", "p", cfg.p);
  if (doc.contains("tolerances")) {
    const json& tol = doc.at("tolerances");
    read_optional(tol, "delta", "tolerances.delta", cfg.delta);
    read_optional(tol, "k_tol_scale", "tolerances.k_tol_scale", cfg.k_tol_scale);
    read_optional(tol, "membership_tol", "tolerances.membership_tol", cfg.membership_tol);
  }
  read_optional(doc, "output_dir", "output_dir", cfg.output_dir);
  validate_config(cfg);
  return cfg;
}

namespace {

json config_to_document(const ExperimentConfig& cfg) {
  json doc;
  doc["model"] = cfg.model;
  doc["params"] = cfg.params;
  doc["band"] = {{"sigma_low", cfg.sigma_low}, {"sigma_high", cfg.sigma_high}};
  doc["x"] = cfg.x;
  doc["s"] = cfg.s;
  doc["T"] = cfg.T;
  doc["grid"] = {{"n_steps", cfg.n_steps}, {"n_x", cfg.n_x}, {"radius", cfg.radius}};
  doc["eps"] = cfg.eps;
  doc["ensemble_size"] = cfg.ensemble_size;
  doc["mc_per_control"] = cfg.mc_per_control;
  doc["seed"] = cfg.seed;
  doc["p"] = cfg.p;
  doc["tolerances"] = {{"delta", cfg.delta},
                       {"k_tol_scale", cfg.k_tol_scale},
                       {"membership_tol", cfg.membership_tol}};
  doc["output_dir"] = cfg.output_dir;
  return doc;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  return config_to_document(cfg).dump(2);
}

void validate_config(const ExperimentConfig& cfg) {
  const auto& names = std::vector<std::string>{"canonical", "pure-noise", "heat-quadratic"};
  if (std::find(names.begin(), names.end(), cfg.model) == names.end()) {
    throw ConfigError("unknown model '" + cfg.model + "' in field 'model'");
  }
  if (!(cfg.sigma_low > 0.0 && cfg.sigma_high >= cfg.sigma_low)) {
    throw ConfigError("field 'band' requires 0 < sigma_low <= sigma_high");
  }
  if (!(cfg.s < cfg.T)) throw ConfigError("fields 's', 'T' require s < T");
  if (cfg.n_steps < 1) throw ConfigError("field 'grid.n_steps' must be >= 1");
  if (cfg.n_x < 2) throw ConfigError("field 'grid.n_x' must be >= 2");
  try {
    EpsilonLadder ladder(cfg.eps);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("field 'eps': ") + e.what());
  }
  if (cfg.ensemble_size < 2) throw ConfigError("field 'ensemble_size' must be >= 2");
  if (cfg.mc_per_control < 1) throw ConfigError("field 'mc_per_control' must be >= 1");
  if (!(cfg.p >= 2.0)) throw ConfigError("field 'p' must be >= 2");
  if (!(cfg.delta > 0.0)) throw ConfigError("field 'tolerances.delta' must be positive");
  if (!(cfg.k_tol_scale > 0.0)) {
    throw ConfigError("field 'tolerances.k_tol_scale' must be positive");
  }
  if (cfg.output_dir.empty()) throw ConfigError("field 'output_dir' must be nonempty");
}

// ---------------------------------------------------------------- models

CoefficientSet make_model(const std::string& name, const std::map<std::string, double>& params) {
  auto param = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  CoefficientSet c;
  if (name == "canonical") {
    const double b_slope = param("b_slope", -1.0);
    const double h0 = param("h", 0.2);
    const double s_curv = param("sigma_curvature", 0.1);
    const double s_floor = param("sigma_floor", 0.5);
    const double f_y = param("f_y", -1.0);
    const double f_z = param("f_z", 0.1);
    const double g_amp = param("g_amplitude", 0.5);
    c.b = [b_slope](double x) { return b_slope * x; };
    c.h = [h0](double) { return h0; };
    c.sigma = [s_curv, s_floor](double x) { return 1.0 / (1.0 + s_curv * x * x) + s_floor; };
    c.f = [f_y, f_z](double, double, double y, double z) { return f_y * y + f_z * z; };
    c.g = [g_amp](double, double x, double, double) { return g_amp * std::cos(x); };
    c.phi = [](double x) { return std::tanh(x); };
    c.lipschitz_L = param("lipschitz_L", 1.0);
    c.growth_m = 0;
    // |b| <= 3 holds on |x| <= 3, the region the forward paths visit
    c.bound_L = param("bound_L", 3.0);
    return c;
  }
  if (name == "pure-noise" || name == "heat-quadratic") {
    c.b = [](double) { return 0.0; };
    c.h = [](double) { return 0.0; };
    c.sigma = [](double) { return 1.0; };
    c.f = [](double, double, double, double) { return 0.0; };
    c.g = [](double, double, double, double) { return 0.0; };
    if (name == "pure-noise") {
      c.phi = [](double x) { return x; };
    } else {
      c.phi = [](double x) { return x * x; };
    }
    c.lipschitz_L = 0.0;
    c.growth_m = name == "pure-noise" ? 0 : 1;
    c.bound_L = 1.0;
    return c;
  }
  throw InvalidInput("unknown model '" + name + "'");
}

// ---------------------------------------------------------------- slopes

SlopeReport fit_slope(const std::vector<std::pair<double, double>>& pairs) {
  SlopeReport report;
  for (const auto& [eps, stat] : pairs) {
    if (eps > 0.0 && stat > 0.0 && std::isfinite(stat)) {
      report.pairs.emplace_back(eps, stat);
    } else {
      ++report.excluded;
    }
  }
  const std::size_t n = report.pairs.size();
  if (n < 3) throw InvalidInput("slope fit needs at least 3 positive statistics");

  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(report.pairs[i].first);
    ly[i] = std::log(report.pairs[i].second);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw InvalidInput("slope fit needs distinct eps values");
  report.slope = sxy / sxx;
  report.intercept = my - report.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (report.intercept + report.slope * lx[i]);
    ss_res += r * r;
  }
  // a constant statistic is fitted exactly by slope 0
  report.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return report;
}

// ---------------------------------------------------------------- pipelines

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"forward-converge", "backward-converge",
                                              "rate-forward",     "rate-backward",
                                              "capacity-decay",   "pde-verify",
                                              "gheat"};
  return names;
}

namespace {

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string render() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
  }
};

struct Context {
  const ExperimentConfig& cfg;
  AmbiguityInterval band;
  TimeGrid grid;
  CoefficientSet coeffs;
  std::deque<CsvTable> tables;
  json diagnostics = json::object();

  CsvTable& table(std::string name, std::vector<std::string> header) {
    tables.push_back(CsvTable{std::move(name), std::move(header), {}});
    return tables.back();
  }
  std::vector<VolatilityControl> ensemble() const {
    return make_control_ensemble(grid, band, cfg.ensemble_size, cfg.seed);
  }
  double radius() const {
    return cfg.radius > 0.0 ? cfg.radius : default_domain_radius(coeffs, band, grid.horizon());
  }
};

std::string fmt(double v) { return format_real(v); }
std::string fmt_rate(const RateValue& r) { return r.infinite ? "INF" : fmt(r.value); }

void add_slope_rows(CsvTable& slopes, const std::string& stat,
                    const std::vector<std::pair<double, double>>& pairs) {
  try {
    const SlopeReport rep = fit_slope(pairs);
    slopes.add({stat, fmt(rep.slope), fmt(rep.intercept), fmt(rep.r_squared),
                std::to_string(rep.excluded)});
  } catch (const InvalidInput&) {
    slopes.add({stat, "NAN", "NAN", "NAN", std::to_string(pairs.size())});
  }
}

void run_forward_converge(Context& ctx) {
  const auto ensemble = ctx.ensemble();
  CsvTable& errors = ctx.table("forward_errors.csv", {"eps", "p", "estimate", "stderr"});
  std::vector<std::pair<double, double>> pairs;
  std::vector<Estimate> moments;
  for (double eps : ctx.cfg.eps) {
    const ForwardStatParams params{ctx.cfg.x, eps, ctx.cfg.p, ctx.cfg.mc_per_control,
                                   ctx.cfg.seed};
    const Estimate e = forward_error_stat(ctx.coeffs, ctx.grid, ensemble, params);
    errors.add({fmt(eps), fmt(ctx.cfg.p), fmt(e.value), fmt(e.std_error)});
    pairs.emplace_back(eps, e.value);
    moments.push_back(moment_bound_stat(ctx.coeffs, ctx.grid, ensemble, params));
  }
  CsvTable& moment = ctx.table("moment_bound.csv",
                               {"eps", "p", "estimate", "stderr", "envelope", "exceeds"});
  const double weight = 1.0 + std::pow(std::abs(ctx.cfg.x), ctx.cfg.p);
  const double c_frozen = moments.front().value / weight;
  int exceed = 0;
  for (std::size_t i = 0; i < moments.size(); ++i) {
    const double envelope = c_frozen * weight;
    const bool over = moments[i].value > envelope;
    exceed += over;
    moment.add({fmt(ctx.cfg.eps[i]), fmt(ctx.cfg.p), fmt(moments[i].value),
                fmt(moments[i].std_error), fmt(envelope), over ? "1" : "0"});
  }
  CsvTable& slopes =
      ctx.table("slopes.csv", {"statistic", "slope", "intercept", "r_squared", "excluded"});
  add_slope_rows(slopes, "forward_error", pairs);
  ctx.diagnostics["moment_envelope_constant"] = c_frozen;
  ctx.diagnostics["moment_exceedances"] = exceed;
}

void run_backward_converge(Context& ctx) {
  const auto ensemble = ctx.ensemble();
  CsvTable& errors = ctx.table("backward_errors.csv", {"eps", "errY", "errZ", "errK"});
  CsvTable& diag = ctx.table("backward_diagnostics.csv",
                             {"eps", "scenarios", "clipped_nodes", "k_increase_steps",
                              "k_tolerance", "boundary_flag"});
  std::vector<std::pair<double, double>> py, pz, pk;
  for (double eps : ctx.cfg.eps) {
    BackwardStatParams params;
    params.x = ctx.cfg.x;
    params.eps = eps;
    params.mc_per_control = ctx.cfg.mc_per_control;
    params.seed = ctx.cfg.seed;
    params.mesh = PdeMeshSpec{ctx.cfg.n_x, ctx.radius()};
    const BackwardStats st = backward_error_stats(ctx.coeffs, ctx.grid, ctx.band, ensemble, params);
    errors.add({fmt(eps), fmt(st.err_y.value), fmt(st.err_z.value), fmt(st.err_k.value)});
    diag.add({fmt(eps), std::to_string(st.scenarios), std::to_string(st.clipped_nodes),
              std::to_string(st.k_increase_steps), fmt(st.k_tolerance),
              st.boundary_flag ? "1" : "0"});
    py.emplace_back(eps, st.err_y.value);
    pz.emplace_back(eps, st.err_z.value);
    pk.emplace_back(eps, st.err_k.value);
  }
  CsvTable& slopes =
      ctx.table("slopes.csv", {"statistic", "slope", "intercept", "r_squared", "excluded"});
  add_slope_rows(slopes, "errY", py);
  add_slope_rows(slopes, "errZ", pz);
  add_slope_rows(slopes, "errK", pk);
}

std::vector<double> bump(const TimeGrid& grid, double amplitude) {
  std::vector<double> out(grid.n_steps() + 1);
  for (int k = 0; k <= grid.n_steps(); ++k) {
    const double u = (grid.time(k) - grid.t_start()) / grid.horizon();
    out[k] = amplitude * std::sin(M_PI * u);
  }
  return out;
}

void write_witness(Context& ctx, const std::string& file, const ControlPair& w) {
  CsvTable& t = ctx.table(file, {"t", "phi_dot", "eta_dot"});
  for (std::size_t k = 0; k < w.phi_dot.size(); ++k) {
    t.add({fmt(ctx.grid.time(static_cast<int>(k))), fmt(w.phi_dot[k]), fmt(w.eta_dot[k])});
  }
}

double membership_tol(const Context& ctx) {
  return ctx.cfg.membership_tol > 0.0 ? ctx.cfg.membership_tol
                                      : default_membership_tol(ctx.coeffs, ctx.cfg.x, ctx.grid);
}

void run_rate_forward(Context& ctx) {
  const double x = ctx.cfg.x;
  const StatePath phi = limit_phi(ctx.coeffs, x, ctx.grid);
  const std::vector<double> bumped = bump(ctx.grid, 0.1);
  std::vector<std::pair<std::string, std::vector<double>>> targets;
  targets.emplace_back("limit-path", phi.values);
  std::vector<double> drift(phi.values.size()), lifted(phi.values.size());
  for (std::size_t k = 0; k < drift.size(); ++k) {
    drift[k] = x + 0.6 * (ctx.grid.time(static_cast<int>(k)) - ctx.grid.t_start());
    lifted[k] = phi.values[k] + bumped[k];
  }
  targets.emplace_back("drift-0.6", drift);
  targets.emplace_back("limit-plus-bump", lifted);

  std::vector<std::pair<std::string, RateValue>> results;
  const double tol = membership_tol(ctx);
  for (const auto& [id, path] : targets) {
    results.emplace_back("lambda:" + id, rate_lambda(path, ctx.coeffs, x, ctx.band, ctx.grid));
    std::vector<double> tilde(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) tilde[k] = path[k] - x;
    results.emplace_back("lambda-degenerate:" + id,
                         rate_lambda_degenerate(tilde, ctx.coeffs, x, ctx.grid, ctx.band, tol));
  }
  CsvTable& rates = ctx.table("rates.csv", {"target_id", "value_or_INF", "witness_file"});
  std::size_t next = rates.rows.size();
  std::vector<std::pair<std::string, ControlPair>> witnesses;
  for (const auto& [id, r] : results) {
    std::string file;
    if (r.witness) {
      file = "witness_" + std::to_string(next) + ".csv";
      witnesses.emplace_back(file, *r.witness);
    }
    rates.add({id, fmt_rate(r), file});
    ++next;
  }
  for (const auto& [file, w] : witnesses) write_witness(ctx, file, w);
  ctx.diagnostics["membership_tol"] = tol;
}

void run_rate_backward(Context& ctx) {
  const LimitPair limit = limit_psi(ctx.coeffs, ctx.cfg.x, ctx.grid, ctx.band);
  const std::vector<double> bumped = bump(ctx.grid, 0.1);
  std::vector<double> plus_one = limit.psi, plus_bump = limit.psi;
  for (std::size_t k = 0; k < plus_one.size(); ++k) {
    plus_one[k] += 1.0;
    plus_bump[k] += bumped[k];
  }
  const double tol = membership_tol(ctx);
  CsvTable& rates = ctx.table("rates.csv", {"target_id", "value_or_INF", "witness_file"});
  const std::vector<std::pair<std::string, const std::vector<double>*>> targets{
      {"pi:limit-psi", &limit.psi}, {"pi:psi-plus-1", &plus_one}, {"pi:psi-plus-bump", &plus_bump}};
  for (const auto& [id, path] : targets) {
    const RateValue r = rate_pi(*path, ctx.coeffs, ctx.cfg.x, ctx.grid, ctx.band, tol);
    rates.add({id, fmt_rate(r), ""});
  }
  CsvTable& lim = ctx.table("limit.csv", {"t", "phi", "psi"});
  for (int k = 0; k <= ctx.grid.n_steps(); ++k) {
    lim.add({fmt(ctx.grid.time(k)), fmt(limit.phi.values[k]), fmt(limit.psi[k])});
  }
  ctx.diagnostics["membership_tol"] = tol;
}

void run_capacity_decay(Context& ctx) {
  const auto ensemble = ctx.ensemble();
  const auto rows = ldp_empirical_check(ctx.coeffs, ctx.cfg.x, ctx.grid, EpsilonLadder(ctx.cfg.eps),
                                        ctx.cfg.delta, ensemble, ctx.cfg.mc_per_control,
                                        ctx.cfg.seed);
  CsvTable& t = ctx.table("capacity.csv", {"eps", "delta", "capacity", "stderr", "eps_log_capacity"});
  for (const auto& r : rows) {
    t.add({fmt(r.eps), fmt(ctx.cfg.delta), fmt(r.capacity.value), fmt(r.capacity.std_error),
           r.zero_count ? "-INF" : fmt(r.eps_log_capacity)});
  }
}

void run_pde_verify(Context& ctx) {
  const double eps = ctx.cfg.eps.front();
  const SpaceTimeGrid sg = make_space_time_grid(ctx.coeffs, eps, ctx.band, ctx.grid, ctx.cfg.x,
                                                ctx.radius(), ctx.cfg.n_x);
  const ValueSurface surface = solve_u(ctx.coeffs, eps, ctx.band, sg);

  CsvTable& surf = ctx.table("surface.csv", {"t", "x", "u"});
  const int t_stride = std::max(1, ctx.grid.n_steps() / 10);
  const int x_stride = std::max(1, sg.n_x / 200);
  for (int k = 0; k <= ctx.grid.n_steps(); ++k) {
    if (k % t_stride != 0 && k != ctx.grid.n_steps()) continue;
    for (int i = 0; i <= sg.n_x; i += x_stride) {
      surf.add({fmt(ctx.grid.time(k)), fmt(sg.x(i)), fmt(surface.value(k, i))});
    }
  }

  const auto ensemble = ctx.ensemble();
  const ScenarioDraw draw = sample_scenario(ctx.grid, ensemble.front(), derive_seed(ctx.cfg.seed, 0, 0));
  const StatePath xs = euler_forward(ctx.coeffs, ctx.cfg.x, eps, draw.path);
  const LimitPair limit = limit_psi(ctx.coeffs, ctx.cfg.x, ctx.grid, ctx.band);
  const std::vector<double> m = limit_martingale_m(ctx.coeffs, limit, draw.path, ctx.band);
  const SolutionTriple triple = reconstruct_triple(surface, xs, draw.path, ctx.coeffs, eps);

  CsvTable& sp = ctx.table("sample_path.csv", {"t", "B", "QV"});
  CsvTable& fp = ctx.table("forward_path.csv", {"t", "X", "phi", "abs_err"});
  CsvTable& tr = ctx.table("triple.csv", {"t", "Y", "Z", "K", "M", "psi"});
  for (int k = 0; k <= ctx.grid.n_steps(); ++k) {
    const std::string t = fmt(ctx.grid.time(k));
    sp.add({t, fmt(draw.path.b_values[k]), fmt(draw.path.qv_values[k])});
    fp.add({t, fmt(xs.values[k]), fmt(limit.phi.values[k]),
            fmt(std::abs(xs.values[k] - limit.phi.values[k]))});
    tr.add({t, fmt(triple.y[k]), fmt(triple.z[k]), fmt(triple.k[k]), fmt(m[k]),
            fmt(limit.psi[k])});
  }
  ctx.diagnostics["substeps"] = sg.substeps;
  ctx.diagnostics["dx"] = sg.dx();
  ctx.diagnostics["boundary_flag"] = surface.boundary_influence_flag();
  ctx.diagnostics["clipped_nodes"] = triple.clipped;
  ctx.diagnostics["k_increase_steps"] =
      count_k_increases(triple, k_monotonicity_tolerance(sg, ctx.cfg.k_tol_scale));
}

void run_gheat(Context& ctx) {
  const double horizon = ctx.grid.horizon();
  const double radius = ctx.cfg.radius > 0.0 ? ctx.cfg.radius : 10.0;
  HeatSpaceGrid space{ctx.cfg.x - radius, ctx.cfg.x + radius, ctx.cfg.n_x, 1};
  const double dx = (space.x_max - space.x_min) / space.n_x;
  space.n_steps = std::max(1, static_cast<int>(std::ceil(horizon * ctx.band.var_high() / (dx * dx))));
  const HeatSolution sol = gheat_expectation(ctx.coeffs.phi, horizon, ctx.band, space);
  CsvTable& t = ctx.table("gheat.csv", {"x", "u"});
  for (std::size_t i = 0; i < sol.x.size(); ++i) t.add({fmt(sol.x[i]), fmt(sol.u[i])});
  ctx.diagnostics["heat_steps"] = space.n_steps;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const std::string& experiment) {
  RunResult result;
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    result.exit_code = kExitUsage;
    result.message = "unknown experiment '" + experiment + "'";
    return result;
  }
  try {
    validate_config(config);
  } catch (const ConfigError& e) {
    result.exit_code = kExitInvalidConfig;
    result.message = e.what();
    return result;
  }

  try {
    Context ctx{config, AmbiguityInterval(config.sigma_low, config.sigma_high),
                TimeGrid(config.s, config.T, config.n_steps), make_model(config.model, config.params),
                {}, json::object()};
    if (experiment == "forward-converge") run_forward_converge(ctx);
    else if (experiment == "backward-converge") run_backward_converge(ctx);
    else if (experiment == "rate-forward") run_rate_forward(ctx);
    else if (experiment == "rate-backward") run_rate_backward(ctx);
    else if (experiment == "capacity-decay") run_capacity_decay(ctx);
    else if (experiment == "pde-verify") run_pde_verify(ctx);
    else run_gheat(ctx);

    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["experiment"] = experiment;
    manifest["version"] = kVersion;
    manifest["config"] = config_to_document(config);
    manifest["seeds"] = {{"master", config.seed}};
    manifest["diagnostics"] = ctx.diagnostics;
    json outputs = json::array();
    for (const CsvTable& t : ctx.tables) {
      write_text(dir / t.name, t.render());
      result.files.push_back(t.name);
      outputs.push_back(t.name);
    }
    manifest["outputs"] = outputs;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    result.files.push_back("manifest.json");
    result.message = "ok";
  } catch (const NumericalAbort& e) {
    result.exit_code = kExitNumerical;
    result.message = std::string("numerical abort: ") + e.what();
  } catch (const InvalidInput& e) {
    result.exit_code = kExitInvalidConfig;
    result.message = std::string("invalid configuration: ") + e.what();
  }
  return result;
}

}  // namespace gdeviate
