#include "netprice/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "netprice/rng.hpp"
#include "netprice/simultaneous_pricing.hpp"
#include "netprice/static_pricing.hpp"

namespace netprice::cli {

namespace {

using nlohmann::json;

// Value-taking flags, in help order. Config-file keys are these names with
// hyphens replaced by underscores.
const std::vector<std::pair<std::string, std::string>> kValueFlags = {
    {"n", "number of users"},
    {"pe", "edge probability of the ER graph"},
    {"mu-a", "mean of a_i ~ Normal(mu_a, 1)"},
    {"mu-b", "mean of b_i ~ Normal(mu_b, 1)"},
    {"mu-g", "mean tie weight ~ Normal(mu_g, 1)"},
    {"c", "congestion coefficient"},
    {"periods", "sequential pricing periods"},
    {"horizon", "simultaneous pricing horizon T (also the greedy horizon)"},
    {"runs", "Monte-Carlo runs per grid value"},
    {"seed", "base seed"},
    {"graph", "edge-list file; N users are sampled from it"},
    {"manual-graph", "explicit symmetric weight matrix file (CSV or whitespace)"},
    {"order", "visit order policy: fixed|fair"},
    {"convention", "sequential price convention: anticipatory|step4"},
    {"param", "sweep parameter: pe|c|n|mu_g"},
    {"grid", "comma-separated sweep values"},
    {"format", "output format: csv|json"},
    {"out", "write output to this file instead of stdout"},
    {"a", "fixed a_i: one value or a comma list of N values"},
    {"b", "fixed b_i: one value or a comma list of N values"},
    {"threads", "worker threads for sweeps (0 = hardware)"},
    {"negative-demand", "runs with negative demand: include|exclude"},
    {"normalization", "sweep metrics normalized by the static baseline: static|none"},
};

const std::vector<std::string> kSubcommands = {"validate", "static", "seqdp",  "simudp",
                                               "greedy",   "sweep",  "trace",  "graph-stats"};

double parse_real(const std::string& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("--" + flag + ": expected a real number, got '" + text + "'");
}

long long parse_int(const std::string& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("--" + flag + ": expected an integer, got '" + text + "'");
}

int parse_small_int(const std::string& flag, const std::string& text) {
  const long long v = parse_int(flag, text);
  if (v < 0 || v > 1'000'000'000) throw UsageError("--" + flag + ": value out of range");
  return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& text) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text.front() != '-') {
      const unsigned long long v = std::stoull(text, &used);
      if (used == text.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw UsageError("--seed: expected a non-negative integer, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& flag, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(flag, item));
  if (out.empty()) throw UsageError("--" + flag + ": empty list");
  return out;
}

void apply_flag(CliInvocation& inv, const std::string& flag, const std::string& value) {
  auto& cfg = inv.config;
  if (flag == "n") {
    cfg.n = parse_small_int(flag, value);
  } else if (flag == "pe") {
    cfg.p_e = parse_real(flag, value);
  } else if (flag == "mu-a") {
    cfg.mu_a = parse_real(flag, value);
  } else if (flag == "mu-b") {
    cfg.mu_b = parse_real(flag, value);
  } else if (flag == "mu-g") {
    cfg.mu_g = parse_real(flag, value);
  } else if (flag == "c") {
    cfg.c = parse_real(flag, value);
  } else if (flag == "periods") {
    cfg.periods = parse_small_int(flag, value);
  } else if (flag == "horizon") {
    cfg.horizon = parse_small_int(flag, value);
  } else if (flag == "runs") {
    cfg.runs = parse_small_int(flag, value);
  } else if (flag == "seed") {
    cfg.base_seed = parse_seed(value);
  } else if (flag == "graph") {
    cfg.graph = GraphKind::EdgeList;
    cfg.graph_path = value;
  } else if (flag == "manual-graph") {
    cfg.graph = GraphKind::Manual;
    cfg.graph_path = value;
  } else if (flag == "order") {
    if (value == "fixed") {
      inv.order = OrderKind::Fixed;
    } else if (value == "fair") {
      inv.order = OrderKind::Fair;
    } else {
      throw UsageError("--order: expected fixed|fair, got '" + value + "'");
    }
  } else if (flag == "convention") {
    if (value == "anticipatory") {
      cfg.convention = PriceConvention::Anticipatory;
    } else if (value == "step4") {
      cfg.convention = PriceConvention::Step4;
    } else {
      throw UsageError("--convention: expected anticipatory|step4, got '" + value + "'");
    }
  } else if (flag == "param") {
    if (!is_sweep_parameter(value)) {
      throw UsageError("--param: expected pe|c|n|mu_g, got '" + value + "'");
    }
    inv.param = value;
  } else if (flag == "grid") {
    inv.grid = parse_list(flag, value);
  } else if (flag == "format") {
    if (value == "csv") {
      inv.format = OutputFormat::Csv;
    } else if (value == "json") {
      inv.format = OutputFormat::Json;
    } else {
      throw UsageError("--format: expected csv|json, got '" + value + "'");
    }
  } else if (flag == "out") {
    inv.out_path = value;
  } else if (flag == "a") {
    cfg.a_fixed = parse_list(flag, value);
  } else if (flag == "b") {
    cfg.b_fixed = parse_list(flag, value);
  } else if (flag == "threads") {
    cfg.threads = parse_small_int(flag, value);
  } else if (flag == "negative-demand") {
    if (value == "include") {
      cfg.negative_demand = NegativeDemandPolicy::Include;
    } else if (value == "exclude") {
      cfg.negative_demand = NegativeDemandPolicy::Exclude;
    } else {
      throw UsageError("--negative-demand: expected include|exclude, got '" + value + "'");
    }
  } else if (flag == "normalization") {
    if (value == "static") {
      cfg.normalization = Normalization::ByStatic;
    } else if (value == "none") {
      cfg.normalization = Normalization::None;
    } else {
      throw UsageError("--normalization: expected static|none, got '" + value + "'");
    }
  } else if (flag == "zero-ties") {
    if (value == "true") {
      cfg.zero_ties = true;
    } else if (value == "false") {
      cfg.zero_ties = false;
    } else {
      throw UsageError("--zero-ties: expected true|false, got '" + value + "'");
    }
  } else {
    throw UsageError("unknown option --" + flag);
  }
}

std::string json_to_flag_text(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_array()) {
    std::string joined;
    for (const auto& item : v) {
      if (!item.is_number()) throw UsageError("--config: key '" + key + "' must hold numbers");
      if (!joined.empty()) joined += ',';
      joined += item.is_number_float() ? format_number(item.get<double>()) : item.dump();
    }
    return joined;
  }
  throw UsageError("--config: unsupported value for key '" + key + "'");
}

void apply_config_file(CliInvocation& inv, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("--config: invalid JSON in '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw UsageError("--config: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    std::string flag = key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    const bool known = flag == "zero-ties" ||
                       std::any_of(kValueFlags.begin(), kValueFlags.end(),
                                   [&](const auto& f) { return f.first == flag; });
    if (!known) throw UsageError("--config: unknown key '" + key + "'");
    apply_flag(inv, flag, json_to_flag_text(key, value));
  }
}

// ---------------------------------------------------------------------------
// Output helpers

json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(round_to_report(v(i)));
  return arr;
}

json num(double v) { return json(round_to_report(v)); }

json config_object(const ExperimentConfig& cfg) { return json::parse(config_json(cfg)); }

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorCode::IoError, "cannot open output file '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::IoError, "failed to write output");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

void write_csv_metadata(std::ostream& out, const json& metadata) {
  for (const auto& [key, value] : metadata.items()) {
    out << "# " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
        << '\n';
  }
}

void write_json(std::ostream& out, const json& doc) { out << doc.dump(2) << '\n'; }

json base_metadata(const CliInvocation& inv) {
  json md;
  md["command"] = inv.subcommand;
  md["config"] = config_object(inv.config);
  md["run_seed"] = split_seed(inv.config.base_seed, 0);
  return md;
}

// Single instance for the solver commands: run 0, first draw, no resampling.
ModelMatrices checked_model(const ExperimentConfig& cfg) {
  const SampledInstance s = draw_instance(cfg, 0, 0);
  const ValidationReport a1 = check_assumption1(s.params, s.graph);
  if (!a1.assumption1_ok) {
    std::ostringstream msg;
    msg << "Assumption 1 violated (smallest margin " << a1.assumption1_margins.minCoeff() << ")";
    throw Error(ErrorCode::AssumptionViolated, msg.str());
  }
  ModelMatrices m = build_matrices(s.params, s.graph);
  const ValidationReport v = validate_model(m);
  if (!(v.rho_T_squared < 1.0)) {
    std::ostringstream msg;
    msg << "period transition does not contract (squared spectral radius " << v.rho_T_squared
        << ")";
    throw Error(ErrorCode::AssumptionViolated, msg.str());
  }
  return m;
}

json series_rows(const std::vector<double>& revenue) {
  json rows = json::array();
  double total = 0.0;
  for (std::size_t k = 0; k < revenue.size(); ++k) {
    total += revenue[k];
    rows.push_back({{"period", k + 1}, {"revenue", num(revenue[k])}, {"cumulative_revenue", num(total)}});
  }
  return rows;
}

void write_series_csv(std::ostream& out, const json& metadata, const json& rows,
                      const std::vector<std::string>& columns) {
  write_csv_metadata(out, metadata);
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const json& v = row.at(columns[i]);
      out << (i ? "," : "") << (v.is_number_float() ? format_number(v.get<double>()) : v.dump());
    }
    out << '\n';
  }
}

json trajectory_periods(const DemandTrajectory& traj) {
  json rows = series_rows(traj.per_period_revenue);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k]["order"] = traj.orders[k].order;
    rows[k]["x"] = to_json(traj.x[k]);
    rows[k]["y"] = to_json(traj.y[k]);
    rows[k]["p"] = to_json(traj.p[k]);
  }
  return rows;
}

void emit_document(const CliInvocation& inv, std::ostream& out, const json& metadata,
                   const json& rows, const std::vector<std::string>& columns) {
  if (inv.format == OutputFormat::Json) {
    write_json(out, json{{"metadata", metadata}, {"rows", rows}});
  } else {
    write_series_csv(out, metadata, rows, columns);
  }
}

// ---------------------------------------------------------------------------
// Commands

void cmd_validate(const CliInvocation& inv, std::ostream& out, int& code) {
  const SampledInstance s = draw_instance(inv.config, 0, 0);
  const ValidationReport r = validate_model(s.params, s.graph);
  json md = base_metadata(inv);
  json report = {{"assumption1_ok", r.assumption1_ok},
                 {"assumption1_margins", to_json(r.assumption1_margins)},
                 {"invertible", r.invertible},
                 {"rho_T_squared", r.invertible ? num(r.rho_T_squared) : json(nullptr)},
                 {"rho_converged", r.rho_converged},
                 {"demand_nonnegative", r.demand_nonnegative},
                 {"ok", r.ok()},
                 {"warnings", r.warnings}};
  write_json(out, json{{"metadata", md}, {"report", report}});
  code = r.ok() ? kExitOk : kExitModelError;
}

void cmd_static(const CliInvocation& inv, std::ostream& out) {
  const ModelMatrices m = checked_model(inv.config);
  const StaticOutcome st = solve_static(m, DemandCheck::Strict);
  write_json(out, json{{"metadata", base_metadata(inv)},
                       {"x_hat", to_json(st.x_hat)},
                       {"p_hat", to_json(st.p_hat)},
                       {"revenue", num(st.revenue)},
                       {"welfare", num(st.welfare)}});
}

void cmd_seqdp(const CliInvocation& inv, std::ostream& out) {
  const ModelMatrices m = checked_model(inv.config);
  const OrderPolicy policy = inv.order == OrderKind::Fair
                                 ? OrderPolicy{RoundRobinFair{}}
                                 : OrderPolicy{FixedOrder{VisitOrder::identity(m.n())}};
  const auto traj = run_sequential(m, inv.config.periods, inv.config.convention, policy);
  const StaticOutcome st = solve_static(m, DemandCheck::Permissive);

  json md = base_metadata(inv);
  md["order"] = inv.order == OrderKind::Fair ? "fair" : "fixed";
  md["Pi_s"] = num(st.revenue);
  md["U_s"] = num(st.welfare);
  md["Pi_d"] = num(revenue_closed_form(m));
  md["U_d"] = num(welfare_dynamic(m));
  md["negative_demand_periods"] = traj.negative_demand_periods;
  json rows = inv.format == OutputFormat::Json ? trajectory_periods(traj)
                                               : series_rows(traj.per_period_revenue);
  emit_document(inv, out, md, rows, {"period", "revenue", "cumulative_revenue"});
}

void cmd_simudp(const CliInvocation& inv, std::ostream& out) {
  const ModelMatrices m = checked_model(inv.config);
  const SimuPlan plan = solve_simultaneous(m, inv.config.horizon, DemandCheck::Strict);

  json md = base_metadata(inv);
  md["revenue"] = num(plan.revenue);
  json neg = json::array();
  for (const auto& [k, i] : plan.negative_price_periods) neg.push_back({k, i});
  md["negative_prices"] = neg;
  md["warnings"] = plan.negative_price_periods.empty()
                       ? json::array()
                       : json::array({"negative prices (subsidies) in the plan"});
  std::vector<double> revenue;
  for (const auto& p : plan.prices) revenue.push_back(p.dot(plan.x_star));
  json rows = series_rows(revenue);
  if (inv.format == OutputFormat::Json) {
    md["x_star"] = to_json(plan.x_star);
    md["Xi"] = to_json(plan.Xi);
    md["Phi"] = to_json(plan.Phi);
    for (std::size_t k = 0; k < rows.size(); ++k) rows[k]["p"] = to_json(plan.prices[k]);
  }
  emit_document(inv, out, md, rows, {"period", "revenue", "cumulative_revenue"});
}

void cmd_greedy(const CliInvocation& inv, std::ostream& out) {
  const ModelMatrices m = checked_model(inv.config);
  const auto traj = run_greedy(m, inv.config.horizon);
  json md = base_metadata(inv);
  md["revenue"] = num(traj.total_revenue());
  md["rational_revenue"] =
      num(solve_simultaneous(m, inv.config.horizon, DemandCheck::Permissive).revenue);
  json rows = inv.format == OutputFormat::Json ? trajectory_periods(traj)
                                               : series_rows(traj.per_period_revenue);
  emit_document(inv, out, md, rows, {"period", "revenue", "cumulative_revenue"});
}

void cmd_trace(const CliInvocation& inv, std::ostream& out) {
  const TraceResult t = convergence_trace(inv.config);
  json md = base_metadata(inv);
  md["attempts"] = t.instance.attempts;
  md["Pi_s"] = num(t.Pi_s);
  md["U_s"] = num(t.U_s);
  md["Pi_d"] = num(t.Pi_d);
  md["U_d"] = num(t.U_d);
  json rows = series_rows(t.period_revenue);
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k]["cumulative_utility"] = num(t.cumulative_utility[k]);
  emit_document(inv, out, md, rows, {"period", "revenue", "cumulative_revenue", "cumulative_utility"});
}

void cmd_sweep(const CliInvocation& inv, std::ostream& out) {
  if (inv.param.empty()) throw UsageError("sweep requires --param");
  if (inv.grid.empty()) throw UsageError("sweep requires --grid");
  const SweepResult result = sweep(inv.config, inv.param, inv.grid);

  json md = base_metadata(inv);
  md.erase("run_seed");
  md["param"] = inv.param;
  md["grid"] = inv.grid;
  md["run_seeds"] = result.run_seeds;
  json points = json::array();
  for (const auto& p : result.points) {
    points.push_back({{"value", num(p.value)},
                      {"failed_runs", p.failed_runs},
                      {"negative_demand_runs", p.negative_demand_runs},
                      {"rejected_assumption", p.rejections.assumption},
                      {"rejected_singular", p.rejections.singular},
                      {"rejected_noncontracting", p.rejections.noncontracting}});
  }
  md["points"] = points;

  const auto rows = report_rows(result);
  if (inv.format == OutputFormat::Json) {
    emit_json(rows, md.dump(), out);
  } else {
    write_csv_metadata(out, md);
    emit_csv(rows, out);
  }
}

void cmd_graph_stats(const CliInvocation& inv, std::ostream& out) {
  json md = base_metadata(inv);
  json stats;
  if (inv.config.graph == GraphKind::EdgeList) {
    const GraphSkeleton sk = load_edge_list_file(inv.config.graph_path);
    const GraphStats s = graph_stats(sk);
    stats = {{"n", sk.n},
             {"tie_count", s.tie_count},
             {"edge_probability", num(s.edge_probability)},
             {"self_loops_ignored", sk.self_loops_ignored}};
  } else {
    const SampledInstance s = draw_instance(inv.config, 0, 0);
    const GraphStats g = graph_stats(s.graph);
    stats = {{"n", s.graph.n}, {"tie_count", g.tie_count}, {"edge_probability", num(g.edge_probability)}};
  }
  write_json(out, json{{"metadata", md}, {"stats", stats}});
}

void write_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

CliInvocation parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Dynamic pricing simulator for social data markets", "netprice"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_help_flag("-h,--help", "print help");

  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> opts;
  for (const auto& [flag, help] : kValueFlags) {
    opts[flag] = app.add_option("--" + flag, raw[flag], help);
  }
  std::string config_path;
  auto* config_opt = app.add_option("--config", config_path, "JSON config file; flags override it");
  auto* zero_ties = app.add_flag("--zero-ties", "force every tie weight to 0");

  for (const auto& name : kSubcommands) app.add_subcommand(name)->fallthrough();

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  CliInvocation inv;
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    inv.help = app.help();
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (auto* sub : app.get_subcommands()) inv.subcommand = sub->get_name();

  if (config_opt->count() > 0) apply_config_file(inv, config_path);
  for (const auto& [flag, help] : kValueFlags) {
    if (opts[flag]->count() > 0) apply_flag(inv, flag, raw[flag]);
  }
  if (zero_ties->count() > 0) inv.config.zero_ties = true;
  if (opts["graph"]->count() > 0 && opts["manual-graph"]->count() > 0) {
    throw UsageError("--graph and --manual-graph are mutually exclusive");
  }
  if (inv.subcommand != "sweep" && (!inv.param.empty() || !inv.grid.empty())) {
    throw UsageError("--param/--grid only apply to sweep");
  }
  return inv;
}

int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  if (!inv.help.empty()) {
    out << inv.help;
    return kExitOk;
  }
  int code = kExitOk;
  try {
    CliInvocation resolved = inv;
    if (resolved.config.graph == GraphKind::Manual) {
      resolved.config.n = static_cast<int>(load_manual_graph_file(resolved.config.graph_path).n);
    }
    try {
      resolved.config.check();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    std::ostringstream buffer;
    const auto& cmd = resolved.subcommand;
    if (cmd == "validate") {
      cmd_validate(resolved, buffer, code);
    } else if (cmd == "static") {
      cmd_static(resolved, buffer);
    } else if (cmd == "seqdp") {
      cmd_seqdp(resolved, buffer);
    } else if (cmd == "simudp") {
      cmd_simudp(resolved, buffer);
    } else if (cmd == "greedy") {
      cmd_greedy(resolved, buffer);
    } else if (cmd == "sweep") {
      cmd_sweep(resolved, buffer);
    } else if (cmd == "trace") {
      cmd_trace(resolved, buffer);
    } else if (cmd == "graph-stats") {
      cmd_graph_stats(resolved, buffer);
    } else {
      throw UsageError("unknown subcommand '" + cmd + "'");
    }
    Sink sink(resolved.out_path, out);
    sink.get() << buffer.str();
    sink.finish();
  } catch (const UsageError& e) {
    write_error(err, "UsageError", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    write_error(err, to_string(e.code()), e.what());
    return kExitModelError;
  } catch (const std::exception& e) {
    write_error(err, "InternalError", e.what());
    return kExitModelError;
  }
  return code;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliInvocation inv;
  try {
    inv = parse_args(args);
  } catch (const UsageError& e) {
    write_error(err, "UsageError", e.what());
    return kExitUsage;
  }
  return dispatch(inv, out, err);
}

}  // namespace netprice::cli
