#include "netprice/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "netprice/rng.hpp"
#include "netprice/simultaneous_pricing.hpp"
#include "netprice/static_pricing.hpp"

namespace netprice {

namespace {

using nlohmann::json;

constexpr double kDominanceTol = 1e-9;

std::shared_ptr<const GraphSkeleton> cached_edge_list(const std::string& path) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const GraphSkeleton>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(path);
  if (it == cache.end()) {
    it = cache.emplace(path, std::make_shared<const GraphSkeleton>(load_edge_list_file(path))).first;
  }
  return it->second;
}

std::shared_ptr<const SocialGraph> cached_manual_graph(const std::string& path) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const SocialGraph>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(path);
  if (it == cache.end()) {
    it = cache.emplace(path, std::make_shared<const SocialGraph>(load_manual_graph_file(path))).first;
  }
  return it->second;
}

Vector draw_vector(const std::vector<double>& fixed, Eigen::Index n, double mean, double floor,
                   CounterRng& rng) {
  Vector v(n);
  if (fixed.size() == 1) {
    v.setConstant(fixed.front());
  } else if (!fixed.empty()) {
    if (static_cast<Eigen::Index>(fixed.size()) != n) {
      throw Error(ErrorCode::InvalidArgument, "fixed parameter list length does not match N");
    }
    v = Eigen::Map<const Vector>(fixed.data(), n);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::max(floor, rng.normal(mean, 1.0));
  }
  return v;
}

double spread(const Vector& v) { return v.maxCoeff() - v.minCoeff(); }

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::ER: return "er";
    case GraphKind::EdgeList: return "edge_list";
    case GraphKind::Manual: return "manual";
  }
  return "er";
}

std::optional<double> parse_nullable(const std::string& field, int line) {
  if (field == "null") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad number '" + field + "'");
  }
}

int parse_count(const std::string& field, int line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(field, &used);
    if (used != field.size() || v < 0) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad count '" + field + "'");
  }
}

json nullable(const std::optional<double>& v) {
  return v ? json(round_to_report(*v)) : json(nullptr);
}

}  // namespace

void ExperimentConfig::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (n < 1) fail("n must be >= 1");
  if (!(p_e >= 0.0 && p_e <= 1.0)) {
    throw Error(ErrorCode::InvalidProbability, "p_e must lie in [0, 1]");
  }
  if (!std::isfinite(mu_a) || !std::isfinite(mu_b) || !std::isfinite(mu_g)) {
    fail("parameter means must be finite");
  }
  if (!(c >= 0.0) || !std::isfinite(c)) fail("c must be finite and >= 0");
  if (periods < 1) fail("periods must be >= 1");
  if (horizon < 1) fail("horizon must be >= 1");
  if (runs < 1) fail("runs must be >= 1");
  if (threads < 0) fail("threads must be >= 0");
  if (max_attempts < 1) fail("max_attempts must be >= 1");
  if (!(param_floor > 0.0)) fail("param_floor must be > 0");
  if (graph != GraphKind::ER && graph_path.empty()) fail("graph file path is required");
  for (const auto* list : {&a_fixed, &b_fixed}) {
    for (double v : *list) {
      if (!(v > 0.0) || !std::isfinite(v)) fail("fixed a and b values must be finite and > 0");
    }
  }
}

SampledInstance draw_instance(const ExperimentConfig& config, std::uint64_t run_index,
                              int attempt) {
  SampledInstance s;
  s.run_seed = split_seed(config.base_seed, run_index);
  s.attempt = attempt;
  const std::uint64_t attempt_seed = split_seed(s.run_seed, static_cast<std::uint64_t>(attempt));
  const std::uint64_t graph_seed = split_seed(attempt_seed, 0);
  const std::uint64_t param_seed = split_seed(attempt_seed, 1);

  switch (config.graph) {
    case GraphKind::ER:
      if (config.zero_ties) {
        s.graph.n = config.n;
        s.graph.ties = Matrix::Zero(config.n, config.n);
        s.graph.source = GraphSource::ER;
        s.graph.p_e = config.p_e;
        s.graph.seed = graph_seed;
      } else {
        s.graph = generate_er(config.n, config.p_e, config.mu_g, graph_seed);
      }
      break;
    case GraphKind::EdgeList: {
      const auto skeleton = cached_edge_list(config.graph_path);
      const GraphSkeleton sub = sample_subgraph(*skeleton, config.n, split_seed(graph_seed, 0));
      s.graph = assign_ties(sub, config.zero_ties ? 0.0 : config.mu_g, split_seed(graph_seed, 1));
      if (config.zero_ties) s.graph.ties.setZero();
      s.graph.seed = graph_seed;
      break;
    }
    case GraphKind::Manual:
      s.graph = *cached_manual_graph(config.graph_path);
      if (config.zero_ties) s.graph.ties.setZero();
      break;
  }

  CounterRng rng(param_seed);
  const Eigen::Index n = s.graph.n;
  s.params.a = draw_vector(config.a_fixed, n, config.mu_a, config.param_floor, rng);
  s.params.b = draw_vector(config.b_fixed, n, config.mu_b, config.param_floor, rng);
  s.params.c = config.c;
  return s;
}

AcceptedInstance sample_valid_instance(const ExperimentConfig& config, std::uint64_t run_index) {
  config.check();
  RejectionCounts rejected;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    SampledInstance s = draw_instance(config, run_index, attempt);
    if (!check_assumption1(s.params, s.graph).assumption1_ok) {
      ++rejected.assumption;
      continue;
    }
    std::optional<ModelMatrices> model;
    try {
      model = build_matrices(s.params, s.graph);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularMatrix) throw;
      ++rejected.singular;
      continue;
    }
    ValidationReport report = validate_model(*model);
    if (!report.ok()) {
      ++rejected.noncontracting;
      continue;
    }
    return AcceptedInstance{std::move(s), std::move(*model), std::move(report), rejected};
  }
  std::ostringstream msg;
  msg << "run " << run_index << ": no valid instance in " << config.max_attempts
      << " draws (assumption " << rejected.assumption << ", singular " << rejected.singular
      << ", non-contracting " << rejected.noncontracting << ")";
  throw UnsatisfiableError(msg.str(), rejected);
}

InstanceRecord run_instance(const ExperimentConfig& config, std::uint64_t run_index) {
  const AcceptedInstance inst = sample_valid_instance(config, run_index);
  const ModelMatrices& m = inst.model;

  InstanceRecord r;
  r.run_index = run_index;
  r.run_seed = inst.sample.run_seed;
  r.attempts = inst.sample.attempt + 1;
  r.rejections = inst.rejections;
  r.rho = std::sqrt(inst.report.rho_T_squared);

  const StaticOutcome st = solve_static(m, DemandCheck::Permissive);
  r.Pi_s = st.revenue;
  r.U_s = st.welfare;
  r.Pi_d = revenue_closed_form(m);
  r.U_d = welfare_dynamic(m);
  if (st.negative_demand) r.warnings.emplace_back("negative static demand");

  const SimuPlan plan = solve_simultaneous(m, config.horizon, DemandCheck::Permissive);
  r.Pi_simu = plan.revenue;
  if ((plan.x_star.array() < -1e-12).any()) r.warnings.emplace_back("negative simultaneous demand");
  if (!plan.negative_price_periods.empty()) r.warnings.emplace_back("negative simultaneous prices");
  r.Pi_greedy = run_greedy(m, config.horizon).total_revenue();

  const auto fixed = run_sequential(m, config.periods, PriceConvention::Step4,
                                    FixedOrder{VisitOrder::identity(m.n())});
  const auto fair = run_sequential(m, config.periods, PriceConvention::Step4, RoundRobinFair{});
  r.spread_fixed = spread(cumulative_user_utilities(fixed, config.periods, m));
  r.spread_fair = spread(cumulative_user_utilities(fair, config.periods, m));
  if (!fixed.negative_demand_periods.empty()) {
    r.warnings.emplace_back("negative sequential demand");
  }

  r.negative_demand = st.negative_demand || !fixed.negative_demand_periods.empty() ||
                      (plan.x_star.array() < -1e-12).any();
  return r;
}

std::vector<std::string> metric_names(Normalization normalization) {
  std::vector<std::string> names = {"Pi_s",    "Pi_d",      "U_s",          "U_d",
                                    "Pi_simu", "Pi_greedy", "spread_fixed", "spread_fair"};
  if (normalization == Normalization::ByStatic) {
    for (const char* name : {"Pi_s_norm", "Pi_d_norm", "U_s_norm", "U_d_norm", "Pi_simu_norm",
                             "Pi_greedy_norm"}) {
      names.emplace_back(name);
    }
  }
  return names;
}

bool is_sweep_parameter(const std::string& parameter) {
  return parameter == "pe" || parameter == "c" || parameter == "n" || parameter == "mu_g";
}

ExperimentConfig with_parameter(ExperimentConfig config, const std::string& parameter,
                                double value) {
  if (parameter == "pe") {
    config.p_e = value;
  } else if (parameter == "c") {
    config.c = value;
  } else if (parameter == "mu_g") {
    config.mu_g = value;
  } else if (parameter == "n") {
    if (config.graph == GraphKind::Manual) {
      throw Error(ErrorCode::InvalidArgument, "cannot sweep n over a manual graph");
    }
    if (value < 1.0 || value != std::floor(value) || value > 1e6) {
      throw Error(ErrorCode::InvalidArgument, "n grid values must be positive integers");
    }
    config.n = static_cast<int>(value);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown sweep parameter '" + parameter + "'");
  }
  config.check();
  return config;
}

namespace {

std::vector<double> metric_values(const InstanceRecord& r, Normalization normalization) {
  std::vector<double> v = {r.Pi_s,    r.Pi_d,      r.U_s,          r.U_d,
                           r.Pi_simu, r.Pi_greedy, r.spread_fixed, r.spread_fair};
  if (normalization == Normalization::ByStatic) {
    v.insert(v.end(), {r.Pi_s / r.Pi_s, r.Pi_d / r.Pi_s, r.U_s / r.U_s, r.U_d / r.U_s,
                       r.Pi_simu / r.Pi_s, r.Pi_greedy / r.Pi_s});
  }
  return v;
}

void check_dominance(const InstanceRecord& r) {
  const bool revenue_ok = r.Pi_d >= r.Pi_s - kDominanceTol * std::abs(r.Pi_s);
  const bool welfare_ok = r.U_d >= r.U_s - kDominanceTol * std::abs(r.U_s);
  if (!revenue_ok || !welfare_ok) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "run " << r.run_index << ": dynamic pricing does not dominate static (Pi_d " << r.Pi_d
        << " vs Pi_s " << r.Pi_s << ", U_d " << r.U_d << " vs U_s " << r.U_s << ")";
    throw Error(ErrorCode::InvariantViolated, msg.str());
  }
}

}  // namespace

SweepPoint run_point(const ExperimentConfig& config, double value) {
  config.check();
  const auto runs = static_cast<std::size_t>(config.runs);
  std::vector<std::optional<InstanceRecord>> records(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::vector<RejectionCounts> failed(runs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      try {
        records[i] = run_instance(config, i);
      } catch (const UnsatisfiableError& e) {
        failed[i] = e.counts();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t workers = config.threads == 0 ? std::thread::hardware_concurrency()
                                            : static_cast<std::size_t>(config.threads);
  workers = std::clamp<std::size_t>(workers, 1, runs);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SweepPoint point;
  point.value = value;
  point.runs_requested = config.runs;
  const auto names = metric_names(config.normalization);
  std::vector<std::vector<double>> samples(names.size());
  for (std::size_t i = 0; i < runs; ++i) {
    const auto& rec = records[i];
    const RejectionCounts& rej = rec ? rec->rejections : failed[i];
    point.rejections.assumption += rej.assumption;
    point.rejections.singular += rej.singular;
    point.rejections.noncontracting += rej.noncontracting;
    if (!rec) {
      ++point.failed_runs;
      continue;
    }
    if (rec->negative_demand) {
      ++point.negative_demand_runs;
      if (config.negative_demand == NegativeDemandPolicy::Exclude) continue;
    }
    // Dominance needs interior demand; runs with negative demand are only recorded.
    if (!rec->negative_demand) check_dominance(*rec);
    const auto values = metric_values(*rec, config.normalization);
    for (std::size_t k = 0; k < names.size(); ++k) samples[k].push_back(values[k]);
  }

  for (std::size_t k = 0; k < names.size(); ++k) {
    MetricSummary s;
    s.metric = names[k];
    s.runs = static_cast<int>(samples[k].size());
    s.warnings = point.failed_runs + point.negative_demand_runs;
    if (!samples[k].empty()) {
      double sum = 0.0;
      for (double v : samples[k]) sum += v;
      const double mean = sum / s.runs;
      s.mean = mean;
      if (s.runs >= 2) {
        double ss = 0.0;
        for (double v : samples[k]) ss += (v - mean) * (v - mean);
        s.std_error = std::sqrt(ss / (s.runs - 1)) / std::sqrt(static_cast<double>(s.runs));
      }
    }
    point.metrics.push_back(std::move(s));
  }
  return point;
}

SweepResult sweep(const ExperimentConfig& config, const std::string& parameter,
                  const std::vector<double>& grid) {
  if (!is_sweep_parameter(parameter)) {
    throw Error(ErrorCode::InvalidArgument, "unknown sweep parameter '" + parameter + "'");
  }
  config.check();
  SweepResult result;
  result.parameter = parameter;
  result.grid = grid;
  for (int r = 0; r < config.runs; ++r) {
    result.run_seeds.push_back(split_seed(config.base_seed, static_cast<std::uint64_t>(r)));
  }
  for (double value : grid) {
    result.points.push_back(run_point(with_parameter(config, parameter, value), value));
  }
  return result;
}

TraceResult convergence_trace(const ExperimentConfig& config) {
  const AcceptedInstance inst = sample_valid_instance(config, 0);
  const ModelMatrices& m = inst.model;

  TraceResult t;
  t.instance = run_instance(config, 0);
  t.Pi_s = t.instance.Pi_s;
  t.U_s = t.instance.U_s;
  t.Pi_d = t.instance.Pi_d;
  t.U_d = t.instance.U_d;

  const auto traj = run_sequential(m, config.periods, config.convention,
                                   FixedOrder{VisitOrder::identity(m.n())});
  double total = 0.0;
  for (int k = 0; k < config.periods; ++k) {
    total += traj.per_period_revenue[k];
    t.period_revenue.push_back(traj.per_period_revenue[k]);
    t.cumulative_revenue.push_back(total);
    t.cumulative_utility.push_back(gross_utility(traj.y[k], m) - total);
  }
  return t;
}

std::vector<ReportRow> report_rows(const SweepResult& result) {
  std::vector<ReportRow> rows;
  for (const auto& point : result.points) {
    for (const auto& s : point.metrics) {
      rows.push_back(
          ReportRow{result.parameter, point.value, s.metric, s.mean, s.std_error, s.runs, s.warnings});
    }
  }
  return rows;
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double round_to_report(double value) { return std::stod(format_number(value)); }

void emit_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.parameter << ',' << format_number(r.value) << ',' << r.metric << ','
        << (r.mean ? format_number(*r.mean) : "null") << ','
        << (r.std_error ? format_number(*r.std_error) : "null") << ',' << r.runs << ','
        << r.warnings << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed to write CSV output");
}

void emit_json(const std::vector<ReportRow>& rows, const std::string& metadata_json,
               std::ostream& out) {
  json doc;
  doc["metadata"] = metadata_json.empty() ? json::object() : json::parse(metadata_json);
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"parameter", r.parameter},
                   {"value", round_to_report(r.value)},
                   {"metric", r.metric},
                   {"mean", nullable(r.mean)},
                   {"stderr", nullable(r.std_error)},
                   {"runs", r.runs},
                   {"warnings", r.warnings}});
  }
  doc["rows"] = std::move(arr);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed to write JSON output");
}

std::vector<ReportRow> parse_csv(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 7 fields");
    }
    ReportRow r;
    r.parameter = fields[0];
    const auto value = parse_nullable(fields[1], line_no);
    if (!value) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": null value");
    r.value = *value;
    r.metric = fields[2];
    r.mean = parse_nullable(fields[3], line_no);
    r.std_error = parse_nullable(fields[4], line_no);
    r.runs = parse_count(fields[5], line_no);
    r.warnings = parse_count(fields[6], line_no);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "missing CSV header");
  return rows;
}

std::string config_json(const ExperimentConfig& config) {
  json j = {
      {"n", config.n},
      {"pe", config.p_e},
      {"mu_a", config.mu_a},
      {"mu_b", config.mu_b},
      {"mu_g", config.mu_g},
      {"c", config.c},
      {"periods", config.periods},
      {"horizon", config.horizon},
      {"runs", config.runs},
      {"seed", config.base_seed},
      {"graph", to_string(config.graph)},
      {"graph_path", config.graph_path},
      {"convention", config.convention == PriceConvention::Anticipatory ? "anticipatory" : "step4"},
      {"normalization", config.normalization == Normalization::ByStatic ? "static" : "none"},
      {"negative_demand",
       config.negative_demand == NegativeDemandPolicy::Include ? "include" : "exclude"},
      {"zero_ties", config.zero_ties},
      {"a", config.a_fixed},
      {"b", config.b_fixed},
      {"max_attempts", config.max_attempts},
      {"param_floor", config.param_floor},
      {"resampling", "graph and parameters redrawn every run"},
      {"seed_derivation",
       "run_seed = split_seed(seed, run); attempt_seed = split_seed(run_seed, attempt); "
       "graph = split_seed(attempt_seed, 0); params = split_seed(attempt_seed, 1)"},
  };
  return j.dump();
}

}  // namespace netprice
