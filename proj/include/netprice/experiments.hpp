#pragma once

// Seeded Monte-Carlo harness: samples instances, runs every pricing scheme on
// them, aggregates sweeps and writes CSV/JSON reports.
//
// Seeding: run r of a sweep uses split_seed(base_seed, r) for every grid value
// (common random numbers), attempt t of that run uses split_seed(run_seed, t),
// and the graph and parameter draws take sub-streams 0 and 1 of the attempt
// seed. Results therefore never depend on thread count or evaluation order.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "netprice/market_model.hpp"
#include "netprice/sequential_pricing.hpp"

namespace netprice {

enum class GraphKind { ER, EdgeList, Manual };
enum class Normalization { None, ByStatic };
/// Whether runs whose demand goes negative enter the averages.
enum class NegativeDemandPolicy { Include, Exclude };

struct ExperimentConfig {
  int n = 50;
  double p_e = 0.8;
  double mu_a = 1.0;
  double mu_b = 20.0;
  double mu_g = 8.0;
  double c = 10.0;
  int periods = 50;
  int horizon = 50;
  int runs = 50;
  std::uint64_t base_seed = 1;
  GraphKind graph = GraphKind::ER;
  std::string graph_path;  // edge list or manual matrix file
  PriceConvention convention = PriceConvention::Anticipatory;
  Normalization normalization = Normalization::ByStatic;
  NegativeDemandPolicy negative_demand = NegativeDemandPolicy::Include;
  // All tie weights forced to 0 (the flat control curve).
  bool zero_ties = false;
  // Fixed a / b instead of Normal draws: one entry broadcasts, n entries are used as is.
  std::vector<double> a_fixed;
  std::vector<double> b_fixed;
  int threads = 1;
  int max_attempts = 100;
  // Lower clamp for Normal draws of a_i and b_i.
  double param_floor = 0.01;

  /// Throws InvalidArgument on out-of-range fields.
  void check() const;
};

struct RejectionCounts {
  int assumption = 0;
  int singular = 0;
  int noncontracting = 0;

  int total() const { return assumption + singular + noncontracting; }
};

struct SampledInstance {
  std::uint64_t run_seed = 0;
  int attempt = 0;
  MarketParams params;
  SocialGraph graph;
};

/// One draw of (params, graph) for the given attempt; no validity checks.
SampledInstance draw_instance(const ExperimentConfig& config, std::uint64_t run_index, int attempt);

struct AcceptedInstance {
  SampledInstance sample;
  ModelMatrices model;
  ValidationReport report;
  RejectionCounts rejections;
};

/// AssumptionUnsatisfiable carrying the rejection tally of the failed run.
class UnsatisfiableError : public Error {
 public:
  UnsatisfiableError(const std::string& what, RejectionCounts counts)
      : Error(ErrorCode::AssumptionUnsatisfiable, what), counts_(counts) {}
  const RejectionCounts& counts() const { return counts_; }

 private:
  RejectionCounts counts_;
};

/// Draws until Assumption 1 holds, M is invertible and the transition
/// contracts. Throws AssumptionUnsatisfiable after max_attempts draws.
AcceptedInstance sample_valid_instance(const ExperimentConfig& config, std::uint64_t run_index);

struct InstanceRecord {
  std::uint64_t run_index = 0;
  std::uint64_t run_seed = 0;
  int attempts = 0;
  RejectionCounts rejections;
  double rho = 0.0;
  double Pi_s = 0.0;
  double Pi_d = 0.0;
  double U_s = 0.0;
  double U_d = 0.0;
  double Pi_simu = 0.0;
  double Pi_greedy = 0.0;
  // Max minus min cumulative utility after `periods` step-4 periods.
  double spread_fixed = 0.0;
  double spread_fair = 0.0;
  bool negative_demand = false;
  std::vector<std::string> warnings;
};

InstanceRecord run_instance(const ExperimentConfig& config, std::uint64_t run_index);

struct MetricSummary {
  std::string metric;
  std::optional<double> mean;
  std::optional<double> std_error;
  int runs = 0;
  int warnings = 0;
};

struct SweepPoint {
  double value = 0.0;
  std::vector<MetricSummary> metrics;
  int runs_requested = 0;
  // Runs that hit AssumptionUnsatisfiable.
  int failed_runs = 0;
  int negative_demand_runs = 0;
  RejectionCounts rejections;
};

struct SweepResult {
  std::string parameter;
  std::vector<double> grid;
  std::vector<SweepPoint> points;
  std::vector<std::uint64_t> run_seeds;
};

/// Metric names in row order for the given normalization.
std::vector<std::string> metric_names(Normalization normalization);

/// Applies a sweep value to a config. Parameter is one of pe, c, n, mu_g.
ExperimentConfig with_parameter(ExperimentConfig config, const std::string& parameter,
                                double value);

bool is_sweep_parameter(const std::string& parameter);

/// Runs config.runs instances (on config.threads workers) and summarizes them.
SweepPoint run_point(const ExperimentConfig& config, double value);

SweepResult sweep(const ExperimentConfig& config, const std::string& parameter,
                  const std::vector<double>& grid);

struct TraceResult {
  InstanceRecord instance;
  std::vector<double> period_revenue;
  std::vector<double> cumulative_revenue;
  std::vector<double> cumulative_utility;
  double Pi_d = 0.0;
  double U_d = 0.0;
  double Pi_s = 0.0;
  double U_s = 0.0;
};

/// Per-period cumulative revenue and total user utility for run 0.
TraceResult convergence_trace(const ExperimentConfig& config);

/// One output row of the sweep schema.
struct ReportRow {
  std::string parameter;
  double value = 0.0;
  std::string metric;
  std::optional<double> mean;
  std::optional<double> std_error;
  int runs = 0;
  int warnings = 0;

  bool operator==(const ReportRow&) const = default;
};

inline constexpr const char* kCsvHeader = "parameter,value,metric,mean,stderr,runs,warnings";

std::vector<ReportRow> report_rows(const SweepResult& result);

/// %.12g rendering used by every report.
std::string format_number(double value);
/// Value after a round trip through format_number.
double round_to_report(double value);

void emit_csv(const std::vector<ReportRow>& rows, std::ostream& out);
void emit_json(const std::vector<ReportRow>& rows, const std::string& metadata_json,
               std::ostream& out);
/// Parses CSV written by emit_csv; '#' lines are skipped. Throws ParseError.
std::vector<ReportRow> parse_csv(std::istream& in);

/// Resolved config as a JSON object string (keys use underscores).
std::string config_json(const ExperimentConfig& config);

}  // namespace netprice
