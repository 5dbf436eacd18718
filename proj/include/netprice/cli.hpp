#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "netprice/experiments.hpp"

namespace netprice::cli {

enum class OutputFormat { Csv, Json };
enum class OrderKind { Fixed, Fair };

/// Bad command line; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliInvocation {
  std::string subcommand;
  ExperimentConfig config;
  OrderKind order = OrderKind::Fixed;
  std::string param;
  std::vector<double> grid;
  OutputFormat format = OutputFormat::Csv;
  std::string out_path;
  // Set when --help was requested; holds the help text.
  std::string help;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitModelError = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv (argv[0] is the program name). Throws UsageError.
CliInvocation parse_args(const std::vector<std::string>& args);

/// Runs the invocation, writing results to `out` (or the --out file) and
/// structured errors to `err`. Returns the exit code.
int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err);

/// parse_args + dispatch with usage errors reported on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netprice::cli
