#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hoag/baselines.hpp"
#include "hoag/core.hpp"
#include "hoag/dataio.hpp"
#include "hoag/hoag.hpp"

namespace hoag::cli {

enum class Method { hoag, iterdiff, grid, random };

const char* to_string(Method method);
Method method_from_string(const std::string& name);

/// Exit codes of the experiment commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolverAbort = 2;

struct SyntheticSpec {
  Index n = 200;
  Index p = 20;
  Index classes = 0;  // multifeature only; 0 picks 3
};

/// Parses "n,p" or "n,p,K".
SyntheticSpec parse_synthetic(const std::string& text);
/// Parses a comma-separated list of reals.
std::vector<double> parse_real_list(const std::string& text);

struct RunSpec {
  std::string problem = "logistic";  // toy | logistic | kernel-ridge | multifeature
  std::string data_path;             // libsvm, or CSV when the name ends in .csv
  std::optional<SyntheticSpec> synthetic;
  Method method = Method::hoag;
  ScheduleKind schedule = ScheduleKind::exponential;
  std::uint64_t seed = 0;
  std::int64_t max_iters = 100;
  std::string out;
  int grid_points = 10;
  int iterdiff_steps = kDefaultInnerMaxIters;
  std::optional<HyperParams> lambda0;
  double noise = 0.1;        // synthetic regression noise
  Index target_column = -1;  // CSV; negative counts from the end
  std::vector<double> toy_c{2.0};
  std::vector<double> toy_d{0.5};

  /// Row label used by compare.
  std::string label() const;
  /// Everything that determines the problem instance (not the method).
  std::string instance_key() const;
  void validate() const;
};

/// Outer problem on the test split plus the same model scored on the validation split.
struct ProblemInstance {
  std::unique_ptr<BilevelProblem> problem;
  std::unique_ptr<BilevelProblem> validation;
};

ProblemInstance build_problem(const RunSpec& spec);

struct RunOutcome {
  HyperParams final_lambda;
  double final_outer_value = 0.0;
  std::vector<TraceRecord> trace;
  double wall_time = 0.0;
};

/// Executes one spec against an already-built problem.
RunOutcome execute(const RunSpec& spec, const BilevelProblem& problem, const TraceSink& sink = {});

/// One JSON object per line.
std::string trace_record_json(const TraceRecord& record);
std::string summary_json(const RunOutcome& outcome);

/// Runs the spec and writes the JSON-lines trace plus a summary line to
/// spec.out (stdout when empty). Returns an exit code; errors go to `err`.
int cmd_run(const RunSpec& spec, std::ostream& err);

struct CompareOptions {
  std::string out;
  int reference_runs = 10;
  /// Concurrent runs; 0 reads HOAG_THREADS, falling back to the core count.
  int threads = 0;
};

/// Runs every spec plus `reference_runs` randomly started HOAG exponential
/// runs that fix f*, then writes the CSV
/// method,work_units,suboptimality,validation_loss.
int cmd_compare(const std::vector<RunSpec>& specs, const CompareOptions& options, std::ostream& err);

struct GradcheckOptions {
  HyperParams lambda;  // empty: the problem default
  std::vector<double> eps_list{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  double fd_step = 1e-5;
  int max_iters = 10000;
  std::string out;
};

struct GradcheckEntry {
  double eps = 0.0;
  Vector gradient;
  double error = 0.0;
};

struct GradcheckReport {
  HyperParams lambda;
  Vector fd_gradient;
  std::vector<GradcheckEntry> entries;
  std::optional<double> slope;
};

/// Central differences of f at the floor tolerance.
Vector finite_difference_hypergradient(const BilevelProblem& problem, const HyperParams& lambda, double step,
                                       int max_iters);
/// Least-squares slope of log(error) against log(eps); absent with fewer than two usable points.
std::optional<double> loglog_slope(const std::vector<double>& eps, const std::vector<double>& error);

GradcheckReport gradcheck(const BilevelProblem& problem, const GradcheckOptions& options);
std::string gradcheck_json(const std::string& problem_name, const GradcheckReport& report);
int cmd_gradcheck(const RunSpec& spec, const GradcheckOptions& options, std::ostream& err);

}  // namespace hoag::cli
