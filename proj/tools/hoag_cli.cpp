// Experiment runner: run, compare and gradcheck subcommands.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hoag/experiment.hpp"

namespace {

using hoag::cli::RunSpec;

struct ProblemFlags {
  std::string problem = "logistic";
  std::string data;
  std::string synthetic;
  std::uint64_t seed = 0;
  std::int64_t max_iters = 100;
  int grid_points = 10;
  int iterdiff_steps = hoag::kDefaultInnerMaxIters;
  std::string lambda;
  double noise = 0.1;
  long target_column = -1;
  std::string toy_c = "2";
  std::string toy_d = "0.5";
};

void add_problem_flags(CLI::App* app, ProblemFlags& f) {
  app->add_option("--problem", f.problem, "toy | logistic | kernel-ridge | multifeature")
      ->check(CLI::IsMember({"toy", "logistic", "kernel-ridge", "multifeature"}));
  app->add_option("--data", f.data, "libsvm file, or CSV when the name ends in .csv");
  app->add_option("--synthetic", f.synthetic, "synthetic data n,p[,K]");
  app->add_option("--seed", f.seed, "seed for data generation, splits and random search");
  app->add_option("--max-iters", f.max_iters, "outer iterations (evaluations for random search)");
  app->add_option("--grid-points", f.grid_points, "grid values per hyperparameter");
  app->add_option("--iterdiff-steps", f.iterdiff_steps, "unrolled gradient steps for iterdiff");
  app->add_option("--lambda", f.lambda, "comma-separated hyperparameters (start point or gradcheck point)");
  app->add_option("--noise", f.noise, "noise level of synthetic regression");
  app->add_option("--target-column", f.target_column, "CSV target column; negative counts from the end");
  app->add_option("--toy-c", f.toy_c, "toy inner target c (comma-separated)");
  app->add_option("--toy-d", f.toy_d, "toy outer target d (comma-separated)");
}

RunSpec make_spec(const ProblemFlags& f) {
  RunSpec spec;
  spec.problem = f.problem;
  spec.data_path = f.data;
  if (!f.synthetic.empty()) spec.synthetic = hoag::cli::parse_synthetic(f.synthetic);
  if (!f.data.empty() && spec.synthetic) throw std::invalid_argument("--data and --synthetic are exclusive");
  spec.seed = f.seed;
  spec.max_iters = f.max_iters;
  spec.grid_points = f.grid_points;
  spec.iterdiff_steps = f.iterdiff_steps;
  if (!f.lambda.empty()) {
    const std::vector<double> values = hoag::cli::parse_real_list(f.lambda);
    spec.lambda0 = Eigen::Map<const hoag::Vector>(values.data(), static_cast<hoag::Index>(values.size()));
  }
  spec.noise = f.noise;
  spec.target_column = f.target_column;
  spec.toy_c = hoag::cli::parse_real_list(f.toy_c);
  spec.toy_d = hoag::cli::parse_real_list(f.toy_d);
  return spec;
}

// "hoag", "hoag:cubic", "grid", ...
void apply_method(RunSpec& spec, const std::string& text, const std::string& schedule) {
  const auto colon = text.find(':');
  spec.method = hoag::cli::method_from_string(text.substr(0, colon));
  std::string kind = colon == std::string::npos ? schedule : text.substr(colon + 1);
  if (!kind.empty()) {
    if (spec.method != hoag::cli::Method::hoag) throw std::invalid_argument("schedules apply to hoag only");
    spec.schedule = hoag::schedule_kind_from_string(kind);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperparameter optimization with approximate hypergradients"};
  app.require_subcommand(1);

  ProblemFlags run_flags;
  std::string run_method = "hoag";
  std::string run_schedule;
  std::string run_out;
  CLI::App* run = app.add_subcommand("run", "run one method and write a JSON-lines trace");
  add_problem_flags(run, run_flags);
  run->add_option("--method", run_method, "hoag | iterdiff | grid | random (hoag:<schedule> allowed)");
  run->add_option("--schedule", run_schedule, "quadratic | cubic | exponential | exact (hoag only)");
  run->add_option("--out", run_out, "trace file (stdout when absent)");

  ProblemFlags cmp_flags;
  std::vector<std::string> cmp_methods;
  hoag::cli::CompareOptions cmp_options;
  CLI::App* compare = app.add_subcommand("compare", "run several methods on one instance and write a CSV");
  add_problem_flags(compare, cmp_flags);
  compare->add_option("--method", cmp_methods, "repeatable; e.g. hoag:exponential hoag:exact grid")->required();
  compare->add_option("--out", cmp_options.out, "CSV file (stdout when absent)");
  compare->add_option("--reference-runs", cmp_options.reference_runs, "randomly started runs that fix f*");
  compare->add_option("--threads", cmp_options.threads, "concurrent runs (default HOAG_THREADS or core count)");

  ProblemFlags gc_flags;
  std::string gc_eps;
  hoag::cli::GradcheckOptions gc_options;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "compare approximate hypergradients with finite differences");
  add_problem_flags(gradcheck, gc_flags);
  gradcheck->add_option("--eps-list", gc_eps, "comma-separated tolerances");
  gradcheck->add_option("--fd-step", gc_options.fd_step, "central-difference step");
  gradcheck->add_option("--out", gc_options.out, "JSON report (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hoag::cli::kExitUsage;
  }

  try {
    if (*run) {
      RunSpec spec = make_spec(run_flags);
      apply_method(spec, run_method, run_schedule);
      spec.out = run_out;
      return hoag::cli::cmd_run(spec, std::cerr);
    }
    if (*compare) {
      std::vector<RunSpec> specs;
      for (const std::string& m : cmp_methods) {
        RunSpec spec = make_spec(cmp_flags);
        apply_method(spec, m, "");
        specs.push_back(std::move(spec));
      }
      return hoag::cli::cmd_compare(specs, cmp_options, std::cerr);
    }
    RunSpec spec = make_spec(gc_flags);
    if (!gc_eps.empty()) gc_options.eps_list = hoag::cli::parse_real_list(gc_eps);
    if (spec.lambda0) gc_options.lambda = *spec.lambda0;
    return hoag::cli::cmd_gradcheck(spec, gc_options, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hoag::cli::kExitUsage;
  }
}
