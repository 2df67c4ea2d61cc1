#include "hoag/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hoag/problems.hpp"
#include "hoag/solvers.hpp"

namespace hoag::cli {

using nlohmann::json;

const char* to_string(Method method) {
  switch (method) {
    case Method::hoag: return "hoag";
    case Method::iterdiff: return "iterdiff";
    case Method::grid: return "grid";
    case Method::random: return "random";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "hoag") return Method::hoag;
  if (name == "iterdiff") return Method::iterdiff;
  if (name == "grid") return Method::grid;
  if (name == "random") return Method::random;
  throw std::invalid_argument("unknown method: " + name);
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw std::invalid_argument("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

SyntheticSpec parse_synthetic(const std::string& text) {
  const std::vector<double> values = parse_real_list(text);
  if (values.size() < 2 || values.size() > 3) throw std::invalid_argument("--synthetic expects n,p or n,p,K");
  for (double v : values)
    if (v < 1 || v != std::floor(v)) throw std::invalid_argument("--synthetic entries must be positive integers");
  SyntheticSpec spec;
  spec.n = static_cast<Index>(values[0]);
  spec.p = static_cast<Index>(values[1]);
  if (values.size() == 3) spec.classes = static_cast<Index>(values[2]);
  return spec;
}

std::string RunSpec::label() const {
  if (method == Method::hoag) return std::string("hoag-") + hoag::to_string(schedule);
  return to_string(method);
}

std::string RunSpec::instance_key() const {
  std::ostringstream key;
  key << problem << '|' << data_path << '|' << seed << '|' << noise << '|' << target_column;
  if (synthetic) key << '|' << synthetic->n << ',' << synthetic->p << ',' << synthetic->classes;
  if (problem == "toy") {
    for (double v : toy_c) key << ",c" << v;
    for (double v : toy_d) key << ",d" << v;
  }
  return key.str();
}

void RunSpec::validate() const {
  static const std::set<std::string> problems{"toy", "logistic", "kernel-ridge", "multifeature"};
  if (!problems.count(problem)) throw std::invalid_argument("unknown problem: " + problem);
  if (problem != "toy" && data_path.empty() && !synthetic)
    throw std::invalid_argument("problem '" + problem + "' needs --data or --synthetic");
  if (problem == "toy" && toy_c.size() != toy_d.size())
    throw std::invalid_argument("--toy-c and --toy-d must have the same length");
  if (max_iters < 1) throw std::invalid_argument("--max-iters must be positive");
  if (grid_points < 2) throw std::invalid_argument("--grid-points must be at least 2");
  if (iterdiff_steps < 1) throw std::invalid_argument("--iterdiff-steps must be positive");
  if (synthetic && synthetic->n < 3) throw std::invalid_argument("synthetic data needs n >= 3");
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), v.size()); }

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Sorted distinct labels mapped to 0..K-1.
Index relabel_classes(Dataset& data) {
  std::map<double, Index> codes;
  for (Index i = 0; i < data.size(); ++i) codes.emplace(data.targets[i], 0);
  Index next = 0;
  for (auto& [label, code] : codes) code = next++;
  for (Index i = 0; i < data.size(); ++i) data.targets[i] = static_cast<double>(codes[data.targets[i]]);
  return next;
}

// Two distinct labels become -1 (smaller) and +1 (larger).
void relabel_binary(Dataset& data) {
  std::set<double> labels(data.targets.data(), data.targets.data() + data.size());
  if (labels.size() > 2) throw std::invalid_argument("logistic problem needs binary labels");
  if (labels == std::set<double>{-1.0, 1.0} || labels.size() < 2) {
    for (Index i = 0; i < data.size(); ++i)
      if (data.targets[i] != 1.0 && data.targets[i] != -1.0)
        throw std::invalid_argument("single-class data must use labels +1 / -1");
    return;
  }
  const double high = *labels.rbegin();
  for (Index i = 0; i < data.size(); ++i) data.targets[i] = data.targets[i] == high ? 1.0 : -1.0;
}

Dataset load_dataset(const RunSpec& spec, bool& standardize) {
  standardize = false;
  if (spec.synthetic) {
    const SyntheticSpec& s = *spec.synthetic;
    if (spec.problem == "logistic") return synth_classification(s.n, s.p, spec.seed);
    if (spec.problem == "kernel-ridge") return synth_regression(s.n, s.p, spec.noise, spec.seed);
    return synth_multiclass(s.n, s.p, s.classes > 0 ? s.classes : 3, spec.seed);
  }
  std::ifstream in(spec.data_path);
  if (!in) throw std::invalid_argument("cannot open data file: " + spec.data_path);
  if (ends_with(spec.data_path, ".csv")) {
    standardize = true;
    // Peek at the column count to resolve negative target indices.
    std::string first;
    std::getline(in, first);
    const auto width = static_cast<Index>(std::count(first.begin(), first.end(), ',') + 1);
    in.clear();
    in.seekg(0);
    const Index target = spec.target_column < 0 ? width + spec.target_column : spec.target_column;
    return parse_csv(in, target);
  }
  return parse_libsvm(in);
}

}  // namespace

ProblemInstance build_problem(const RunSpec& spec) {
  spec.validate();
  ProblemInstance instance;
  if (spec.problem == "toy") {
    instance.problem = std::make_unique<AnalyticToyProblem>(to_vector(spec.toy_c), to_vector(spec.toy_d));
    instance.validation = std::make_unique<AnalyticToyProblem>(to_vector(spec.toy_c), to_vector(spec.toy_d));
    return instance;
  }

  bool standardize = false;
  Dataset data = load_dataset(spec, standardize);
  Index classes = 0;
  if (spec.problem == "logistic") relabel_binary(data);
  if (spec.problem == "multifeature") classes = relabel_classes(data);

  const ThreeWaySplit split = split_three(data.size(), spec.seed);
  if (standardize) data = Standardizer::fit(data, split.train).apply(data);
  Dataset train = data.subset(split.train);
  Dataset test = data.subset(split.test);
  Dataset validation = data.subset(split.validation);

  if (spec.problem == "logistic") {
    instance.problem = std::make_unique<LogisticL2Problem>(train, std::move(test));
    instance.validation = std::make_unique<LogisticL2Problem>(std::move(train), std::move(validation));
  } else if (spec.problem == "kernel-ridge") {
    instance.problem = std::make_unique<KernelRidgeProblem>(train, test);
    instance.validation = std::make_unique<KernelRidgeProblem>(train, validation);
  } else {
    instance.problem = std::make_unique<MultiFeatureRegLogisticProblem>(train, std::move(test), classes);
    instance.validation =
        std::make_unique<MultiFeatureRegLogisticProblem>(std::move(train), std::move(validation), classes);
  }
  return instance;
}

RunOutcome execute(const RunSpec& spec, const BilevelProblem& problem, const TraceSink& sink) {
  const auto started = std::chrono::steady_clock::now();
  const BoxDomain domain = BoxDomain::symmetric(problem.hyper_dim());
  RunOutcome outcome;

  if (spec.method == Method::hoag || spec.method == Method::iterdiff) {
    HoagConfig config = HoagConfig::defaults(problem);
    config.schedule.kind = spec.schedule;
    config.max_outer_iters = spec.max_iters;
    if (spec.lambda0) config.lambda0 = *spec.lambda0;
    HoagState state = spec.method == Method::hoag
                          ? hoag_run(problem, config, sink)
                          : iterdiff_run(problem, IterdiffConfig{config, spec.iterdiff_steps, std::nullopt}, sink);
    outcome.final_lambda = state.lambda;
    outcome.final_outer_value = state.outer_value;
    outcome.trace = std::move(state.trace);
  } else {
    EvaluationBudget budget;
    SearchResult result;
    if (spec.method == Method::grid) {
      double size = std::pow(static_cast<double>(spec.grid_points), static_cast<double>(problem.hyper_dim()));
      if (size > 1e6) throw std::invalid_argument("grid has more than 1e6 points");
      budget.max_evaluations = static_cast<std::int64_t>(size);
      result = grid_search(problem, domain, spec.grid_points, budget, sink);
    } else {
      budget.max_evaluations = spec.max_iters;
      result = random_search(problem, domain, budget, spec.seed, sink);
    }
    outcome.final_lambda = result.best_lambda;
    outcome.final_outer_value = result.best_value;
    outcome.trace = std::move(result.trace);
  }
  outcome.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return outcome;
}

std::string trace_record_json(const TraceRecord& r) {
  json j;
  j["k"] = r.k;
  j["lambda"] = to_std(r.lambda);
  j["epsilon"] = r.epsilon;
  j["outer_value"] = r.outer_value;
  j["grad_norm"] = r.grad_norm;
  j["step_size"] = r.step_size;
  j["inner_iters"] = r.inner_iters;
  j["cg_iters"] = r.cg_iters;
  j["wall_time"] = r.wall_time;
  return j.dump();
}

std::string summary_json(const RunOutcome& outcome) {
  json j;
  j["final_lambda"] = to_std(outcome.final_lambda);
  j["final_outer_value"] = outcome.final_outer_value;
  j["total_inner_iters"] = outcome.trace.empty() ? 0 : outcome.trace.back().inner_iters;
  j["total_cg_iters"] = outcome.trace.empty() ? 0 : outcome.trace.back().cg_iters;
  j["wall_time"] = outcome.wall_time;
  return j.dump();
}

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const NonFiniteError& e) {
    err << "solver aborted: " << e.what() << '\n';
    return kExitSolverAbort;
  } catch (const DivergedError& e) {
    err << "solver aborted: " << e.what() << '\n';
    return kExitSolverAbort;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

class OutputFile {
 public:
  explicit OutputFile(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::invalid_argument("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HOAG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto n = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

int cmd_run(const RunSpec& spec, std::ostream& err) {
  return guarded(err, [&] {
    const ProblemInstance instance = build_problem(spec);
    OutputFile output(spec.out);
    std::ostream& out = output.stream();
    const RunOutcome outcome = execute(spec, *instance.problem, [&](const TraceRecord& r) {
      out << trace_record_json(r) << '\n';
    });
    out << summary_json(outcome) << '\n';
    out.flush();
    return kExitOk;
  });
}

int cmd_compare(const std::vector<RunSpec>& specs, const CompareOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    if (specs.size() < 2) throw std::invalid_argument("compare needs at least two runs");
    for (const RunSpec& s : specs)
      if (s.instance_key() != specs.front().instance_key())
        throw std::invalid_argument("compare runs must share one problem instance");
    if (options.reference_runs < 1) throw std::invalid_argument("compare needs at least one reference run");

    const ProblemInstance instance = build_problem(specs.front());
    const BilevelProblem& problem = *instance.problem;

    // Reference runs: HOAG with the exponential schedule from random starts.
    std::vector<RunSpec> jobs = specs;
    std::mt19937_64 rng(specs.front().seed);
    std::uniform_real_distribution<double> start(-kDefaultDomainBound, kDefaultDomainBound);
    for (int r = 0; r < options.reference_runs; ++r) {
      RunSpec ref = specs.front();
      ref.method = Method::hoag;
      ref.schedule = ScheduleKind::exponential;
      HyperParams lambda0(problem.hyper_dim());
      for (Index j = 0; j < lambda0.size(); ++j) lambda0[j] = start(rng);
      ref.lambda0 = lambda0;
      jobs.push_back(std::move(ref));
    }

    std::vector<RunOutcome> outcomes(jobs.size());
    parallel_for(jobs.size(), thread_count(options.threads),
                 [&](std::size_t i) { outcomes[i] = execute(jobs[i], problem); });

    struct Row {
      std::string method;
      std::int64_t work;
      HyperParams lambda;
      double value = 0.0;       // f at floor tolerance
      double validation = 0.0;  // validation loss at floor tolerance
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const bool search = specs[i].method == Method::grid || specs[i].method == Method::random;
      double incumbent = std::numeric_limits<double>::infinity();
      HyperParams incumbent_lambda;
      for (const TraceRecord& r : outcomes[i].trace) {
        Row row{specs[i].label(), r.inner_iters + r.cg_iters, r.lambda};
        if (search) {
          // Search methods report their best point so far.
          if (r.outer_value < incumbent) {
            incumbent = r.outer_value;
            incumbent_lambda = r.lambda;
          }
          row.lambda = incumbent_lambda;
        }
        rows.push_back(std::move(row));
      }
    }
    const std::size_t references = jobs.size() - specs.size();

    // Trace values carry inner-solve error, so every point is rescored at the
    // floor tolerance; f* is then a true minimum over the scored points.
    constexpr int kScoreIters = 1000;
    std::vector<double> reference_values(references);
    parallel_for(rows.size() + references, thread_count(options.threads), [&](std::size_t i) {
      if (i < rows.size()) {
        rows[i].value = evaluate_outer(problem, rows[i].lambda, kScoreIters);
        rows[i].validation = evaluate_outer(*instance.validation, rows[i].lambda, kScoreIters);
      } else {
        reference_values[i - rows.size()] =
            evaluate_outer(problem, outcomes[specs.size() + i - rows.size()].final_lambda, kScoreIters);
      }
    });
    double best = std::numeric_limits<double>::infinity();
    for (double v : reference_values) best = std::min(best, v);
    for (const Row& row : rows) best = std::min(best, row.value);

    OutputFile output(options.out);
    std::ostream& out = output.stream();
    out << "method,work_units,suboptimality,validation_loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < rows.size(); ++i)
      out << rows[i].method << ',' << rows[i].work << ',' << rows[i].value - best << ',' << rows[i].validation << '\n';
    out.flush();
    return kExitOk;
  });
}

Vector finite_difference_hypergradient(const BilevelProblem& problem, const HyperParams& lambda, double step,
                                       int max_iters) {
  Vector grad(lambda.size());
  for (Index j = 0; j < lambda.size(); ++j) {
    HyperParams up = lambda;
    HyperParams down = lambda;
    up[j] += step;
    down[j] -= step;
    grad[j] = (evaluate_outer(problem, up, max_iters) - evaluate_outer(problem, down, max_iters)) / (2.0 * step);
  }
  return grad;
}

std::optional<double> loglog_slope(const std::vector<double>& eps, const std::vector<double>& error) {
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < eps.size() && i < error.size(); ++i)
    if (eps[i] > 0.0 && error[i] > 0.0 && std::isfinite(error[i]))
      points.emplace_back(std::log(eps[i]), std::log(error[i]));
  if (points.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : points) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

GradcheckReport gradcheck(const BilevelProblem& problem, const GradcheckOptions& options) {
  GradcheckReport report;
  report.lambda = options.lambda.size() > 0 ? options.lambda : problem.default_lambda();
  if (report.lambda.size() != problem.hyper_dim()) throw std::invalid_argument("gradcheck: lambda has wrong length");
  report.fd_gradient = finite_difference_hypergradient(problem, report.lambda, options.fd_step, options.max_iters);

  const Vector zero = Vector::Zero(problem.param_dim());
  std::vector<double> eps_values, errors;
  for (double eps : options.eps_list) {
    if (!(eps > 0.0)) throw std::invalid_argument("gradcheck: eps values must be positive");
    const HypergradientResult h =
        approx_hypergradient(problem, report.lambda, zero, zero, eps, options.max_iters, options.max_iters);
    GradcheckEntry entry{eps, h.gradient, (h.gradient - report.fd_gradient).norm()};
    eps_values.push_back(eps);
    errors.push_back(entry.error);
    report.entries.push_back(std::move(entry));
  }
  report.slope = loglog_slope(eps_values, errors);
  return report;
}

std::string gradcheck_json(const std::string& problem_name, const GradcheckReport& report) {
  json j;
  j["problem"] = problem_name;
  j["lambda"] = to_std(report.lambda);
  j["fd_gradient"] = to_std(report.fd_gradient);
  j["entries"] = json::array();
  for (const GradcheckEntry& e : report.entries)
    j["entries"].push_back({{"eps", e.eps}, {"gradient", to_std(e.gradient)}, {"error", e.error}});
  j["slope"] = report.slope ? json(*report.slope) : json(nullptr);
  return j.dump(2);
}

int cmd_gradcheck(const RunSpec& spec, const GradcheckOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    const ProblemInstance instance = build_problem(spec);
    const GradcheckReport report = gradcheck(*instance.problem, options);
    OutputFile output(options.out);
    output.stream() << gradcheck_json(spec.problem, report) << '\n';
    return kExitOk;
  });
}

}  // namespace hoag::cli
