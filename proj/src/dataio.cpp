#include "hoag/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace hoag {

// --- DesignMatrix ------------------------------------------------------------

Index DesignMatrix::rows() const {
  return std::visit([](const auto& m) -> Index { return m.rows(); }, storage_);
}

Index DesignMatrix::cols() const {
  return std::visit([](const auto& m) -> Index { return m.cols(); }, storage_);
}

Vector DesignMatrix::multiply(const Vector& v) const {
  return std::visit([&](const auto& m) -> Vector { return m * v; }, storage_);
}

Vector DesignMatrix::multiply_transpose(const Vector& v) const {
  return std::visit([&](const auto& m) -> Vector { return m.transpose() * v; }, storage_);
}

DenseMatrix DesignMatrix::multiply(const DenseMatrix& v) const {
  return std::visit([&](const auto& m) -> DenseMatrix { return m * v; }, storage_);
}

DenseMatrix DesignMatrix::multiply_transpose(const DenseMatrix& w) const {
  return std::visit([&](const auto& m) -> DenseMatrix { return m.transpose() * w; }, storage_);
}

double DesignMatrix::row_norm(Index i) const {
  if (is_sparse()) return sparse().row(i).norm();
  return dense().row(i).norm();
}

DenseMatrix DesignMatrix::to_dense() const {
  if (is_sparse()) return DenseMatrix(sparse());
  return dense();
}

DesignMatrix DesignMatrix::select_rows(std::span<const Index> rows) const {
  if (!is_sparse()) {
    const DenseMatrix& m = dense();
    DenseMatrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return DesignMatrix(std::move(out));
  }
  const SparseMatrix& m = sparse();
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (SparseMatrix::InnerIterator it(m, rows[i]); it; ++it)
      triplets.emplace_back(static_cast<Index>(i), it.col(), it.value());
  SparseMatrix out(static_cast<Index>(rows.size()), m.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return DesignMatrix(std::move(out));
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Vector t(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) t[static_cast<Index>(i)] = targets[rows[i]];
  return Dataset{features.select_rows(rows), std::move(t)};
}

// --- parsing helpers -----------------------------------------------------------

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& reason)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + reason),
      line_(line),
      column_(column),
      reason_(reason) {}

namespace {

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_index(std::string_view text, long long& out) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> split_whitespace(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back({line.substr(start, i - start), start + 1});
  }
  return tokens;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

// --- libsvm ----------------------------------------------------------------------

Dataset parse_libsvm(std::istream& in, std::optional<Index> feature_count) {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> labels;
  long long max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const std::vector<Token> tokens = split_whitespace(view);
    if (tokens.empty()) continue;

    double label = 0.0;
    if (!parse_double(tokens[0].text, label)) throw ParseError(line_no, tokens[0].column, "invalid label");
    const auto row = static_cast<Index>(labels.size());
    labels.push_back(label);

    long long previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const Token& tok = tokens[t];
      const auto colon = tok.text.find(':');
      if (colon == std::string_view::npos) throw ParseError(line_no, tok.column, "expected idx:val");
      long long index = 0;
      if (!parse_index(tok.text.substr(0, colon), index)) throw ParseError(line_no, tok.column, "invalid index");
      if (index < 1) throw ParseError(line_no, tok.column, "index must be >= 1");
      if (index <= previous) throw ParseError(line_no, tok.column, "indices must be strictly ascending");
      if (feature_count && index > *feature_count)
        throw ParseError(line_no, tok.column, "index exceeds the declared feature count");
      double value = 0.0;
      if (!parse_double(tok.text.substr(colon + 1), value))
        throw ParseError(line_no, tok.column + colon + 1, "invalid value");
      triplets.emplace_back(row, static_cast<Index>(index - 1), value);
      previous = index;
      max_index = std::max(max_index, index);
    }
  }

  const Index cols = feature_count ? *feature_count : static_cast<Index>(max_index);
  SparseMatrix features(static_cast<Index>(labels.size()), cols);
  features.setFromTriplets(triplets.begin(), triplets.end());
  return Dataset{DesignMatrix(std::move(features)), Eigen::Map<const Vector>(labels.data(), labels.size())};
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  const SparseMatrix sparse = data.features.is_sparse() ? data.features.sparse()
                                                        : SparseMatrix(data.features.dense().sparseView());
  for (Index i = 0; i < data.size(); ++i) {
    out << format_double(data.targets[i]);
    for (SparseMatrix::InnerIterator it(sparse, i); it; ++it)
      out << ' ' << (it.col() + 1) << ':' << format_double(it.value());
    out << '\n';
  }
}

// --- CSV -------------------------------------------------------------------------

Dataset parse_csv(std::istream& in, Index target_column) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    std::vector<std::string_view> cells;
    std::vector<std::size_t> columns;
    std::string_view view(line);
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      const std::size_t end = comma == std::string_view::npos ? view.size() : comma;
      cells.push_back(trim(view.substr(start, end - start)));
      columns.push_back(start + 1);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }

    std::vector<double> values(cells.size());
    std::optional<std::size_t> bad;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!parse_double(cells[c], values[c]) && !bad) bad = c;

    if (first) {
      first = false;
      width = cells.size();
      if (bad) continue;  // header row
    }
    if (cells.size() != width) throw ParseError(line_no, columns.back(), "ragged row");
    if (bad) throw ParseError(line_no, columns[*bad], "non-numeric cell");
    rows.push_back(std::move(values));
  }

  if (rows.empty()) throw ParseError(line_no, 1, "no data rows");
  if (target_column < 0 || static_cast<std::size_t>(target_column) >= width)
    throw std::invalid_argument("target column out of range");

  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(width) - 1;
  DenseMatrix features(n, p);
  Vector targets(n);
  for (Index i = 0; i < n; ++i) {
    Index j = 0;
    for (Index c = 0; c < static_cast<Index>(width); ++c) {
      if (c == target_column) targets[i] = rows[i][c];
      else features(i, j++) = rows[i][c];
    }
  }
  return Dataset{DesignMatrix(std::move(features)), std::move(targets)};
}

Standardizer Standardizer::fit(const Dataset& data, std::span<const Index> rows) {
  if (rows.empty()) throw std::invalid_argument("standardizer needs at least one row");
  const Index p = data.feature_count();
  const DenseMatrix x = data.features.to_dense();
  Standardizer s{Vector::Zero(p), Vector::Ones(p)};
  for (Index r : rows) s.mean += x.row(r).transpose();
  s.mean /= static_cast<double>(rows.size());
  Vector var = Vector::Zero(p);
  for (Index r : rows) var += (x.row(r).transpose() - s.mean).array().square().matrix();
  var /= static_cast<double>(rows.size());
  for (Index j = 0; j < p; ++j) s.scale[j] = var[j] < kVarianceFloor ? 1.0 : std::sqrt(var[j]);
  return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
  if (data.features.is_sparse()) return data;
  DenseMatrix x = data.features.dense();
  x.rowwise() -= mean.transpose();
  x.array().rowwise() /= scale.transpose().array();
  return Dataset{DesignMatrix(std::move(x)), data.targets};
}

// --- splitting and synthetic data --------------------------------------------------

ThreeWaySplit split_three(Index n, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("split_three needs at least 3 samples");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const Index base = n / 3;
  const Index rem = n % 3;
  const Index n_train = base + (rem > 0 ? 1 : 0);
  const Index n_test = base + (rem > 1 ? 1 : 0);

  ThreeWaySplit split;
  split.seed = seed;
  split.train.assign(perm.begin(), perm.begin() + n_train);
  split.test.assign(perm.begin() + n_train, perm.begin() + n_train + n_test);
  split.validation.assign(perm.begin() + n_train + n_test, perm.end());
  return split;
}

Dataset synth_classification(Index n, Index p, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("synthetic sizes must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  DenseMatrix x(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = coin(rng) ? 1.0 : -1.0;
    for (Index j = 0; j < p; ++j) x(i, j) = 0.5 * y[i] + normal(rng);
  }
  return Dataset{DesignMatrix(std::move(x)), std::move(y)};
}

Dataset synth_regression(Index n, Index p, double noise, std::uint64_t seed, Vector* coefficients) {
  if (n < 1 || p < 1) throw std::invalid_argument("synthetic sizes must be positive");
  if (noise < 0.0) throw std::invalid_argument("noise must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(p);
  for (Index j = 0; j < p; ++j) w[j] = normal(rng);
  DenseMatrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) x(i, j) = normal(rng);
  Vector y = x * w;
  if (noise > 0.0)
    for (Index i = 0; i < n; ++i) y[i] += noise * normal(rng);
  if (coefficients) *coefficients = w;
  return Dataset{DesignMatrix(std::move(x)), std::move(y)};
}

Dataset synth_regression(Index n, Index p, double noise, std::uint64_t seed) {
  return synth_regression(n, p, noise, seed, nullptr);
}

Dataset synth_multiclass(Index n, Index p, Index classes, std::uint64_t seed) {
  if (n < 1 || p < 1 || classes < 2) throw std::invalid_argument("synthetic sizes must be positive, classes >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, classes - 1);
  DenseMatrix centres(classes, p);
  for (Index c = 0; c < classes; ++c)
    for (Index j = 0; j < p; ++j) centres(c, j) = normal(rng);
  DenseMatrix x(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const Index c = pick(rng);
    y[i] = static_cast<double>(c);
    for (Index j = 0; j < p; ++j) x(i, j) = centres(c, j) + normal(rng);
  }
  return Dataset{DesignMatrix(std::move(x)), std::move(y)};
}

}  // namespace hoag
