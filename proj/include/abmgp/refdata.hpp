#pragma once

// Column-major numeric tables with a typed schema, plain CSV I/O and the
// scoring metrics shared by the case studies.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abmgp {

enum class ColumnKind { Numeric, Label, Identifier };

char kind_code(ColumnKind kind) noexcept;  // N, L, I

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<double> values;

  friend bool operator==(const Column&, const Column&) = default;
};

class ReferenceDataset {
 public:
  ReferenceDataset() = default;
  /// Empty table with the given schema. Throws DataError on duplicate names.
  explicit ReferenceDataset(const std::vector<std::pair<std::string, ColumnKind>>& schema);

  /// Throws DataError on duplicate name, length mismatch or a non 0/1 label.
  void add_column(std::string name, ColumnKind kind, std::vector<double> values);
  /// Throws DataError unless the row has one value per column.
  void append_row(std::span<const double> row);

  std::size_t rows() const noexcept { return columns_.empty() ? 0 : columns_.front().values.size(); }
  std::size_t cols() const noexcept { return columns_.size(); }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column* find(std::string_view name) const noexcept;
  std::optional<std::size_t> index_of(std::string_view name) const noexcept;
  /// Throws DataError listing the available columns.
  const Column& require(std::string_view name) const;
  std::vector<std::string> names() const;

  std::string provenance = "external";

  friend bool operator==(const ReferenceDataset&, const ReferenceDataset&) = default;

 private:
  std::vector<Column> columns_;
};

/// Value as it reads back after being written with 9 significant digits.
double quantize9(double v);
std::string format9(double v);

void write_csv(const ReferenceDataset& data, std::ostream& out);
void save_csv(const ReferenceDataset& data, const std::string& path);
/// Throws DataError with the 1-based row (data rows, header excluded) and
/// column of the first problem.
ReferenceDataset read_csv(std::istream& in);
ReferenceDataset load_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Metrics

/// Throws DataError on length mismatch or empty input.
double mse(std::span<const double> a, std::span<const double> b);

struct Confusion {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long positives() const noexcept { return tp + fn; }
  long long negatives() const noexcept { return tn + fp; }
  long long total() const noexcept { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o) noexcept;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// (TPR + TNR) / 2, or 0.5 when only one class is present.
double balanced_accuracy(const Confusion& c);
double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels);
double plain_accuracy(const Confusion& c);

/// Gini coefficient. Throws DataError on empty, negative or all-zero input.
double gini(std::span<const double> wealth);

/// Sarle's bimodality coefficient (g1^2 + 1) / (g2 + 3(n-1)^2 / ((n-2)(n-3)))
/// from the bias-corrected sample skewness g1 and excess kurtosis g2. Values
/// above 5/9 suggest bimodality. Throws DataError when n < 4 or the values
/// are all equal.
double bimodality_coefficient(std::span<const double> values);

struct HistogramBin {
  double lo;
  double hi;
  long long count;
};

/// `bins` equal-width bins over [min, max]; the last bin is closed. Equal
/// values give a single bin [v, v + 1].
std::vector<HistogramBin> histogram(std::span<const double> values, int bins);
void write_histogram_csv(const std::vector<HistogramBin>& bins, std::ostream& out);

}  // namespace abmgp
