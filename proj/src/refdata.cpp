#include "abmgp/refdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "abmgp/errors.hpp"

namespace abmgp {

namespace {

constexpr std::string_view kSchemaTag = "# abmgp-dataset v1 kinds=";
constexpr std::string_view kProvenanceTag = "# provenance=";

std::optional<ColumnKind> kind_from_code(char c) {
  switch (c) {
    case 'N': return ColumnKind::Numeric;
    case 'L': return ColumnKind::Label;
    case 'I': return ColumnKind::Identifier;
    default: return std::nullopt;
  }
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void check_label(const std::string& name, double v, std::size_t row) {
  if (v != 0.0 && v != 1.0)
    throw DataError("label column '" + name + "' holds " + format9(v) + " at row " + std::to_string(row + 1) + " (labels must be 0 or 1)");
}

}  // namespace

char kind_code(ColumnKind kind) noexcept {
  switch (kind) {
    case ColumnKind::Label: return 'L';
    case ColumnKind::Identifier: return 'I';
    default: return 'N';
  }
}

ReferenceDataset::ReferenceDataset(const std::vector<std::pair<std::string, ColumnKind>>& schema) {
  for (const auto& [name, kind] : schema) add_column(name, kind, {});
}

void ReferenceDataset::add_column(std::string name, ColumnKind kind, std::vector<double> values) {
  if (find(name)) throw DataError("duplicate column '" + name + "'");
  if (!columns_.empty() && values.size() != rows())
    throw DataError("column '" + name + "' has " + std::to_string(values.size()) + " rows, table has " + std::to_string(rows()));
  if (kind == ColumnKind::Label)
    for (std::size_t r = 0; r < values.size(); ++r) check_label(name, values[r], r);
  columns_.push_back(Column{std::move(name), kind, std::move(values)});
}

void ReferenceDataset::append_row(std::span<const double> row) {
  if (row.size() != columns_.size())
    throw DataError("row " + std::to_string(rows() + 1) + " has " + std::to_string(row.size()) + " values, schema has " + std::to_string(columns_.size()));
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (columns_[c].kind == ColumnKind::Label) check_label(columns_[c].name, row[c], rows());
  }
  for (std::size_t c = 0; c < row.size(); ++c) columns_[c].values.push_back(row[c]);
}

const Column* ReferenceDataset::find(std::string_view name) const noexcept {
  for (const auto& c : columns_)
    if (c.name == name) return &c;
  return nullptr;
}

std::optional<std::size_t> ReferenceDataset::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

const Column& ReferenceDataset::require(std::string_view name) const {
  if (const Column* c = find(name)) return *c;
  std::string list;
  for (const auto& c : columns_) list += (list.empty() ? "" : ", ") + c.name;
  throw DataError("unknown column '" + std::string(name) + "'; dataset columns: " + list);
}

std::vector<std::string> ReferenceDataset::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

std::string format9(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double quantize9(double v) {
  const std::string s = format9(v);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

void write_csv(const ReferenceDataset& data, std::ostream& out) {
  out << kSchemaTag;
  for (std::size_t c = 0; c < data.cols(); ++c) out << (c ? "," : "") << kind_code(data.column(c).kind);
  out << '\n' << kProvenanceTag << data.provenance << '\n';
  for (std::size_t c = 0; c < data.cols(); ++c) out << (c ? "," : "") << data.column(c).name;
  out << '\n';
  std::string line;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    line.clear();
    for (std::size_t c = 0; c < data.cols(); ++c) {
      if (c) line += ',';
      line += format9(data.column(c).values[r]);
    }
    line += '\n';
    out << line;
  }
}

void save_csv(const ReferenceDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_csv(data, out);
  if (!out) throw DataError("write failed for " + path);
}

ReferenceDataset read_csv(std::istream& in) {
  std::string line;
  std::vector<ColumnKind> kinds;
  std::string provenance = "external";
  bool have_header = false;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::size_t row = 0;

  while (std::getline(in, line)) {
    std::string_view view = trim(line);
    if (!have_header) {
      if (view.starts_with(kSchemaTag)) {
        for (auto code : split_commas(view.substr(kSchemaTag.size()))) {
          code = trim(code);
          auto k = code.size() == 1 ? kind_from_code(code[0]) : std::nullopt;
          if (!k) throw DataError("bad column kind '" + std::string(code) + "' in schema line");
          kinds.push_back(*k);
        }
        continue;
      }
      if (view.starts_with(kProvenanceTag)) {
        provenance = std::string(view.substr(kProvenanceTag.size()));
        continue;
      }
      if (view.empty() || view.front() == '#') continue;
      for (auto name : split_commas(view)) names.emplace_back(trim(name));
      if (!kinds.empty() && kinds.size() != names.size())
        throw DataError("schema line lists " + std::to_string(kinds.size()) + " kinds for " + std::to_string(names.size()) + " columns");
      if (kinds.empty()) kinds.assign(names.size(), ColumnKind::Numeric);
      values.resize(names.size());
      have_header = true;
      continue;
    }
    if (view.empty()) continue;
    ++row;
    auto cells = split_commas(view);
    if (cells.size() != names.size())
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(names.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string_view cell = trim(cells[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw DataError("non-numeric cell '" + std::string(cell) + "' at row " + std::to_string(row) + ", column " + std::to_string(c + 1) + " (" + names[c] + ")");
      values[c].push_back(v);
    }
  }
  if (!have_header) throw DataError("no header row");

  ReferenceDataset data;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c].empty()) throw DataError("empty column name at column " + std::to_string(c + 1));
    if (data.find(names[c])) throw DataError("duplicate column '" + names[c] + "' at column " + std::to_string(c + 1));
    data.add_column(names[c], kinds[c], std::move(values[c]));
  }
  data.provenance = provenance;
  return data;
}

ReferenceDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return read_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DataError("mse: length mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) throw DataError("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

Confusion& Confusion::operator+=(const Confusion& o) noexcept {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

double balanced_accuracy(const Confusion& c) {
  const long long p = c.positives(), n = c.negatives();
  if (p == 0 || n == 0) return 0.5;
  // One division so that e.g. 8/10 and 90/100 give exactly 0.85.
  const double num = static_cast<double>(c.tp) * static_cast<double>(n) + static_cast<double>(c.tn) * static_cast<double>(p);
  return num / (2.0 * static_cast<double>(p) * static_cast<double>(n));
}

double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw DataError("balanced accuracy: length mismatch (" + std::to_string(predictions.size()) + " vs " + std::to_string(labels.size()) + ")");
  if (labels.empty()) throw DataError("balanced accuracy: empty input");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] != 0, l = labels[i] != 0;
    if (l) (p ? c.tp : c.fn)++;
    else (p ? c.fp : c.tn)++;
  }
  return balanced_accuracy(c);
}

double plain_accuracy(const Confusion& c) {
  if (c.total() == 0) return 0.5;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double gini(std::span<const double> wealth) {
  if (wealth.empty()) throw DataError("gini: empty input");
  std::vector<double> x(wealth.begin(), wealth.end());
  std::sort(x.begin(), x.end());
  if (x.front() < 0.0) throw DataError("gini: negative wealth");
  double sum = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    weighted += static_cast<double>(i + 1) * x[i];
  }
  if (sum == 0.0) throw DataError("gini: all wealth is zero");
  const double n = static_cast<double>(x.size());
  return (2.0 * weighted - (n + 1.0) * sum) / (n * sum);
}

std::vector<HistogramBin> histogram(std::span<const double> values, int bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (values.empty()) return {};
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx;
  // all values equal: one unit-wide bin
  if (!(hi > lo)) return {HistogramBin{lo, lo + 1.0, static_cast<long long>(values.size())}};
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) out[b] = {lo + b * width, b + 1 == bins ? hi : lo + (b + 1) * width, 0};
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++out[b].count;
  }
  return out;
}

void write_histogram_csv(const std::vector<HistogramBin>& bins, std::ostream& out) {
  out << "bin_low,bin_high,count\n";
  for (const auto& b : bins) out << format9(b.lo) << ',' << format9(b.hi) << ',' << b.count << '\n';
}

double bimodality_coefficient(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 4) throw DataError("bimodality coefficient needs at least 4 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 == 0.0) throw DataError("bimodality coefficient of constant values");
  const double g1 = m3 / std::pow(m2, 1.5) * std::sqrt(n * (n - 1.0)) / (n - 2.0);
  const double g2 = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * (m4 / (m2 * m2) - 3.0) + 6.0);
  return (g1 * g1 + 1.0) / (g2 + 3.0 * (n - 1.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0)));
}

}  // namespace abmgp
