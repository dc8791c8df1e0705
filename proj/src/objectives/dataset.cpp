#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "levelset/dataset.hpp"

namespace levelset {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cell.push_back(ch);
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  out.push_back(trim(cell));
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

void validate(const Dataset& data) {
  require(data.num_samples() >= 1, "dataset: needs at least one sample");
  require(data.num_features() >= 1, "dataset: needs at least one feature");
  require(data.labels.size() == data.num_samples(), "dataset: label count mismatch");
  require(data.features.allFinite(), "dataset: features contain missing or non-finite values");
  if (data.label_kind == LabelKind::kBinary) {
    for (Index i = 0; i < data.labels.size(); ++i) {
      require(data.labels[i] == -1.0 || data.labels[i] == 1.0, "dataset: binary labels must be -1/+1");
    }
  } else {
    require(data.num_classes >= 2, "dataset: multiclass needs at least two classes");
    for (Index i = 0; i < data.labels.size(); ++i) {
      const double l = data.labels[i];
      require(l >= 0.0 && l < data.num_classes && l == std::floor(l), "dataset: bad class index");
    }
  }
}

void standardize(Dataset& data) {
  const double n = static_cast<double>(data.num_samples());
  for (Index j = 0; j < data.num_features(); ++j) {
    auto col = data.features.col(j);
    const double mean = col.sum() / n;
    col.array() -= mean;
    const double var = col.squaredNorm() / n;
    if (var > 0.0) col /= std::sqrt(var);
  }
  data.standardized = true;
}

Dataset parse_dataset(const std::string& csv_text, const std::string& label_column,
                      bool standardize_features, const std::string& name) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  require(!header.empty(), "dataset: missing header row");
  const auto it = std::find(header.begin(), header.end(), label_column);
  if (it == header.end()) throw InvalidArgument("dataset: label column '" + label_column + "' not found");
  const auto label_idx = static_cast<std::size_t>(it - header.begin());
  require(header.size() >= 2, "dataset: needs at least one feature column");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InvalidArgument("dataset: line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    }
    std::vector<double> feats;
    feats.reserve(cells.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_idx) continue;
      double v = 0.0;
      if (!parse_number(cells[c], v)) {
        throw InvalidArgument("dataset: non-numeric feature '" + cells[c] + "' in column '" + header[c] +
                              "' at line " + std::to_string(line_no));
      }
      feats.push_back(v);
    }
    require(!cells[label_idx].empty(), "dataset: missing label at line " + std::to_string(line_no));
    rows.push_back(std::move(feats));
    raw_labels.push_back(cells[label_idx]);
  }
  require(!rows.empty(), "dataset: no data rows");

  const std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
  require(distinct.size() >= 2, "dataset: labels have a single class");

  Dataset data;
  data.name = name;
  data.label_names.assign(distinct.begin(), distinct.end());
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < data.label_names.size(); ++k) index[data.label_names[k]] = static_cast<int>(k);

  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(header.size() - 1);
  data.features.resize(n, p);
  data.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) data.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  if (distinct.size() == 2) {
    data.label_kind = LabelKind::kBinary;
    data.num_classes = 2;
    for (Index i = 0; i < n; ++i) data.labels[i] = index[raw_labels[static_cast<std::size_t>(i)]] == 0 ? -1.0 : 1.0;
  } else {
    data.label_kind = LabelKind::kMulticlass;
    data.num_classes = static_cast<int>(distinct.size());
    for (Index i = 0; i < n; ++i) data.labels[i] = index[raw_labels[static_cast<std::size_t>(i)]];
  }
  if (standardize_features) standardize(data);
  validate(data);
  return data;
}

Dataset load_dataset(const std::string& path, const std::string& label_column, bool standardize_features) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("dataset: cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  return parse_dataset(buf.str(), label_column, standardize_features, name);
}

Dataset make_synthetic_binary(Index n, Index p, std::uint64_t seed, double noise) {
  require(n >= 2 && p >= 1, "synthetic: need n >= 2 and p >= 1");
  std::mt19937_64 rng(seed);
  Dataset data;
  data.name = "synthetic-binary-n" + std::to_string(n) + "-p" + std::to_string(p) + "-s" + std::to_string(seed);
  data.label_kind = LabelKind::kBinary;
  data.label_names = {"-1", "+1"};
  const Vector w_true = gaussian_vector(p, rng);
  data.features.resize(n, p);
  data.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) data.features(i, j) = standard_normal(rng);
    const double score = data.features.row(i).dot(w_true) + noise * standard_normal(rng);
    data.labels[i] = score >= 0.0 ? 1.0 : -1.0;
  }
  // Keep both classes present.
  if ((data.labels.array() > 0.0).all()) data.labels[0] = -1.0;
  if ((data.labels.array() < 0.0).all()) data.labels[0] = 1.0;
  return data;
}

Dataset make_synthetic_multiclass(Index n, Index p, int num_classes, std::uint64_t seed) {
  require(n >= num_classes && p >= 1 && num_classes >= 2, "synthetic: bad multiclass shape");
  std::mt19937_64 rng(seed);
  Dataset data;
  data.name = "synthetic-multiclass-n" + std::to_string(n) + "-p" + std::to_string(p) + "-k" +
              std::to_string(num_classes) + "-s" + std::to_string(seed);
  data.label_kind = LabelKind::kMulticlass;
  data.num_classes = num_classes;
  for (int k = 0; k < num_classes; ++k) data.label_names.push_back(std::to_string(k));
  Matrix centres(num_classes, p);
  for (int k = 0; k < num_classes; ++k) centres.row(k) = 2.0 * gaussian_vector(p, rng).transpose();
  data.features.resize(n, p);
  data.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int k = static_cast<int>(i % num_classes);
    data.labels[i] = k;
    for (Index j = 0; j < p; ++j) data.features(i, j) = centres(k, j) + standard_normal(rng);
  }
  return data;
}

}  // namespace levelset
