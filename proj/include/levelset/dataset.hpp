#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "levelset/types.hpp"

namespace levelset {

enum class LabelKind { kBinary, kMulticlass };

/// Row-major samples: features(i, :) is sample i. Binary labels are stored as -1/+1,
/// multiclass labels as class indices 0..num_classes-1.
struct Dataset {
  Matrix features;
  Vector labels;
  LabelKind label_kind = LabelKind::kBinary;
  int num_classes = 2;
  std::string name;
  bool standardized = false;
  /// Original label strings in the order they were mapped (index -> label).
  std::vector<std::string> label_names;

  Index num_samples() const { return features.rows(); }
  Index num_features() const { return features.cols(); }
};

/// Throws InvalidArgument unless the dataset satisfies the ingestion invariants.
void validate(const Dataset& data);

/// Per-feature mean 0 / variance 1 (population variance). Constant columns are centred only.
void standardize(Dataset& data);

/// Reads a CSV with a header row. Labels with exactly two distinct values map to -1/+1 in
/// lexicographic order; more than two map to class indices in lexicographic order.
Dataset load_dataset(const std::string& path, const std::string& label_column,
                     bool standardize_features);

/// Same as load_dataset but from in-memory CSV text.
Dataset parse_dataset(const std::string& csv_text, const std::string& label_column,
                      bool standardize_features, const std::string& name = "inline");

/// Linearly-separable-ish synthetic binary problem: x ~ N(0, I), y = sign(<x, w_true> + noise).
Dataset make_synthetic_binary(Index n, Index p, std::uint64_t seed, double noise = 0.5);

/// Gaussian blobs around random class centres.
Dataset make_synthetic_multiclass(Index n, Index p, int num_classes, std::uint64_t seed);

}  // namespace levelset
