#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace calib {

/// Validated prediction/label pairs. Rows of `probs` lie on the probability
/// simplex; labels are 0-based class indices. Immutable after construction.
class Dataset {
 public:
  /// Sum tolerance for silent renormalisation of a probability row.
  static constexpr double kRenormTolerance = 1e-6;

  /// `probs` is row-major n x K.
  static Dataset validate(std::size_t num_classes, std::vector<double> probs,
                          std::vector<int> labels);
  static Dataset validate(const std::vector<std::vector<double>>& rows,
                          std::vector<int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {probs_.data() + i * num_classes_, num_classes_};
  }
  std::span<const double> probs() const noexcept { return probs_; }
  std::span<const int> labels() const noexcept { return labels_; }
  int label(std::size_t i) const noexcept { return labels_[i]; }

  /// Rows selected by `indices` (duplicates allowed), already validated.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  Dataset(std::size_t num_classes, std::vector<double> probs, std::vector<int> labels)
      : num_classes_(num_classes), probs_(std::move(probs)), labels_(std::move(labels)) {}

  std::size_t num_classes_ = 0;
  std::vector<double> probs_;
  std::vector<int> labels_;
};

/// Checks one probability row (finite, non-negative, sum within
/// kRenormTolerance of one) and renormalises it in place.
void check_probability_row(std::span<double> row);

/// Free-function spelling of Dataset::validate.
inline Dataset validate_dataset(const std::vector<std::vector<double>>& rows,
                                std::vector<int> labels) {
  return Dataset::validate(rows, std::move(labels));
}

/// Top-k projection of a dataset: the k largest probabilities per row (sorted
/// non-increasing), the labels attached to those ranks, and the residuals
/// u = y_top - z_top. All matrices are row-major n x k.
struct TopKView {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t num_classes = 0;
  std::vector<double> z_top;
  std::vector<std::uint8_t> y_top;
  std::vector<double> u;

  std::span<const double> z_row(std::size_t i) const noexcept { return {z_top.data() + i * k, k}; }
  std::span<const double> u_row(std::size_t i) const noexcept { return {u.data() + i * k, k}; }
  std::span<const std::uint8_t> y_row(std::size_t i) const noexcept {
    return {y_top.data() + i * k, k};
  }
};

/// Ranks classes by probability (ties to the lower class index) and keeps the
/// first k. Throws DepthOutOfRange unless 1 <= k <= K.
TopKView topk_project(const Dataset& data, std::size_t k);

/// Class indices of `probs` ordered by non-increasing probability, ties broken
/// by ascending class index. Only the first `depth` entries are guaranteed.
void rank_classes(std::span<const double> probs, std::size_t depth, std::span<std::size_t> order);

}  // namespace calib
