#include "calib/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "calib/error.hpp"

namespace calib {

Dataset Dataset::validate(std::size_t num_classes, std::vector<double> probs,
                          std::vector<int> labels) {
  if (num_classes < 2) {
    throw CalibError(ErrorCode::DimensionMismatch, "need at least two classes");
  }
  if (labels.empty()) throw CalibError(ErrorCode::EmptyDataset, "no examples");
  if (probs.size() != labels.size() * num_classes) {
    throw CalibError(ErrorCode::DimensionMismatch,
                     "probability matrix has " + std::to_string(probs.size()) +
                         " entries, expected " + std::to_string(labels.size() * num_classes));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    try {
      check_probability_row({probs.data() + i * num_classes, num_classes});
    } catch (const CalibError& e) {
      throw CalibError(e.code(), "row " + std::to_string(i) + ": " + e.detail());
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw CalibError(ErrorCode::LabelOutOfRange,
                       "row " + std::to_string(i) + " has label " + std::to_string(labels[i]));
    }
  }
  return Dataset(num_classes, std::move(probs), std::move(labels));
}

void check_probability_row(std::span<double> row) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p)) throw CalibError(ErrorCode::NonFiniteEntry, "non-finite probability");
    if (p < 0.0) throw CalibError(ErrorCode::NegativeProbability, "negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > Dataset::kRenormTolerance) {
    throw CalibError(ErrorCode::RowSumOutOfTolerance, "probabilities sum to " + std::to_string(sum));
  }
  if (sum != 1.0) {
    for (double& p : row) p /= sum;
  }
}

Dataset Dataset::validate(const std::vector<std::vector<double>>& rows, std::vector<int> labels) {
  if (rows.empty()) throw CalibError(ErrorCode::EmptyDataset, "no examples");
  if (rows.size() != labels.size()) {
    throw CalibError(ErrorCode::DimensionMismatch, "row count differs from label count");
  }
  const std::size_t num_classes = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * num_classes);
  for (const auto& r : rows) {
    if (r.size() != num_classes) {
      throw CalibError(ErrorCode::DimensionMismatch, "ragged probability rows");
    }
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return validate(num_classes, std::move(flat), std::move(labels));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> probs;
  std::vector<int> labels;
  probs.reserve(indices.size() * num_classes_);
  labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    auto r = row(idx);
    probs.insert(probs.end(), r.begin(), r.end());
    labels.push_back(labels_[idx]);
  }
  return Dataset(num_classes_, std::move(probs), std::move(labels));
}

void rank_classes(std::span<const double> probs, std::size_t depth, std::span<std::size_t> order) {
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
  };
  if (depth >= order.size()) {
    std::sort(order.begin(), order.end(), before);
  } else {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth),
                      order.end(), before);
  }
}

TopKView topk_project(const Dataset& data, std::size_t k) {
  const std::size_t num_classes = data.num_classes();
  if (k < 1 || k > num_classes) {
    throw CalibError(ErrorCode::DepthOutOfRange,
                     "k=" + std::to_string(k) + " with K=" + std::to_string(num_classes));
  }
  TopKView view;
  view.n = data.size();
  view.k = k;
  view.num_classes = num_classes;
  view.z_top.resize(view.n * k);
  view.y_top.assign(view.n * k, 0);
  view.u.resize(view.n * k);

  std::vector<std::size_t> order(num_classes);
  for (std::size_t i = 0; i < view.n; ++i) {
    auto row = data.row(i);
    rank_classes(row, k, order);
    const auto label = static_cast<std::size_t>(data.label(i));
    for (std::size_t j = 0; j < k; ++j) {
      const double z = row[order[j]];
      const std::uint8_t y = order[j] == label ? 1 : 0;
      view.z_top[i * k + j] = z;
      view.y_top[i * k + j] = y;
      view.u[i * k + j] = static_cast<double>(y) - z;
    }
  }
  return view;
}

}  // namespace calib
