#include "calib/estimator.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>

#include "calib/error.hpp"
#include "calib/parallel.hpp"

namespace calib {

namespace {

constexpr std::size_t kParallelThreshold = 8192;

void check_pair(const TopKView& view, const PartitionSpec& spec) {
  if (view.k != spec.depth() || view.num_classes != spec.num_classes()) {
    throw CalibError(ErrorCode::DimensionMismatch, "view and partition disagree on (K, k)");
  }
}

double squared_norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Per-cell accumulator; examples must be added in ascending example order.
struct CellAccumulator {
  explicit CellAccumulator(std::size_t k) : sum_u(k), sum_outer(k * k) {}

  void add(std::span<const double> u) {
    const std::size_t k = u.size();
    ++count;
    for (std::size_t j = 0; j < k; ++j) sum_u[j].add(u[j]);
    sum_usq.add(squared_norm(u));
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t l = 0; l < k; ++l) sum_outer[j * k + l].add(u[j] * u[l]);
    }
  }

  void write(BinStatsTable& table, std::size_t bin) const {
    const std::size_t k = sum_u.size();
    table.counts[bin] = count;
    for (std::size_t j = 0; j < k; ++j) table.sum_u[bin * k + j] = sum_u[j].value();
    table.sum_usq[bin] = sum_usq.value();
    for (std::size_t j = 0; j < k * k; ++j) table.sum_outer[bin * k * k + j] = sum_outer[j].value();
  }

  std::size_t count = 0;
  std::vector<KahanSum> sum_u;
  KahanSum sum_usq;
  std::vector<KahanSum> sum_outer;
};

BinStatsTable empty_table(const PartitionSpec& spec, std::size_t bins) {
  const std::size_t k = spec.depth();
  BinStatsTable t{spec, {}, {}, {}, {}, {}};
  t.codes.resize(bins);
  t.counts.resize(bins);
  t.sum_u.resize(bins * k);
  t.sum_usq.resize(bins);
  t.sum_outer.resize(bins * k * k);
  return t;
}

std::vector<std::uint64_t> compute_codes(const TopKView& view, const PartitionSpec& spec) {
  std::vector<std::uint64_t> codes(view.n);
  ExceptionCollector errors;
  const auto n = static_cast<std::ptrdiff_t>(view.n);
#pragma omp parallel for if (view.n >= kParallelThreshold) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    errors.run([&] {
      const auto idx = static_cast<std::size_t>(i);
      codes[idx] = bin_code(view.z_row(idx), spec);
    });
  }
  errors.rethrow();
  return codes;
}

void check_count(const BinStatsTable& stats, std::size_t n) {
  if (stats.total_count() != n) {
    throw CalibError(ErrorCode::CountMismatch, "bin counts sum to " +
                                                   std::to_string(stats.total_count()) +
                                                   ", expected n=" + std::to_string(n));
  }
}

template <class Weight>
double cross_pair_sum(const BinStatsTable& stats, Weight weight) {
  double acc = 0.0;
  for (std::size_t b = 0; b < stats.size(); ++b) {
    const std::size_t count = stats.counts[b];
    if (count < 2) continue;
    acc += (squared_norm(stats.sum_u_of(b)) - stats.sum_usq[b]) / weight(count);
  }
  return acc;
}

}  // namespace

std::size_t BinStatsTable::total_count() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::vector<double> BinStatsTable::mean_u(std::size_t bin) const {
  const auto n = static_cast<double>(counts[bin]);
  auto s = sum_u_of(bin);
  std::vector<double> mean(s.begin(), s.end());
  for (double& x : mean) x /= n;
  return mean;
}

std::vector<double> BinStatsTable::cov_u(std::size_t bin) const {
  const std::size_t k = depth();
  const auto n = static_cast<double>(counts[bin]);
  const auto mean = mean_u(bin);
  std::vector<double> cov(k * k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t l = 0; l < k; ++l) {
      cov[j * k + l] = sum_outer[bin * k * k + j * k + l] / n - mean[j] * mean[l];
    }
  }
  return cov;
}

BinStatsTable bin_stats(const TopKView& view, const PartitionSpec& spec) {
  check_pair(view, spec);
  const auto codes = compute_codes(view, spec);

  // Stable counting sort of examples by cell, cells in ascending code order.
  std::unordered_map<std::uint64_t, std::size_t> slot_of;
  std::vector<std::size_t> slot(view.n);
  for (std::size_t i = 0; i < view.n; ++i) {
    slot[i] = slot_of.try_emplace(codes[i], slot_of.size()).first->second;
  }
  std::vector<std::uint64_t> distinct(slot_of.size());
  for (const auto& [code, s] : slot_of) distinct[s] = code;
  std::vector<std::size_t> rank(distinct.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::sort(rank.begin(), rank.end(),
            [&](std::size_t a, std::size_t b) { return distinct[a] < distinct[b]; });
  std::vector<std::size_t> position(distinct.size());
  for (std::size_t r = 0; r < rank.size(); ++r) position[rank[r]] = r;

  const std::size_t bins = distinct.size();
  std::vector<std::size_t> starts(bins + 1, 0);
  for (std::size_t i = 0; i < view.n; ++i) ++starts[position[slot[i]] + 1];
  std::partial_sum(starts.begin(), starts.end(), starts.begin());
  std::vector<std::size_t> order(view.n);
  std::vector<std::size_t> fill(starts.begin(), starts.end() - 1);
  for (std::size_t i = 0; i < view.n; ++i) order[fill[position[slot[i]]]++] = i;

  BinStatsTable table = empty_table(spec, bins);
  const auto nb = static_cast<std::ptrdiff_t>(bins);
#pragma omp parallel for if (view.n >= kParallelThreshold) schedule(dynamic, 16)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const auto bin = static_cast<std::size_t>(b);
    CellAccumulator acc(spec.depth());
    for (std::size_t p = starts[bin]; p < starts[bin + 1]; ++p) acc.add(view.u_row(order[p]));
    table.codes[bin] = codes[order[starts[bin]]];
    acc.write(table, bin);
  }
  return table;
}

BinStatsTable bin_stats_serial(const TopKView& view, const PartitionSpec& spec) {
  check_pair(view, spec);
  std::map<std::uint64_t, CellAccumulator> cells;
  for (std::size_t i = 0; i < view.n; ++i) {
    const auto code = bin_code(view.z_row(i), spec);
    auto it = cells.try_emplace(code, spec.depth()).first;
    it->second.add(view.u_row(i));
  }
  BinStatsTable table = empty_table(spec, cells.size());
  std::size_t bin = 0;
  for (const auto& [code, acc] : cells) {
    table.codes[bin] = code;
    acc.write(table, bin);
    ++bin;
  }
  return table;
}

EstimateValue debiased_ece(const BinStatsTable& stats, std::size_t n) {
  check_count(stats, n);
  const double t = cross_pair_sum(stats, [](std::size_t c) { return static_cast<double>(c - 1); }) /
                   static_cast<double>(n);
  return {t, std::max(t, 0.0), n, stats.spec};
}

double tcal_statistic(const BinStatsTable& stats, std::size_t n) {
  check_count(stats, n);
  return cross_pair_sum(stats, [](std::size_t c) { return static_cast<double>(c); }) /
         static_cast<double>(n);
}

BinnedResiduals::BinnedResiduals(const TopKView& view, const PartitionSpec& spec)
    : depth_(spec.depth()), slots_(view.n), u_(view.u) {
  check_pair(view, spec);
  const auto codes = compute_codes(view, spec);
  std::vector<std::uint64_t> distinct(codes);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  num_slots_ = distinct.size();
  for (std::size_t i = 0; i < view.n; ++i) {
    slots_[i] = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), codes[i]) - distinct.begin());
  }
}

BinnedResiduals::Workspace BinnedResiduals::make_workspace() const {
  Workspace ws;
  ws.counts.resize(num_slots_);
  ws.sum_u.resize(num_slots_ * depth_);
  ws.sum_usq.resize(num_slots_);
  return ws;
}

namespace {

// Accumulates rows into slots and returns the weighted cross-pair sum over
// non-empty slots in slot order, mirroring bin_stats + debiased_ece.
template <class RowAt, class Weight>
double slot_statistic(std::size_t count, std::size_t k, BinnedResiduals::Workspace& ws,
                      RowAt row_at, Weight weight) {
  std::fill(ws.counts.begin(), ws.counts.end(), 0);
  std::fill(ws.sum_u.begin(), ws.sum_u.end(), KahanSum{});
  std::fill(ws.sum_usq.begin(), ws.sum_usq.end(), KahanSum{});
  for (std::size_t p = 0; p < count; ++p) {
    const auto [slot, u] = row_at(p);
    ++ws.counts[slot];
    for (std::size_t j = 0; j < k; ++j) ws.sum_u[slot * k + j].add(u[j]);
    ws.sum_usq[slot].add(squared_norm(u));
  }
  double acc = 0.0;
  for (std::size_t s = 0; s < ws.counts.size(); ++s) {
    const std::size_t c = ws.counts[s];
    if (c < 2) continue;
    double s2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = ws.sum_u[s * k + j].value();
      s2 += v * v;
    }
    acc += (s2 - ws.sum_usq[s].value()) / weight(c);
  }
  return acc / static_cast<double>(count);
}

}  // namespace

double BinnedResiduals::debiased(std::span<const std::size_t> indices, Workspace& ws) const {
  return slot_statistic(
      indices.size(), depth_, ws,
      [&](std::size_t p) { return std::pair{slots_[indices[p]], u_row(indices[p])}; },
      [](std::size_t c) { return static_cast<double>(c - 1); });
}

double BinnedResiduals::tcal(std::span<const std::size_t> indices, Workspace& ws) const {
  return slot_statistic(
      indices.size(), depth_, ws,
      [&](std::size_t p) { return std::pair{slots_[indices[p]], u_row(indices[p])}; },
      [](std::size_t c) { return static_cast<double>(c); });
}

double BinnedResiduals::tcal_with_residuals(std::span<const double> u_rows, Workspace& ws) const {
  if (u_rows.size() != u_.size()) {
    throw CalibError(ErrorCode::DimensionMismatch, "residual matrix has the wrong shape");
  }
  return slot_statistic(
      size(), depth_, ws,
      [&](std::size_t p) {
        return std::pair{slots_[p], std::span<const double>(u_rows.data() + p * depth_, depth_)};
      },
      [](std::size_t c) { return static_cast<double>(c); });
}

}  // namespace calib
