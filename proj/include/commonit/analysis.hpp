#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "commonit/common.hpp"
#include "commonit/grouping.hpp"
#include "commonit/ingest.hpp"

namespace commonit {

struct GroupStats {
  std::string label;
  std::size_t count = 0;
  std::size_t length_min = 0;
  std::size_t length_max = 0;
  double length_mean = 0.0;
  std::map<std::size_t, std::size_t> histogram;  // length -> count
};

struct StatsReport {
  LengthBasis basis = LengthBasis::TargetTokens;
  std::size_t total = 0;
  std::vector<GroupStats> groups;  // grouped-dataset order
  std::map<std::size_t, std::size_t> histogram;
};

// Throws InputError if `grouped` does not partition `dataset`.
StatsReport group_stats(const GroupedDataset& grouped, const Dataset& dataset,
                        LengthBasis basis = LengthBasis::TargetTokens);

struct CategoryCountResult {
  std::size_t sample_size = 0;
  std::size_t runs = 0;
  std::vector<double> counts;  // one per run
  double mean = 0.0;
};

inline constexpr std::size_t kDefaultSampleSize = 500;
inline constexpr std::size_t kDefaultRuns = 10;

// Per run: draw `sample_size` ids without replacement and count the distinct
// labels among them.
CategoryCountResult embedding_category_count(
    const std::vector<std::string>& ids,
    const std::unordered_map<std::string, std::string>& labels,
    std::size_t sample_size = kDefaultSampleSize, std::size_t runs = kDefaultRuns,
    std::uint64_t seed = 0);

// Same study over a grouped dataset: each run samples `sample_size` ids from
// every group separately and records the average distinct-label count across
// groups. Every group must hold at least `sample_size` ids.
CategoryCountResult grouped_category_count(
    const GroupedDataset& grouped,
    const std::unordered_map<std::string, std::string>& labels,
    std::size_t sample_size = kDefaultSampleSize, std::size_t runs = kDefaultRuns,
    std::uint64_t seed = 0);

enum class DistanceMetric { Euclidean, Cosine };

std::string_view to_string(DistanceMetric m);
DistanceMetric parse_distance_metric(std::string_view name);

// Mean distance over all unordered pairs of rows of `points`. Cosine distance
// is 1 - cosine similarity.
template <typename Derived>
double mean_pairwise_distance(const Eigen::MatrixBase<Derived>& points,
                              DistanceMetric metric = DistanceMetric::Euclidean) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw InputError("mean_pairwise_distance: need at least 2 vectors");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      total += metric == DistanceMetric::Euclidean
                   ? static_cast<double>((points.row(i) - points.row(j)).norm())
                   : 1.0 - static_cast<double>(cosine_similarity(
                               points.row(i).transpose(), points.row(j).transpose()));
  return total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double mean_pairwise_distance(const std::vector<Eigen::VectorXd>& vectors,
                              DistanceMetric metric = DistanceMetric::Euclidean);

std::string stats_string(const StatsReport& report);
std::string stats_csv(const StatsReport& report);
std::string category_count_string(const CategoryCountResult& result);

}  // namespace commonit
