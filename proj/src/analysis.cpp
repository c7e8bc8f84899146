#include "commonit/analysis.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "commonit/io.hpp"

namespace commonit {

StatsReport group_stats(const GroupedDataset& grouped, const Dataset& dataset,
                        LengthBasis basis) {
  const auto problems = partition_problems(grouped, dataset);
  if (!problems.empty())
    throw InputError("group stats: grouping does not partition the dataset (" +
                     problems.front() + ")");

  std::unordered_map<std::string, const Record*> by_id;
  for (const auto& r : dataset.records) by_id.emplace(r.id, &r);

  StatsReport rep;
  rep.basis = basis;
  for (const auto& g : grouped.groups) {
    GroupStats gs;
    gs.label = g.label;
    gs.count = g.ids.size();
    gs.length_min = std::numeric_limits<std::size_t>::max();
    double sum = 0.0;
    for (const auto& id : g.ids) {
      const std::size_t len = record_length(*by_id.at(id), basis);
      ++gs.histogram[len];
      ++rep.histogram[len];
      gs.length_min = std::min(gs.length_min, len);
      gs.length_max = std::max(gs.length_max, len);
      sum += static_cast<double>(len);
    }
    gs.length_mean = sum / static_cast<double>(gs.count);
    rep.total += gs.count;
    rep.groups.push_back(std::move(gs));
  }
  return rep;
}

namespace {

double distinct_in_sample(std::vector<const std::string*>& pool, std::size_t sample_size,
                          Rng& rng) {
  // Partial Fisher-Yates: the first `sample_size` slots become the sample.
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < sample_size; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
    seen.insert(*pool[i]);
  }
  return static_cast<double>(seen.size());
}

std::vector<const std::string*> label_pool(
    const std::vector<std::string>& ids,
    const std::unordered_map<std::string, std::string>& labels) {
  std::vector<const std::string*> pool;
  pool.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = labels.find(id);
    if (it == labels.end()) throw InputError("category count: no label for id '" + id + "'");
    pool.push_back(&it->second);
  }
  return pool;
}

void finish(CategoryCountResult& r) {
  r.mean = r.counts.empty()
               ? 0.0
               : std::accumulate(r.counts.begin(), r.counts.end(), 0.0) /
                     static_cast<double>(r.counts.size());
}

}  // namespace

CategoryCountResult embedding_category_count(
    const std::vector<std::string>& ids,
    const std::unordered_map<std::string, std::string>& labels, std::size_t sample_size,
    std::size_t runs, std::uint64_t seed) {
  if (runs < 1) throw InputError("category count: runs must be at least 1");
  if (sample_size < 1 || sample_size > ids.size())
    throw InputError("category count: sample size " + std::to_string(sample_size) +
                     " out of range [1, " + std::to_string(ids.size()) + "]");
  CategoryCountResult r;
  r.sample_size = sample_size;
  r.runs = runs;
  const auto base = label_pool(ids, labels);
  for (std::size_t run = 0; run < runs; ++run) {
    Rng rng = Rng::derive(seed, "category-count", run);
    auto pool = base;
    r.counts.push_back(distinct_in_sample(pool, sample_size, rng));
  }
  finish(r);
  return r;
}

CategoryCountResult grouped_category_count(
    const GroupedDataset& grouped,
    const std::unordered_map<std::string, std::string>& labels, std::size_t sample_size,
    std::size_t runs, std::uint64_t seed) {
  if (runs < 1) throw InputError("category count: runs must be at least 1");
  if (grouped.groups.empty()) throw InputError("category count: no groups");
  std::vector<std::vector<const std::string*>> pools;
  for (const auto& g : grouped.groups) {
    if (sample_size < 1 || sample_size > g.ids.size())
      throw InputError("category count: sample size " + std::to_string(sample_size) +
                       " out of range for group '" + g.label + "' of " +
                       std::to_string(g.ids.size()));
    pools.push_back(label_pool(g.ids, labels));
  }
  CategoryCountResult r;
  r.sample_size = sample_size;
  r.runs = runs;
  for (std::size_t run = 0; run < runs; ++run) {
    Rng rng = Rng::derive(seed, "category-count", run);
    double sum = 0.0;
    for (const auto& base : pools) {
      auto pool = base;
      sum += distinct_in_sample(pool, sample_size, rng);
    }
    r.counts.push_back(sum / static_cast<double>(pools.size()));
  }
  finish(r);
  return r;
}

std::string_view to_string(DistanceMetric m) {
  return m == DistanceMetric::Euclidean ? "euclidean" : "cosine";
}

DistanceMetric parse_distance_metric(std::string_view name) {
  if (name == "euclidean") return DistanceMetric::Euclidean;
  if (name == "cosine") return DistanceMetric::Cosine;
  throw InputError("unknown metric '" + std::string(name) + "' (expected euclidean or cosine)");
}

double mean_pairwise_distance(const std::vector<Eigen::VectorXd>& vectors,
                              DistanceMetric metric) {
  if (vectors.size() < 2) throw InputError("mean_pairwise_distance: need at least 2 vectors");
  const Eigen::Index d = vectors.front().size();
  Eigen::MatrixXd points(static_cast<Eigen::Index>(vectors.size()), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != d)
      throw InputError("mean_pairwise_distance: dimension mismatch at vector " +
                       std::to_string(i));
    points.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
  }
  return mean_pairwise_distance(points, metric);
}

namespace {

Json histogram_json(const std::map<std::size_t, std::size_t>& h) {
  Json arr = Json::array();
  for (const auto& [bin, count] : h) arr.push_back(Json::array({bin, count}));
  return arr;
}

}  // namespace

std::string stats_string(const StatsReport& r) {
  Json j;
  j["basis"] = std::string(to_string(r.basis));
  j["total"] = r.total;
  Json groups = Json::array();
  for (const auto& g : r.groups) {
    Json o;
    o["label"] = g.label;
    o["count"] = g.count;
    o["length_min"] = g.length_min;
    o["length_max"] = g.length_max;
    o["length_mean"] = g.length_mean;
    o["histogram"] = histogram_json(g.histogram);
    groups.push_back(o);
  }
  j["groups"] = groups;
  j["histogram"] = histogram_json(r.histogram);
  return j.dump(2) + "\n";
}

std::string stats_csv(const StatsReport& r) {
  std::ostringstream out;
  out << "group,count,length_min,length_max,length_mean\n";
  for (const auto& g : r.groups) {
    // Labels like len[3,4]#0 contain commas.
    out << '"' << g.label << "\"," << g.count << ',' << g.length_min << ','
        << g.length_max << ',' << g.length_mean << '\n';
  }
  return out.str();
}

std::string category_count_string(const CategoryCountResult& r) {
  Json j;
  j["sample_size"] = r.sample_size;
  j["runs"] = r.runs;
  j["counts"] = r.counts;
  j["mean"] = r.mean;
  return j.dump(2) + "\n";
}

}  // namespace commonit
