#include "commonit/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace commonit {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Task: return "task";
    case Strategy::Length: return "length";
    case Strategy::Embedding: return "embedding";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "task") return Strategy::Task;
  if (name == "length") return Strategy::Length;
  if (name == "embedding") return Strategy::Embedding;
  throw InputError("unknown strategy '" + std::string(name) +
                   "' (expected task, length or embedding)");
}

std::size_t GroupedDataset::record_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.ids.size();
  return n;
}

const Group* GroupedDataset::find(std::string_view label) const {
  for (const auto& g : groups)
    if (g.label == label) return &g;
  return nullptr;
}

std::unordered_map<std::string, std::string> GroupedDataset::label_of() const {
  std::unordered_map<std::string, std::string> out;
  out.reserve(record_count());
  for (const auto& g : groups)
    for (const auto& id : g.ids) out.emplace(id, g.label);
  return out;
}

std::vector<std::string> partition_problems(const GroupedDataset& grouped,
                                            const Dataset& dataset) {
  std::vector<std::string> problems;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    position.emplace(dataset.records[i].id, i);

  std::unordered_set<std::string> labels;
  std::unordered_map<std::string, std::string> owner;
  for (const auto& g : grouped.groups) {
    if (g.label.empty()) problems.push_back("group with empty label");
    if (!labels.insert(g.label).second)
      problems.push_back("duplicate group label '" + g.label + "'");
    if (g.ids.empty()) problems.push_back("group '" + g.label + "' is empty");
    std::size_t prev = 0;
    bool first = true;
    for (const auto& id : g.ids) {
      auto pos = position.find(id);
      if (pos == position.end()) {
        problems.push_back("id '" + id + "' in group '" + g.label +
                           "' is not in the dataset");
        continue;
      }
      auto [it, fresh] = owner.emplace(id, g.label);
      if (!fresh)
        problems.push_back("id '" + id + "' appears in both '" + it->second +
                           "' and '" + g.label + "'");
      if (!first && pos->second <= prev)
        problems.push_back("group '" + g.label +
                           "' is not in dataset order at id '" + id + "'");
      prev = pos->second;
      first = false;
    }
  }
  for (const auto& r : dataset.records)
    if (!owner.count(r.id)) problems.push_back("id '" + r.id + "' is in no group");
  return problems;
}

GroupedDataset group_by_task(const Dataset& dataset) {
  std::vector<std::string> unlabeled;
  for (const auto& r : dataset.records)
    if (!r.task) unlabeled.push_back(r.id);
  if (!unlabeled.empty()) {
    std::string msg = "group by task: " + std::to_string(unlabeled.size()) +
                      " record(s) missing a task label:";
    for (std::size_t i = 0; i < unlabeled.size() && i < 20; ++i)
      msg += " " + unlabeled[i];
    if (unlabeled.size() > 20) msg += " ...";
    throw InputError(msg);
  }

  GroupedDataset out;
  out.strategy = Strategy::Task;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : dataset.records) {
    auto [it, fresh] = slot.emplace(*r.task, out.groups.size());
    if (fresh) out.groups.push_back({*r.task, {}});
    out.groups[it->second].ids.push_back(r.id);
  }
  return out;
}

GroupedDataset group_by_length(const Dataset& dataset, std::size_t num_bins,
                               LengthBasis basis) {
  const std::size_t n = dataset.size();
  if (num_bins < 1 || num_bins > n)
    throw InputError("group by length: bin count " + std::to_string(num_bins) +
                     " out of range [1, " + std::to_string(n) + "]");

  std::vector<std::size_t> lengths(n);
  for (std::size_t i = 0; i < n; ++i)
    lengths[i] = record_length(dataset.records[i], basis);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });

  GroupedDataset out;
  out.strategy = Strategy::Length;
  out.params["num_bins"] = std::to_string(num_bins);
  out.params["basis"] = std::string(to_string(basis));

  const std::size_t base = n / num_bins;
  const std::size_t extra = n % num_bins;
  std::size_t begin = 0;
  for (std::size_t b = 0; b < num_bins; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    std::vector<std::size_t> slice(order.begin() + begin,
                                   order.begin() + begin + size);
    begin += size;
    const std::size_t lo = lengths[slice.front()];
    const std::size_t hi = lengths[slice.back()];
    std::sort(slice.begin(), slice.end());
    Group g;
    g.label = "len[" + std::to_string(lo) + "," + std::to_string(hi) + "]#" +
              std::to_string(b);
    g.ids.reserve(size);
    for (std::size_t i : slice) g.ids.push_back(dataset.records[i].id);
    out.groups.push_back(std::move(g));
  }
  return out;
}

void EmbeddingTable::add(const std::string& id, Eigen::VectorXd v) {
  if (id.empty()) throw InputError("embedding with empty id");
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_ || dim_ == 0)
    throw InputError("embedding '" + id + "' has dimension " +
                     std::to_string(v.size()) + ", expected " +
                     std::to_string(dim_));
  if (!(v.norm() > 0.0)) throw InputError("embedding '" + id + "' has zero norm");
  if (!vectors_.emplace(id, std::move(v)).second)
    throw InputError("duplicate embedding id '" + id + "'");
  order_.push_back(id);
}

const Eigen::VectorXd* EmbeddingTable::find(const std::string& id) const {
  auto it = vectors_.find(id);
  return it == vectors_.end() ? nullptr : &it->second;
}

void ReferenceSet::add(const std::string& label, const Eigen::VectorXd& v) {
  if (label.empty()) throw InputError("reference entry with empty label");
  if (!empty() && v.size() != dim())
    throw InputError("reference entry '" + label + "' has dimension " +
                     std::to_string(v.size()) + ", expected " +
                     std::to_string(dim()));
  if (v.size() == 0) throw InputError("reference entry '" + label + "' is empty");
  double sq = 0.0;
  for (Eigen::Index d = 0; d < v.size(); ++d) sq += v(d) * v(d);
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0))
    throw InputError("reference entry '" + label + "' has zero norm");

  const Eigen::Index col = vectors_.cols();
  vectors_.conservativeResize(v.size(), col + 1);
  vectors_.col(col) = v;
  norms_.conservativeResize(col + 1);
  norms_(col) = norm;
  labels_.push_back(label);
}

std::vector<std::size_t> nearest_neighbors(const Eigen::VectorXd& query,
                                           const ReferenceSet& reference,
                                           std::size_t k) {
  if (k < 1 || k > reference.size())
    throw InputError("knn: k = " + std::to_string(k) + " out of range [1, " +
                     std::to_string(reference.size()) + "]");
  if (query.size() != reference.dim())
    throw InputError("knn: query dimension " + std::to_string(query.size()) +
                     " does not match reference dimension " +
                     std::to_string(reference.dim()));
  double qsq = 0.0;
  for (Eigen::Index d = 0; d < query.size(); ++d) qsq += query(d) * query(d);
  const double qn = std::sqrt(qsq);
  if (!(qn > 0.0)) throw InputError("knn: zero-norm query");

  // Index-order accumulation: identical entries score identically.
  const Eigen::MatrixXd& m = reference.vectors();
  Eigen::VectorXd sims(m.cols());
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    double dot = 0.0;
    for (Eigen::Index d = 0; d < m.rows(); ++d) dot += m(d, i) * query(d);
    sims(i) = dot / (reference.norms()(i) * qn);
  }

  std::vector<std::size_t> idx(reference.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), [&](std::size_t a, std::size_t b) {
                      const double sa = sims(static_cast<Eigen::Index>(a));
                      const double sb = sims(static_cast<Eigen::Index>(b));
                      return sa > sb || (sa == sb && a < b);
                    });
  idx.resize(k);
  return idx;
}

std::string knn_classify(const Eigen::VectorXd& query,
                         const ReferenceSet& reference, std::size_t k) {
  const auto ranked = nearest_neighbors(query, reference, k);
  // Labels in rank order of first appearance, so index 0 is the best rank.
  std::vector<std::pair<const std::string*, std::size_t>> votes;
  for (std::size_t i : ranked) {
    const std::string& label = reference.label(i);
    auto it = std::find_if(votes.begin(), votes.end(),
                           [&](const auto& v) { return *v.first == label; });
    if (it == votes.end())
      votes.emplace_back(&label, 1);
    else
      ++it->second;
  }
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second > best->second) best = it;
  return *best->first;
}

GroupedDataset group_by_embedding(const Dataset& dataset,
                                  const EmbeddingTable& embeddings,
                                  const ReferenceSet& reference, std::size_t k) {
  if (reference.empty()) throw InputError("group by embedding: empty reference set");
  if (embeddings.size() > 0 && embeddings.dim() != reference.dim())
    throw InputError("group by embedding: embedding dimension " +
                     std::to_string(embeddings.dim()) +
                     " does not match reference dimension " +
                     std::to_string(reference.dim()));

  GroupedDataset out;
  out.strategy = Strategy::Embedding;
  out.params["k"] = std::to_string(k);
  out.params["reference_size"] = std::to_string(reference.size());

  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : dataset.records) {
    const Eigen::VectorXd* v = embeddings.find(r.id);
    if (!v) throw InputError("group by embedding: no embedding for id '" + r.id + "'");
    std::string label = knn_classify(*v, reference, k);
    auto [it, fresh] = slot.emplace(label, out.groups.size());
    if (fresh) out.groups.push_back({std::move(label), {}});
    out.groups[it->second].ids.push_back(r.id);
  }
  return out;
}

}  // namespace commonit
