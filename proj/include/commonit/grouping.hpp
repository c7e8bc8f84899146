#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "commonit/common.hpp"
#include "commonit/ingest.hpp"

namespace commonit {

enum class Strategy { Task, Length, Embedding };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct Group {
  std::string label;
  std::vector<std::string> ids;  // dataset order

  bool operator==(const Group&) const = default;
};

// A labeled partition of a dataset's record ids. Groups are kept in a fixed
// order (first appearance for task/embedding, ascending length for length
// bins) so that serialization is reproducible.
struct GroupedDataset {
  Strategy strategy = Strategy::Task;
  std::map<std::string, std::string> params;
  std::vector<Group> groups;

  std::size_t record_count() const;
  const Group* find(std::string_view label) const;
  // id -> label lookup over all groups.
  std::unordered_map<std::string, std::string> label_of() const;

  bool operator==(const GroupedDataset&) const = default;
};

// Empty when `grouped` is an exact partition of `dataset` (disjoint, covering,
// non-empty groups, dataset order within groups); otherwise one message per
// problem found.
std::vector<std::string> partition_problems(const GroupedDataset& grouped,
                                            const Dataset& dataset);

GroupedDataset group_by_task(const Dataset& dataset);

// Equal-count quantile binning of record lengths. Ids are ordered by
// (length, dataset position) and cut into `num_bins` contiguous slices; the
// first N mod B slices hold one extra record. Labels take the form
// "len[lo,hi]#i" with lo/hi the observed lengths of bin i.
GroupedDataset group_by_length(const Dataset& dataset, std::size_t num_bins,
                               LengthBasis basis = LengthBasis::TargetTokens);

inline constexpr std::size_t kDefaultNumBins = 8;
inline constexpr std::size_t kDefaultNeighbors = 8;

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size())
    throw InputError("cosine_similarity: dimension mismatch (" +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0)))
    throw InputError("cosine_similarity: zero-norm vector");
  return a.dot(b) / (na * nb);
}

// Dense vectors for dataset records, keyed by record id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  // Throws InputError on duplicate id, dimension mismatch or zero norm.
  void add(const std::string& id, Eigen::VectorXd v);
  const Eigen::VectorXd* find(const std::string& id) const;
  // Insertion order.
  const std::vector<std::string>& ids() const { return order_; }

 private:
  Eigen::Index dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
  std::vector<std::string> order_;
};

// Labeled exemplar vectors, one per column. Labels may repeat.
class ReferenceSet {
 public:
  ReferenceSet() = default;

  void add(const std::string& label, const Eigen::VectorXd& v);

  Eigen::Index dim() const { return vectors_.rows(); }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }
  const Eigen::VectorXd& norms() const { return norms_; }

 private:
  std::vector<std::string> labels_;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd norms_;
};

// Indices of the k reference entries most similar to `query`, best first.
// Equal similarities are ordered by reference position.
std::vector<std::size_t> nearest_neighbors(const Eigen::VectorXd& query,
                                           const ReferenceSet& reference,
                                           std::size_t k);

// Majority vote over the k nearest reference entries. A vote tie goes to the
// tied label whose best neighbor ranks highest; k = 1 returns the label of
// the single most similar entry.
std::string knn_classify(const Eigen::VectorXd& query,
                         const ReferenceSet& reference,
                         std::size_t k = kDefaultNeighbors);

GroupedDataset group_by_embedding(const Dataset& dataset,
                                  const EmbeddingTable& embeddings,
                                  const ReferenceSet& reference,
                                  std::size_t k = kDefaultNeighbors);

}  // namespace commonit
