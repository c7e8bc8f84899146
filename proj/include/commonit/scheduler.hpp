#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "commonit/common.hpp"
#include "commonit/grouping.hpp"

namespace commonit {

enum class ScheduleMode { CommonIT, Vanilla, SequentialGroups };
enum class TailPolicy { Keep, Drop };

std::string_view to_string(ScheduleMode m);
std::string_view to_string(TailPolicy p);
ScheduleMode parse_schedule_mode(std::string_view name);
TailPolicy parse_tail_policy(std::string_view name);

// Group label carried by batches of a Vanilla schedule.
inline constexpr std::string_view kMixedGroup = "*";

struct Batch {
  std::string group;
  std::vector<std::string> record_ids;
  bool is_tail = false;

  bool operator==(const Batch&) const = default;
};

struct ScheduleConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  TailPolicy tail = TailPolicy::Keep;
  ScheduleMode mode = ScheduleMode::CommonIT;
  // When false, the batches built for epoch 0 are reused (only reshuffled)
  // in later epochs.
  bool repartition_each_epoch = true;

  bool operator==(const ScheduleConfig&) const = default;
};

struct ScheduleStep {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global, 0-based, consecutive across epochs
  Batch batch;

  bool operator==(const ScheduleStep&) const = default;
};

struct Schedule {
  ScheduleConfig config;
  std::string generator = std::string(Rng::kGeneratorId);
  std::string grouping_hash;
  // Serialized JSON object embedded in the manifest header; empty for none.
  std::string provenance;
  std::vector<ScheduleStep> steps;

  bool operator==(const Schedule&) const = default;
};

// Shuffles each group's ids and cuts them into consecutive runs of
// `batch_size`. A short final run is kept as a tail batch under Keep and
// discarded under Drop. Batches come out grouped, in group order.
std::vector<Batch> build_partitions(const GroupedDataset& grouped,
                                    std::size_t batch_size, TailPolicy tail,
                                    Rng& rng);

// Uniform random permutation of the batch order.
void shuffle_schedule(std::vector<Batch>& batches, Rng& rng);

Schedule build_schedule(const GroupedDataset& grouped, const ScheduleConfig& config);

struct Violation {
  static constexpr std::size_t kNoStep = static_cast<std::size_t>(-1);

  std::size_t step = kNoStep;  // kNoStep for epoch- or schedule-level problems
  std::string message;
};

struct VerificationReport {
  std::vector<Violation> violations;
  std::size_t steps = 0;
  std::size_t epochs_seen = 0;
  std::size_t scheduled_per_epoch = 0;  // ids scheduled in epoch 0
  std::size_t expected_dropped_per_epoch = 0;
  std::vector<std::size_t> dropped_per_epoch;
  std::string schedule_hash;

  bool ok() const { return violations.empty(); }
};

// Checks batch homogeneity (CommonIT, SequentialGroups), batch-size bounds,
// tail flags, per-epoch coverage, step numbering and, for SequentialGroups,
// group contiguity. Never throws on a bad schedule; problems are listed.
VerificationReport verify_schedule(const Schedule& schedule,
                                   const GroupedDataset& grouped);

// Schedule manifest: a header object line followed by one
// {epoch, step, group, ids, tail} object per step.
void write_manifest(const Schedule& schedule, std::ostream& out);
std::string manifest_string(const Schedule& schedule);
// Steps are returned ordered by step index regardless of line order.
Schedule parse_manifest(std::istream& in, const std::string& source = "<stream>");

}  // namespace commonit
