#pragma once

// File-to-file pipeline stages behind the `commonit` CLI subcommands. Each
// stage reads its inputs from disk, writes its artifacts into `out_dir`, and
// embeds the configuration it ran with in every artifact.

#include <cstdint>
#include <string>
#include <vector>

#include "commonit/analysis.hpp"
#include "commonit/grouping.hpp"
#include "commonit/ingest.hpp"
#include "commonit/scheduler.hpp"
#include "commonit/toy_trainer.hpp"

namespace commonit {

struct PipelineConfig {
  std::string dataset;
  std::string strategy = "task";
  std::size_t bins = kDefaultNumBins;
  std::string length_basis = "target-tokens";
  std::size_t k = kDefaultNeighbors;
  std::string reference;
  std::string embeddings;
  std::string grouped;  // defaults to <out>/grouped.json
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  std::string tail = "keep";
  std::string mode = "commonit";
  bool repartition = true;
  std::string out = ".";
  bool csv = false;

  // train-demo
  double lr = 0.1;
  std::size_t tasks = 3;
  std::size_t per_task = 100;
  std::size_t dim = 8;
  std::size_t classes = 4;
  double noise = 0.0;

  // analyze
  std::string analysis = "category-count";
  std::string labels;
  std::string vectors;
  std::size_t sample_size = kDefaultSampleSize;
  std::size_t runs = kDefaultRuns;
  std::string metric = "euclidean";
};

std::string config_string(const PipelineConfig& config);
std::string grouped_path(const PipelineConfig& config);

struct GroupOutcome {
  GroupedDataset grouped;
  StatsReport stats;
  std::vector<std::string> files;
};
GroupOutcome run_group(const PipelineConfig& config);

struct ScheduleOutcome {
  Schedule schedule;
  VerificationReport report;
  std::vector<std::string> files;
};
ScheduleOutcome run_schedule(const PipelineConfig& config);

struct TrainDemoOutcome {
  TrainRun commonit;
  TrainRun vanilla;
  ComparisonReport comparison;
  std::vector<std::string> files;
};
TrainDemoOutcome run_train_demo(const PipelineConfig& config);

struct AnalyzeOutcome {
  std::string report;  // JSON text written to disk
  std::vector<std::string> files;
};
AnalyzeOutcome run_analyze(const PipelineConfig& config);

struct ValidateOutcome {
  ValidationReport report;
  std::vector<std::string> files;
};
ValidateOutcome run_validate(const PipelineConfig& config);

}  // namespace commonit
