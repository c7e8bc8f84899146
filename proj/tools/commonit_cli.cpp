// commonit: group an instruction-tuning dataset, build single-group
// mini-batch schedules, and run the desk-scale training/analysis checks.
//
//   commonit group --dataset data.jsonl --strategy length --bins 8 --out run/
//   commonit schedule --out run/ --batch-size 32 --epochs 3 --seed 7
//   commonit train-demo --out demo/
//   commonit analyze --analysis distance --vectors emb.jsonl --out run/
//
// Exit status: 0 success, 2 bad input, 3 internal error, 4 schedule failed
// verification.

#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commonit/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kInputError = 2, kInternalError = 3, kVerifyFailed = 4 };

int report_error(const char* kind, const std::string& message, int code) {
  nlohmann::ordered_json err;
  err["error"]["kind"] = kind;
  err["error"]["message"] = message;
  err["error"]["exit_code"] = code;
  std::cerr << err.dump() << '\n';
  return code;
}

void print_files(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << "wrote " << f << '\n';
}

void add_out(CLI::App* app, commonit::PipelineConfig& c) {
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void add_grouping_flags(CLI::App* app, commonit::PipelineConfig& c) {
  app->add_option("--dataset", c.dataset, "Line-delimited dataset file");
  app->add_option("--strategy", c.strategy, "task | length | embedding")
      ->check(CLI::IsMember({"task", "length", "embedding"}))
      ->capture_default_str();
  app->add_option("--bins", c.bins, "Number of length bins")->capture_default_str();
  app->add_option("--length-basis", c.length_basis,
                  "target-tokens | source-tokens | full-tokens | target-chars")
      ->capture_default_str();
  app->add_option("--k", c.k, "Neighbors for the embedding vote")->capture_default_str();
  app->add_option("--reference", c.reference, "Labeled reference vector file");
  app->add_option("--embeddings", c.embeddings, "Record embedding file");
}

void add_schedule_flags(CLI::App* app, commonit::PipelineConfig& c) {
  app->add_option("--batch-size", c.batch_size, "Mini-batch size")->capture_default_str();
  app->add_option("--epochs", c.epochs, "Number of epochs")->capture_default_str();
  app->add_option("--tail", c.tail, "keep | drop")
      ->check(CLI::IsMember({"keep", "drop"}))
      ->capture_default_str();
  app->add_flag("!--no-repartition", c.repartition,
                "Reuse the first epoch's batches in later epochs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Commonality-aware instruction-tuning batch scheduling toolkit"};
  app.require_subcommand(1);
  commonit::PipelineConfig c;

  auto* validate = app.add_subcommand("validate", "Load a dataset and report its statistics");
  validate->add_option("--dataset", c.dataset, "Line-delimited dataset file")->required();
  validate->add_option("--length-basis", c.length_basis, "Length basis")->capture_default_str();
  add_out(validate, c);

  auto* group = app.add_subcommand("group", "Partition a dataset into groups");
  add_grouping_flags(group, c);
  group->add_flag("--csv", c.csv, "Also write stats.csv");
  add_out(group, c);

  auto* schedule = app.add_subcommand("schedule", "Build and verify a batch schedule");
  schedule->add_option("--grouped", c.grouped, "Grouped dataset file (default <out>/grouped.json)");
  schedule->add_option("--mode", c.mode, "commonit | vanilla | sequential")
      ->check(CLI::IsMember({"commonit", "vanilla", "sequential"}))
      ->capture_default_str();
  add_schedule_flags(schedule, c);
  add_out(schedule, c);

  auto* demo = app.add_subcommand("train-demo",
                                  "Train the toy model under CommonIT and Vanilla schedules");
  add_schedule_flags(demo, c);
  demo->add_option("--lr", c.lr, "Learning rate")->capture_default_str();
  demo->add_option("--tasks", c.tasks, "Synthetic tasks")->capture_default_str();
  demo->add_option("--per-task", c.per_task, "Examples per task")->capture_default_str();
  demo->add_option("--dim", c.dim, "Feature dimension")->capture_default_str();
  demo->add_option("--classes", c.classes, "Number of classes")->capture_default_str();
  demo->add_option("--noise", c.noise, "Feature noise sigma")->capture_default_str();
  add_out(demo, c);

  auto* analyze = app.add_subcommand("analyze", "Category-count study or distance probe");
  analyze->add_option("--analysis", c.analysis, "category-count | distance")
      ->check(CLI::IsMember({"category-count", "distance"}))
      ->capture_default_str();
  analyze->add_option("--dataset", c.dataset, "Restrict to this dataset's ids");
  analyze->add_option("--labels", c.labels, "id -> label file");
  analyze->add_option("--embeddings", c.embeddings, "Record embedding file (labels via kNN)");
  analyze->add_option("--reference", c.reference, "Labeled reference vector file");
  analyze->add_option("--k", c.k, "Neighbors for the embedding vote")->capture_default_str();
  analyze->add_option("--grouped", c.grouped, "Also sample per group of this grouped file");
  analyze->add_option("--vectors", c.vectors, "Vector file for the distance probe");
  analyze->add_option("--sample-size", c.sample_size, "Samples per run")->capture_default_str();
  analyze->add_option("--runs", c.runs, "Number of runs")->capture_default_str();
  analyze->add_option("--metric", c.metric, "euclidean | cosine")->capture_default_str();
  analyze->add_flag("--csv", c.csv, "Also write a CSV table");
  add_out(analyze, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kInputError);
  }

  try {
    if (*validate) {
      auto r = commonit::run_validate(c);
      std::cout << r.report.record_count << " records, task coverage "
                << r.report.task_coverage << '\n';
      print_files(r.files);
    } else if (*group) {
      auto r = commonit::run_group(c);
      std::cout << r.grouped.groups.size() << " groups over " << r.stats.total
                << " records\n";
      print_files(r.files);
    } else if (*schedule) {
      auto r = commonit::run_schedule(c);
      std::cout << r.report.steps << " steps, " << r.report.violations.size()
                << " violation(s)\n";
      print_files(r.files);
      if (!r.report.ok()) {
        return report_error("verification", r.report.violations.front().message,
                            kVerifyFailed);
      }
    } else if (*demo) {
      auto r = commonit::run_train_demo(c);
      std::cout << "final loss commonit=" << r.comparison.final_loss_a
                << " vanilla=" << r.comparison.final_loss_b << '\n';
      print_files(r.files);
    } else if (*analyze) {
      auto r = commonit::run_analyze(c);
      print_files(r.files);
    }
  } catch (const commonit::InputError& e) {
    return report_error("input", e.what(), kInputError);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), kInternalError);
  }
  return kOk;
}
