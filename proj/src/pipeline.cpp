#include "commonit/pipeline.hpp"

#include <filesystem>

#include "commonit/io.hpp"

namespace commonit {

namespace fs = std::filesystem;

namespace {

Json config_json(const PipelineConfig& c) {
  Json j;
  j["dataset"] = c.dataset;
  j["strategy"] = c.strategy;
  j["bins"] = c.bins;
  j["length_basis"] = c.length_basis;
  j["k"] = c.k;
  j["reference"] = c.reference;
  j["embeddings"] = c.embeddings;
  j["grouped"] = c.grouped;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["tail"] = c.tail;
  j["mode"] = c.mode;
  j["repartition"] = c.repartition;
  j["out"] = c.out;
  j["lr"] = c.lr;
  j["tasks"] = c.tasks;
  j["per_task"] = c.per_task;
  j["dim"] = c.dim;
  j["classes"] = c.classes;
  j["noise"] = c.noise;
  j["analysis"] = c.analysis;
  j["labels"] = c.labels;
  j["vectors"] = c.vectors;
  j["sample_size"] = c.sample_size;
  j["runs"] = c.runs;
  j["metric"] = c.metric;
  return j;
}

std::string output_file(const PipelineConfig& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string("missing required flag ") + flag);
}

// Adds the provenance object to a pretty-printed single-object report.
std::string with_config(const std::string& report_json, const PipelineConfig& c) {
  Json j = Json::parse(report_json);
  j["config"] = config_json(c);
  return j.dump(2) + "\n";
}

}  // namespace

std::string config_string(const PipelineConfig& config) {
  return config_json(config).dump();
}

std::string grouped_path(const PipelineConfig& c) {
  return c.grouped.empty() ? (fs::path(c.out) / "grouped.json").string() : c.grouped;
}

GroupOutcome run_group(const PipelineConfig& c) {
  require(c.dataset, "--dataset");
  const Dataset dataset = load_dataset(c.dataset);
  const LengthBasis basis = parse_length_basis(c.length_basis);

  GroupOutcome out;
  switch (parse_strategy(c.strategy)) {
    case Strategy::Task:
      out.grouped = group_by_task(dataset);
      break;
    case Strategy::Length:
      out.grouped = group_by_length(dataset, c.bins, basis);
      break;
    case Strategy::Embedding:
      require(c.embeddings, "--embeddings");
      require(c.reference, "--reference");
      out.grouped = group_by_embedding(dataset, load_embeddings(c.embeddings),
                                       load_reference(c.reference), c.k);
      break;
  }
  out.stats = group_stats(out.grouped, dataset, basis);

  Json grouped = grouped_to_json(out.grouped);
  grouped["config"] = config_json(c);
  const std::string gpath = output_file(c, "grouped.json");
  write_text_file(gpath, grouped.dump(2) + "\n");
  const std::string spath = output_file(c, "stats.json");
  write_text_file(spath, with_config(stats_string(out.stats), c));
  out.files = {gpath, spath};
  if (c.csv) {
    const std::string cpath = output_file(c, "stats.csv");
    write_text_file(cpath, stats_csv(out.stats));
    out.files.push_back(cpath);
  }
  return out;
}

ScheduleOutcome run_schedule(const PipelineConfig& c) {
  const GroupedDataset grouped = load_grouped(grouped_path(c));
  ScheduleConfig sc;
  sc.batch_size = c.batch_size;
  sc.epochs = c.epochs;
  sc.seed = c.seed;
  sc.tail = parse_tail_policy(c.tail);
  sc.mode = parse_schedule_mode(c.mode);
  sc.repartition_each_epoch = c.repartition;

  ScheduleOutcome out;
  out.schedule = build_schedule(grouped, sc);
  out.schedule.provenance = config_string(c);
  out.report = verify_schedule(out.schedule, grouped);

  const std::string mpath = output_file(c, "schedule.jsonl");
  write_text_file(mpath, manifest_string(out.schedule));

  Json v;
  v["ok"] = out.report.ok();
  v["steps"] = out.report.steps;
  v["epochs"] = out.report.epochs_seen;
  v["scheduled_per_epoch"] = out.report.scheduled_per_epoch;
  v["expected_dropped_per_epoch"] = out.report.expected_dropped_per_epoch;
  v["dropped_per_epoch"] = out.report.dropped_per_epoch;
  v["schedule_hash"] = out.report.schedule_hash;
  Json violations = Json::array();
  for (const auto& viol : out.report.violations) {
    Json o;
    if (viol.step == Violation::kNoStep)
      o["step"] = nullptr;
    else
      o["step"] = viol.step;
    o["message"] = viol.message;
    violations.push_back(o);
  }
  v["violations"] = violations;
  v["config"] = config_json(c);
  const std::string vpath = output_file(c, "verification.json");
  write_text_file(vpath, v.dump(2) + "\n");
  out.files = {mpath, vpath};
  return out;
}

TrainDemoOutcome run_train_demo(const PipelineConfig& c) {
  SynthConfig synth;
  synth.num_tasks = c.tasks;
  synth.per_task = c.per_task;
  synth.dim = c.dim;
  synth.classes = c.classes;
  synth.noise_sigma = c.noise;
  synth.seed = c.seed;
  const SyntheticCorpus corpus = synthesize_multitask(synth);

  ScheduleConfig sc;
  sc.batch_size = c.batch_size;
  sc.epochs = c.epochs;
  sc.seed = c.seed;
  sc.tail = parse_tail_policy(c.tail);
  sc.repartition_each_epoch = c.repartition;

  TrainConfig tc;
  tc.learning_rate = c.lr;
  tc.seed = c.seed;
  tc.classes = corpus.classes;

  TrainDemoOutcome out;
  sc.mode = ScheduleMode::CommonIT;
  out.commonit = train(build_schedule(corpus.grouped, sc), corpus.examples, tc);
  sc.mode = ScheduleMode::Vanilla;
  out.vanilla = train(build_schedule(corpus.grouped, sc), corpus.examples, tc);
  out.comparison = compare_runs(out.commonit, out.vanilla);

  auto with_header_config = [&](const std::string& run) {
    const auto nl = run.find('\n');
    Json header = Json::parse(run.substr(0, nl));
    header["config"] = config_json(c);
    return header.dump() + run.substr(nl);
  };
  const std::string a = output_file(c, "train_commonit.jsonl");
  write_text_file(a, with_header_config(train_run_string(out.commonit)));
  const std::string b = output_file(c, "train_vanilla.jsonl");
  write_text_file(b, with_header_config(train_run_string(out.vanilla)));
  const std::string r = output_file(c, "comparison.json");
  write_text_file(r, with_config(comparison_string(out.comparison), c));
  out.files = {a, b, r};
  return out;
}

namespace {

std::unordered_map<std::string, std::string> labels_for(const PipelineConfig& c,
                                                        std::vector<std::string>& ids) {
  if (!c.labels.empty()) {
    auto labels = load_labels(c.labels);
    if (ids.empty()) {
      for (const auto& [id, _] : labels) ids.push_back(id);
      std::sort(ids.begin(), ids.end());
    }
    return labels;
  }
  require(c.embeddings, "--labels or --embeddings");
  require(c.reference, "--reference");
  const EmbeddingTable table = load_embeddings(c.embeddings);
  const ReferenceSet ref = load_reference(c.reference);
  if (ids.empty()) ids = table.ids();
  std::unordered_map<std::string, std::string> labels;
  for (const auto& id : ids) {
    const Eigen::VectorXd* v = table.find(id);
    if (!v) throw InputError("no embedding for id '" + id + "'");
    labels.emplace(id, knn_classify(*v, ref, c.k));
  }
  return labels;
}

}  // namespace

AnalyzeOutcome run_analyze(const PipelineConfig& c) {
  AnalyzeOutcome out;
  Json report;
  report["analysis"] = c.analysis;
  std::string name;
  if (c.analysis == "category-count") {
    std::vector<std::string> ids;
    if (!c.dataset.empty()) ids = load_dataset(c.dataset).ids();
    const auto labels = labels_for(c, ids);
    const auto vanilla = embedding_category_count(ids, labels, c.sample_size, c.runs, c.seed);
    report["vanilla"] = Json::parse(category_count_string(vanilla));
    if (!c.grouped.empty()) {
      const auto grouped = grouped_category_count(load_grouped(c.grouped), labels,
                                                  c.sample_size, c.runs, c.seed);
      report["grouped"] = Json::parse(category_count_string(grouped));
    }
    name = "category_count.json";
  } else if (c.analysis == "distance") {
    require(c.vectors, "--vectors");
    const Eigen::MatrixXd vecs = load_vector_rows(c.vectors);
    const DistanceMetric metric = parse_distance_metric(c.metric);
    report["metric"] = std::string(to_string(metric));
    report["count"] = vecs.rows();
    report["mean_pairwise_distance"] = mean_pairwise_distance(vecs, metric);
    name = "distance.json";
  } else {
    throw InputError("unknown analysis '" + c.analysis +
                     "' (expected category-count or distance)");
  }
  report["config"] = config_json(c);
  out.report = report.dump(2) + "\n";
  const std::string path = output_file(c, name);
  write_text_file(path, out.report);
  out.files = {path};
  if (c.csv && c.analysis == "category-count") {
    std::string csv = "sampling,run,count\n";
    for (const char* key : {"vanilla", "grouped"}) {
      if (!report.contains(key)) continue;
      const auto& counts = report[key]["counts"];
      for (std::size_t i = 0; i < counts.size(); ++i)
        csv += std::string(key) + "," + std::to_string(i) + "," + counts[i].dump() + "\n";
    }
    const std::string cpath = output_file(c, "category_count.csv");
    write_text_file(cpath, csv);
    out.files.push_back(cpath);
  }
  return out;
}

ValidateOutcome run_validate(const PipelineConfig& c) {
  require(c.dataset, "--dataset");
  ValidateOutcome out;
  out.report = validate_dataset(load_dataset(c.dataset), parse_length_basis(c.length_basis));
  const auto& r = out.report;
  Json j;
  j["record_count"] = r.record_count;
  j["labeled_count"] = r.labeled_count;
  j["task_coverage"] = r.task_coverage;
  Json tasks = Json::object();
  for (const auto& [t, n] : r.task_counts) tasks[t] = n;
  j["task_counts"] = tasks;
  j["length_basis"] = std::string(to_string(r.basis));
  j["length_min"] = r.length_min;
  j["length_max"] = r.length_max;
  j["length_mean"] = r.length_mean;
  j["empty_input_count"] = r.empty_input_count;
  j["config"] = config_json(c);
  const std::string path = output_file(c, "validation.json");
  write_text_file(path, j.dump(2) + "\n");
  out.files = {path};
  return out;
}

}  // namespace commonit
