#include "commonit/toy_trainer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "commonit/io.hpp"

namespace commonit {

SyntheticCorpus synthesize_multitask(const SynthConfig& cfg) {
  if (cfg.num_tasks < 1 || cfg.per_task < 1 || cfg.dim < 1)
    throw InputError("synthesize: task count, examples per task and dim must be positive");
  if (cfg.classes < 2) throw InputError("synthesize: need at least 2 classes");
  if (cfg.classes > cfg.dim)
    throw InputError("synthesize: classes (" + std::to_string(cfg.classes) +
                     ") must not exceed dim (" + std::to_string(cfg.dim) + ")");
  if (!(cfg.noise_sigma >= 0.0)) throw InputError("synthesize: negative noise");

  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const auto c = static_cast<Eigen::Index>(cfg.classes);
  Rng rng = Rng::derive(cfg.seed, "synth");

  // Orthonormal basis: first `classes` columns are class prototypes, the
  // rest span the space used for task offsets.
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();

  SyntheticCorpus out;
  out.classes = cfg.classes;
  out.grouped.strategy = Strategy::Task;
  out.grouped.params["source"] = "synthetic";

  for (std::size_t t = 0; t < cfg.num_tasks; ++t) {
    const double scale = 2.0 + 0.5 * static_cast<double>(t % 4);
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = c; j < d; ++j) offset += rng.normal() * basis.col(j);

    std::vector<int> mapping(cfg.classes);
    std::iota(mapping.begin(), mapping.end(), 0);
    fisher_yates(mapping.begin(), mapping.end(), rng);

    Group group;
    group.label = "task" + std::to_string(t);
    for (std::size_t i = 0; i < cfg.per_task; ++i) {
      const int cls = mapping[i % cfg.classes];
      ToyExample ex;
      ex.id = group.label + "-" + std::to_string(i);
      ex.label = cls;
      ex.group = group.label;
      ex.features = scale * basis.col(cls) + offset;
      if (cfg.noise_sigma > 0.0)
        for (Eigen::Index j = 0; j < d; ++j) ex.features(j) += rng.normal(0.0, cfg.noise_sigma);
      group.ids.push_back(ex.id);
      out.examples.push_back(std::move(ex));
    }
    out.grouped.groups.push_back(std::move(group));
  }
  return out;
}

std::string fingerprint(const std::vector<ToyExample>& examples) {
  std::uint64_t h = fnv1a64("");
  for (const auto& ex : examples) {
    h = fnv1a64(ex.id, h);
    h = fnv1a64(ex.group, h);
    const int label = ex.label;
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&label), sizeof label), h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(ex.features.data()),
                                 sizeof(double) * static_cast<std::size_t>(ex.features.size())),
                h);
  }
  return hex64(h);
}

std::map<std::string, double> task_accuracy(const ToyModel& model,
                                            const std::vector<ToyExample>& examples) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& ex : examples) {
    auto& [hit, n] = tally[ex.group];
    hit += predict(model, ex) == ex.label ? 1 : 0;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [task, hn] : tally)
    out[task] = static_cast<double>(hn.first) / static_cast<double>(hn.second);
  return out;
}

TrainRun train(const Schedule& schedule, const std::vector<ToyExample>& examples,
               const TrainConfig& config) {
  if (examples.empty()) throw InputError("train: no examples");
  std::unordered_map<std::string, const ToyExample*> by_id;
  int max_label = 0;
  const Eigen::Index dim = examples.front().features.size();
  for (const auto& ex : examples) {
    if (ex.features.size() != dim) throw InputError("train: inconsistent feature dims");
    if (!ex.features.allFinite()) throw InputError("train: non-finite features in '" + ex.id + "'");
    if (ex.label < 0) throw InputError("train: negative class in '" + ex.id + "'");
    if (!by_id.emplace(ex.id, &ex).second) throw InputError("train: duplicate id '" + ex.id + "'");
    max_label = std::max(max_label, ex.label);
  }
  const auto classes = static_cast<Eigen::Index>(
      config.classes ? config.classes : static_cast<std::size_t>(max_label) + 1);
  if (max_label >= classes) throw InputError("train: class index exceeds class count");

  TrainRun run;
  run.config = config;
  run.mode = schedule.config.mode;
  run.data_fingerprint = fingerprint(examples);
  run.initial = config.gaussian_init
                    ? ToyModel::gaussian(classes, dim, config.init_sigma, config.seed)
                    : ToyModel::zeros(classes, dim);
  run.model = run.initial;
  run.loss_trace.reserve(schedule.steps.size());

  std::vector<const ToyExample*> batch;
  for (const auto& s : schedule.steps) {
    batch.clear();
    for (const auto& id : s.batch.record_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end())
        throw InputError("train: step " + std::to_string(s.step) + " references unknown id '" +
                         id + "'");
      batch.push_back(it->second);
    }
    run.loss_trace.push_back({s.epoch, s.step, s.batch.group, batch_loss(run.model, batch)});
    run.model -= config.learning_rate * gradient(run.model, batch);
  }

  run.final_loss = batch_loss(run.model, examples);
  run.task_accuracy = task_accuracy(run.model, examples);
  std::size_t hits = 0;
  for (const auto& ex : examples) hits += predict(run.model, ex) == ex.label ? 1 : 0;
  run.overall_accuracy = static_cast<double>(hits) / static_cast<double>(examples.size());
  return run;
}

ComparisonReport compare_runs(const TrainRun& a, const TrainRun& b) {
  if (a.data_fingerprint != b.data_fingerprint)
    throw InputError("compare_runs: runs were trained on different examples");
  ComparisonReport rep;
  rep.mode_a = std::string(to_string(a.mode));
  rep.mode_b = std::string(to_string(b.mode));
  rep.final_loss_a = a.final_loss;
  rep.final_loss_b = b.final_loss;
  rep.final_loss_delta = b.final_loss - a.final_loss;
  rep.gap_sign = (rep.final_loss_delta > 0) - (rep.final_loss_delta < 0);
  for (const auto& [task, acc] : a.task_accuracy) {
    auto it = b.task_accuracy.find(task);
    const double other = it == b.task_accuracy.end() ? 0.0 : it->second;
    rep.accuracy.push_back({task, acc, other, other - acc});
  }
  for (const auto& p : a.loss_trace) rep.curve_a.push_back(p.loss);
  for (const auto& p : b.loss_trace) rep.curve_b.push_back(p.loss);
  return rep;
}

std::string train_run_string(const TrainRun& run) {
  Json header;
  header["format"] = "commonit-trainrun/1";
  header["mode"] = std::string(to_string(run.mode));
  header["learning_rate"] = run.config.learning_rate;
  header["init"] = run.config.gaussian_init ? "gaussian" : "zeros";
  header["init_sigma"] = run.config.init_sigma;
  header["seed"] = run.config.seed;
  header["data_fingerprint"] = run.data_fingerprint;
  header["steps"] = run.loss_trace.size();
  header["final_loss"] = run.final_loss;
  header["overall_accuracy"] = run.overall_accuracy;
  Json acc = Json::object();
  for (const auto& [task, v] : run.task_accuracy) acc[task] = v;
  header["task_accuracy"] = acc;

  std::ostringstream out;
  out << header.dump() << '\n';
  for (const auto& p : run.loss_trace) {
    Json line;
    line["epoch"] = p.epoch;
    line["step"] = p.step;
    line["group"] = p.group;
    line["loss"] = p.loss;
    out << line.dump() << '\n';
  }
  return out.str();
}

std::string comparison_string(const ComparisonReport& r) {
  Json j;
  j["mode_a"] = r.mode_a;
  j["mode_b"] = r.mode_b;
  j["final_loss_a"] = r.final_loss_a;
  j["final_loss_b"] = r.final_loss_b;
  j["final_loss_delta"] = r.final_loss_delta;
  j["gap_sign"] = r.gap_sign;
  Json rows = Json::array();
  for (const auto& row : r.accuracy)
    rows.push_back({{"task", row.task}, {"a", row.a}, {"b", row.b}, {"delta", row.delta}});
  j["task_accuracy"] = rows;
  j["curve_a"] = r.curve_a;
  j["curve_b"] = r.curve_b;
  return j.dump(2) + "\n";
}

}  // namespace commonit
