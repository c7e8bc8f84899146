#include "commonit/scheduler.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "commonit/io.hpp"

namespace commonit {

std::string_view to_string(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::CommonIT: return "commonit";
    case ScheduleMode::Vanilla: return "vanilla";
    case ScheduleMode::SequentialGroups: return "sequential";
  }
  return "?";
}

std::string_view to_string(TailPolicy p) {
  return p == TailPolicy::Keep ? "keep" : "drop";
}

ScheduleMode parse_schedule_mode(std::string_view name) {
  if (name == "commonit") return ScheduleMode::CommonIT;
  if (name == "vanilla") return ScheduleMode::Vanilla;
  if (name == "sequential") return ScheduleMode::SequentialGroups;
  throw InputError("unknown mode '" + std::string(name) +
                   "' (expected commonit, vanilla or sequential)");
}

TailPolicy parse_tail_policy(std::string_view name) {
  if (name == "keep") return TailPolicy::Keep;
  if (name == "drop") return TailPolicy::Drop;
  throw InputError("unknown tail policy '" + std::string(name) +
                   "' (expected keep or drop)");
}

namespace {

void slice_into(std::vector<Batch>& out, const std::string& label,
                const std::vector<std::string>& ids, std::size_t batch_size,
                TailPolicy tail) {
  for (std::size_t begin = 0; begin < ids.size(); begin += batch_size) {
    const std::size_t end = std::min(ids.size(), begin + batch_size);
    const bool short_run = end - begin < batch_size;
    if (short_run && tail == TailPolicy::Drop) break;
    Batch b;
    b.group = label;
    b.record_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(begin),
                        ids.begin() + static_cast<std::ptrdiff_t>(end));
    b.is_tail = short_run;
    out.push_back(std::move(b));
  }
}

std::vector<Batch> vanilla_batches(const GroupedDataset& grouped,
                                   std::size_t batch_size, TailPolicy tail,
                                   Rng& rng) {
  std::vector<std::string> ids;
  ids.reserve(grouped.record_count());
  for (const auto& g : grouped.groups)
    ids.insert(ids.end(), g.ids.begin(), g.ids.end());
  fisher_yates(ids.begin(), ids.end(), rng);
  std::vector<Batch> out;
  slice_into(out, std::string(kMixedGroup), ids, batch_size, tail);
  return out;
}

// Emits the batches of each group consecutively, group order drawn from rng.
std::vector<Batch> sequential_order(std::vector<Batch> batches,
                                    const GroupedDataset& grouped, Rng& rng) {
  std::vector<std::size_t> order(grouped.groups.size());
  std::iota(order.begin(), order.end(), 0);
  fisher_yates(order.begin(), order.end(), rng);
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t r = 0; r < order.size(); ++r)
    rank.emplace(grouped.groups[order[r]].label, r);
  std::stable_sort(batches.begin(), batches.end(),
                   [&](const Batch& a, const Batch& b) {
                     return rank.at(a.group) < rank.at(b.group);
                   });
  return batches;
}

}  // namespace

std::vector<Batch> build_partitions(const GroupedDataset& grouped,
                                    std::size_t batch_size, TailPolicy tail,
                                    Rng& rng) {
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  std::vector<Batch> out;
  for (const auto& g : grouped.groups) {
    std::vector<std::string> ids = g.ids;
    fisher_yates(ids.begin(), ids.end(), rng);
    slice_into(out, g.label, ids, batch_size, tail);
  }
  return out;
}

void shuffle_schedule(std::vector<Batch>& batches, Rng& rng) {
  fisher_yates(batches.begin(), batches.end(), rng);
}

Schedule build_schedule(const GroupedDataset& grouped, const ScheduleConfig& config) {
  if (config.batch_size < 1) throw InputError("batch size must be at least 1");
  if (config.epochs < 1) throw InputError("epochs must be at least 1");
  if (grouped.groups.empty() || grouped.record_count() == 0)
    throw InputError("cannot schedule an empty grouped dataset");
  if (config.tail == TailPolicy::Drop) {
    const bool any_full =
        config.mode == ScheduleMode::Vanilla
            ? grouped.record_count() >= config.batch_size
            : std::any_of(grouped.groups.begin(), grouped.groups.end(),
                          [&](const Group& g) { return g.ids.size() >= config.batch_size; });
    if (!any_full)
      throw InputError("tail policy 'drop' with batch size " +
                       std::to_string(config.batch_size) +
                       " would drop every record");
  }

  Schedule sched;
  sched.config = config;
  sched.grouping_hash = hex64(fnv1a64(grouped_string(grouped)));

  std::vector<Batch> first_epoch;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng order_rng = Rng::derive(config.seed, "order", epoch);
    std::vector<Batch> batches;
    if (epoch > 0 && !config.repartition_each_epoch) {
      batches = first_epoch;
    } else {
      Rng part_rng = Rng::derive(config.seed, "partition", epoch);
      batches = config.mode == ScheduleMode::Vanilla
                    ? vanilla_batches(grouped, config.batch_size, config.tail, part_rng)
                    : build_partitions(grouped, config.batch_size, config.tail, part_rng);
      if (epoch == 0 && !config.repartition_each_epoch) first_epoch = batches;
    }

    if (config.mode == ScheduleMode::SequentialGroups)
      batches = sequential_order(std::move(batches), grouped, order_rng);
    else
      shuffle_schedule(batches, order_rng);

    for (auto& b : batches) sched.steps.push_back({epoch, step++, std::move(b)});
  }
  return sched;
}

VerificationReport verify_schedule(const Schedule& schedule,
                                   const GroupedDataset& grouped) {
  VerificationReport rep;
  const auto& cfg = schedule.config;
  const std::size_t n = cfg.batch_size;
  const bool grouped_mode = cfg.mode != ScheduleMode::Vanilla;
  auto fail = [&](std::size_t step, std::string msg) {
    rep.violations.push_back({step, std::move(msg)});
  };

  rep.steps = schedule.steps.size();
  const auto label_of = grouped.label_of();
  const std::size_t total = grouped.record_count();

  if (n < 1) {
    fail(Violation::kNoStep, "batch size is zero");
    rep.schedule_hash = hex64(fnv1a64(manifest_string(schedule)));
    return rep;
  }

  std::size_t expected_drop = 0;
  if (cfg.tail == TailPolicy::Drop) {
    if (grouped_mode)
      for (const auto& g : grouped.groups) expected_drop += g.ids.size() % n;
    else
      expected_drop = total % n;
  }
  rep.expected_dropped_per_epoch = expected_drop;

  std::map<std::size_t, std::vector<std::size_t>> by_epoch;
  for (std::size_t i = 0; i < schedule.steps.size(); ++i) {
    const auto& s = schedule.steps[i];
    if (s.step != i)
      fail(s.step, "step index " + std::to_string(s.step) + " at position " +
                       std::to_string(i));
    if (i > 0 && s.epoch < schedule.steps[i - 1].epoch)
      fail(s.step, "epoch index decreases");
    if (s.epoch >= cfg.epochs)
      fail(s.step, "epoch " + std::to_string(s.epoch) + " beyond configured " +
                       std::to_string(cfg.epochs));
    by_epoch[s.epoch].push_back(i);

    const auto& b = s.batch;
    const std::size_t size = b.record_ids.size();
    if (size == 0) fail(s.step, "empty batch");
    if (size > n)
      fail(s.step, "batch of " + std::to_string(size) + " exceeds batch size " +
                       std::to_string(n));
    if (!b.is_tail && size != n && size != 0)
      fail(s.step, "short batch of " + std::to_string(size) + " not flagged as tail");
    if (b.is_tail && size >= n) fail(s.step, "full batch flagged as tail");
    if (b.is_tail && cfg.tail == TailPolicy::Drop)
      fail(s.step, "tail batch present under drop policy");

    if (grouped_mode && !grouped.find(b.group))
      fail(s.step, "unknown group '" + b.group + "'");
    for (const auto& id : b.record_ids) {
      auto it = label_of.find(id);
      if (it == label_of.end()) {
        fail(s.step, "unknown id '" + id + "'");
      } else if (grouped_mode && it->second != b.group) {
        fail(s.step, "homogeneity: id '" + id + "' belongs to '" + it->second +
                         "', batch is '" + b.group + "'");
      }
    }
  }

  rep.epochs_seen = by_epoch.size();
  if (by_epoch.size() != cfg.epochs)
    fail(Violation::kNoStep, "schedule covers " + std::to_string(by_epoch.size()) +
                                 " epoch(s), configured " + std::to_string(cfg.epochs));

  for (const auto& [epoch, indices] : by_epoch) {
    const std::string where = "epoch " + std::to_string(epoch) + ": ";
    std::unordered_map<std::string, std::size_t> seen;
    std::unordered_map<std::string, std::size_t> per_group;
    std::size_t scheduled = 0;
    for (std::size_t i : indices) {
      for (const auto& id : schedule.steps[i].batch.record_ids) {
        if (++seen[id] == 2)
          fail(schedule.steps[i].step, where + "id '" + id + "' scheduled twice");
        ++scheduled;
        auto it = label_of.find(id);
        if (it != label_of.end()) ++per_group[it->second];
      }
    }
    if (epoch == by_epoch.begin()->first) rep.scheduled_per_epoch = scheduled;

    std::size_t missing = 0;
    for (const auto& [id, label] : label_of)
      if (!seen.count(id)) ++missing;
    rep.dropped_per_epoch.push_back(missing);
    if (cfg.tail == TailPolicy::Keep && missing > 0)
      fail(Violation::kNoStep, where + std::to_string(missing) + " id(s) never scheduled");
    if (cfg.tail == TailPolicy::Drop) {
      if (missing != expected_drop)
        fail(Violation::kNoStep, where + "dropped " + std::to_string(missing) +
                                     " id(s), expected " + std::to_string(expected_drop));
      if (grouped_mode)
        for (const auto& g : grouped.groups) {
          const std::size_t want = g.ids.size() - g.ids.size() % n;
          const std::size_t got = per_group.count(g.label) ? per_group.at(g.label) : 0;
          if (got != want)
            fail(Violation::kNoStep, where + "group '" + g.label + "' scheduled " +
                                         std::to_string(got) + " id(s), expected " +
                                         std::to_string(want));
        }
    }

    if (cfg.mode == ScheduleMode::SequentialGroups) {
      std::unordered_set<std::string> closed;
      const std::string* current = nullptr;
      for (std::size_t i : indices) {
        const auto& g = schedule.steps[i].batch.group;
        if (current && *current == g) continue;
        if (current) closed.insert(*current);
        if (closed.count(g))
          fail(schedule.steps[i].step, where + "group '" + g + "' is not contiguous");
        current = &g;
      }
    }
  }

  rep.schedule_hash = hex64(fnv1a64(manifest_string(schedule)));
  return rep;
}

namespace {

Json header_json(const Schedule& s) {
  Json h;
  h["format"] = "commonit-schedule/1";
  h["mode"] = std::string(to_string(s.config.mode));
  h["batch_size"] = s.config.batch_size;
  h["epochs"] = s.config.epochs;
  h["seed"] = s.config.seed;
  h["generator"] = s.generator;
  h["tail_policy"] = std::string(to_string(s.config.tail));
  h["repartition_each_epoch"] = s.config.repartition_each_epoch;
  h["grouping_hash"] = s.grouping_hash;
  h["steps"] = s.steps.size();
  if (!s.provenance.empty()) h["provenance"] = Json::parse(s.provenance);
  return h;
}

}  // namespace

void write_manifest(const Schedule& schedule, std::ostream& out) {
  out << header_json(schedule).dump() << '\n';
  for (const auto& s : schedule.steps) {
    Json line;
    line["epoch"] = s.epoch;
    line["step"] = s.step;
    line["group"] = s.batch.group;
    line["ids"] = s.batch.record_ids;
    line["tail"] = s.batch.is_tail;
    out << line.dump() << '\n';
  }
}

std::string manifest_string(const Schedule& schedule) {
  std::ostringstream ss;
  write_manifest(schedule, ss);
  return ss.str();
}

Schedule parse_manifest(std::istream& in, const std::string& source) {
  Schedule sched;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t declared_steps = 0;
  std::map<std::size_t, ScheduleStep> steps;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
      if (!have_header) {
        sched.config.mode = parse_schedule_mode(obj.at("mode").get<std::string>());
        sched.config.batch_size = obj.at("batch_size").get<std::size_t>();
        sched.config.epochs = obj.at("epochs").get<std::size_t>();
        sched.config.seed = obj.at("seed").get<std::uint64_t>();
        sched.config.tail = parse_tail_policy(obj.at("tail_policy").get<std::string>());
        sched.config.repartition_each_epoch =
            obj.value("repartition_each_epoch", true);
        sched.generator = obj.at("generator").get<std::string>();
        sched.grouping_hash = obj.value("grouping_hash", std::string());
        declared_steps = obj.at("steps").get<std::size_t>();
        if (obj.contains("provenance")) sched.provenance = obj.at("provenance").dump();
        have_header = true;
        continue;
      }
      ScheduleStep s;
      s.epoch = obj.at("epoch").get<std::size_t>();
      s.step = obj.at("step").get<std::size_t>();
      s.batch.group = obj.at("group").get<std::string>();
      s.batch.record_ids = obj.at("ids").get<std::vector<std::string>>();
      s.batch.is_tail = obj.value("tail", false);
      if (!steps.emplace(s.step, std::move(s)).second)
        throw ParseError(source, lineno, "duplicate step index");
    } catch (const Json::exception& e) {
      throw ParseError(source, lineno, std::string("malformed manifest line: ") + e.what());
    }
  }
  if (!have_header) throw InputError(source + ": empty manifest");
  if (steps.size() != declared_steps)
    throw ParseError(source, lineno,
                     "manifest declares " + std::to_string(declared_steps) +
                         " steps but contains " + std::to_string(steps.size()));
  for (auto& [_, s] : steps) sched.steps.push_back(std::move(s));
  return sched;
}

}  // namespace commonit
