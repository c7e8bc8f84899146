#include "commonit/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

namespace commonit {

using nlohmann::json;
using nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

std::string_view to_string(LengthBasis basis) {
  switch (basis) {
    case LengthBasis::TargetTokens: return "target-tokens";
    case LengthBasis::SourceTokens: return "source-tokens";
    case LengthBasis::FullTokens: return "full-tokens";
    case LengthBasis::TargetChars: return "target-chars";
  }
  return "?";
}

LengthBasis parse_length_basis(std::string_view name) {
  for (auto b : {LengthBasis::TargetTokens, LengthBasis::SourceTokens,
                 LengthBasis::FullTokens, LengthBasis::TargetChars}) {
    if (to_string(b) == name) return b;
  }
  throw InputError("unknown length basis '" + std::string(name) +
                   "' (expected target-tokens, source-tokens, full-tokens or "
                   "target-chars)");
}

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

std::size_t count_code_points(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(
      text.begin(), text.end(),
      [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::size_t record_length(const Record& record, LengthBasis basis) {
  // Token counts of concatenated texts add up because the texts are joined
  // with a separator.
  switch (basis) {
    case LengthBasis::TargetTokens:
      return count_tokens(record.target);
    case LengthBasis::SourceTokens:
      return count_tokens(record.instruction) + count_tokens(record.input);
    case LengthBasis::FullTokens:
      return count_tokens(record.instruction) + count_tokens(record.input) +
             count_tokens(record.target);
    case LengthBasis::TargetChars:
      return count_code_points(record.target);
  }
  return 0;
}

namespace {

std::string take_string(json& obj, const char* key, bool required,
                        const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required)
      throw ParseError(source, line,
                       std::string("missing required field '") + key + "'");
    return {};
  }
  if (!it->is_string())
    throw ParseError(source, line,
                     std::string("field '") + key + "' must be a string");
  std::string value = it->get<std::string>();
  obj.erase(it);
  return value;
}

}  // namespace

Dataset parse_dataset(std::istream& in, const std::string& source) {
  Dataset ds;
  ds.source_path = source;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (count_tokens(line) == 0) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, lineno, std::string("malformed record: ") + e.what());
    }
    if (!obj.is_object())
      throw ParseError(source, lineno, "record must be a JSON object");

    Record r;
    r.id = take_string(obj, "id", true, source, lineno);
    r.instruction = take_string(obj, "instruction", true, source, lineno);
    r.input = take_string(obj, "input", false, source, lineno);
    r.target = take_string(obj, "output", true, source, lineno);
    if (obj.contains("task")) {
      auto task = take_string(obj, "task", true, source, lineno);
      if (!task.empty()) r.task = std::move(task);
    }
    r.extra = obj.dump();

    if (r.id.empty()) throw ParseError(source, lineno, "field 'id' is empty");
    if (r.target.empty())
      throw ParseError(source, lineno, "field 'output' is empty");
    if (!seen.insert(r.id).second)
      throw ParseError(source, lineno, "duplicate id '" + r.id + "'");
    ds.records.push_back(std::move(r));
  }
  if (ds.records.empty()) throw InputError(source + ": dataset is empty");
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path + "'");
  return parse_dataset(in, path);
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& r : dataset.records) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["instruction"] = r.instruction;
    obj["input"] = r.input;
    obj["output"] = r.target;
    if (r.task) obj["task"] = *r.task;
    const json extra = json::parse(r.extra);
    for (const auto& [k, v] : extra.items()) obj[k] = v;
    out << obj.dump() << '\n';
  }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_dataset(dataset, out);
}

ValidationReport validate_dataset(const Dataset& dataset, LengthBasis basis) {
  ValidationReport rep;
  rep.basis = basis;
  rep.record_count = dataset.size();
  if (dataset.empty()) return rep;

  rep.length_min = std::numeric_limits<std::size_t>::max();
  double total = 0.0;
  for (const auto& r : dataset.records) {
    if (r.task) {
      ++rep.labeled_count;
      ++rep.task_counts[*r.task];
    }
    if (r.input.empty()) ++rep.empty_input_count;
    const std::size_t len = record_length(r, basis);
    rep.length_min = std::min(rep.length_min, len);
    rep.length_max = std::max(rep.length_max, len);
    total += static_cast<double>(len);
  }
  rep.task_coverage = static_cast<double>(rep.labeled_count) /
                      static_cast<double>(rep.record_count);
  rep.length_mean = total / static_cast<double>(rep.record_count);
  return rep;
}

}  // namespace commonit
