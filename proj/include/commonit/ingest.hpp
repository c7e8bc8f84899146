#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "commonit/common.hpp"

namespace commonit {

// One instruction-tuning example. `extra` holds any unrecognised fields of
// the source line as serialized JSON ("{}" when none) so they survive a
// load/write round trip.
struct Record {
  std::string id;
  std::string instruction;
  std::string input;
  std::string target;
  std::optional<std::string> task;
  std::string extra = "{}";

  bool operator==(const Record&) const = default;
};

struct Dataset {
  std::vector<Record> records;
  std::string source_path;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::vector<std::string> ids() const;

  bool operator==(const Dataset&) const = default;
};

enum class LengthBasis { TargetTokens, SourceTokens, FullTokens, TargetChars };

std::string_view to_string(LengthBasis basis);
LengthBasis parse_length_basis(std::string_view name);

// Number of whitespace-delimited tokens; runs of whitespace count once.
std::size_t count_tokens(std::string_view text);
// Number of UTF-8 code points.
std::size_t count_code_points(std::string_view text);

std::size_t record_length(const Record& record,
                          LengthBasis basis = LengthBasis::TargetTokens);

// Reads the line-delimited dataset format: one JSON object per line with
// string fields `id`, `instruction`, `output`, optional `input` and `task`.
// Blank lines are skipped. Throws ParseError (with line number) on malformed
// lines, missing or empty required fields and duplicate ids, and InputError
// on an empty file.
Dataset load_dataset(const std::string& path);
Dataset parse_dataset(std::istream& in, const std::string& source = "<stream>");

void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::string& path);

struct ValidationReport {
  std::size_t record_count = 0;
  std::size_t labeled_count = 0;
  double task_coverage = 0.0;
  std::map<std::string, std::size_t> task_counts;
  LengthBasis basis = LengthBasis::TargetTokens;
  std::size_t length_min = 0;
  std::size_t length_max = 0;
  double length_mean = 0.0;
  std::size_t empty_input_count = 0;
};

ValidationReport validate_dataset(const Dataset& dataset,
                                  LengthBasis basis = LengthBasis::TargetTokens);

}  // namespace commonit
