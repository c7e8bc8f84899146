#pragma once

// Line-delimited and single-object JSON file formats shared with external
// tools: embedding tables, reference sets, id->label maps and grouped
// datasets. The dataset format lives in ingest.hpp and the schedule manifest
// in scheduler.hpp.

#include <iosfwd>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "commonit/grouping.hpp"

namespace commonit {

using Json = nlohmann::ordered_json;

// {"id": ..., "vector": [...]} per line.
EmbeddingTable parse_embeddings(std::istream& in, const std::string& source = "<stream>");
EmbeddingTable load_embeddings(const std::string& path);
void write_embeddings(const EmbeddingTable& table, std::ostream& out);

// {"id","vector"} lines as rows of a matrix, file order. Unlike an
// EmbeddingTable, zero vectors are accepted.
Eigen::MatrixXd load_vector_rows(const std::string& path);

// {"label": ..., "vector": [...]} per line, order preserved.
ReferenceSet parse_reference(std::istream& in, const std::string& source = "<stream>");
ReferenceSet load_reference(const std::string& path);
void write_reference(const ReferenceSet& reference, std::ostream& out);

// {"id": ..., "label": ...} per line.
std::unordered_map<std::string, std::string> load_labels(const std::string& path);

Json grouped_to_json(const GroupedDataset& grouped);
GroupedDataset grouped_from_json(const Json& j);
// Canonical single-line form; the schedule records its hash as provenance.
std::string grouped_string(const GroupedDataset& grouped);
GroupedDataset load_grouped(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace commonit
