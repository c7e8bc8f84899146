#include "commonit/io.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace commonit {

namespace {

Json parse_line(const std::string& line, const std::string& source,
                std::size_t lineno) {
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ParseError(source, lineno, std::string("malformed line: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(source, lineno, "expected a JSON object");
  return obj;
}

std::string string_field(const Json& obj, const char* key, const std::string& source,
                         std::size_t lineno) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ParseError(source, lineno, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

Eigen::VectorXd vector_field(const Json& obj, const std::string& source,
                             std::size_t lineno) {
  auto it = obj.find("vector");
  if (it == obj.end() || !it->is_array())
    throw ParseError(source, lineno, "missing array field 'vector'");
  Eigen::VectorXd v(static_cast<Eigen::Index>(it->size()));
  Eigen::Index i = 0;
  for (const auto& x : *it) {
    if (!x.is_number()) throw ParseError(source, lineno, "non-numeric vector entry");
    v(i++) = x.get<double>();
  }
  return v;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(line, lineno);
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

EmbeddingTable parse_embeddings(std::istream& in, const std::string& source) {
  EmbeddingTable table;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    Json obj = parse_line(line, source, lineno);
    std::string id = string_field(obj, "id", source, lineno);
    try {
      table.add(id, vector_field(obj, source, lineno));
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      throw ParseError(source, lineno, e.what());
    }
  });
  return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_embeddings(in, path);
}

void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  for (const auto& id : table.ids()) {
    Json obj;
    obj["id"] = id;
    obj["vector"] = vector_json(*table.find(id));
    out << obj.dump() << '\n';
  }
}

Eigen::MatrixXd load_vector_rows(const std::string& path) {
  auto in = open_or_throw(path);
  std::vector<Eigen::VectorXd> rows;
  std::unordered_set<std::string> seen;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    Json obj = parse_line(line, path, lineno);
    if (!seen.insert(string_field(obj, "id", path, lineno)).second)
      throw ParseError(path, lineno, "duplicate id");
    rows.push_back(vector_field(obj, path, lineno));
    if (rows.back().size() == 0 || rows.back().size() != rows.front().size())
      throw ParseError(path, lineno, "vector dimension mismatch");
  });
  if (rows.empty()) throw InputError(path + ": no vectors");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

ReferenceSet parse_reference(std::istream& in, const std::string& source) {
  ReferenceSet ref;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    Json obj = parse_line(line, source, lineno);
    std::string label = string_field(obj, "label", source, lineno);
    try {
      ref.add(label, vector_field(obj, source, lineno));
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      throw ParseError(source, lineno, e.what());
    }
  });
  if (ref.empty()) throw InputError(source + ": reference set is empty");
  return ref;
}

ReferenceSet load_reference(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_reference(in, path);
}

void write_reference(const ReferenceSet& reference, std::ostream& out) {
  for (std::size_t i = 0; i < reference.size(); ++i) {
    Json obj;
    obj["label"] = reference.label(i);
    obj["vector"] = vector_json(reference.vectors().col(static_cast<Eigen::Index>(i)));
    out << obj.dump() << '\n';
  }
}

std::unordered_map<std::string, std::string> load_labels(const std::string& path) {
  auto in = open_or_throw(path);
  std::unordered_map<std::string, std::string> labels;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    Json obj = parse_line(line, path, lineno);
    std::string id = string_field(obj, "id", path, lineno);
    std::string label = string_field(obj, "label", path, lineno);
    if (label.empty()) throw ParseError(path, lineno, "empty label");
    if (!labels.emplace(std::move(id), std::move(label)).second)
      throw ParseError(path, lineno, "duplicate id");
  });
  return labels;
}

Json grouped_to_json(const GroupedDataset& grouped) {
  Json j;
  j["strategy"] = std::string(to_string(grouped.strategy));
  Json params = Json::object();
  for (const auto& [k, v] : grouped.params) params[k] = v;
  j["params"] = params;
  Json groups = Json::object();
  for (const auto& g : grouped.groups) groups[g.label] = g.ids;
  j["groups"] = groups;
  return j;
}

GroupedDataset grouped_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("strategy") || !j.contains("groups"))
    throw InputError("grouped dataset: expected object with 'strategy' and 'groups'");
  GroupedDataset out;
  out.strategy = parse_strategy(j.at("strategy").get<std::string>());
  if (j.contains("params"))
    for (const auto& [k, v] : j.at("params").items())
      out.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
  for (const auto& [label, ids] : j.at("groups").items()) {
    Group g;
    g.label = label;
    g.ids = ids.get<std::vector<std::string>>();
    out.groups.push_back(std::move(g));
  }
  return out;
}

std::string grouped_string(const GroupedDataset& grouped) {
  return grouped_to_json(grouped).dump();
}

GroupedDataset load_grouped(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return grouped_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw InputError(path + ": malformed grouped dataset: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw InputError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace commonit
