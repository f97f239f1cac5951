#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qgraph/graph.hpp"

namespace qgraph {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw InputError("unknown key '" + key + "' in " + where);
  }
}

std::string id_string(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw InputError(where + " must be a string or an integer");
}

double length_value(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return kInfinity;
  }
  throw InputError(where + " must be a number or \"inf\"");
}

}  // namespace

GraphSpec parse_graph_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw InputError(std::string("graph file is not valid JSON: ") + err.what());
  }
  if (!doc.is_object()) throw InputError("graph document must be a JSON object");
  reject_unknown_keys(doc, {"u", "vertices", "edges"}, "graph document");
  for (const char* key : {"u", "vertices", "edges"}) {
    if (!doc.contains(key)) throw InputError(std::string("graph document is missing '") + key + "'");
  }

  GraphSpec spec;
  if (!doc["u"].is_number()) throw InputError("'u' must be a number");
  spec.u = doc["u"].get<double>();

  if (!doc["vertices"].is_array()) throw InputError("'vertices' must be an array");
  for (const auto& v : doc["vertices"]) spec.vertices.push_back(id_string(v, "vertex id"));

  if (!doc["edges"].is_array()) throw InputError("'edges' must be an array");
  for (const auto& je : doc["edges"]) {
    if (!je.is_object()) throw InputError("each edge must be a JSON object");
    reject_unknown_keys(je, {"id", "length", "from", "to", "truncation"}, "edge");
    for (const char* key : {"id", "length", "from"}) {
      if (!je.contains(key)) throw InputError(std::string("edge is missing '") + key + "'");
    }
    EdgeSpec e;
    e.id = id_string(je["id"], "edge id");
    e.length = length_value(je["length"], "edge '" + e.id + "' length");
    e.from = id_string(je["from"], "edge '" + e.id + "' from");
    if (je.contains("to") && !je["to"].is_null()) e.to = id_string(je["to"], "edge '" + e.id + "' to");
    if (je.contains("truncation")) {
      if (!je["truncation"].is_number()) throw InputError("edge '" + e.id + "' truncation must be a number");
      e.truncation = je["truncation"].get<double>();
    }
    spec.edges.push_back(std::move(e));
  }
  return spec;
}

GraphSpec read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read graph file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_graph_json(buf.str());
}

std::string graph_to_json(const GraphSpec& spec) {
  json doc;
  doc["u"] = spec.u;
  doc["vertices"] = spec.vertices;
  doc["edges"] = json::array();
  for (const auto& e : spec.edges) {
    json je;
    je["id"] = e.id;
    if (std::isinf(e.length)) {
      je["length"] = "inf";
    } else {
      je["length"] = e.length;
    }
    je["from"] = e.from;
    if (e.to) je["to"] = *e.to;
    if (e.truncation) je["truncation"] = *e.truncation;
    doc["edges"].push_back(je);
  }
  return doc.dump(2);
}

}  // namespace qgraph
