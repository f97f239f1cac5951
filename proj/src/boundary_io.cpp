#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qgraph/boundary.hpp"

namespace qgraph {

namespace {

using nlohmann::json;

Complex parse_entry(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw InputError("matrix entries must be numbers or [re, im] pairs");
}

CMatrix parse_matrix(const json& rows, std::size_t degree, const std::string& where) {
  const auto d = static_cast<Eigen::Index>(degree);
  if (!rows.is_array() || rows.size() != degree) {
    throw InputError(where + " must have " + std::to_string(degree) + " rows");
  }
  CMatrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != degree) {
      throw InputError(where + " must have " + std::to_string(degree) + " columns");
    }
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = parse_entry(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

VertexCondition parse_condition(const json& j, std::size_t degree, const std::string& where) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "dirichlet") return make_preset(Preset::dirichlet(), degree);
    if (name == "neumann") return make_preset(Preset::neumann(), degree);
    if (name == "kirchhoff") return make_preset(Preset::kirchhoff(), degree);
    throw InputError("unknown preset '" + name + "' at " + where);
  }
  if (!j.is_object()) throw InputError("condition at " + where + " must be a preset name or an object");
  if (j.contains("delta")) {
    if (j.size() != 1) throw InputError("a delta condition takes no other keys (" + where + ")");
    if (!j["delta"].is_number()) throw InputError("delta strength must be a number (" + where + ")");
    return make_preset(Preset::delta(j["delta"].get<double>()), degree);
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "L" && key != "P") throw InputError("unknown key '" + key + "' at " + where);
  }
  if (!j.contains("L") || !j.contains("P")) throw InputError("explicit condition at " + where + " needs L and P");
  return {parse_matrix(j["L"], degree, where + ".L"), parse_matrix(j["P"], degree, where + ".P")};
}

}  // namespace

BoundaryCondition parse_bc_json(const MetricGraph& g, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw InputError(std::string("boundary-condition file is not valid JSON: ") + err.what());
  }
  if (!doc.is_object()) throw InputError("boundary-condition document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "*" && !g.find_vertex(key)) throw InputError("boundary condition names unknown vertex '" + key + "'");
  }
  BoundaryCondition bc;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto& id = g.vertex_id(v);
    const std::string where = "vertex '" + id + "'";
    if (doc.contains(id)) {
      bc.at.push_back(parse_condition(doc[id], g.degree(v), where));
    } else if (doc.contains("*")) {
      bc.at.push_back(parse_condition(doc["*"], g.degree(v), where));
    } else {
      throw InputError("no boundary condition for " + where);
    }
  }
  return bc;
}

BoundaryCondition read_bc_file(const MetricGraph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read boundary-condition file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_bc_json(g, buf.str());
}

}  // namespace qgraph
