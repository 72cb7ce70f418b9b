#include "vemeig/io.hpp"
#include "vemeig/mesh.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace vemeig {

std::string mesh_to_json(const PolygonalMesh& mesh) {
  std::string out = "{\n";
  if (mesh.domain()) out += "  \"domain\": \"" + mesh.domain()->name() + "\",\n";
  out += "  \"vertices\": [";
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Point& p = mesh.vertices()[static_cast<std::size_t>(i)];
    out += i == 0 ? "\n    [" : ",\n    [";
    out += format_double(p.x()) + ", " + format_double(p.y()) + "]";
  }
  out += "\n  ],\n  \"cells\": [";
  for (int c = 0; c < mesh.num_cells(); ++c) {
    out += c == 0 ? "\n    [" : ",\n    [";
    const auto& cyc = mesh.cell(c);
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(cyc[i]);
    }
    out += "]";
  }
  out += "\n  ]\n}\n";
  return out;
}

void save_mesh(const PolygonalMesh& mesh, const std::filesystem::path& path) {
  write_file_atomic(path, mesh_to_json(mesh));
}

namespace {

int line_of_offset(std::string_view text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

PolygonalMesh mesh_from_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MeshError("mesh parse error at line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
  if (!doc.is_object()) throw MeshError("mesh parse error: top level must be an object");
  if (!doc.contains("vertices") || !doc["vertices"].is_array()) throw MeshError("mesh parse error: field 'vertices' missing or not an array");
  if (!doc.contains("cells") || !doc["cells"].is_array()) throw MeshError("mesh parse error: field 'cells' missing or not an array");
  std::vector<Point> vertices;
  for (std::size_t i = 0; i < doc["vertices"].size(); ++i) {
    const json& v = doc["vertices"][i];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw MeshError("mesh parse error: field 'vertices[" + std::to_string(i) + "]' must be [x, y]");
    vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  std::vector<std::vector<int>> cells;
  for (std::size_t c = 0; c < doc["cells"].size(); ++c) {
    const json& cj = doc["cells"][c];
    if (!cj.is_array()) throw MeshError("mesh parse error: field 'cells[" + std::to_string(c) + "]' must be an array");
    std::vector<int> cyc;
    for (std::size_t i = 0; i < cj.size(); ++i) {
      if (!cj[i].is_number_integer())
        throw MeshError("mesh parse error: field 'cells[" + std::to_string(c) + "][" + std::to_string(i) + "]' must be an integer");
      const auto idx = cj[i].get<long long>();
      if (idx < 0 || idx >= static_cast<long long>(vertices.size()))
        throw MeshError("cell references missing vertex: cells[" + std::to_string(c) + "][" + std::to_string(i) +
                        "] = " + std::to_string(idx));
      cyc.push_back(static_cast<int>(idx));
    }
    cells.push_back(std::move(cyc));
  }
  std::optional<Domain> domain;
  if (doc.contains("domain")) {
    if (!doc["domain"].is_string()) throw MeshError("mesh parse error: field 'domain' must be a string");
    try {
      domain = Domain::parse(doc["domain"].get<std::string>());
    } catch (const ConfigError& e) {
      throw MeshError(std::string("mesh parse error: field 'domain': ") + e.what());
    }
  }
  return PolygonalMesh(std::move(vertices), std::move(cells), domain);
}

PolygonalMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_json(ss.str());
}

}  // namespace vemeig
