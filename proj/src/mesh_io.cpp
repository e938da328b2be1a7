#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "instaug/error.hpp"
#include "instaug/mesh.hpp"

namespace instaug {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void add_fan(Mesh& mesh, const std::vector<int>& polygon, const std::filesystem::path& path) {
  if (polygon.size() < 3) {
    throw Error("face with fewer than 3 vertices in " + path.string());
  }
  for (std::size_t i = 1; i + 1 < polygon.size(); ++i) {
    mesh.triangles.push_back({polygon[0], polygon[i], polygon[i + 1]});
  }
}

void check_indices(const Mesh& mesh, const std::filesystem::path& path) {
  const int vertex_count = static_cast<int>(mesh.vertices.size());
  for (const auto& tri : mesh.triangles) {
    for (int idx : tri) {
      if (idx < 0 || idx >= vertex_count) {
        throw Error("face index out of range in " + path.string());
      }
    }
  }
  if (mesh.triangles.empty()) {
    throw Error("mesh contains no triangles: " + path.string());
  }
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open mesh file: " + path.string());
  }
  Mesh mesh;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(fields >> v.x() >> v.y() >> v.z())) {
        throw Error("malformed vertex on line " + std::to_string(line_number) + " of " +
                    path.string());
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> polygon;
      std::string corner;
      while (fields >> corner) {
        // Corner forms: v, v/vt, v//vn, v/vt/vn. Only the vertex index matters.
        const std::size_t slash = corner.find('/');
        const std::string index_text = corner.substr(0, slash);
        int index = 0;
        try {
          index = std::stoi(index_text);
        } catch (const std::exception&) {
          throw Error("malformed face corner '" + corner + "' on line " +
                      std::to_string(line_number) + " of " + path.string());
        }
        if (index < 0) {
          index = static_cast<int>(mesh.vertices.size()) + index;  // relative
        } else {
          index -= 1;  // OBJ is 1-based
        }
        polygon.push_back(index);
      }
      add_fan(mesh, polygon, path);
    }
    // vn/vt/usemtl/mtllib/o/g/s and friends are ignored.
  }
  check_indices(mesh, path);
  return mesh;
}

// --- PLY -------------------------------------------------------------------

enum class PlyScalar { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t scalar_size(PlyScalar t) {
  switch (t) {
    case PlyScalar::i8:
    case PlyScalar::u8: return 1;
    case PlyScalar::i16:
    case PlyScalar::u16: return 2;
    case PlyScalar::i32:
    case PlyScalar::u32:
    case PlyScalar::f32: return 4;
    case PlyScalar::f64: return 8;
  }
  return 0;
}

PlyScalar parse_scalar_type(const std::string& name, const std::filesystem::path& path) {
  if (name == "char" || name == "int8") return PlyScalar::i8;
  if (name == "uchar" || name == "uint8") return PlyScalar::u8;
  if (name == "short" || name == "int16") return PlyScalar::i16;
  if (name == "ushort" || name == "uint16") return PlyScalar::u16;
  if (name == "int" || name == "int32") return PlyScalar::i32;
  if (name == "uint" || name == "uint32") return PlyScalar::u32;
  if (name == "float" || name == "float32") return PlyScalar::f32;
  if (name == "double" || name == "float64") return PlyScalar::f64;
  throw Error("unsupported PLY property type '" + name + "' in " + path.string());
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
  PlyScalar count_type = PlyScalar::u8;
  PlyScalar value_type = PlyScalar::f32;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

class PlyReader {
 public:
  PlyReader(std::ifstream& in, bool binary, const std::filesystem::path& path)
      : in_(in), binary_(binary), path_(path) {}

  double read_scalar(PlyScalar type) {
    if (binary_) return read_binary(type);
    double value = 0.0;
    if (!(in_ >> value)) {
      throw Error("truncated PLY data in " + path_.string());
    }
    return value;
  }

 private:
  double read_binary(PlyScalar type) {
    unsigned char buffer[8];
    in_.read(reinterpret_cast<char*>(buffer), static_cast<std::streamsize>(scalar_size(type)));
    if (!in_) {
      throw Error("truncated PLY data in " + path_.string());
    }
    switch (type) {
      case PlyScalar::i8: return static_cast<signed char>(buffer[0]);
      case PlyScalar::u8: return buffer[0];
      case PlyScalar::i16: { int16_t v; std::memcpy(&v, buffer, 2); return v; }
      case PlyScalar::u16: { uint16_t v; std::memcpy(&v, buffer, 2); return v; }
      case PlyScalar::i32: { int32_t v; std::memcpy(&v, buffer, 4); return v; }
      case PlyScalar::u32: { uint32_t v; std::memcpy(&v, buffer, 4); return v; }
      case PlyScalar::f32: { float v; std::memcpy(&v, buffer, 4); return v; }
      case PlyScalar::f64: { double v; std::memcpy(&v, buffer, 8); return v; }
    }
    return 0.0;
  }

  std::ifstream& in_;
  bool binary_;
  const std::filesystem::path& path_;
};

Mesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open mesh file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    throw Error("not a PLY file: " + path.string());
  }

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string format;
      fields >> format;
      if (format == "ascii") {
        binary = false;
      } else if (format == "binary_little_endian") {
        binary = true;
      } else {
        throw Error("unsupported PLY format '" + format + "' in " + path.string());
      }
    } else if (tag == "element") {
      PlyElement element;
      fields >> element.name >> element.count;
      elements.push_back(element);
    } else if (tag == "property") {
      if (elements.empty()) {
        throw Error("PLY property before any element in " + path.string());
      }
      PlyProperty property;
      std::string type_name;
      fields >> type_name;
      if (type_name == "list") {
        property.is_list = true;
        std::string count_name, value_name;
        fields >> count_name >> value_name >> property.name;
        property.count_type = parse_scalar_type(count_name, path);
        property.value_type = parse_scalar_type(value_name, path);
      } else {
        property.value_type = parse_scalar_type(type_name, path);
        fields >> property.name;
      }
      elements.back().properties.push_back(property);
    } else if (tag == "end_header") {
      break;
    } else {
      throw Error("unsupported PLY header entry '" + tag + "' in " + path.string());
    }
  }

  Mesh mesh;
  PlyReader reader(in, binary, path);
  for (const PlyElement& element : elements) {
    if (element.name == "vertex") {
      int xi = -1, yi = -1, zi = -1;
      for (std::size_t i = 0; i < element.properties.size(); ++i) {
        if (element.properties[i].is_list) {
          throw Error("unsupported list property on PLY vertices in " + path.string());
        }
        if (element.properties[i].name == "x") xi = static_cast<int>(i);
        if (element.properties[i].name == "y") yi = static_cast<int>(i);
        if (element.properties[i].name == "z") zi = static_cast<int>(i);
      }
      if (xi < 0 || yi < 0 || zi < 0) {
        throw Error("PLY vertex element lacks x/y/z in " + path.string());
      }
      mesh.vertices.reserve(element.count);
      std::vector<double> row(element.properties.size());
      for (std::size_t v = 0; v < element.count; ++v) {
        for (std::size_t p = 0; p < element.properties.size(); ++p) {
          row[p] = reader.read_scalar(element.properties[p].value_type);
        }
        mesh.vertices.emplace_back(row[xi], row[yi], row[zi]);
      }
    } else if (element.name == "face") {
      for (std::size_t f = 0; f < element.count; ++f) {
        std::vector<int> polygon;
        for (const PlyProperty& property : element.properties) {
          if (property.is_list &&
              (property.name == "vertex_indices" || property.name == "vertex_index")) {
            const auto n = static_cast<std::size_t>(reader.read_scalar(property.count_type));
            polygon.clear();
            polygon.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
              polygon.push_back(static_cast<int>(reader.read_scalar(property.value_type)));
            }
          } else if (property.is_list) {
            const auto n = static_cast<std::size_t>(reader.read_scalar(property.count_type));
            for (std::size_t i = 0; i < n; ++i) reader.read_scalar(property.value_type);
          } else {
            reader.read_scalar(property.value_type);
          }
        }
        add_fan(mesh, polygon, path);
      }
    } else if (element.count > 0) {
      throw Error("unsupported PLY element '" + element.name + "' in " + path.string());
    }
  }
  check_indices(mesh, path);
  return mesh;
}

}  // namespace

Mesh load_mesh(const std::filesystem::path& path) {
  const std::string extension = lowercase(path.extension().string());
  if (extension == ".obj") return load_obj(path);
  if (extension == ".ply") return load_ply(path);
  throw Error("unsupported mesh format '" + extension + "': " + path.string());
}

}  // namespace instaug
