#include "gpmm/ply_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gpmm/error.hpp"

namespace gpmm {

namespace {

enum class PropType { Char, UChar, Short, UShort, Int, UInt, Float, Double };

int prop_size(PropType t) {
  switch (t) {
    case PropType::Char:
    case PropType::UChar: return 1;
    case PropType::Short:
    case PropType::UShort: return 2;
    case PropType::Int:
    case PropType::UInt:
    case PropType::Float: return 4;
    case PropType::Double: return 8;
  }
  return 0;
}

PropType parse_type(const std::string& token, const std::string& context) {
  if (token == "char" || token == "int8") return PropType::Char;
  if (token == "uchar" || token == "uint8") return PropType::UChar;
  if (token == "short" || token == "int16") return PropType::Short;
  if (token == "ushort" || token == "uint16") return PropType::UShort;
  if (token == "int" || token == "int32") return PropType::Int;
  if (token == "uint" || token == "uint32") return PropType::UInt;
  if (token == "float" || token == "float32") return PropType::Float;
  if (token == "double" || token == "float64") return PropType::Double;
  throw Error(context + ": unknown PLY property type '" + token + "'");
}

struct Property {
  std::string name;
  PropType type = PropType::Float;
  bool is_list = false;
  PropType count_type = PropType::UChar;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<Element> elements;
};

Header parse_header(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw Error(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw Error(name + ": missing 'ply' magic line");

  Header header;
  bool have_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        header.format = PlyFormat::Ascii;
      } else if (fmt == "binary_little_endian") {
        header.format = PlyFormat::BinaryLittleEndian;
      } else {
        throw Error(name + ": unsupported PLY format '" + fmt + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element element;
      ls >> element.name >> element.count;
      if (ls.fail()) throw Error(name + ": malformed element line: " + line);
      header.elements.push_back(element);
    } else if (keyword == "property") {
      if (header.elements.empty())
        throw Error(name + ": property before any element");
      Property prop;
      std::string type_token;
      ls >> type_token;
      if (type_token == "list") {
        std::string count_token, value_token;
        ls >> count_token >> value_token >> prop.name;
        prop.is_list = true;
        prop.count_type = parse_type(count_token, name);
        prop.type = parse_type(value_token, name);
      } else {
        prop.type = parse_type(type_token, name);
        ls >> prop.name;
      }
      if (ls.fail() || prop.name.empty())
        throw Error(name + ": malformed property line: " + line);
      header.elements.back().properties.push_back(prop);
    } else if (keyword == "end_header") {
      if (!have_format) throw Error(name + ": header has no format line");
      return header;
    } else {
      throw Error(name + ": unexpected header keyword '" + keyword + "'");
    }
  }
  throw Error(name + ": header not terminated by end_header");
}

double read_binary_value(std::istream& in, PropType type, const std::string& name) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), prop_size(type));
  if (!in) throw Error(name + ": unexpected end of binary data");
  switch (type) {
    case PropType::Char: return static_cast<double>(static_cast<std::int8_t>(buf[0]));
    case PropType::UChar: return static_cast<double>(buf[0]);
    case PropType::Short: {
      std::int16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PropType::UShort: {
      std::uint16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PropType::Int: {
      std::int32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PropType::UInt: {
      std::uint32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PropType::Float: {
      float v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PropType::Double: {
      double v;
      std::memcpy(&v, buf, 8);
      return v;
    }
  }
  return 0.0;
}

double read_ascii_value(std::istream& in, const std::string& name) {
  double v;
  if (!(in >> v)) throw Error(name + ": unexpected end of ascii data");
  return v;
}

void write_binary(std::ostream& out, const void* data, std::size_t size) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
}

}  // namespace

TriangleMesh load_mesh(std::istream& in, const std::string& name) {
  const Header header = parse_header(in, name);
  TriangleMesh mesh;

  for (const Element& element : header.elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";

    if (is_vertex) {
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (std::size_t p = 0; p < element.properties.size(); ++p) {
        const Property& prop = element.properties[p];
        if (prop.is_list)
          throw Error(name + ": list property '" + prop.name + "' on vertex element");
        if (prop.name == "x") ix = static_cast<int>(p);
        if (prop.name == "y") iy = static_cast<int>(p);
        if (prop.name == "z") iz = static_cast<int>(p);
        if (prop.name == "red") ir = static_cast<int>(p);
        if (prop.name == "green") ig = static_cast<int>(p);
        if (prop.name == "blue") ib = static_cast<int>(p);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw Error(name + ": vertex element lacks x/y/z properties");
      const bool has_rgb = ir >= 0 && ig >= 0 && ib >= 0;

      mesh.vertices.resize(3, static_cast<Eigen::Index>(element.count));
      if (has_rgb) mesh.colors.resize(3, static_cast<Eigen::Index>(element.count));

      std::vector<double> row(element.properties.size());
      for (std::size_t v = 0; v < element.count; ++v) {
        for (std::size_t p = 0; p < element.properties.size(); ++p) {
          row[p] = header.format == PlyFormat::Ascii
                       ? read_ascii_value(in, name)
                       : read_binary_value(in, element.properties[p].type, name);
        }
        mesh.vertices.col(static_cast<Eigen::Index>(v)) =
            Vec3(row[static_cast<std::size_t>(ix)], row[static_cast<std::size_t>(iy)],
                 row[static_cast<std::size_t>(iz)]);
        if (has_rgb) {
          mesh.colors.col(static_cast<Eigen::Index>(v)) =
              Vec3(row[static_cast<std::size_t>(ir)], row[static_cast<std::size_t>(ig)],
                   row[static_cast<std::size_t>(ib)]) / 255.0;
        }
      }
    } else if (is_face) {
      if (element.properties.size() != 1 || !element.properties[0].is_list)
        throw Error(name + ": face element must have a single list property");
      const Property& prop = element.properties[0];
      if (prop.name != "vertex_indices" && prop.name != "vertex_index")
        throw Error(name + ": face list property is '" + prop.name +
                    "', expected vertex_indices");

      mesh.triangles.resize(3, static_cast<Eigen::Index>(element.count));
      for (std::size_t f = 0; f < element.count; ++f) {
        const double count = header.format == PlyFormat::Ascii
                                 ? read_ascii_value(in, name)
                                 : read_binary_value(in, prop.count_type, name);
        if (count != 3.0)
          throw Error(name + ": face " + std::to_string(f) + " has " +
                      std::to_string(static_cast<long>(count)) +
                      " vertices, only triangles are supported");
        for (int k = 0; k < 3; ++k) {
          const double idx = header.format == PlyFormat::Ascii
                                 ? read_ascii_value(in, name)
                                 : read_binary_value(in, prop.type, name);
          mesh.triangles(k, static_cast<Eigen::Index>(f)) = static_cast<int>(idx);
        }
      }
    } else {
      // Skip unknown elements.
      const bool ascii = header.format == PlyFormat::Ascii;
      for (std::size_t e = 0; e < element.count; ++e) {
        for (const Property& prop : element.properties) {
          long values = 1;
          if (prop.is_list) {
            values = static_cast<long>(ascii
                                           ? read_ascii_value(in, name)
                                           : read_binary_value(in, prop.count_type, name));
          }
          for (long k = 0; k < values; ++k) {
            if (ascii) {
              read_ascii_value(in, name);
            } else {
              read_binary_value(in, prop.type, name);
            }
          }
        }
      }
    }
  }

  try {
    validate_mesh(mesh);
  } catch (const Error& e) {
    throw Error(name + ": " + e.what());
  }
  return mesh;
}

TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mesh file: " + path);
  return load_mesh(in, path);
}

void save_mesh(const TriangleMesh& mesh, std::ostream& out, PlyFormat format,
               const std::vector<std::string>& comments) {
  const bool binary = format == PlyFormat::BinaryLittleEndian;
  const auto old_precision = out.precision(9);  // float32 round-trips at 9 digits
  out << "ply\n";
  out << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  for (const std::string& c : comments) out << "comment " << c << "\n";
  out << "element vertex " << mesh.vertex_count() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (mesh.has_colors())
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.triangle_count() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";

  auto to_byte = [](double c) {
    return static_cast<unsigned char>(
        std::lround(std::min(1.0, std::max(0.0, c)) * 255.0));
  };

  for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
    const float xyz[3] = {static_cast<float>(mesh.vertices(0, v)),
                          static_cast<float>(mesh.vertices(1, v)),
                          static_cast<float>(mesh.vertices(2, v))};
    if (binary) {
      write_binary(out, xyz, sizeof(xyz));
      if (mesh.has_colors()) {
        const unsigned char rgb[3] = {to_byte(mesh.colors(0, v)),
                                      to_byte(mesh.colors(1, v)),
                                      to_byte(mesh.colors(2, v))};
        write_binary(out, rgb, sizeof(rgb));
      }
    } else {
      out << xyz[0] << " " << xyz[1] << " " << xyz[2];
      if (mesh.has_colors()) {
        out << " " << static_cast<int>(to_byte(mesh.colors(0, v))) << " "
            << static_cast<int>(to_byte(mesh.colors(1, v))) << " "
            << static_cast<int>(to_byte(mesh.colors(2, v)));
      }
      out << "\n";
    }
  }

  for (Eigen::Index f = 0; f < mesh.triangle_count(); ++f) {
    if (binary) {
      const unsigned char count = 3;
      write_binary(out, &count, 1);
      const std::int32_t idx[3] = {mesh.triangles(0, f), mesh.triangles(1, f),
                                   mesh.triangles(2, f)};
      write_binary(out, idx, sizeof(idx));
    } else {
      out << "3 " << mesh.triangles(0, f) << " " << mesh.triangles(1, f) << " "
          << mesh.triangles(2, f) << "\n";
    }
  }
  out.precision(old_precision);
  if (!out) throw Error("failed while writing PLY data");
}

void save_mesh(const TriangleMesh& mesh, const std::string& path, PlyFormat format,
               const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  save_mesh(mesh, out, format, comments);
  out.close();
  if (!out) throw Error("failed to write mesh file: " + path);
}

}  // namespace gpmm
