#include "ply_detail.hpp"

#include <cstdint>
#include <sstream>

namespace epsdf::ply {

namespace {

template <typename T>
double read_as(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return double(v);
}

}  // namespace

Header parse_header(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line) || (line != "ply" && line != "ply\r"))
    throw IoError(path + ": not a PLY file");
  Header header;
  bool have_format = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii") header.binary = false;
      else if (fmt == "binary_little_endian") header.binary = true;
      else throw IoError(path + ": unsupported PLY format '" + fmt + "'");
      have_format = true;
    } else if (word == "element") {
      Element el;
      ss >> el.name >> el.count;
      if (!ss) throw IoError(path + ": malformed element line");
      header.elements.push_back(std::move(el));
    } else if (word == "property") {
      if (header.elements.empty()) throw IoError(path + ": property before element");
      Property prop;
      std::string type;
      ss >> type;
      if (type == "list") {
        prop.is_list = true;
        ss >> prop.count_type >> prop.type >> prop.name;
      } else {
        prop.type = type;
        ss >> prop.name;
      }
      if (!ss) throw IoError(path + ": malformed property line");
      header.elements.back().props.push_back(std::move(prop));
    } else if (word == "end_header") {
      if (!have_format) throw IoError(path + ": PLY header missing format line");
      return header;
    } else {
      throw IoError(path + ": unknown PLY header keyword '" + word + "'");
    }
  }
  throw IoError(path + ": PLY header not terminated");
}

int scalar_size(const std::string& type) {
  if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
  if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
  if (type == "int" || type == "int32" || type == "uint" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw IoError("unsupported PLY property type '" + type + "'");
}

double read_scalar(std::istream& is, const std::string& type, bool binary,
                   const std::string& path) {
  if (!binary) {
    double v;
    if (!(is >> v)) throw IoError(path + ": truncated PLY ascii data");
    return v;
  }
  double v;
  if (type == "char" || type == "int8") v = read_as<std::int8_t>(is);
  else if (type == "uchar" || type == "uint8") v = read_as<std::uint8_t>(is);
  else if (type == "short" || type == "int16") v = read_as<std::int16_t>(is);
  else if (type == "ushort" || type == "uint16") v = read_as<std::uint16_t>(is);
  else if (type == "int" || type == "int32") v = read_as<std::int32_t>(is);
  else if (type == "uint" || type == "uint32") v = read_as<std::uint32_t>(is);
  else if (type == "float" || type == "float32") v = read_as<float>(is);
  else if (type == "double" || type == "float64") v = read_as<double>(is);
  else throw IoError(path + ": unsupported PLY property type '" + type + "'");
  if (!is) throw IoError(path + ": truncated PLY binary data");
  return v;
}

}  // namespace epsdf::ply
