#pragma once

// Minimal PLY header model shared by the mesh and point-cloud readers.
// Supports ascii and binary_little_endian, scalar and list properties.

#include <istream>
#include <string>
#include <vector>

#include "epsdf/types.hpp"

namespace epsdf::ply {

struct Property {
  std::string name;
  std::string type;        // element type (or list item type)
  bool is_list = false;
  std::string count_type;  // list count type
};

struct Element {
  std::string name;
  Index count = 0;
  std::vector<Property> props;
};

struct Header {
  bool binary = false;
  std::vector<Element> elements;
};

Header parse_header(std::istream& is, const std::string& path);

int scalar_size(const std::string& type);

/// Reads one scalar of the given PLY type as a double (binary assumes the
/// host is little-endian; ascii reads the next whitespace-separated token).
double read_scalar(std::istream& is, const std::string& type, bool binary,
                   const std::string& path);

}  // namespace epsdf::ply
