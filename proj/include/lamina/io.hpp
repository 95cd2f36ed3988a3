#pragma once

// Line-oriented `key = value` block format for complexes.
//
//   lamina-complex 1
//   name = pita
//   [sector D1]
//   euler_char = 1
//   orientable = true            # true | false | unknown
//   essential_curve = false
//   circuit = e:source_through:left, free
//   [edge e]
//   endpoints = closed_loop      # or  v1.0 v2.1  (vertex.port for ends 0 and 1)
//   sink = E:0:0                 # sector:circuit:position
//   source_a = D1:0:0
//   source_b = D2:0:0
//   [vertex v1]
//   kind = crossing
//   ends = e1.0 e2.1 | e3.0 e4.1 # edge.end per port, strands split by '|'
//   [assertions]
//   no_monogon = true            # true | false | unknown, per flag
//   confirmed_bubble = D1 D2

#include <stdexcept>
#include <string>

#include "lamina/complex.hpp"

namespace lamina {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Syntax and referential errors throw ParseError. Structural invariants are
/// left to validate().
BranchedSurfaceComplex parse_complex(const std::string& text);

/// Deterministic: ids in natural order, every field written.
std::string serialize_complex(const BranchedSurfaceComplex& b);

BranchedSurfaceComplex read_complex_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace lamina
