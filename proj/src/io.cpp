#include "lamina/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace lamina {

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

constexpr const char* kHeader = "lamina-complex 1";

bool id_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

// A slice of the current line with its 1-based starting column.
struct Token {
  std::string text;
  int column;
};

std::vector<Token> split(const std::string& s, int base_col, char sep) {
  std::vector<Token> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      std::size_t a = start, z = i;
      while (a < z && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
      while (z > a && std::isspace(static_cast<unsigned char>(s[z - 1]))) --z;
      out.push_back({s.substr(a, z - a), base_col + static_cast<int>(a)});
      start = i + 1;
    }
  }
  return out;
}

std::vector<Token> words(const Token& t) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < t.text.size()) {
    while (i < t.text.size() && std::isspace(static_cast<unsigned char>(t.text[i]))) ++i;
    std::size_t j = i;
    while (j < t.text.size() && !std::isspace(static_cast<unsigned char>(t.text[j]))) ++j;
    if (j > i) out.push_back({t.text.substr(i, j - i), t.column + static_cast<int>(i)});
    i = j;
  }
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  BranchedSurfaceComplex run() {
    std::istringstream in(text_);
    std::string raw;
    bool header = false;
    while (std::getline(in, raw)) {
      ++line_;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      std::string s = raw.substr(0, raw.find('#'));
      auto body = split(s, 1, '\n').front();
      if (body.text.empty()) continue;
      if (!header) {
        if (body.text != kHeader) fail(body.column, "expected header '" + std::string(kHeader) + "'");
        header = true;
        continue;
      }
      if (body.text.front() == '[') {
        section(body);
        continue;
      }
      const auto eq = body.text.find('=');
      if (eq == std::string::npos) fail(body.column, "expected 'key = value'");
      auto kv = split(body.text.substr(0, eq), body.column, '\n').front();
      Token val = split(body.text.substr(eq + 1), body.column + static_cast<int>(eq) + 1, '\n').front();
      assign(kv, val);
    }
    if (!header) fail(1, "empty document (missing header)");
    close_block();
    finish();
    return b_;
  }

 private:
  enum class Kind { top, sector, edge, vertex, assertions };

  [[noreturn]] void fail(int column, const std::string& msg) const { throw ParseError(line_, column, msg); }

  std::string ident(const Token& t) const {
    if (t.text.empty()) fail(t.column, "missing identifier");
    for (std::size_t i = 0; i < t.text.size(); ++i)
      if (!id_char(t.text[i])) fail(t.column + static_cast<int>(i), "invalid character in identifier '" + t.text + "'");
    return t.text;
  }

  std::size_t number(const Token& t) const {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) fail(t.column, "expected a non-negative integer, got '" + t.text + "'");
    return v;
  }

  int integer(const Token& t) const {
    int v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size() || t.text.empty()) fail(t.column, "expected an integer, got '" + t.text + "'");
    return v;
  }

  bool boolean(const Token& t) const {
    if (t.text == "true") return true;
    if (t.text == "false") return false;
    fail(t.column, "expected true or false, got '" + t.text + "'");
  }

  Tri tri(const Token& t) const {
    if (t.text == "true") return Tri::asserted_true;
    if (t.text == "false") return Tri::asserted_false;
    if (t.text == "unknown") return Tri::unknown;
    fail(t.column, "expected true, false or unknown, got '" + t.text + "'");
  }

  // Required keys of the block that just ended.
  void close_block() {
    std::vector<std::string> need;
    if (kind_ == Kind::sector) need = {"euler_char", "orientable"};
    if (kind_ == Kind::edge) need = {"endpoints", "sink", "source_a", "source_b"};
    if (kind_ == Kind::vertex) need = {"kind", "ends"};
    for (const auto& k : need)
      if (!keys_.count(k)) throw ParseError(block_line_, 1, "block " + id_ + " is missing key '" + k + "'");
  }

  void section(const Token& t) {
    close_block();
    block_line_ = line_;
    if (t.text.back() != ']') fail(t.column + static_cast<int>(t.text.size()) - 1, "unterminated section header");
    Token inner{t.text.substr(1, t.text.size() - 2), t.column + 1};
    auto w = words(inner);
    if (w.empty()) fail(t.column, "empty section header");
    const auto& kind = w[0].text;
    if (kind == "assertions") {
      if (w.size() != 1) fail(w[1].column, "unexpected text after [assertions]");
      if (seen_assertions_) fail(t.column, "duplicate [assertions] block");
      seen_assertions_ = true;
      kind_ = Kind::assertions;
      keys_.clear();
      return;
    }
    if (w.size() != 2) fail(t.column, "expected [sector|edge|vertex <id>]");
    id_ = ident(w[1]);
    keys_.clear();
    if (kind == "sector") {
      if (!b_.sectors.emplace(id_, Sector{}).second) fail(w[1].column, "duplicate sector id " + id_);
      b_.sectors[id_].circuits.clear();
      kind_ = Kind::sector;
    } else if (kind == "edge") {
      if (!b_.edges.emplace(id_, LocusEdge{}).second) fail(w[1].column, "duplicate edge id " + id_);
      kind_ = Kind::edge;
    } else if (kind == "vertex") {
      if (!b_.vertices.emplace(id_, LocusVertex{}).second) fail(w[1].column, "duplicate vertex id " + id_);
      kind_ = Kind::vertex;
    } else {
      fail(w[0].column, "unknown block kind '" + kind + "'");
    }
  }

  void once(const Token& key) {
    if (!keys_.insert(key.text).second) fail(key.column, "duplicate key '" + key.text + "'");
  }

  void assign(const Token& key, const Token& val) {
    switch (kind_) {
      case Kind::top:
        if (key.text != "name") fail(key.column, "unknown key '" + key.text + "'");
        once(key);
        b_.name = val.text;
        return;
      case Kind::sector: return sector_key(key, val);
      case Kind::edge: return edge_key(key, val);
      case Kind::vertex: return vertex_key(key, val);
      case Kind::assertions: return assertion_key(key, val);
    }
  }

  void sector_key(const Token& key, const Token& val) {
    Sector& s = b_.sectors.at(id_);
    if (key.text == "euler_char") {
      once(key);
      s.euler_char = integer(val);
    } else if (key.text == "orientable") {
      once(key);
      if (val.text == "true") s.orientable = Orientability::orientable;
      else if (val.text == "false") s.orientable = Orientability::nonorientable;
      else if (val.text == "unknown") s.orientable = Orientability::unknown;
      else fail(val.column, "expected true, false or unknown, got '" + val.text + "'");
    } else if (key.text == "essential_curve") {
      once(key);
      s.essential_curve = boolean(val);
    } else if (key.text == "circuit") {
      Circuit c;
      for (const auto& t : split(val.text, val.column, ',')) c.push_back(entry(t));
      s.circuits.push_back(std::move(c));
    } else {
      fail(key.column, "unknown sector key '" + key.text + "'");
    }
  }

  BoundaryEntry entry(const Token& t) {
    if (t.text == "free") return BoundaryEntry::free_arc();
    auto parts = split(t.text, t.column, ':');
    if (parts.size() != 3) fail(t.column, "expected 'edge:slot:side' or 'free', got '" + t.text + "'");
    BoundaryEntry e;
    e.edge = ident(parts[0]);
    const auto& sl = parts[1].text;
    if (sl == "sink") e.slot = Slot::sink;
    else if (sl == "source_through") e.slot = Slot::source_through;
    else if (sl == "source_merge") e.slot = Slot::source_merge;
    else fail(parts[1].column, "unknown slot '" + sl + "'");
    const auto& sd = parts[2].text;
    if (sd == "left") e.side = Side::left;
    else if (sd == "right") e.side = Side::right;
    else if (sd == "unknown") e.side = Side::unknown;
    else fail(parts[2].column, "unknown side '" + sd + "'");
    pending_entries_.push_back({*e.edge, line_, parts[0].column});
    return e;
  }

  Occurrence occurrence(const Token& t) {
    auto parts = split(t.text, t.column, ':');
    if (parts.size() != 3) fail(t.column, "expected 'sector:circuit:position', got '" + t.text + "'");
    Occurrence o{ident(parts[0]), number(parts[1]), number(parts[2])};
    pending_occ_.push_back({o, line_, t.column});
    return o;
  }

  void edge_key(const Token& key, const Token& val) {
    LocusEdge& e = b_.edges.at(id_);
    once(key);
    if (key.text == "sink") {
      e.sink = occurrence(val);
    } else if (key.text == "source_a") {
      e.source_a = occurrence(val);
    } else if (key.text == "source_b") {
      e.source_b = occurrence(val);
    } else if (key.text == "endpoints") {
      if (val.text == "closed_loop") {
        e.endpoints.reset();
        return;
      }
      auto w = words(val);
      if (w.size() != 2) fail(val.column, "expected 'closed_loop' or two vertex.port ends");
      std::array<VertexEnd, 2> ends;
      for (std::size_t i = 0; i < 2; ++i) {
        const auto dot = w[i].text.rfind('.');
        if (dot == std::string::npos) fail(w[i].column, "expected vertex.port, got '" + w[i].text + "'");
        ends[i].vertex = ident({w[i].text.substr(0, dot), w[i].column});
        ends[i].port = static_cast<int>(number({w[i].text.substr(dot + 1), w[i].column + static_cast<int>(dot) + 1}));
        pending_vertex_refs_.push_back({ends[i].vertex, line_, w[i].column});
      }
      e.endpoints = ends;
    } else {
      fail(key.column, "unknown edge key '" + key.text + "'");
    }
  }

  void vertex_key(const Token& key, const Token& val) {
    LocusVertex& v = b_.vertices.at(id_);
    once(key);
    if (key.text == "kind") {
      if (val.text == "crossing") v.kind = VertexKind::crossing;
      else if (val.text == "subdivision") v.kind = VertexKind::subdivision;
      else fail(val.column, "expected crossing or subdivision, got '" + val.text + "'");
    } else if (key.text == "ends") {
      v.ends.clear();
      for (const auto& strand : split(val.text, val.column, '|')) {
        for (const auto& w : words(strand)) {
          const auto dot = w.text.rfind('.');
          if (dot == std::string::npos) fail(w.column, "expected edge.end, got '" + w.text + "'");
          EdgeEnd ee{ident({w.text.substr(0, dot), w.column}),
                     static_cast<int>(number({w.text.substr(dot + 1), w.column + static_cast<int>(dot) + 1}))};
          if (ee.end > 1) fail(w.column, "edge end must be 0 or 1");
          pending_edge_refs_.push_back({ee.edge, line_, w.column});
          v.ends.push_back(ee);
        }
      }
    } else {
      fail(key.column, "unknown vertex key '" + key.text + "'");
    }
  }

  void assertion_key(const Token& key, const Token& val) {
    if (key.text == "confirmed_bubble") {
      auto w = words(val);
      if (w.size() != 2) fail(val.column, "expected two sector ids");
      const auto x = ident(w[0]), y = ident(w[1]);
      pending_sector_refs_.push_back({x, line_, w[0].column});
      pending_sector_refs_.push_back({y, line_, w[1].column});
      b_.confirmed_bubbles.emplace_back(id_less(x, y) ? x : y, id_less(x, y) ? y : x);
      return;
    }
    GoFlags& g = b_.assertions;
    Tri* slot = nullptr;
    if (key.text == "horizontal_boundary_incompressible") slot = &g.horizontal_boundary_incompressible;
    else if (key.text == "no_monogon") slot = &g.no_monogon;
    else if (key.text == "no_reeb_component") slot = &g.no_reeb_component;
    else if (key.text == "complement_irreducible") slot = &g.complement_irreducible;
    else if (key.text == "no_sphere_boundary") slot = &g.no_sphere_boundary;
    else fail(key.column, "unknown assertion '" + key.text + "'");
    once(key);
    *slot = tri(val);
  }

  struct Ref {
    std::string id;
    int line;
    int column;
  };
  struct OccRef {
    Occurrence occ;
    int line;
    int column;
  };

  void finish() {
    auto at = [&](const Ref& r, const std::string& msg) { throw ParseError(r.line, r.column, msg); };
    for (const auto& r : pending_entries_)
      if (!b_.edges.count(r.id)) at(r, "circuit entry references unknown edge " + r.id);
    for (const auto& r : pending_vertex_refs_)
      if (!b_.vertices.count(r.id)) at(r, "unknown vertex " + r.id);
    for (const auto& r : pending_edge_refs_)
      if (!b_.edges.count(r.id)) at(r, "unknown edge " + r.id);
    for (const auto& r : pending_sector_refs_)
      if (!b_.sectors.count(r.id)) at(r, "unknown sector " + r.id);
    for (const auto& r : pending_occ_) {
      const auto& o = r.occ;
      const std::string name = o.sector + ":" + std::to_string(o.circuit) + ":" + std::to_string(o.position);
      auto s = b_.sectors.find(o.sector);
      if (s == b_.sectors.end()) throw ParseError(r.line, r.column, "dangling occurrence " + name + ": unknown sector");
      if (o.circuit >= s->second.circuits.size() || o.position >= s->second.circuits[o.circuit].size())
        throw ParseError(r.line, r.column, "dangling occurrence " + name + ": no such boundary position");
    }
  }

  const std::string& text_;
  BranchedSurfaceComplex b_;
  int line_ = 0;
  Kind kind_ = Kind::top;
  std::string id_;
  std::set<std::string> keys_;
  bool seen_assertions_ = false;
  int block_line_ = 0;
  std::vector<Ref> pending_entries_, pending_vertex_refs_, pending_edge_refs_, pending_sector_refs_;
  std::vector<OccRef> pending_occ_;
};

std::string occ_text(const Occurrence& o) {
  return o.sector + ":" + std::to_string(o.circuit) + ":" + std::to_string(o.position);
}

}  // namespace

BranchedSurfaceComplex parse_complex(const std::string& text) { return Parser(text).run(); }

std::string serialize_complex(const BranchedSurfaceComplex& b) {
  std::ostringstream os;
  os << kHeader << "\n";
  os << "name = " << b.name << "\n";
  for (const auto& [sid, s] : b.sectors) {
    os << "\n[sector " << sid << "]\n";
    os << "euler_char = " << s.euler_char << "\n";
    os << "orientable = "
       << (s.orientable == Orientability::orientable ? "true"
           : s.orientable == Orientability::nonorientable ? "false"
                                                           : "unknown")
       << "\n";
    os << "essential_curve = " << (s.essential_curve ? "true" : "false") << "\n";
    for (const auto& c : s.circuits) {
      os << "circuit =";
      for (std::size_t i = 0; i < c.size(); ++i) {
        os << (i ? ", " : " ");
        if (c[i].is_free()) os << "free";
        else os << *c[i].edge << ":" << to_string(c[i].slot) << ":" << to_string(c[i].side);
      }
      os << "\n";
    }
  }
  for (const auto& [eid, e] : b.edges) {
    os << "\n[edge " << eid << "]\n";
    if (e.closed_loop()) {
      os << "endpoints = closed_loop\n";
    } else {
      const auto& ends = *e.endpoints;
      os << "endpoints = " << ends[0].vertex << "." << ends[0].port << " " << ends[1].vertex << "." << ends[1].port
         << "\n";
    }
    os << "sink = " << occ_text(e.sink) << "\n";
    os << "source_a = " << occ_text(e.source_a) << "\n";
    os << "source_b = " << occ_text(e.source_b) << "\n";
  }
  for (const auto& [vid, v] : b.vertices) {
    os << "\n[vertex " << vid << "]\n";
    os << "kind = " << to_string(v.kind) << "\n";
    os << "ends =";
    for (std::size_t i = 0; i < v.ends.size(); ++i) {
      if (i == 2 && v.kind == VertexKind::crossing) os << " |";
      os << " " << v.ends[i].edge << "." << v.ends[i].end;
    }
    os << "\n";
  }
  os << "\n[assertions]\n";
  for (const auto& [name, value] : b.assertions.items()) os << name << " = " << to_string(value) << "\n";
  for (const auto& [x, y] : b.confirmed_bubbles) os << "confirmed_bubble = " << x << " " << y << "\n";
  return os.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

BranchedSurfaceComplex read_complex_file(const std::string& path) { return parse_complex(read_text_file(path)); }

}  // namespace lamina
