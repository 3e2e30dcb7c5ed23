#include "aaa/meshing.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace aaa::meshing {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_ids(std::ostream& out, const std::vector<int>& ids, int per_line) {
  for (std::size_t k = 0; k < ids.size(); ++k)
    out << ids[k] << ((k + 1) % per_line == 0 || k + 1 == ids.size() ? '\n' : ' ');
}

void write_faces(std::ostream& out, const char* name, const std::vector<FaceRef>& faces) {
  out << name << " 2 " << faces.size() << " int\n";
  for (const auto& f : faces) out << f.element << ' ' << f.face << '\n';
}

class Tokens {
 public:
  Tokens(std::istream& in, std::string file) : in_(in), file_(std::move(file)) {}
  bool next(std::string& tok) { return static_cast<bool>(in_ >> tok); }
  std::string word() {
    std::string tok;
    if (!next(tok)) fail("unexpected end of file");
    return tok;
  }
  long integer() {
    const std::string tok = word();
    try {
      std::size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail("expected an integer, got '" + tok + "'");
    }
  }
  double real() {
    const std::string tok = word();
    try {
      return std::stod(tok);
    } catch (const std::exception&) {
      fail("expected a number, got '" + tok + "'");
    }
  }
  [[noreturn]] void fail(const std::string& what) const { throw Error(file_ + ": " + what); }

 private:
  std::istream& in_;
  std::string file_;
};

std::vector<FaceRef> read_faces(Tokens& tk, long comps, long tuples) {
  if (comps != 2) tk.fail("face set must have 2 components");
  std::vector<FaceRef> faces(tuples);
  for (auto& f : faces) {
    f.element = static_cast<int>(tk.integer());
    f.face = static_cast<int>(tk.integer());
  }
  return faces;
}

std::vector<int> read_int_array(Tokens& tk, long count) {
  std::vector<int> v(count);
  for (auto& x : v) x = static_cast<int>(tk.integer());
  return v;
}

}  // namespace

void write_vtk(const TetMesh& m, const std::filesystem::path& path, const std::vector<PointArray>& arrays) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# vtk DataFile Version 3.0\nAAA wall and ILT mesh (mm)\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "FIELD FieldData 4\n";
  out << "TOP 1 " << m.top.size() << " int\n";
  write_ids(out, m.top, 16);
  out << "BOTTOM 1 " << m.bottom.size() << " int\n";
  write_ids(out, m.bottom, 16);
  write_faces(out, "LUMINAL", m.luminal);
  write_faces(out, "INTERFACE", m.interface);
  out << "POINTS " << m.nodes.size() << " double\n";
  for (const auto& p : m.nodes) out << fmt(p.x()) << ' ' << fmt(p.y()) << ' ' << fmt(p.z()) << '\n';
  out << "CELLS " << m.elements.size() << ' ' << 11 * m.elements.size() << '\n';
  for (const auto& el : m.elements) {
    out << 10;
    for (int n : el) out << ' ' << n;
    out << '\n';
  }
  out << "CELL_TYPES " << m.elements.size() << '\n';
  for (std::size_t e = 0; e < m.elements.size(); ++e) out << "24\n";
  out << "CELL_DATA " << m.elements.size() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (auto r : m.regions) out << static_cast<int>(r) << '\n';
  if (m.has_columns() || !arrays.empty()) out << "POINT_DATA " << m.nodes.size() << '\n';
  if (m.has_columns()) {
    out << "SCALARS column_vertex int 1\nLOOKUP_TABLE default\n";
    write_ids(out, m.column_vertex, 1);
    out << "SCALARS column_position double 1\nLOOKUP_TABLE default\n";
    for (double x : m.column_position) out << fmt(x) << '\n';
  }
  for (const auto& a : arrays) {
    if (a.values.size() != m.nodes.size() * a.components)
      throw Error("write_vtk: array " + a.name + " does not match the node count");
    if (a.components == 3) {
      out << "VECTORS " << a.name << " double\n";
    } else if (a.components == 1) {
      out << "SCALARS " << a.name << " double 1\nLOOKUP_TABLE default\n";
    } else {
      out << "FIELD point_arrays 1\n" << a.name << ' ' << a.components << ' ' << m.nodes.size() << " double\n";
    }
    for (std::size_t n = 0; n < m.nodes.size(); ++n)
      for (int c = 0; c < a.components; ++c)
        out << fmt(a.values[n * a.components + c]) << (c + 1 == a.components ? '\n' : ' ');
  }
  if (!out) throw Error("failed writing " + path.string());
}

TetMesh read_vtk(const std::filesystem::path& path, std::vector<PointArray>* arrays) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  for (int k = 0; k < 4; ++k)
    if (!std::getline(in, line)) throw Error(path.string() + ": truncated header");
  if (line.find("UNSTRUCTURED_GRID") == std::string::npos) throw Error(path.string() + ": not an unstructured grid");
  Tokens tk(in, path.string());
  TetMesh m;
  std::string tok;
  std::size_t npoints = 0;
  bool point_data = false;
  auto read_point_field = [&](const std::string& name, long comps, long tuples) {
    PointArray a{name, static_cast<int>(comps), std::vector<double>(comps * tuples)};
    for (auto& v : a.values) v = tk.real();
    if (arrays) arrays->push_back(std::move(a));
  };
  while (tk.next(tok)) {
    if (tok == "FIELD") {
      tk.word();
      const long n = tk.integer();
      for (long k = 0; k < n; ++k) {
        const std::string name = tk.word();
        const long comps = tk.integer(), tuples = tk.integer();
        tk.word();
        if (point_data) {
          read_point_field(name, comps, tuples);
        } else if (name == "TOP") {
          m.top = read_int_array(tk, comps * tuples);
        } else if (name == "BOTTOM") {
          m.bottom = read_int_array(tk, comps * tuples);
        } else if (name == "LUMINAL") {
          m.luminal = read_faces(tk, comps, tuples);
        } else if (name == "INTERFACE") {
          m.interface = read_faces(tk, comps, tuples);
        } else {
          for (long v = 0; v < comps * tuples; ++v) tk.word();
        }
      }
    } else if (tok == "POINTS") {
      npoints = static_cast<std::size_t>(tk.integer());
      tk.word();
      m.nodes.resize(npoints);
      for (auto& p : m.nodes) {
        p.x() = tk.real();
        p.y() = tk.real();
        p.z() = tk.real();
      }
    } else if (tok == "CELLS") {
      const long n = tk.integer();
      tk.integer();
      m.elements.resize(n);
      for (auto& el : m.elements) {
        if (tk.integer() != 10) tk.fail("only 10-node tetrahedra are supported");
        for (int& x : el) x = static_cast<int>(tk.integer());
      }
    } else if (tok == "CELL_TYPES") {
      const long n = tk.integer();
      for (long k = 0; k < n; ++k)
        if (tk.integer() != 24) tk.fail("only quadratic tetrahedra (cell type 24) are supported");
    } else if (tok == "CELL_DATA") {
      tk.integer();
      point_data = false;
    } else if (tok == "POINT_DATA") {
      tk.integer();
      point_data = true;
    } else if (tok == "SCALARS") {
      const std::string name = tk.word();
      tk.word();
      std::string comps_tok = tk.word();
      long comps = 1;
      if (comps_tok == "LOOKUP_TABLE") {
        tk.word();
      } else {
        comps = std::stol(comps_tok);
        if (tk.word() != "LOOKUP_TABLE") tk.fail("expected LOOKUP_TABLE");
        tk.word();
      }
      if (!point_data) {
        if (name != "region" || comps != 1) tk.fail("unexpected cell array " + name);
        m.regions.resize(m.elements.size());
        for (auto& r : m.regions) {
          const long v = tk.integer();
          if (v != 0 && v != 1) tk.fail("unknown region tag " + std::to_string(v));
          r = static_cast<Region>(v);
        }
      } else if (name == "column_vertex") {
        m.column_vertex = read_int_array(tk, static_cast<long>(npoints));
      } else if (name == "column_position") {
        m.column_position.resize(npoints);
        for (auto& x : m.column_position) x = tk.real();
      } else {
        read_point_field(name, comps, static_cast<long>(npoints));
      }
    } else if (tok == "VECTORS") {
      const std::string name = tk.word();
      tk.word();
      read_point_field(name, 3, static_cast<long>(npoints));
    } else {
      tk.fail("unexpected token '" + tok + "'");
    }
  }
  if (m.regions.empty()) m.regions.assign(m.elements.size(), Region::Wall);
  validate(m);
  return m;
}

void write_inp(const TetMesh& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "*HEADING\nAAA wall and ILT mesh, units mm\n";
  if (m.has_columns()) {
    out << "** column bookkeeping: node, external vertex, distance from external surface\n";
    for (std::size_t n = 0; n < m.nodes.size(); ++n)
      if (m.column_vertex[n] >= 0)
        out << "** COLUMN " << n + 1 << ", " << m.column_vertex[n] << ", " << fmt(m.column_position[n]) << '\n';
  }
  out << "*NODE, NSET=NALL\n";
  for (std::size_t n = 0; n < m.nodes.size(); ++n)
    out << n + 1 << ", " << fmt(m.nodes[n].x()) << ", " << fmt(m.nodes[n].y()) << ", " << fmt(m.nodes[n].z()) << '\n';
  for (Region r : {Region::Wall, Region::Ilt}) {
    if (m.count(r) == 0) continue;
    out << "*ELEMENT, TYPE=C3D10H, ELSET=" << region_name(r) << '\n';
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
      if (m.regions[e] != r) continue;
      out << e + 1;
      for (int n : m.elements[e]) out << ", " << n + 1;
      out << '\n';
    }
  }
  for (const auto& [name, ids] : {std::pair{"TOP", &m.top}, std::pair{"BOTTOM", &m.bottom}}) {
    out << "*NSET, NSET=" << name << '\n';
    for (std::size_t k = 0; k < ids->size(); ++k)
      out << (*ids)[k] + 1 << ((k + 1) % 16 == 0 || k + 1 == ids->size() ? "\n" : ", ");
  }
  for (const auto& [name, faces] : {std::pair{"LUMINAL", &m.luminal}, std::pair{"INTERFACE", &m.interface}}) {
    out << "*SURFACE, TYPE=ELEMENT, NAME=" << name << '\n';
    for (const auto& f : *faces) out << f.element + 1 << ", S" << f.face + 1 << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

TetMesh read_inp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const std::string file = path.string();
  auto fail = [&](std::size_t line_no, const std::string& what) {
    throw Error(file + ":" + std::to_string(line_no) + ": " + what);
  };
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t\r");
      const auto e = item.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
  };
  auto upper = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
  };
  auto param = [&](const std::vector<std::string>& fields, const std::string& key) -> std::string {
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto eq = fields[k].find('=');
      if (eq != std::string::npos && upper(fields[k].substr(0, eq)) == key) return fields[k].substr(eq + 1);
    }
    return "";
  };

  std::map<long, Vec3> nodes;
  std::map<long, std::pair<Tet10, Region>> elements;
  std::map<long, std::pair<int, double>> columns;
  std::vector<long> top, bottom;
  std::vector<std::pair<long, int>> luminal, interface;
  std::string mode, target;
  Region region = Region::Wall;
  std::string line;
  std::size_t line_no = 0;
  auto to_long = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const long v = std::stol(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(line_no, "expected an integer, got '" + s + "'");
    }
    return 0L;
  };
  auto to_double = [&](const std::string& s) {
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      fail(line_no, "expected a number, got '" + s + "'");
    }
    return 0.0;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("** COLUMN ", 0) == 0) {
      const auto f = split(line.substr(10));
      if (f.size() != 3) fail(line_no, "malformed column record");
      columns[to_long(f[0])] = {static_cast<int>(to_long(f[1])), to_double(f[2])};
      continue;
    }
    if (line.rfind("**", 0) == 0 || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '*') {
      const auto f = split(line.substr(1));
      mode = upper(f[0]);
      if (mode == "ELEMENT") {
        const std::string type = upper(param(f, "TYPE"));
        if (type != "C3D10H" && type != "C3D10") fail(line_no, "unsupported element type " + type);
        const std::string set = upper(param(f, "ELSET"));
        region = set == "ILT" ? Region::Ilt : Region::Wall;
      } else if (mode == "NSET") {
        target = upper(param(f, "NSET"));
      } else if (mode == "SURFACE") {
        target = upper(param(f, "NAME"));
      }
      continue;
    }
    const auto f = split(line);
    if (mode == "NODE") {
      if (f.size() < 4) fail(line_no, "node record needs an id and 3 coordinates");
      nodes[to_long(f[0])] = Vec3(to_double(f[1]), to_double(f[2]), to_double(f[3]));
    } else if (mode == "ELEMENT") {
      if (f.size() != 11) fail(line_no, "C3D10H record needs an id and 10 nodes");
      Tet10 el{};
      for (int k = 0; k < 10; ++k) el[k] = static_cast<int>(to_long(f[k + 1]));
      elements[to_long(f[0])] = {el, region};
    } else if (mode == "NSET") {
      auto* dst = target == "TOP" ? &top : target == "BOTTOM" ? &bottom : nullptr;
      if (!dst) continue;
      for (const auto& s : f)
        if (!s.empty()) dst->push_back(to_long(s));
    } else if (mode == "SURFACE") {
      auto* dst = target == "LUMINAL" ? &luminal : target == "INTERFACE" ? &interface : nullptr;
      if (!dst) continue;
      if (f.size() != 2 || f[1].size() != 2 || std::toupper(f[1][0]) != 'S' || f[1][1] < '1' || f[1][1] > '4')
        fail(line_no, "surface record must be 'element, S1..S4'");
      dst->push_back({to_long(f[0]), f[1][1] - '1'});
    }
  }

  TetMesh m;
  std::map<long, int> node_index, elem_index;
  for (const auto& [id, p] : nodes) {
    node_index[id] = static_cast<int>(m.nodes.size());
    m.nodes.push_back(p);
  }
  auto node_of = [&](long id) {
    const auto it = node_index.find(id);
    if (it == node_index.end()) throw Error(file + ": reference to undefined node " + std::to_string(id));
    return it->second;
  };
  for (const auto& [id, rec] : elements) {
    elem_index[id] = static_cast<int>(m.elements.size());
    Tet10 el{};
    for (int k = 0; k < 10; ++k) el[k] = node_of(rec.first[k]);
    m.elements.push_back(el);
    m.regions.push_back(rec.second);
  }
  for (long id : top) m.top.push_back(node_of(id));
  for (long id : bottom) m.bottom.push_back(node_of(id));
  std::sort(m.top.begin(), m.top.end());
  std::sort(m.bottom.begin(), m.bottom.end());
  for (const auto& [src, dst] : {std::pair{&luminal, &m.luminal}, std::pair{&interface, &m.interface}}) {
    for (const auto& [id, face] : *src) {
      const auto it = elem_index.find(id);
      if (it == elem_index.end()) throw Error(file + ": surface references undefined element " + std::to_string(id));
      dst->push_back({it->second, face});
    }
    std::sort(dst->begin(), dst->end());
  }
  if (!columns.empty()) {
    m.column_vertex.assign(m.nodes.size(), -1);
    m.column_position.assign(m.nodes.size(), 0.0);
    for (const auto& [id, c] : columns) {
      const int n = node_of(id);
      m.column_vertex[n] = c.first;
      m.column_position[n] = c.second;
    }
  }
  validate(m);
  return m;
}

void export_mesh(const TetMesh& mesh, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".vtk") return write_vtk(mesh, path);
  if (ext == ".inp") return write_inp(mesh, path);
  throw Error("export_mesh: unsupported extension '" + ext + "'");
}

TetMesh import_mesh(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".vtk") return read_vtk(path);
  if (ext == ".inp") return read_inp(path);
  throw Error("import_mesh: unsupported extension '" + ext + "'");
}

}  // namespace aaa::meshing
