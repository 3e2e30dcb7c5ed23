#include "aaa/surface.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace aaa::surface {

void write_stl(const TriSurface& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  char header[80] = {};
  std::strncpy(header, "binary STL, units mm", sizeof(header) - 1);
  out.write(header, 80);
  const auto n = static_cast<std::uint32_t>(s.triangles.size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  auto put = [&](const Vec3& v) {
    const float f[3] = {static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z())};
    out.write(reinterpret_cast<const char*>(f), sizeof(f));
  };
  for (const auto& t : s.triangles) {
    const Vec3 a = s.vertices[t[0]], b = s.vertices[t[1]], c = s.vertices[t[2]];
    Vec3 nrm = (b - a).cross(c - a);
    if (nrm.norm() > 0.0) nrm.normalize();
    put(nrm);
    put(a);
    put(b);
    put(c);
    const std::uint16_t attr = 0;
    out.write(reinterpret_cast<const char*>(&attr), 2);
  }
  if (!out) throw Error("failed writing " + path.string());
}

void write_vtk_polydata(const TriSurface& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "# vtk DataFile Version 3.0\nsurface (mm)\nASCII\nDATASET POLYDATA\n";
  // End planes ride along as field data so later stages can reopen the caps.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << "FIELD FieldData 1\nend_planes 3 1 double\n"
      << s.ends.z_min.value_or(nan) << ' ' << s.ends.z_max.value_or(nan) << ' ' << s.ends.tolerance << '\n';
  out << "POINTS " << s.vertices.size() << " double\n";
  for (const auto& v : s.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  out << "POLYGONS " << s.triangles.size() << ' ' << 4 * s.triangles.size() << '\n';
  for (const auto& t : s.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  const auto normals = s.normals.size() == s.vertices.size() ? s.normals : compute_normals(s);
  out << "POINT_DATA " << s.vertices.size() << "\nNORMALS normals double\n";
  for (const auto& n : normals) out << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

double parse_double(const std::string& tok) {
  if (tok == "nan" || tok == "-nan" || tok == "NaN") return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(tok);
  } catch (const std::exception&) {
    throw Error("malformed number '" + tok + "'");
  }
}

}  // namespace

TriSurface read_vtk_polydata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  for (int n = 0; n < 4; ++n)
    if (!std::getline(in, line)) throw Error(path.string() + ": truncated header");
  if (line.find("POLYDATA") == std::string::npos) throw Error(path.string() + ": not a POLYDATA file");
  TriSurface s;
  std::string tok;
  while (in >> tok) {
    if (tok == "FIELD") {
      std::string name;
      int arrays = 0;
      in >> name >> arrays;
      for (int a = 0; a < arrays; ++a) {
        std::string aname, type;
        int comps = 0, tuples = 0;
        in >> aname >> comps >> tuples >> type;
        std::vector<double> values(static_cast<std::size_t>(comps) * tuples);
        for (auto& v : values) {
          in >> tok;
          v = parse_double(tok);
        }
        if (aname == "end_planes" && values.size() == 3) {
          if (!std::isnan(values[0])) s.ends.z_min = values[0];
          if (!std::isnan(values[1])) s.ends.z_max = values[1];
          s.ends.tolerance = values[2];
        }
      }
    } else if (tok == "POINTS") {
      std::size_t n = 0;
      in >> n >> tok;
      s.vertices.resize(n);
      for (auto& v : s.vertices) {
        for (int d = 0; d < 3; ++d) {
          in >> tok;
          v[d] = parse_double(tok);
        }
      }
    } else if (tok == "POLYGONS") {
      std::size_t n = 0, total = 0;
      in >> n >> total;
      s.triangles.resize(n);
      for (auto& t : s.triangles) {
        int k = 0;
        in >> k;
        if (k != 3) throw Error(path.string() + ": only triangles are supported");
        in >> t[0] >> t[1] >> t[2];
        for (int v : t)
          if (v < 0 || static_cast<std::size_t>(v) >= s.vertices.size())
            throw Error(path.string() + ": triangle references missing vertex " + std::to_string(v));
      }
    } else if (tok == "POINT_DATA") {
      break;
    }
    if (!in) throw Error(path.string() + ": malformed file");
  }
  update_normals(s);
  return s;
}

}  // namespace aaa::surface
