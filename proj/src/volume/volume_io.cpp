// NRRD and MetaImage readers/writers for small-integer label volumes.
// Only raw (uncompressed) little-endian data is supported.

#include "aaa/volume.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace aaa::volume {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

enum class VoxelType { U8, S8, U16, S16 };

int voxel_bytes(VoxelType t) { return t == VoxelType::U8 || t == VoxelType::S8 ? 1 : 2; }

struct RawHeader {
  Grid grid;
  VoxelType type = VoxelType::U8;
  fs::path data_file;           // empty: data follows the header in the same file
  std::streamoff data_offset = 0;
};

std::vector<double> parse_numbers(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == '(' || c == ')' || c == ',') c = ' ';
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    if (tok == "none") continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw Error("cannot parse number '" + tok + "'");
    }
  }
  return out;
}

std::vector<int> to_dims(const std::vector<double>& v, const std::string& what) {
  if (v.size() != 3) throw Error(what + " must have three entries");
  std::vector<int> out;
  for (double x : v) {
    if (x < 1 || x != std::floor(x)) throw Error(what + " entries must be positive integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

VoxelType nrrd_type(const std::string& raw) {
  const std::string t = lower(trim(raw));
  if (t == "uchar" || t == "unsigned char" || t == "uint8" || t == "uint8_t") return VoxelType::U8;
  if (t == "signed char" || t == "int8" || t == "int8_t" || t == "char") return VoxelType::S8;
  if (t == "ushort" || t == "unsigned short" || t == "unsigned short int" || t == "uint16" ||
      t == "uint16_t")
    return VoxelType::U16;
  if (t == "short" || t == "short int" || t == "signed short" || t == "signed short int" ||
      t == "int16" || t == "int16_t")
    return VoxelType::S16;
  throw Error("unsupported voxel type '" + raw + "' (expected 8- or 16-bit integer)");
}

VoxelType meta_type(const std::string& raw) {
  const std::string t = trim(raw);
  if (t == "MET_UCHAR") return VoxelType::U8;
  if (t == "MET_CHAR") return VoxelType::S8;
  if (t == "MET_USHORT") return VoxelType::U16;
  if (t == "MET_SHORT") return VoxelType::S16;
  throw Error("unsupported voxel type '" + t + "' (expected 8- or 16-bit integer)");
}

RawHeader read_nrrd_header(const fs::path& path, std::ifstream& in) {
  std::string line;
  std::getline(in, line);
  if (line.rfind("NRRD", 0) != 0) throw Error(path.string() + ": missing NRRD magic");
  RawHeader h;
  std::optional<std::vector<int>> sizes;
  std::optional<Vec3> spacing;
  bool have_type = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) break;
    if (line[0] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = lower(trim(line.substr(0, colon)));
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value[0] == '=') value.erase(0, 1);  // key:=value
    value = trim(value);
    if (key == "type") {
      h.type = nrrd_type(value);
      have_type = true;
    } else if (key == "dimension") {
      if (std::stoi(value) != 3) throw Error(path.string() + ": only 3D volumes are supported");
    } else if (key == "sizes") {
      sizes = to_dims(parse_numbers(value), "sizes");
    } else if (key == "spacings") {
      const auto v = parse_numbers(value);
      if (v.size() != 3) throw Error(path.string() + ": spacings must have three entries");
      spacing = Vec3(v[0], v[1], v[2]);
    } else if (key == "space directions") {
      const auto v = parse_numbers(value);
      if (v.size() != 9) throw Error(path.string() + ": space directions must be three 3-vectors");
      spacing = Vec3(Vec3(v[0], v[1], v[2]).norm(), Vec3(v[3], v[4], v[5]).norm(),
                     Vec3(v[6], v[7], v[8]).norm());
    } else if (key == "space origin") {
      const auto v = parse_numbers(value);
      if (v.size() != 3) throw Error(path.string() + ": space origin must have three entries");
      h.grid.origin = Vec3(v[0], v[1], v[2]);
    } else if (key == "encoding") {
      if (lower(value) != "raw") throw Error(path.string() + ": unsupported encoding '" + value + "'");
    } else if (key == "endian") {
      if (lower(value) != "little") throw Error(path.string() + ": only little-endian data is supported");
    } else if (key == "data file" || key == "datafile") {
      h.data_file = path.parent_path() / value;
    }
  }
  if (!have_type) throw Error(path.string() + ": missing type field");
  if (!sizes) throw Error(path.string() + ": missing sizes field");
  h.grid.dims = {(*sizes)[0], (*sizes)[1], (*sizes)[2]};
  if (spacing) h.grid.spacing = *spacing;
  h.data_offset = in.tellg();
  return h;
}

RawHeader read_meta_header(const fs::path& path, std::ifstream& in) {
  RawHeader h;
  std::map<std::string, std::string> fields;
  std::string line;
  bool found_data = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    fields[key] = trim(line.substr(eq + 1));
    if (key == "ElementDataFile") {
      found_data = true;
      break;
    }
  }
  if (!found_data) throw Error(path.string() + ": missing ElementDataFile");
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = fields.find(k);
    return it == fields.end() ? nullptr : &it->second;
  };
  if (auto nd = get("NDims"); !nd || std::stoi(*nd) != 3)
    throw Error(path.string() + ": only 3D volumes are supported");
  const auto* dims = get("DimSize");
  if (!dims) throw Error(path.string() + ": missing DimSize");
  const auto d = to_dims(parse_numbers(*dims), "DimSize");
  h.grid.dims = {d[0], d[1], d[2]};
  const auto* type = get("ElementType");
  if (!type) throw Error(path.string() + ": missing ElementType");
  h.type = meta_type(*type);
  for (const char* key : {"ElementSpacing", "ElementSize"}) {
    if (const auto* s = get(key)) {
      const auto v = parse_numbers(*s);
      if (v.size() != 3) throw Error(path.string() + ": " + key + " must have three entries");
      h.grid.spacing = Vec3(v[0], v[1], v[2]);
      break;
    }
  }
  for (const char* key : {"Offset", "Origin", "Position"}) {
    if (const auto* s = get(key)) {
      const auto v = parse_numbers(*s);
      if (v.size() != 3) throw Error(path.string() + ": " + key + " must have three entries");
      h.grid.origin = Vec3(v[0], v[1], v[2]);
      break;
    }
  }
  for (const char* key : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"})
    if (const auto* s = get(key); s && lower(*s) == "true")
      throw Error(path.string() + ": only little-endian data is supported");
  if (const auto* s = get("CompressedData"); s && lower(*s) == "true")
    throw Error(path.string() + ": compressed data is not supported");
  const std::string& data = fields["ElementDataFile"];
  if (data != "LOCAL") h.data_file = path.parent_path() / data;
  h.data_offset = in.tellg();
  return h;
}

struct RawVolume {
  Grid grid;
  std::vector<std::uint8_t> values;
};

RawVolume read_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string ext = lower(path.extension().string());
  RawHeader h;
  if (ext == ".nrrd" || ext == ".nhdr") {
    h = read_nrrd_header(path, in);
  } else if (ext == ".mha" || ext == ".mhd") {
    h = read_meta_header(path, in);
  } else {
    throw Error(path.string() + ": unrecognised volume extension '" + ext + "'");
  }
  h.grid.validate();
  const std::size_t n = h.grid.voxel_count();
  const std::size_t bytes = n * voxel_bytes(h.type);
  std::vector<char> raw(bytes);
  if (h.data_file.empty()) {
    in.clear();
    in.seekg(h.data_offset);
    in.read(raw.data(), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) throw Error(path.string() + ": truncated voxel data");
  } else {
    std::ifstream data(h.data_file, std::ios::binary);
    if (!data) throw Error("cannot open data file " + h.data_file.string());
    data.read(raw.data(), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(data.gcount()) != bytes)
      throw Error(h.data_file.string() + ": truncated voxel data");
  }
  std::vector<std::uint8_t> labels(n);
  for (std::size_t v = 0; v < n; ++v) {
    long value = 0;
    switch (h.type) {
      case VoxelType::U8: value = static_cast<unsigned char>(raw[v]); break;
      case VoxelType::S8: value = static_cast<signed char>(raw[v]); break;
      case VoxelType::U16: {
        std::uint16_t x;
        std::memcpy(&x, raw.data() + 2 * v, 2);
        value = x;
        break;
      }
      case VoxelType::S16: {
        std::int16_t x;
        std::memcpy(&x, raw.data() + 2 * v, 2);
        value = x;
        break;
      }
    }
    if (value < 0 || value > kMaxLabel)
      throw Error(path.string() + ": unknown label value " + std::to_string(value) + " at voxel " +
                  std::to_string(v));
    labels[v] = static_cast<std::uint8_t>(value);
  }
  return {h.grid, std::move(labels)};
}

void write_raw(const Grid& g, const std::vector<std::uint8_t>& values, const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  const auto& [nx, ny, nz] = g.dims;
  if (ext == ".nrrd") {
    out << "NRRD0004\n"
        << "type: uint8\n"
        << "dimension: 3\n"
        << "space: left-posterior-superior\n"
        << "sizes: " << nx << ' ' << ny << ' ' << nz << '\n'
        << "space directions: (" << g.spacing.x() << ",0,0) (0," << g.spacing.y() << ",0) (0,0,"
        << g.spacing.z() << ")\n"
        << "kinds: domain domain domain\n"
        << "endian: little\n"
        << "encoding: raw\n"
        << "space origin: (" << g.origin.x() << ',' << g.origin.y() << ',' << g.origin.z() << ")\n\n";
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size()));
  } else if (ext == ".mha" || ext == ".mhd") {
    const bool local = ext == ".mha";
    fs::path raw_path = path;
    raw_path.replace_extension(".raw");
    out << "ObjectType = Image\n"
        << "NDims = 3\n"
        << "BinaryData = True\n"
        << "BinaryDataByteOrderMSB = False\n"
        << "CompressedData = False\n"
        << "Offset = " << g.origin.x() << ' ' << g.origin.y() << ' ' << g.origin.z() << '\n'
        << "ElementSpacing = " << g.spacing.x() << ' ' << g.spacing.y() << ' ' << g.spacing.z() << '\n'
        << "DimSize = " << nx << ' ' << ny << ' ' << nz << '\n'
        << "ElementType = MET_UCHAR\n"
        << "ElementDataFile = " << (local ? std::string("LOCAL") : raw_path.filename().string()) << '\n';
    if (local) {
      out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size()));
    } else {
      std::ofstream raw(raw_path, std::ios::binary);
      if (!raw) throw Error("cannot write " + raw_path.string());
      raw.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size()));
    }
  } else {
    throw Error(path.string() + ": unrecognised volume extension '" + ext + "'");
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

LabelVolume load_volume(const fs::path& path) {
  auto raw = read_raw(path);
  return LabelVolume(raw.grid, std::move(raw.values));
}

void save_volume(const LabelVolume& volume, const fs::path& path) {
  write_raw(volume.grid(), volume.labels(), path);
}

BinaryMask load_mask(const fs::path& path) {
  auto raw = read_raw(path);
  for (auto v : raw.values)
    if (v > 1) throw Error(path.string() + ": mask contains value " + std::to_string(v));
  return BinaryMask(raw.grid, std::move(raw.values));
}

void save_mask(const BinaryMask& mask, const fs::path& path) { write_raw(mask.grid(), mask.values(), path); }

}  // namespace aaa::volume
