#include "aaa/pipeline.hpp"

#include "aaa/surface.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace aaa::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// Indexed by solver::Preconditioner.
constexpr const char* kPreconditionerNames[] = {"auto", "jacobi", "cholesky", "multigrid"};

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  cleaning.validate();
  mesh.validate();
  material.validate();
  if (input.empty()) throw Error("config: input volume path is required");
  if (output.empty()) throw Error("config: output directory is required");
  if (smoothing_iterations < 0) throw Error("config: smoothing_iterations must be >= 0");
  if (!(smoothing_lambda > 0.0 && smoothing_lambda < 1.0)) throw Error("config: smoothing_lambda must be in (0, 1)");
  if (!(map_pressure > 0.0) || !std::isfinite(map_pressure)) throw Error("config: map_pressure must be positive");
  if (!(solver.tolerance > 0.0) || solver.max_iterations < 1) throw Error("config: invalid solver settings");
  if (map_pressure < 5.0 || map_pressure > 25.0)
    warn("map_pressure " + std::to_string(map_pressure) +
         " kPa is outside the plausible range [5, 25] kPa for mean arterial pressure");
}

json PipelineConfig::to_json() const {
  json j;
  j["input"] = input.string();
  j["roi_z_range"] = cleaning.roi_z_range ? json::array({cleaning.roi_z_range->first, cleaning.roi_z_range->second})
                                          : json(nullptr);
  j["cleaning"] = {{"smooth_kernel_radius_mm", cleaning.smooth_kernel_radius_mm},
                   {"smooth_threshold", cleaning.smooth_threshold},
                   {"opening_radius_mm", cleaning.opening_radius_mm},
                   {"gaussian_sigma", cleaning.gaussian_sigma},
                   {"connectivity", static_cast<int>(cleaning.connectivity)}};
  j["surface"] = {{"smoothing_iterations", smoothing_iterations}, {"smoothing_lambda", smoothing_lambda}};
  j["wall_thickness"] = mesh.thickness;
  j["wall_layers"] = mesh.wall_layers;
  j["ilt_layers"] = mesh.ilt_layers;
  j["ilt_min_thickness"] = mesh.ilt_min_thickness;
  j["ilt_direction_smoothing"] = mesh.ilt_direction_smoothing;
  j["material"] = {{"wall_modulus_pa", material.wall_modulus},
                   {"compliance_ratio", material.compliance_ratio},
                   {"poisson", material.poisson}};
  j["solver"] = {{"preconditioner", kPreconditionerNames[static_cast<int>(solver.preconditioner)]},
                 {"tolerance", solver.tolerance},
                 {"max_iterations", solver.max_iterations}};
  j["map_pressure"] = map_pressure;
  j["include_ilt"] = include_ilt;
  j["output"] = output.string();
  return j;
}

namespace {

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(std::string("config: ") + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(std::string("config: unknown key '") + key + "' in " + where);
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"input", "roi_z_range", "cleaning", "surface", "wall_thickness", "wall_layers", "ilt_layers",
              "ilt_min_thickness", "ilt_direction_smoothing", "material", "solver", "map_pressure", "include_ilt", "output"});
  PipelineConfig c;
  std::string s;
  if (j.contains("input")) {
    get(j, "input", s);
    c.input = s;
  }
  if (j.contains("output")) {
    get(j, "output", s);
    c.output = s;
  }
  if (j.contains("roi_z_range") && !j["roi_z_range"].is_null()) {
    const auto& r = j["roi_z_range"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
      throw Error("config: roi_z_range must be [first_slice, last_slice] or null");
    c.cleaning.roi_z_range = std::pair{r[0].get<int>(), r[1].get<int>()};
  }
  if (j.contains("cleaning")) {
    const auto& cl = j["cleaning"];
    check_keys(cl, "cleaning",
               {"smooth_kernel_radius_mm", "smooth_threshold", "opening_radius_mm", "gaussian_sigma", "connectivity"});
    get(cl, "smooth_kernel_radius_mm", c.cleaning.smooth_kernel_radius_mm);
    get(cl, "smooth_threshold", c.cleaning.smooth_threshold);
    get(cl, "opening_radius_mm", c.cleaning.opening_radius_mm);
    get(cl, "gaussian_sigma", c.cleaning.gaussian_sigma);
    int conn = static_cast<int>(c.cleaning.connectivity);
    get(cl, "connectivity", conn);
    c.cleaning.connectivity = volume::connectivity_from_int(conn);
  }
  if (j.contains("surface")) {
    const auto& su = j["surface"];
    check_keys(su, "surface", {"smoothing_iterations", "smoothing_lambda"});
    get(su, "smoothing_iterations", c.smoothing_iterations);
    get(su, "smoothing_lambda", c.smoothing_lambda);
  }
  get(j, "wall_thickness", c.mesh.thickness);
  get(j, "wall_layers", c.mesh.wall_layers);
  get(j, "ilt_layers", c.mesh.ilt_layers);
  get(j, "ilt_min_thickness", c.mesh.ilt_min_thickness);
  get(j, "ilt_direction_smoothing", c.mesh.ilt_direction_smoothing);
  if (j.contains("material")) {
    const auto& m = j["material"];
    check_keys(m, "material", {"wall_modulus_pa", "compliance_ratio", "poisson"});
    get(m, "wall_modulus_pa", c.material.wall_modulus);
    get(m, "compliance_ratio", c.material.compliance_ratio);
    get(m, "poisson", c.material.poisson);
  }
  if (j.contains("solver")) {
    const auto& so = j["solver"];
    check_keys(so, "solver", {"preconditioner", "tolerance", "max_iterations"});
    std::string pre = kPreconditionerNames[static_cast<int>(c.solver.preconditioner)];
    get(so, "preconditioner", pre);
    const auto* name = std::find(std::begin(kPreconditionerNames), std::end(kPreconditionerNames), pre);
    if (name == std::end(kPreconditionerNames))
      throw Error("config: preconditioner must be 'auto', 'jacobi', 'cholesky' or 'multigrid'");
    c.solver.preconditioner = static_cast<solver::Preconditioner>(name - std::begin(kPreconditionerNames));
    get(so, "tolerance", c.solver.tolerance);
    get(so, "max_iterations", c.solver.max_iterations);
  }
  get(j, "map_pressure", c.map_pressure);
  get(j, "include_ilt", c.include_ilt);
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("stages")) j = j["config"];
  return PipelineConfig::from_json(j);
}

// ---------------------------------------------------------------------------
// Stages

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return json::object();
  try {
    return json::parse(in);
  } catch (const json::parse_error&) {
    return json::object();
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

void record(const PipelineConfig& cfg, const std::string& stage, const json& entry, const char* status) {
  const RunDir run{cfg.output};
  json m = read_json(run.manifest());
  m["versions"] = {{"aaa", kVersion}, {"eigen", eigen_version()}};
  m["config"] = cfg.to_json();
  m["variant"] = cfg.include_ilt ? "with_ilt" : "without_ilt";
  m["stages"][stage] = entry;
  m["status"] = status;
  if (std::string(status) == "failed")
    m["failed_stage"] = stage;
  else
    m.erase("failed_stage");
  write_json(m, run.manifest());
}

template <typename F>
json stage(const PipelineConfig& cfg, const std::string& name, F&& body) {
  fs::create_directories(cfg.output);
  const auto t0 = std::chrono::steady_clock::now();
  json summary;
  try {
    summary = body(RunDir{cfg.output});
  } catch (const std::exception& e) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record(cfg, name, {{"seconds", secs}, {"error", e.what()}}, "failed");
    throw StageError(name, e.what());
  }
  summary["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  record(cfg, name, summary, "ok");
  return summary;
}

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void require(const fs::path& p, const char* producer) {
  if (!fs::exists(p)) throw Error("missing " + p.filename().string() + "; run the '" + producer + "' stage first");
}

std::vector<double> flatten(const std::vector<solver::SymTensor>& t) {
  std::vector<double> out;
  out.reserve(6 * t.size());
  for (const auto& s : t) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

json run_clean(const PipelineConfig& cfg) {
  return stage(cfg, "clean", [&](const RunDir& run) {
    const auto vol = volume::load_volume(cfg.input);
    const auto masks = volume::clean_pipeline(vol, cfg.cleaning);
    volume::save_mask(masks.aaa, run.aaa_mask());
    volume::save_mask(masks.lumen, run.lumen_mask());
    const auto& g = masks.aaa.grid();
    return json{{"input_dims", vol.grid().dims},
                {"input_spacing", vec(vol.grid().spacing)},
                {"dims", g.dims},
                {"spacing", vec(g.spacing)},
                {"aaa_voxels", masks.aaa.count()},
                {"lumen_voxels", masks.lumen.count()}};
  });
}

json run_surfaces(const PipelineConfig& cfg) {
  return stage(cfg, "surfaces", [&](const RunDir& run) {
    require(run.aaa_mask(), "clean");
    const auto aaa = volume::load_mask(run.aaa_mask());
    const auto lumen = volume::load_mask(run.lumen_mask());
    // Clipped ends are opened before smoothing so the rims slide within
    // their end planes instead of rounding off with the caps.
    auto prepare = [&](const volume::BinaryMask& mask) {
      auto s = surface::extract_isosurface(mask);
      if (s.ends.z_min || s.ends.z_max) s = surface::open_ends(s);
      return surface::laplacian_smooth(s, cfg.smoothing_iterations, cfg.smoothing_lambda);
    };
    const auto wall = prepare(aaa);
    const auto lum = prepare(lumen);
    const auto inner = surface::offset_inward(wall, cfg.mesh.thickness);
    surface::write_vtk_polydata(wall, run.wall_surface());
    surface::write_vtk_polydata(inner, run.wall_inner_surface());
    surface::write_vtk_polydata(lum, run.lumen_surface());
    surface::write_stl(wall, run.dir / "wall_external.stl");
    surface::write_stl(lum, run.dir / "lumen.stl");
    return json{{"wall_vertices", wall.vertices.size()},
                {"wall_triangles", wall.triangles.size()},
                {"wall_area_mm2", surface::area(wall)},
                {"lumen_vertices", lum.vertices.size()},
                {"lumen_area_mm2", surface::area(lum)}};
  });
}

json run_mesh(const PipelineConfig& cfg) {
  return stage(cfg, "mesh", [&](const RunDir& run) {
    require(run.wall_surface(), "surfaces");
    const auto wall = surface::read_vtk_polydata(run.wall_surface());
    const auto lumen = surface::read_vtk_polydata(run.lumen_surface());
    meshing::BuildDiagnostics diag;
    const auto mesh = meshing::build_layered_mesh(wall, lumen, cfg.mesh, &diag);
    const auto q = meshing::quality_check(mesh);
    meshing::write_vtk(mesh, run.mesh_vtk());
    meshing::write_inp(mesh, run.mesh_inp());
    return json{{"nodes", q.node_count},
                {"wall_elements", q.wall_elements},
                {"ilt_elements", q.ilt_elements},
                {"min_scaled_jacobian", q.min_scaled_jacobian},
                {"max_aspect_ratio", q.max_aspect_ratio},
                {"luminal_faces", mesh.luminal.size()},
                {"contact_vertices", diag.contact_vertices},
                {"fallback_vertices", diag.fallback_vertices.size()}};
  });
}

json run_solve(const PipelineConfig& cfg) {
  return stage(cfg, "solve", [&](const RunDir& run) {
    require(run.mesh_vtk(), "mesh");
    const auto mesh = meshing::read_vtk(run.mesh_vtk());
    const auto res = solver::run_case(mesh, cfg.material, {cfg.map_pressure, cfg.include_ilt}, cfg.solver);
    std::vector<meshing::PointArray> arrays;
    arrays.push_back({"displacement", 3, {res.displacement.data(), res.displacement.data() + res.displacement.size()}});
    arrays.push_back({"stress_raw", 6, flatten(res.raw.tensor)});
    arrays.push_back({"max_principal_raw", 1, res.raw.max_principal});
    if (res.ush) {
      arrays.push_back({"stress_ush", 6, flatten(res.ush->tensor)});
      arrays.push_back({"max_principal_ush", 1, res.ush->max_principal});
    }
    meshing::write_vtk(res.mesh, run.stress_vtk(), arrays);
    const double scale = res.applied_magnitude;
    return json{{"variant", cfg.include_ilt ? "with_ilt" : "without_ilt"},
                {"nodes", res.mesh.nodes.size()},
                {"elements", res.mesh.elements.size()},
                {"dofs", 3 * res.mesh.nodes.size()},
                {"iterations", res.report.iterations},
                {"relative_residual", res.report.relative_residual},
                {"preconditioner_backend", res.report.backend},
                {"applied_force_n", vec(res.applied_total)},
                {"reaction_force_n", vec(res.reaction_total)},
                {"equilibrium_error", scale > 0.0 ? (res.applied_total + res.reaction_total).norm() / scale : 0.0},
                {"strain_energy_nmm", res.strain_energy},
                {"ush", res.ush.has_value()}};
  });
}

StressResult load_stress(const fs::path& stress_vtk) {
  std::vector<meshing::PointArray> arrays;
  StressResult r;
  r.mesh = meshing::read_vtk(stress_vtk, &arrays);
  auto find = [&](const char* name, int comps) -> const meshing::PointArray* {
    for (const auto& a : arrays)
      if (a.name == name) {
        if (a.components != comps || a.values.size() != comps * r.mesh.nodes.size())
          throw Error(stress_vtk.string() + ": array " + name + " has the wrong shape");
        return &a;
      }
    return nullptr;
  };
  auto field = [&](const char* tensor, const char* principal, solver::StressKind kind) -> std::optional<solver::StressField> {
    const auto* t = find(tensor, 6);
    const auto* p = find(principal, 1);
    if (!t || !p) return std::nullopt;
    solver::StressField f;
    f.kind = kind;
    f.max_principal = p->values;
    f.tensor.resize(r.mesh.nodes.size());
    for (std::size_t n = 0; n < f.tensor.size(); ++n)
      for (int c = 0; c < 6; ++c) f.tensor[n][c] = t->values[6 * n + c];
    return f;
  };
  auto raw = field("stress_raw", "max_principal_raw", solver::StressKind::Raw);
  if (!raw) throw Error(stress_vtk.string() + ": no raw stress arrays");
  r.raw = std::move(*raw);
  r.ush = field("stress_ush", "max_principal_ush", solver::StressKind::UshAveraged);
  return r;
}

json run_stats(const PipelineConfig& cfg) {
  return stage(cfg, "stats", [&](const RunDir& run) {
    require(run.stress_vtk(), "solve");
    const auto res = load_stress(run.stress_vtk());
    const auto raw = metrics::stress_stats(res.raw, res.mesh);
    std::vector<metrics::StatsRow> rows;
    json j;
    if (res.ush) {
      const auto ush = metrics::stress_stats(*res.ush, res.mesh);
      rows.push_back({"ush", ush.peak, ush.p99});
      metrics::write_percentile_curve_csv(ush.curve, run.curve_csv());
      j["peak_mpa"] = ush.peak;
      j["p99_mpa"] = ush.p99;
    } else {
      metrics::write_percentile_curve_csv(raw.curve, run.curve_csv());
      j["peak_mpa"] = raw.peak;
      j["p99_mpa"] = raw.p99;
    }
    rows.push_back({"raw", raw.peak, raw.p99});
    metrics::write_stats_csv(rows, run.stats_csv());
    j["reported_field"] = res.ush ? "ush" : "raw";
    j["raw_peak_mpa"] = raw.peak;
    j["raw_p99_mpa"] = raw.p99;
    j["percentile_convention"] = "nearest-rank over wall nodes";
    return j;
  });
}

json run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output);
  // A fresh manifest: stale entries from an earlier run would not describe
  // this one.
  fs::remove(RunDir{cfg.output}.manifest());
  const std::pair<const char*, json (*)(const PipelineConfig&)> stages[] = {
      {"clean", run_clean}, {"surfaces", run_surfaces}, {"mesh", run_mesh}, {"solve", run_solve}, {"stats", run_stats}};
  for (const auto& [name, fn] : stages) {
    std::cerr << "[" << name << "] ..." << std::flush;
    const auto s = fn(cfg);
    char buf[32];
    std::snprintf(buf, sizeof buf, " %.2f s\n", s["seconds"].get<double>());
    std::cerr << buf;
  }
  auto m = read_json(RunDir{cfg.output}.manifest());
  double total = 0.0;
  for (const auto& [k, v] : m["stages"].items()) total += v["seconds"].get<double>();
  m["total_seconds"] = total;
  write_json(m, RunDir{cfg.output}.manifest());
  return m;
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double rel_or_nan(double b, double a) {
  if (a == 0.0) return b == 0.0 ? 0.0 : std::nan("");
  return metrics::relative_difference(b, a);
}

}  // namespace

Comparison compare_runs(const fs::path& run_a, const fs::path& run_b, const fs::path& out) {
  const RunDir a{run_a}, b{run_b};
  for (const auto* r : {&a, &b}) {
    require(r->stress_vtk(), "solve");
    require(r->mesh_vtk(), "mesh");
  }
  const auto sa = load_stress(a.stress_vtk());
  const auto sb = load_stress(b.stress_vtk());
  const auto ma = meshing::read_vtk(a.mesh_vtk());
  const auto mb = meshing::read_vtk(b.mesh_vtk());
  const auto va = metrics::region_values(sa.reported(), sa.mesh);
  const auto vb = metrics::region_values(sb.reported(), sb.mesh);
  const auto ra = metrics::region_values(sa.raw, sa.mesh);
  const auto rb = metrics::region_values(sb.raw, sb.mesh);

  Comparison c;
  auto add = [&](const char* q, double x, double y) { c.rows.push_back({q, x, y, rel_or_nan(y, x)}); };
  add("peak_mpa", metrics::peak(va), metrics::peak(vb));
  add("p99_mpa", metrics::percentile(va, 99), metrics::percentile(vb, 99));
  add("raw_peak_mpa", metrics::peak(ra), metrics::peak(rb));
  add("raw_p99_mpa", metrics::percentile(ra, 99), metrics::percentile(rb, 99));
  add("nodes", static_cast<double>(ma.nodes.size()), static_cast<double>(mb.nodes.size()));
  add("wall_elements", static_cast<double>(ma.count(meshing::Region::Wall)),
      static_cast<double>(mb.count(meshing::Region::Wall)));
  add("ilt_elements", static_cast<double>(ma.count(meshing::Region::Ilt)),
      static_cast<double>(mb.count(meshing::Region::Ilt)));
  add("total_elements", static_cast<double>(ma.elements.size()), static_cast<double>(mb.elements.size()));

  fs::create_directories(out);
  {
    std::ofstream f(out / "comparison.csv");
    f << "quantity,a,b,relative_difference_percent\n";
    for (const auto& r : c.rows) f << r.quantity << ',' << fmt(r.a) << ',' << fmt(r.b) << ',' << fmt(r.relative_difference) << '\n';
    if (!f) throw Error("cannot write comparison.csv");
  }
  {
    std::vector<double> ps;
    for (int i = 1; i <= 1000; ++i) ps.push_back(0.1 * i);
    const auto pa = metrics::percentiles(va, ps);
    const auto pb = metrics::percentiles(vb, ps);
    std::ofstream f(out / "percentile_overlay.csv");
    f << "percentile,a_mpa,b_mpa\n";
    for (std::size_t i = 0; i < ps.size(); ++i) f << fmt(ps[i]) << ',' << fmt(pa[i]) << ',' << fmt(pb[i]) << '\n';
    if (!f) throw Error("cannot write percentile_overlay.csv");
  }
  json meta = {{"run_a", fs::absolute(run_a).string()},
               {"run_b", fs::absolute(run_b).string()},
               {"relative_difference", "(b - a) / a * 100"},
               {"reported_field_a", sa.ush ? "ush" : "raw"},
               {"reported_field_b", sb.ush ? "ush" : "raw"}};
  if (fs::exists(a.lumen_mask()) && fs::exists(b.lumen_mask())) {
    const auto la = volume::load_mask(a.lumen_mask());
    const auto lb = volume::load_mask(b.lumen_mask());
    if (la.grid().same_geometry(lb.grid())) {
      c.lumen_hd = metrics::slice_hd_profile(la, lb);
      metrics::write_hd_profile_csv(*c.lumen_hd, out / "hd_profile.csv");
      meta["lumen_hd_mean_mm"] = c.lumen_hd->mean;
      meta["hd_percentile_axis"] = "axial slices";
    } else {
      warn("compare: lumen masks are on different grids; slice Hausdorff profile skipped");
    }
  }
  json rows = json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"quantity", r.quantity},
                    {"a", r.a},
                    {"b", r.b},
                    {"relative_difference_percent", std::isnan(r.relative_difference) ? json(nullptr)
                                                                                      : json(r.relative_difference)}});
  meta["rows"] = rows;
  write_json(meta, out / "comparison.json");
  return c;
}

metrics::SliceHdProfile compare_masks(const fs::path& mask_a, const fs::path& mask_b, const fs::path& out) {
  const auto a = volume::load_mask(mask_a);
  const auto b = volume::load_mask(mask_b);
  if (!a.grid().same_geometry(b.grid())) throw Error("compare: masks are on different grids");
  const auto prof = metrics::slice_hd_profile(a, b);
  fs::create_directories(out);
  metrics::write_hd_profile_csv(prof, out / "hd_profile.csv");
  write_json({{"mask_a", fs::absolute(mask_a).string()},
              {"mask_b", fs::absolute(mask_b).string()},
              {"hd_mean_mm", prof.mean},
              {"hd_percentile_axis", "axial slices"}},
             out / "comparison.json");
  return prof;
}

}  // namespace aaa::pipeline
