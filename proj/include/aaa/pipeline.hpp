#pragma once

#include "aaa/meshing.hpp"
#include "aaa/metrics.hpp"
#include "aaa/solver.hpp"
#include "aaa/volume.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace aaa::pipeline {

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
  std::filesystem::path input;
  volume::CleaningConfig cleaning;  // carries roi_z_range
  int smoothing_iterations = 20;
  double smoothing_lambda = 0.5;
  meshing::LayeredMeshConfig mesh;
  solver::MaterialSpec material;
  solver::SolverOptions solver;
  double map_pressure = 13.0;  // kPa
  bool include_ilt = true;
  std::filesystem::path output = "run";

  /// Throws on invalid values; warns when the pressure is outside [5, 25] kPa.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are errors.
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Reads a config file, or the config echoed in a run manifest.
PipelineConfig load_config(const std::filesystem::path& path);

/// Fixed artifact names inside a run directory.
struct RunDir {
  std::filesystem::path dir;

  std::filesystem::path aaa_mask() const { return dir / "aaa_mask.nrrd"; }
  std::filesystem::path lumen_mask() const { return dir / "lumen_mask.nrrd"; }
  std::filesystem::path wall_surface() const { return dir / "wall_external.vtk"; }
  std::filesystem::path wall_inner_surface() const { return dir / "wall_internal.vtk"; }
  std::filesystem::path lumen_surface() const { return dir / "lumen.vtk"; }
  std::filesystem::path mesh_vtk() const { return dir / "mesh.vtk"; }
  std::filesystem::path mesh_inp() const { return dir / "mesh.inp"; }
  std::filesystem::path stress_vtk() const { return dir / "stress.vtk"; }
  std::filesystem::path stats_csv() const { return dir / "stats.csv"; }
  std::filesystem::path curve_csv() const { return dir / "percentile_curve.csv"; }
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
};

// Each stage reads the previous stage's artifacts from cfg.output, writes its
// own, and records a summary and its wall time in the manifest. Failures are
// rethrown as StageError and noted in the manifest; files already written
// are kept.
nlohmann::json run_clean(const PipelineConfig& cfg);
nlohmann::json run_surfaces(const PipelineConfig& cfg);
nlohmann::json run_mesh(const PipelineConfig& cfg);
nlohmann::json run_solve(const PipelineConfig& cfg);
nlohmann::json run_stats(const PipelineConfig& cfg);

/// All stages in order. Returns the final manifest.
nlohmann::json run_pipeline(const PipelineConfig& cfg);

/// Mesh and nodal fields of a solved run, as stored in stress.vtk.
struct StressResult {
  meshing::TetMesh mesh;
  solver::StressField raw;
  std::optional<solver::StressField> ush;
  /// The field used for reporting: USH when available.
  const solver::StressField& reported() const { return ush ? *ush : raw; }
};

StressResult load_stress(const std::filesystem::path& stress_vtk);

struct ComparisonRow {
  std::string quantity;
  double a = 0.0;
  double b = 0.0;
  /// relative_difference(b, a): run A is the reference.
  double relative_difference = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::optional<metrics::SliceHdProfile> lumen_hd;
};

/// Compares two completed runs and writes comparison.csv,
/// percentile_overlay.csv and (when the lumen masks share a grid)
/// hd_profile.csv into `out`.
Comparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                        const std::filesystem::path& out);

/// Slice Hausdorff profile of two masks; writes hd_profile.csv into `out`.
/// Throws when the grids differ.
metrics::SliceHdProfile compare_masks(const std::filesystem::path& mask_a, const std::filesystem::path& mask_b,
                                      const std::filesystem::path& out);

}  // namespace aaa::pipeline
