#pragma once

#include "aaa/meshing.hpp"
#include "aaa/solver.hpp"
#include "aaa/volume.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace aaa::metrics {

/// (v_auto - v_semi) / v_semi * 100. Throws when v_semi is zero.
double relative_difference(double v_auto, double v_semi);

// ---------------------------------------------------------------------------
// Stress statistics

/// (percentile rank, value) pairs, ascending in both.
using PercentileCurve = std::vector<std::pair<double, double>>;

struct StressStats {
  double peak = 0.0;
  double p99 = 0.0;
  PercentileCurve curve;
};

/// Nodal max-principal values of the nodes touched by elements of `region`,
/// in node order.
std::vector<double> region_values(const solver::StressField& field, const meshing::TetMesh& mesh,
                                  meshing::Region region = meshing::Region::Wall);

double peak(const std::vector<double>& values);
/// Nearest rank: element ceil(p*N/100) (1-based) of the ascending sort.
/// 0 < p <= 100.
double percentile(const std::vector<double>& values, double p);
/// percentile() at each of `ps`, sorting once.
std::vector<double> percentiles(const std::vector<double>& values, const std::vector<double>& ps);
/// (100*k/N, k-th smallest) for k = 1..N, thinned to at most `max_points`
/// entries. The last entry is always (100, max).
PercentileCurve percentile_curve(const std::vector<double>& values, std::size_t max_points = 1000);

double peak_stress(const solver::StressField& field, const meshing::TetMesh& mesh,
                   meshing::Region region = meshing::Region::Wall);
double percentile_stress(const solver::StressField& field, const meshing::TetMesh& mesh, double p,
                         meshing::Region region = meshing::Region::Wall);
StressStats stress_stats(const solver::StressField& field, const meshing::TetMesh& mesh,
                         meshing::Region region = meshing::Region::Wall);

// ---------------------------------------------------------------------------
// Hausdorff distance

/// max over x in X of the distance to the nearest point of Y. Exact; a
/// uniform grid over Y prunes the search.
double directed_hausdorff(const std::vector<Vec3>& x, const std::vector<Vec3>& y);
double hausdorff(const std::vector<Vec3>& x, const std::vector<Vec3>& y);

/// Centres (mm) of foreground voxels of slice k with a background
/// 4-neighbour in the slice. Neighbours off the grid count as background.
std::vector<Vec3> slice_boundary(const volume::BinaryMask& mask, int k);

struct SliceHd {
  int slice = 0;
  double z = 0.0;   // mm
  double hd = 0.0;  // mm
};

struct SliceHdProfile {
  std::vector<SliceHd> slices;
  double mean = 0.0;
  /// Percentile of HD over slices.
  PercentileCurve curve;
};

/// 2D Hausdorff distance between the boundaries of every axial slice where
/// both masks have foreground.
SliceHdProfile slice_hd_profile(const volume::BinaryMask& a, const volume::BinaryMask& b);

// ---------------------------------------------------------------------------
// CSV output (one header line, %.9g numbers)

struct StatsRow {
  std::string name;
  double peak = 0.0;
  double p99 = 0.0;
};

void write_stats_csv(const std::vector<StatsRow>& rows, const std::filesystem::path& path);
void write_percentile_curve_csv(const PercentileCurve& curve, const std::filesystem::path& path);
void write_hd_profile_csv(const SliceHdProfile& profile, const std::filesystem::path& path);

}  // namespace aaa::metrics
