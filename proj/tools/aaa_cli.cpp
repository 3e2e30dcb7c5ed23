#include "aaa/phantoms.hpp"
#include "aaa/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace aaa;

namespace {

struct ConfigFlags {
  std::string config;
  std::string input;
  std::string output;
  bool no_ilt = false;
  std::optional<double> pressure;
  int threads = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file (or a run manifest)");
    cmd->add_option("--input", input, "Label volume (.nrrd, .mha, .mhd); overrides the config");
    cmd->add_option("--output", output, "Run directory; overrides the config");
    cmd->add_flag("--no-ilt", no_ilt, "Drop the thrombus and load the wall's inner surface");
    cmd->add_option("--pressure", pressure, "Mean arterial pressure in kPa; overrides the config");
    cmd->add_option("--threads", threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  }

  pipeline::PipelineConfig resolve() const {
    pipeline::PipelineConfig cfg;
    if (!config.empty()) cfg = pipeline::load_config(config);
    if (!input.empty()) cfg.input = input;
    if (!output.empty()) cfg.output = output;
    if (no_ilt) cfg.include_ilt = false;
    if (pressure) cfg.map_pressure = *pressure;
    set_thread_count(threads);
    return cfg;
  }
};

void print_summary(const char* stage, const nlohmann::json& s) {
  std::printf("%s: %.2f s\n", stage, s.value("seconds", 0.0));
}

}  // namespace

int main(int argc, char** argv) {
  solver::ensure_reliable_blas(argv);

  CLI::App app{"Wall stress analysis of abdominal aortic aneurysms from labelled segmentations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pipeline::kVersion);

  ConfigFlags flags;
  using StageFn = nlohmann::json (*)(const pipeline::PipelineConfig&);
  const std::pair<const char*, std::pair<const char*, StageFn>> stages[] = {
      {"clean", {"Clean the segmentation into AAA and lumen masks", pipeline::run_clean}},
      {"surfaces", {"Extract and smooth the wall and lumen surfaces", pipeline::run_surfaces}},
      {"mesh", {"Build the quadratic tetrahedral wall/ILT mesh", pipeline::run_mesh}},
      {"solve", {"Solve the pressurised model and recover stresses", pipeline::run_solve}},
      {"stats", {"Peak, 99th percentile and percentile curve of wall stress", pipeline::run_stats}},
  };
  std::vector<std::pair<CLI::App*, std::pair<const char*, StageFn>>> stage_cmds;
  for (const auto& [name, info] : stages) {
    auto* cmd = app.add_subcommand(name, info.first);
    flags.attach(cmd);
    stage_cmds.push_back({cmd, {name, info.second}});
  }
  auto* pipe = app.add_subcommand("pipeline", "Run clean, surfaces, mesh, solve and stats");
  flags.attach(pipe);

  auto* cmp = app.add_subcommand("compare", "Compare two runs, or two masks on the same grid");
  std::string cmp_a, cmp_b, cmp_out = "comparison";
  cmp->add_option("a", cmp_a, "Reference run directory or mask")->required();
  cmp->add_option("b", cmp_b, "Other run directory or mask")->required();
  cmp->add_option("--output", cmp_out, "Directory for the comparison files");

  auto* ph = app.add_subcommand("phantom", "Write a synthetic labelled vessel volume");
  std::string ph_kind = "aaa-bulge", ph_out;
  double lumen_scale = 1.0, spacing = 0.0;
  bool thin_sheet = false, calcification = false;
  ph->add_option("--kind", ph_kind, "cylinder or aaa-bulge")->check(CLI::IsMember({"cylinder", "aaa-bulge"}));
  ph->add_option("--lumen-scale", lumen_scale, "Multiplies the lumen radius")->check(CLI::PositiveNumber);
  ph->add_option("--spacing", spacing, "Isotropic voxel size in mm")->check(CLI::PositiveNumber);
  ph->add_flag("--thin-sheet", thin_sheet, "Add a one-voxel artifact sheet");
  ph->add_flag("--calcification", calcification, "Add a calcified blob in the wall");
  ph->add_option("--output", ph_out, "Output volume (.nrrd, .mha, .mhd)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [cmd, info] : stage_cmds)
      if (*cmd) {
        const auto cfg = flags.resolve();
        cfg.validate();
        print_summary(info.first, info.second(cfg));
      }
    if (*pipe) {
      const auto cfg = flags.resolve();
      const auto m = pipeline::run_pipeline(cfg);
      const auto& st = m["stages"]["stats"];
      std::printf("peak %.6g MPa, p99 %.6g MPa (%s), total %.1f s\n", st["peak_mpa"].get<double>(),
                  st["p99_mpa"].get<double>(), st["reported_field"].get<std::string>().c_str(),
                  m["total_seconds"].get<double>());
      std::printf("outputs in %s\n", cfg.output.string().c_str());
    }
    if (*cmp) {
      if (fs::is_directory(cmp_a) && fs::is_directory(cmp_b)) {
        const auto c = pipeline::compare_runs(cmp_a, cmp_b, cmp_out);
        for (const auto& r : c.rows)
          std::printf("%-16s %14.6g %14.6g %+8.2f%%\n", r.quantity.c_str(), r.a, r.b, r.relative_difference);
        if (c.lumen_hd) std::printf("lumen slice HD mean %.4g mm\n", c.lumen_hd->mean);
      } else if (fs::is_regular_file(cmp_a) && fs::is_regular_file(cmp_b)) {
        const auto p = pipeline::compare_masks(cmp_a, cmp_b, cmp_out);
        std::printf("slice HD mean %.4g mm over %zu slices\n", p.mean, p.slices.size());
      } else {
        throw Error("compare: expected two run directories or two mask files");
      }
    }
    if (*ph) {
      auto spec = ph_kind == "cylinder" ? phantoms::cylinder_spec() : phantoms::aaa_bulge_spec();
      spec.lumen_radius *= lumen_scale;
      spec.bulge_lumen *= lumen_scale;
      if (spacing > 0.0) spec.spacing = Vec3::Constant(spacing);
      spec.thin_sheet = thin_sheet;
      spec.calcification = calcification;
      volume::save_volume(phantoms::vessel_volume(spec), ph_out);
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
