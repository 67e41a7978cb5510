// geostress: geo-referenced physiology analysis.
//
//   geostress analyze --manifest PATH --out DIR [--config FILE] [--corridor M]
//                     [--scr-threshold uS] [--jobs N]
//   geostress synth [--spec PATH] --out DIR

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "geostress/analyze.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Geo-referenced EDA/HRV indexes and stress-episode statistics"};
  app.require_subcommand(1);

  geostress::RunConfig run;
  std::string config_path;
  std::optional<double> corridor;
  std::optional<double> scr_threshold;
  std::optional<int> jobs;

  auto* analyze = app.add_subcommand("analyze", "Run the pipeline on a study manifest");
  analyze->add_option("--manifest", run.manifest, "Study manifest JSON")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", run.out_dir, "Output directory")->required();
  analyze->add_option("--config", config_path, "JSON file with parameter overrides")->check(CLI::ExistingFile);
  analyze->add_option("--corridor", corridor, "Segment corridor half-width in metres");
  analyze->add_option("--scr-threshold", scr_threshold, "SCR significance threshold in uS");
  analyze->add_option("--jobs", jobs, "Participants processed concurrently");

  std::string spec_path;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--spec", spec_path, "Synthetic study spec JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : geostress::kExitInputError;
  }

  if (*analyze) {
    // Config file first; explicit flags win.
    if (!config_path.empty()) {
      try {
        geostress::apply_config_file(run, config_path);
      } catch (const geostress::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return geostress::kExitInputError;
      }
    }
    if (corridor) run.corridor_m = *corridor;
    if (scr_threshold) run.eda.scr_threshold_uS = *scr_threshold;
    if (jobs) run.jobs = *jobs;
    return geostress::cmd_analyze(run, std::cerr);
  }
  return geostress::cmd_synth(spec_path, synth_out, std::cerr);
}
