#include <CLI11.hpp>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "activemocap/csv.hpp"
#include "activemocap/errors.hpp"
#include "activemocap/harness.hpp"

namespace fs = std::filesystem;
using namespace activemocap;

namespace {

// Flags shared by every subcommand: a config file, one flag per config key and
// the output directory.
struct CommonOptions {
  std::string config_file;
  std::string out = "out";
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> flags;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "key = value config file")
        ->check(CLI::ExistingFile);
    app->add_option("-o,--out", out, "output directory")->capture_default_str();
    const ExperimentConfig defaults;
    for (const auto& [key, value] : defaults.to_key_values()) {
      flags[key] = app->add_option("--" + key, values[key], "default " + value)
                       ->group("Experiment");
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_file.empty()) cfg = load_config(config_file);
    for (const auto& [key, opt] : flags) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (std::string_view item : csv::split(s, ',')) {
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_list(s)) {
    const long long v = csv::parse_int(item);
    if (v < 0) throw ConfigError("seeds must be nonnegative: " + item);
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ConfigError("no seeds given");
  return out;
}

std::string safe_name(std::string s) {
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  }
  return s;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void print_summary(const std::vector<SummaryRow>& rows) {
  for (const SummaryRow& r : rows) {
    std::printf("%-12s %-14s %-22s %-16s runs=%d mpjpe=%.4f +- %.4f\n", r.sequence.c_str(),
                r.mode.c_str(), r.policy.c_str(), r.variant.c_str(), r.runs, r.mean, r.std);
  }
}

// Writes summary.csv and the base manifest to `out`, and each run's exports
// to its own subdirectory.
void export_sweep(const SweepOutput& s, const ExperimentConfig& base, const fs::path& out) {
  make_dir(out);
  write_summary_csv(s.summary, out / "summary.csv");
  write_manifest(base, out / "manifest");
  for (const RunResult& r : s.runs) {
    const ExperimentConfig& c = r.config;
    const std::string name = safe_name(c.sequence) + "_" + to_string(c.mode) + "_" +
                             to_string(c.policy) + "_" + variant_name(c) + "_seed" +
                             std::to_string(c.noise.seed);
    export_result(r, out / "runs" / name);
  }
}

int cmd_calibrate(const CommonOptions& opt) {
  const ExperimentConfig cfg = opt.resolve();
  const MotionSequence seq = make_sequence(cfg);
  const CalibrationResult r = run_calibration(cfg, seq);
  const fs::path out(opt.out);
  make_dir(out);
  const fs::path file = out / "calibration.csv";
  std::ofstream f(file);
  if (!f) throw IoError("cannot write " + file.string());
  f << "bone,parent,child,length\n";
  const auto& bones = BoneTopology::standard().bones();
  for (std::size_t b = 0; b < bones.size(); ++b) {
    f << b << ',' << joint_name(bones[b].parent) << ',' << joint_name(bones[b].child) << ','
      << csv::format_double(r.bone_lengths[b]) << '\n';
    std::printf("%-16s -> %-16s %.4f m\n", std::string(joint_name(bones[b].parent)).c_str(),
                std::string(joint_name(bones[b].child)).c_str(), r.bone_lengths[b]);
  }
  if (!f) throw IoError("write failed: " + file.string());
  write_manifest(cfg, out / "manifest");
  std::printf("residual %.3g after %d iterations\n", r.residual, r.iterations);
  return 0;
}

int cmd_run(const CommonOptions& opt) {
  const ExperimentConfig cfg = opt.resolve();
  const RunResult r = run_experiment(cfg);
  const fs::path out(opt.out);
  export_result(r, out);
  SummaryRow row{cfg.sequence, to_string(cfg.mode), to_string(cfg.policy), variant_name(cfg),
                 1,            r.mean_mpjpe,        0.0};
  write_summary_csv({row}, out / "summary.csv");
  std::printf("mean mpjpe %.4f m (std over frames %.4f) in %.1f s\n", r.mean_mpjpe, r.std_mpjpe,
              r.seconds);
  return 0;
}

int cmd_sweep(const CommonOptions& opt, const std::string& policies,
              const std::string& sequences, const std::string& seeds) {
  const ExperimentConfig base = opt.resolve();
  std::vector<ExperimentConfig> configs;
  const std::vector<std::string> seqs =
      sequences.empty() ? std::vector<std::string>{base.sequence} : split_list(sequences);
  for (const std::string& seq : seqs) {
    for (const std::string& p : split_list(policies)) {
      ExperimentConfig c = base;
      c.sequence = seq;
      c.policy = parse_policy(p);
      c.validate();
      configs.push_back(c);
    }
  }
  const SweepOutput s = sweep(configs, parse_seeds(seeds));
  export_sweep(s, base, opt.out);
  print_summary(s.summary);
  return 0;
}

// Flight-model ablation: active flight with and without the learned model.
int cmd_ablate(const CommonOptions& opt, const std::string& sequences,
               const std::string& seeds) {
  ExperimentConfig base = opt.resolve();
  base.mode = Mode::kFlight;
  base.policy = Policy::kActive;
  std::vector<ExperimentConfig> configs;
  const std::vector<std::string> seqs =
      sequences.empty() ? std::vector<std::string>{base.sequence} : split_list(sequences);
  for (const std::string& seq : seqs) {
    for (bool uniform : {false, true}) {
      ExperimentConfig c = base;
      c.sequence = seq;
      c.no_flight_model = uniform;
      c.validate();
      configs.push_back(c);
    }
  }
  const SweepOutput s = sweep(configs, parse_seeds(seeds));
  export_sweep(s, base, opt.out);
  print_summary(s.summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active viewpoint selection for simulated motion capture"};
  app.require_subcommand(1);

  CommonOptions calibrate_opt, run_opt, sweep_opt, ablate_opt;
  auto* calibrate = app.add_subcommand("calibrate", "estimate bone lengths from a ring of views");
  calibrate_opt.attach(calibrate);
  auto* run = app.add_subcommand("run", "run one closed-loop experiment");
  run_opt.attach(run);

  std::string policies = "active,random,constant_rotation_cw,constant_rotation_ccw,"
                         "constant_angle,oracle";
  std::string sweep_sequences, sweep_seeds = "0,1,2,3,4";
  auto* sweep_cmd = app.add_subcommand("sweep", "run policies x sequences x seeds");
  sweep_opt.attach(sweep_cmd);
  sweep_cmd->add_option("--policies", policies, "comma-separated policies")
      ->capture_default_str();
  sweep_cmd->add_option("--sequences", sweep_sequences,
                        "comma-separated sequences (default: --sequence)");
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated seeds")->capture_default_str();

  std::string ablate_sequences = "walk,circle_run,twirl", ablate_seeds = "0,1,2";
  auto* ablate = app.add_subcommand("ablate", "flight model against uniform candidate sampling");
  ablate_opt.attach(ablate);
  ablate->add_option("--sequences", ablate_sequences, "comma-separated sequences")
      ->capture_default_str();
  ablate->add_option("--seeds", ablate_seeds, "comma-separated seeds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*calibrate) return cmd_calibrate(calibrate_opt);
    if (*run) return cmd_run(run_opt);
    if (*sweep_cmd) return cmd_sweep(sweep_opt, policies, sweep_sequences, sweep_seeds);
    if (*ablate) return cmd_ablate(ablate_opt, ablate_sequences, ablate_seeds);
  } catch (const Error& e) {
    std::fprintf(stderr, "activemocap: error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "activemocap: unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
