#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "streampca/config.hpp"
#include "streampca/errors.hpp"
#include "streampca/harness.hpp"
#include "streampca/stream_io.hpp"
#include "streampca/stream_model.hpp"

namespace {

using namespace streampca;

void print_model_check(const ExperimentConfig& cfg) {
  SpikedModel probe(cfg.model_eigenvalues, Matrix::Identity(cfg.d, cfg.d),
                    cfg.model_kind);
  AdversarySpec probe_adv = cfg.adversary;
  if (probe_adv.kind == AdversaryKind::fixed_vector &&
      probe_adv.direction.size() == 0) {
    probe_adv.direction = Vector::Unit(cfg.d, 0);
  }
  ModelCheckReport check = validate_model(probe, probe_adv);
  std::printf("gap condition: %s (slack %.6g)\n",
              check.gap_condition_ok ? "ok" : "FAIL", check.slack);
  if (check.gap_condition_ok) {
    std::printf("epsilon available: %.6g\n", check.epsilon_available);
  }
  for (const std::string& m : check.messages) {
    std::printf("note: %s\n", m.c_str());
  }
}

int do_validate(const std::string& config_path) {
  ExperimentConfig cfg = load_config(config_path);
  validate_config(cfg);
  std::printf("config ok: d=%lld n=%lld warm=%lld replicates=%d learners=%zu\n",
              static_cast<long long>(cfg.d),
              static_cast<long long>(cfg.n_samples),
              static_cast<long long>(warm_sample_count(cfg)), cfg.replicates,
              cfg.learners.size());
  print_model_check(cfg);
  return 0;
}

int do_generate(const std::string& config_path, const std::string& out_path) {
  ExperimentConfig cfg = load_config(config_path);
  std::vector<StreamRecord> records = build_replicate_stream(cfg, 0);
  save_stream(out_path, records);
  std::printf("wrote %zu records (d=%lld) to %s\n", records.size(),
              static_cast<long long>(cfg.d), out_path.c_str());
  return 0;
}

int do_run(const std::string& config_path, const std::string& stream_path,
           const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  RunResult result;
  if (stream_path.empty()) {
    result = run_experiment(cfg);
  } else {
    result = run_experiment(cfg, load_stream(stream_path));
  }
  for (const std::string& w : result.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  for (const LearnerReport& lr : result.learners) {
    std::printf("%s: final avg regret %.6g +/- %.6g", lr.name.c_str(),
                lr.final_avg_regret, lr.final_stderr);
    if (lr.rank_one_error_rate) {
      std::printf(", certificate error rate %.4g", *lr.rank_one_error_rate);
    }
    std::printf(", %.4g blocks/s\n", lr.steps_per_sec);
  }
  ReportPaths paths = write_report(result, out_dir);
  std::printf("report: %s\n", paths.result_json.c_str());
  return 0;
}

int do_report(const std::string& in_dir, const std::string& out_csv) {
  RunResult result = read_result_json(in_dir + "/result.json");
  write_summary_csv(result, out_csv);
  std::printf("wrote %s\n", out_csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming PCA benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, stream_path, out_path, in_dir;
  CLI::App* validate =
      app.add_subcommand("validate", "parse a config and check the model");
  validate->add_option("--config", config_path, "config file")->required();

  CLI::App* generate =
      app.add_subcommand("generate", "sample replicate 0's stream to a file");
  generate->add_option("--config", config_path, "config file")->required();
  generate->add_option("--out", out_path, "stream file to write")->required();

  CLI::App* run =
      app.add_subcommand("run", "run the experiment and write a report");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--stream", stream_path, "replay records from this file");
  run->add_option("--out", out_path, "report directory")->required();

  CLI::App* report =
      app.add_subcommand("report", "rewrite summary.csv from a result.json");
  report->add_option("--in", in_dir, "directory holding result.json")->required();
  report->add_option("--out", out_path, "summary csv to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return do_validate(config_path);
    if (generate->parsed()) return do_generate(config_path, out_path);
    if (run->parsed()) return do_run(config_path, stream_path, out_path);
    if (report->parsed()) return do_report(in_dir, out_path);
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 3;
  }
}
