#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "msqss/analysis.hpp"
#include "msqss/attack_file.hpp"
#include "msqss/experiment.hpp"

namespace {

// Exit codes: 0 success, 1 configuration error, 2 attack-file validation
// failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAttackFile = 2;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument(path + ": cannot write");
  out << text;
  if (!out) throw std::invalid_argument(path + ": write failed");
}

int cmd_run(const std::string& config_path, const std::string& seed_text, int trials,
            int threads, const std::string& out_path, const std::string& format,
            const std::string& events_path) {
  msqss::ExperimentSpec spec = msqss::parse_experiment_file(config_path);
  if (!seed_text.empty()) {
    spec.config.seed = std::stoull(seed_text);
  }
  if (trials > 0) spec.trials = trials;
  if (threads > 0) spec.threads = threads;
  if (!format.empty()) {
    spec.format = format == "records" ? msqss::ReportFormat::Records
                                      : msqss::ReportFormat::Table;
  }
  spec.validate();

  msqss::ExperimentReport report = msqss::run_experiment(spec);
  std::string text = spec.format == msqss::ReportFormat::Records
                         ? msqss::render_records(report, true)
                         : msqss::render_table(report, true);
  std::cout << text;
  if (!out_path.empty()) write_file(out_path, text);

  if (!events_path.empty()) {
    // Replay trial 0 with event logging on; the stream split makes it
    // bit-identical to the batch's first trial.
    msqss::SessionConfig config = spec.config;
    config.log_events = true;
    msqss::SplitRng trial = msqss::SplitRng(config.seed).child(0);
    msqss::SessionTranscript transcript = msqss::run_session(config, trial);
    write_file(events_path, msqss::serialize_event_log(transcript));
  }
  return kExitOk;
}

int cmd_verify_attack(const std::string& path, double tol) {
  msqss::AttackModel model = msqss::load_attack_file(path);
  msqss::ConstraintReport report = msqss::check_constraints(model, tol);
  std::cout << "eq7_violation  " << report.eq7_violation << "\n";
  std::cout << "eq21_violation " << report.eq21_violation << "\n";
  std::cout << "tolerance      " << report.tolerance << "\n";
  std::cout << "undetectable   " << (report.undetectable ? "true" : "false") << "\n";
  return kExitOk;
}

int cmd_efficiency(int max_receivers) {
  std::cout << "N    gamma  lambda  nu  eta      eta_value\n";
  for (int receivers = 1; receivers <= max_receivers; ++receivers) {
    msqss::EfficiencyReport report = msqss::efficiency_expected(receivers, 1);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-4d %-6lld %-7lld %-3lld %-8s %.9f", receivers,
                  report.gamma, report.lambda, report.nu, report.eta.str().c_str(),
                  report.eta.value());
    std::cout << buf << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and analysis toolkit for a d-dimensional multiparty semiquantum "
               "secret-sharing protocol"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_text;
  int trials = 0;
  int threads = 0;
  std::string out_path;
  std::string format;
  std::string events_path;
  CLI::App* run = app.add_subcommand("run", "Run a batch experiment from a config file");
  run->add_option("--config", config_path, "key=value experiment config")->required();
  run->add_option("--seed", seed_text, "override the master seed");
  run->add_option("--trials", trials, "override the session count");
  run->add_option("--threads", threads, "worker threads for the batch");
  run->add_option("--out", out_path, "also write the report here");
  run->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"table", "records"}));
  run->add_option("--events", events_path, "write trial 0's event log here");

  std::string attack_path;
  double tol = 1e-10;
  CLI::App* verify = app.add_subcommand("verify-attack",
                                        "Check an entangle-measure attack file against the "
                                        "undetectability constraints");
  verify->add_option("file", attack_path, "attack matrix file")->required();
  verify->add_option("--tol", tol, "residual tolerance");

  int max_receivers = 8;
  CLI::App* efficiency = app.add_subcommand("efficiency",
                                            "Print the expected qudit-efficiency table");
  efficiency->add_option("--max-receivers", max_receivers, "largest receiver count listed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return cmd_run(config_path, seed_text, trials, threads, out_path, format, events_path);
    }
    if (verify->parsed()) {
      return cmd_verify_attack(attack_path, tol);
    }
    if (efficiency->parsed()) {
      return cmd_efficiency(max_receivers);
    }
  } catch (const msqss::AttackFileError& e) {
    std::cerr << "attack file error: " << e.what() << "\n";
    return kExitAttackFile;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
