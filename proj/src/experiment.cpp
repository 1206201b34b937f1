#include "msqss/experiment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "msqss/attack_file.hpp"

namespace msqss {

namespace {

using Json = nlohmann::ordered_json;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long out;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected an integer, got \"" + value + "\"");
  }
  require(used == value.size(), key + ": trailing characters in \"" + value + "\"");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long out;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected an unsigned integer, got \"" + value + "\"");
  }
  require(used == value.size(), key + ": trailing characters in \"" + value + "\"");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected a number, got \"" + value + "\"");
  }
  require(used == value.size(), key + ": trailing characters in \"" + value + "\"");
  return out;
}

AttackKind parse_attack_kind(const std::string& value) {
  if (value == "none") return AttackKind::None;
  if (value == "intercept_resend") return AttackKind::InterceptResend;
  if (value == "measure_resend") return AttackKind::MeasureResend;
  if (value == "entangle_measure") return AttackKind::EntangleMeasure;
  throw std::invalid_argument("attack: unknown kind \"" + value + "\"");
}

}  // namespace

const char* to_string(ReportFormat format) {
  return format == ReportFormat::Table ? "table" : "records";
}

void ExperimentSpec::validate() const {
  config.validate();
  require(trials >= 1, "trials must be at least 1");
  require(threads >= 1, "threads must be at least 1");
  if (config.attack.kind == AttackKind::EntangleMeasure) {
    require(!attack_file.empty(), "an entangle-measure experiment needs attack_file");
  }
}

ExperimentSpec parse_experiment_text(const std::string& text) {
  ExperimentSpec spec;
  AttackKind kind = AttackKind::None;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    require(eq != std::string::npos,
            "line " + std::to_string(number) + ": expected key=value, got \"" + line + "\"");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty() && !value.empty(),
            "line " + std::to_string(number) + ": empty key or value");

    if (key == "d") {
      spec.config.d = static_cast<int>(parse_int(key, value));
    } else if (key == "receivers") {
      spec.config.receivers = static_cast<int>(parse_int(key, value));
    } else if (key == "key_length") {
      spec.config.key_length = static_cast<int>(parse_int(key, value));
    } else if (key == "seed") {
      spec.config.seed = parse_u64(key, value);
    } else if (key == "count_mode") {
      if (value == "stochastic") {
        spec.config.count_mode = CountMode::Stochastic;
      } else if (value == "balanced") {
        spec.config.count_mode = CountMode::Balanced;
      } else {
        throw std::invalid_argument("count_mode: unknown mode \"" + value + "\"");
      }
    } else if (key == "attack") {
      kind = parse_attack_kind(value);
    } else if (key == "attack_file") {
      spec.attack_file = value;
    } else if (key == "attack_target") {
      spec.config.attack_target = static_cast<int>(parse_int(key, value));
    } else if (key == "attacker_role") {
      if (value == "outside") {
        spec.config.attacker_role = AttackerRole::OutsideEve;
      } else if (value == "participants") {
        spec.config.attacker_role = AttackerRole::DishonestReceivers;
      } else {
        throw std::invalid_argument("attacker_role: unknown role \"" + value + "\"");
      }
    } else if (key == "tap_probability") {
      spec.config.tap_probability = parse_double(key, value);
    } else if (key == "error_threshold") {
      spec.config.error_threshold = parse_double(key, value);
    } else if (key == "trials") {
      spec.trials = static_cast<int>(parse_int(key, value));
    } else if (key == "threads") {
      spec.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "format") {
      if (value == "table") {
        spec.format = ReportFormat::Table;
      } else if (value == "records") {
        spec.format = ReportFormat::Records;
      } else {
        throw std::invalid_argument("format: unknown format \"" + value + "\"");
      }
    } else {
      throw std::invalid_argument("line " + std::to_string(number) + ": unknown key \"" + key +
                                  "\"");
    }
  }

  switch (kind) {
    case AttackKind::None:
      spec.config.attack = AttackModel::none();
      break;
    case AttackKind::InterceptResend:
      spec.config.attack = AttackModel::intercept_resend();
      break;
    case AttackKind::MeasureResend:
      spec.config.attack = AttackModel::measure_resend();
      break;
    case AttackKind::EntangleMeasure:
      require(!spec.attack_file.empty(), "attack=entangle_measure needs attack_file=PATH");
      spec.config.attack = load_attack_file(spec.attack_file);
      break;
  }
  if (kind != AttackKind::EntangleMeasure) {
    require(spec.attack_file.empty(), "attack_file is only meaningful with entangle_measure");
  }
  spec.validate();
  return spec;
}

ExperimentSpec parse_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_text(buffer.str());
}

std::string render_spec(const ExperimentSpec& spec) {
  std::ostringstream out;
  out << "d=" << spec.config.d << "\n";
  out << "receivers=" << spec.config.receivers << "\n";
  out << "key_length=" << spec.config.key_length << "\n";
  out << "seed=" << spec.config.seed << "\n";
  out << "count_mode=" << to_string(spec.config.count_mode) << "\n";
  out << "attack=" << to_string(spec.config.attack.kind) << "\n";
  if (!spec.attack_file.empty()) out << "attack_file=" << spec.attack_file << "\n";
  if (spec.config.attack_target.has_value()) {
    out << "attack_target=" << *spec.config.attack_target << "\n";
  }
  out << "attacker_role=" << to_string(spec.config.attacker_role) << "\n";
  out << "tap_probability=" << spec.config.tap_probability << "\n";
  out << "error_threshold=" << spec.config.error_threshold << "\n";
  out << "trials=" << spec.trials << "\n";
  out << "threads=" << spec.threads << "\n";
  out << "format=" << to_string(spec.format) << "\n";
  return out.str();
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentReport report;
  report.spec = spec;
  auto begin = std::chrono::steady_clock::now();
  report.batch = run_batch(spec.config, spec.trials, spec.threads);
  for (const Scenario& scenario : checked_scenarios()) {
    report.estimates.push_back(estimate_from(report.batch, spec.config, scenario));
  }
  report.exact = exact_detection(spec.config.d, spec.config.attack);
  report.expected = efficiency_expected(spec.config.receivers, spec.config.key_length);
  report.mean_lambda = report.batch.mean_lambda(spec.config);
  auto end = std::chrono::steady_clock::now();
  report.wall_ms = std::chrono::duration<double, std::milli>(end - begin).count();
  return report;
}

std::string render_records(const ExperimentReport& report, bool include_wall) {
  std::ostringstream out;
  const ExperimentSpec& spec = report.spec;

  Json spec_line;
  spec_line["record"] = "spec";
  spec_line["d"] = spec.config.d;
  spec_line["receivers"] = spec.config.receivers;
  spec_line["key_length"] = spec.config.key_length;
  spec_line["seed"] = spec.config.seed;
  spec_line["count_mode"] = to_string(spec.config.count_mode);
  spec_line["attack"] = to_string(spec.config.attack.kind);
  spec_line["attack_file"] = spec.attack_file;
  if (spec.config.attack_target.has_value()) {
    spec_line["attack_target"] = *spec.config.attack_target;
  } else {
    spec_line["attack_target"] = nullptr;
  }
  spec_line["attacker_role"] = to_string(spec.config.attacker_role);
  spec_line["tap_probability"] = spec.config.tap_probability;
  spec_line["error_threshold"] = spec.config.error_threshold;
  spec_line["trials"] = spec.trials;
  out << spec_line.dump() << "\n";

  Json summary;
  summary["record"] = "summary";
  summary["sessions"] = report.batch.sessions;
  summary["completed"] = report.batch.completed;
  summary["aborts_reflect"] = report.batch.aborts_reflect;
  summary["aborts_zmeasure"] = report.batch.aborts_zmeasure;
  summary["aborts_insufficient"] = report.batch.aborts_insufficient;
  summary["abort_rate"] = report.batch.abort_rate();
  summary["measure_actions"] = report.batch.measure_actions;
  summary["mean_lambda"] = report.mean_lambda;
  out << summary.dump() << "\n";

  const auto scenarios = checked_scenarios();
  for (std::size_t idx = 0; idx < scenarios.size(); ++idx) {
    const DetectionEstimate& est = report.estimates[idx];
    Json line;
    line["record"] = "detection";
    line["scenario"] = to_string(scenarios[idx]);
    line["slots"] = est.trials;
    line["estimate"] = est.estimate;
    line["se"] = est.standard_error;
    if (est.analytic_reference.has_value()) {
      line["analytic"] = *est.analytic_reference;
    } else {
      line["analytic"] = nullptr;
    }
    line["exact"] = report.exact.at(scenarios[idx]);
    out << line.dump() << "\n";
  }

  Json eff;
  eff["record"] = "efficiency";
  eff["gamma"] = report.expected.gamma;
  eff["lambda"] = report.expected.lambda;
  eff["nu"] = report.expected.nu;
  eff["eta"] = report.expected.eta.str();
  eff["eta_value"] = report.expected.eta.value();
  eff["classical_messages"] = report.expected.classical_messages;
  out << eff.dump() << "\n";

  if (spec.config.attack.kind == AttackKind::None && !report.batch.first_key.empty()) {
    Json key;
    key["record"] = "key";
    key["dits"] = report.batch.first_key;
    out << key.dump() << "\n";
  }

  if (include_wall) {
    Json wall;
    wall["record"] = "wall";
    wall["ms"] = report.wall_ms;
    out << wall.dump() << "\n";
  }
  return out.str();
}

std::string render_table(const ExperimentReport& report, bool include_wall) {
  std::ostringstream out;
  const ExperimentSpec& spec = report.spec;
  out << "experiment: d=" << spec.config.d << " receivers=" << spec.config.receivers
      << " key_length=" << spec.config.key_length << " seed=" << spec.config.seed
      << " count_mode=" << to_string(spec.config.count_mode)
      << " attack=" << to_string(spec.config.attack.kind) << " trials=" << spec.trials << "\n";
  out << "sessions: " << report.batch.sessions << "  completed: " << report.batch.completed
      << "  aborts: reflect=" << report.batch.aborts_reflect
      << " zmeasure=" << report.batch.aborts_zmeasure
      << " insufficient=" << report.batch.aborts_insufficient << "\n";
  out << "scenario             slots      estimate      se            analytic      exact\n";
  const auto scenarios = checked_scenarios();
  for (std::size_t idx = 0; idx < scenarios.size(); ++idx) {
    const DetectionEstimate& est = report.estimates[idx];
    char buf[160];
    std::string analytic = est.analytic_reference.has_value()
                               ? std::to_string(*est.analytic_reference)
                               : std::string("-");
    std::snprintf(buf, sizeof(buf), "%-20s %-10lld %-13.9f %-13.9f %-13s %-13.9f",
                  to_string(scenarios[idx]).c_str(), est.trials, est.estimate,
                  est.standard_error, analytic.c_str(), report.exact.at(scenarios[idx]));
    out << buf << "\n";
  }
  out << "efficiency: gamma=" << report.expected.gamma << " lambda=" << report.expected.lambda
      << " nu=" << report.expected.nu << " eta=" << report.expected.eta.str()
      << " classical_messages=" << report.expected.classical_messages << "\n";
  out << "measured mean lambda: " << report.mean_lambda << "\n";
  if (spec.config.attack.kind == AttackKind::None && !report.batch.first_key.empty()) {
    out << "combined key (first completed trial):";
    for (int dit : report.batch.first_key) out << " " << dit;
    out << "\n";
  }
  if (include_wall) out << "wall_ms: " << report.wall_ms << "\n";
  return out.str();
}

std::string serialize_event_log(const SessionTranscript& transcript) {
  std::ostringstream out;
  for (const Event& ev : transcript.events) {
    out << ev.seq << " " << ev.actor << " " << ev.kind << " " << ev.receiver << " " << ev.slot;
    if (!ev.payload.empty()) out << " " << ev.payload;
    out << "\n";
  }
  return out.str();
}

}  // namespace msqss
