#pragma once

#include <string>
#include <vector>

#include "msqss/analysis.hpp"
#include "msqss/protocol.hpp"

namespace msqss {

enum class ReportFormat { Table, Records };

const char* to_string(ReportFormat format);

// A batch experiment as described by a flat key=value config. `trials`
// sessions of `config` run with per-trial streams split from config.seed.
struct ExperimentSpec {
  SessionConfig config;
  std::string attack_file;  // echoed path; non-empty iff the attack came from a file
  int trials = 1;
  int threads = 1;
  ReportFormat format = ReportFormat::Table;

  void validate() const;
};

// Accepted keys, one `key=value` per line, `#` comments and blank lines
// ignored: d, receivers, key_length, seed, count_mode {stochastic,balanced},
// attack {none,intercept_resend,measure_resend,entangle_measure}, attack_file,
// attack_target, attacker_role {outside,participants}, tap_probability,
// error_threshold, trials, threads, format {table,records}. Unknown keys and
// malformed values raise std::invalid_argument; entangle_measure requires
// attack_file, which is loaded and validated immediately.
ExperimentSpec parse_experiment_text(const std::string& text);
ExperimentSpec parse_experiment_file(const std::string& path);

// Canonical key=value form of a spec; parses back to an equivalent spec.
std::string render_spec(const ExperimentSpec& spec);

struct ExperimentReport {
  ExperimentSpec spec;
  BatchResult batch;
  std::vector<DetectionEstimate> estimates;  // aligned with checked_scenarios()
  DetectionProfile exact;
  EfficiencyReport expected;
  double mean_lambda = 0.0;
  double wall_ms = 0.0;
};

ExperimentReport run_experiment(const ExperimentSpec& spec);

// Line-delimited JSON records: spec, summary, one detection line per checked
// scenario, efficiency, the first completed combined key on honest runs, and
// (optionally) the wall clock. Every numeric field is a deterministic
// function of (spec, seed); the wall line is the only nondeterministic one.
std::string render_records(const ExperimentReport& report, bool include_wall);

// Human-readable summary with the same content.
std::string render_table(const ExperimentReport& report, bool include_wall);

// One line per event: `seq actor kind receiver slot payload`.
std::string serialize_event_log(const SessionTranscript& transcript);

}  // namespace msqss
