#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msqss/protocol.hpp"

namespace msqss {

// Results of the exact engine this close to zero are rounding residue of the
// complex arithmetic (order 1e-16); they are snapped to exactly 0.0 so that
// "never detected" statements hold as written. Genuine detection rates for
// any attack in scope are at least of order 1/d^2, far above the floor.
inline constexpr double kExactZeroFloor = 1e-13;

// Which eavesdropping check a probability refers to: the reflect comparison
// of Step 3 or the Z_MEASURE consistency check of Step 4.
enum class CheckStage { Reflect, ZMeasure };

const char* to_string(CheckStage stage);

// One cell of the detection case table: what Alice prepared, what the
// receiver did, and which check stage the probability is measured at.
struct Scenario {
  Basis prepared;
  ReceiverOp action;
  CheckStage stage;
};

// The three scenario cells the protocol actually checks. X-prepared MEASURE
// slots are ignored and can never raise an error.
std::vector<Scenario> checked_scenarios();

std::string to_string(const Scenario& scenario);

// Closed-form per-slot detection probability. Intercept-resend: Z_MEASURE
// slots detect at (d-1)/(2d) (the factor 1/2 is the checked fraction of
// Z_MEASURE slots), everything else 0. Measure-resend: X-prepared REFLECT
// slots detect at (d-1)/d, everything else 0. None: 0. Entangle-measure has
// no closed form; use exact_detection.
double analytic_detection(AttackKind kind, int d, const Scenario& scenario);

// Per-scenario detection probabilities from sampling-free propagation of
// outcome distributions, averaged over Alice's uniform preparation value.
// z_measure carries the same 1/2 checked-fraction convention as the closed
// forms. x_measure is fixed at 0: those slots are never examined.
struct DetectionProfile {
  double z_measure = 0.0;
  double z_reflect = 0.0;
  double x_reflect = 0.0;
  double x_measure = 0.0;

  double at(const Scenario& scenario) const;
};

DetectionProfile exact_detection(int d, const AttackModel& attack);

// Monte-Carlo tallies over a batch of sessions. Trial k draws its randomness
// from root.child(k), so every trial is reproducible in isolation and the
// merge is independent of how trials are spread over workers.
struct ScenarioTally {
  long long slots = 0;
  long long mismatches = 0;
};

struct BatchResult {
  int sessions = 0;
  int completed = 0;
  int aborts_reflect = 0;
  int aborts_zmeasure = 0;
  int aborts_insufficient = 0;
  ScenarioTally z_measure;   // all Z_MEASURE slots, three-way inconsistencies
  ScenarioTally z_reflect;   // Z-prepared REFLECTED slots, return mismatches
  ScenarioTally x_reflect;   // X-prepared REFLECTED slots, return mismatches
  long long measure_actions = 0;  // fresh particles produced by receivers
  // Combined key of the lowest-index completed trial, empty when none.
  std::vector<int> first_key;

  int aborted() const { return aborts_reflect + aborts_zmeasure + aborts_insufficient; }
  double abort_rate() const {
    return sessions == 0 ? 0.0 : static_cast<double>(aborted()) / sessions;
  }
  // Mean consumed qudits per session: Alice's 8nN plus actual fresh particles.
  double mean_lambda(const SessionConfig& config) const;
};

// Runs `sessions` trials of `config` (events suppressed), fanning out over
// `threads` workers. Per-trial streams come from SplitRng(config.seed).
BatchResult run_batch(const SessionConfig& config, int sessions, int threads = 1);

// Same, with the per-trial stream root supplied by the caller.
BatchResult run_batch_from(SplitRng root, const SessionConfig& config, int sessions,
                           int threads = 1);

struct DetectionEstimate {
  double estimate = 0.0;
  long long trials = 0;  // qualifying slots behind the estimate
  double standard_error = 0.0;
  std::optional<double> analytic_reference;
  int sessions = 0;
  double abort_rate = 0.0;
};

// Per-slot detection estimate for one scenario, counted over every
// qualifying slot of every session (checked or not; the Z_MEASURE estimate
// applies the 1/2 checked-fraction convention afterwards). SE is the
// binomial sqrt(p(1-p)/trials) on the reported estimate.
DetectionEstimate estimate_detection(const SessionConfig& config, const Scenario& scenario,
                                     int sessions, SplitRng& rng);

// Extracts one scenario's estimate from an existing batch.
DetectionEstimate estimate_from(const BatchResult& batch, const SessionConfig& config,
                                const Scenario& scenario);

// Exact fraction in lowest terms; denominator kept positive.
struct Rational {
  long long num = 0;
  long long den = 1;

  static Rational of(long long num, long long den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  bool operator==(const Rational& other) const { return num == other.num && den == other.den; }
};

// Qudit efficiency accounting: eta = gamma / (lambda + nu) with gamma the
// shared-key dits, lambda the consumed qudits and nu the classical dits spent
// on key material (zero by convention; check traffic is excluded).
// classical_messages counts the classical announcements for transparency and
// is not part of eta.
struct EfficiencyReport {
  long long gamma = 0;
  long long lambda = 0;
  long long nu = 0;
  Rational eta;
  long long classical_messages = 0;
};

// Expectation mode: gamma = n, lambda = 8nN + 4nN, eta = 1/(12N).
EfficiencyReport efficiency_expected(int receivers, int key_length);

// Accounting of one actual run: lambda counts Alice's 8nN plus each fresh
// particle a receiver really produced; gamma is n when the run completed,
// otherwise 0.
EfficiencyReport efficiency_measured(const SessionTranscript& transcript);

}  // namespace msqss
