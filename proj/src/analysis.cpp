#include "msqss/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

namespace msqss {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

double floor_zero(double x) { return x < kExactZeroFloor ? 0.0 : x; }

// One weighted pure-state branch of the channel mixture.
struct Branch {
  double weight;
  JointState state;
  int receiver_outcome;  // -1 until the receiver has measured
};

// Exact Z measurement of the particle subsystem across a mixture: each
// branch splits over its possible outcomes with Born weights. Zero-weight
// outcomes are dropped.
std::vector<Branch> measure_branches(const std::vector<Branch>& in) {
  std::vector<Branch> out;
  for (const Branch& b : in) {
    const int d = b.state.particle_dim();
    const int p = b.state.probe_dim();
    for (int g = 0; g < d; ++g) {
      std::vector<Complex> row = probe_component(b.state, g);
      double norm = vector_norm(row);
      double prob = norm * norm;
      if (prob <= 1e-15) continue;
      for (auto& a : row) a /= norm;
      std::vector<Complex> amps(static_cast<std::size_t>(d) * p, Complex(0.0, 0.0));
      for (int e = 0; e < p; ++e) amps[static_cast<std::size_t>(g) * p + e] = row[static_cast<std::size_t>(e)];
      out.push_back({b.weight * prob, JointState(std::move(amps), d, p), g});
    }
  }
  return out;
}

// Detection probability of one preparation under one receiver move,
// propagated exactly. MEASURE: probability that preparation, receiver
// outcome and Alice's Z outcome are not all equal (before the checked-half
// factor). REFLECT: probability Alice's measurement in the preparation basis
// misses the prepared value.
double propagate_detect(int d, const AttackModel& attack, Basis basis, int t, ReceiverOp op) {
  QuditState prepared = prepare(d, basis, t);
  std::vector<Branch> mix;
  switch (attack.kind) {
    case AttackKind::None:
      mix.push_back({1.0, JointState::from_particle(prepared), -1});
      break;
    case AttackKind::InterceptResend:
      // The receiver interacts with a uniformly random fake Z state; the
      // genuine particle sits in Eve's stash until the return leg.
      for (int v = 0; v < d; ++v) {
        mix.push_back({1.0 / d, JointState::from_particle(prepare(d, Basis::Z, v)), -1});
      }
      break;
    case AttackKind::MeasureResend: {
      mix.push_back({1.0, JointState::from_particle(prepared), -1});
      mix = measure_branches(mix);
      // Eve keeps her outcome to herself; it is not the receiver's.
      for (Branch& b : mix) b.receiver_outcome = -1;
      break;
    }
    case AttackKind::EntangleMeasure: {
      const EntangleMeasureAttack& em = *attack.em;
      const int p = em.probe_dim;
      std::vector<Complex> amps(static_cast<std::size_t>(d) * p);
      for (int k = 0; k < d; ++k) {
        for (int e = 0; e < p; ++e) {
          amps[static_cast<std::size_t>(k) * p + e] =
              prepared[k] * em.probe_init[static_cast<std::size_t>(e)];
        }
      }
      mix.push_back({1.0, apply_unitary(JointState(std::move(amps), d, p), em.u_forward), -1});
      break;
    }
  }

  if (op == ReceiverOp::Measure) mix = measure_branches(mix);

  switch (attack.kind) {
    case AttackKind::InterceptResend:
      // Eve swaps the genuine particle back in, whatever the receiver sent.
      for (Branch& b : mix) b.state = JointState::from_particle(prepared);
      break;
    case AttackKind::EntangleMeasure:
      for (Branch& b : mix) b.state = apply_unitary(b.state, attack.em->u_backward);
      break;
    default:
      break;
  }

  double detect = 0.0;
  if (op == ReceiverOp::Reflect) {
    for (const Branch& b : mix) {
      detect += b.weight *
                (1.0 - particle_marginal(b.state, basis)[static_cast<std::size_t>(t)]);
    }
  } else {
    for (const Branch& b : mix) {
      double consistent =
          b.receiver_outcome == t
              ? particle_marginal(b.state, Basis::Z)[static_cast<std::size_t>(t)]
              : 0.0;
      detect += b.weight * (1.0 - consistent);
    }
  }
  return detect;
}

void tally_session(const SessionTranscript& t, BatchResult& acc) {
  ++acc.sessions;
  if (t.aborted) {
    switch (t.abort_reason) {
      case AbortReason::ReflectCheck:
        ++acc.aborts_reflect;
        break;
      case AbortReason::ZMeasureCheck:
        ++acc.aborts_zmeasure;
        break;
      case AbortReason::InsufficientZMeasure:
        ++acc.aborts_insufficient;
        break;
      case AbortReason::None:
        break;
    }
  } else {
    ++acc.completed;
  }
  for (const ParticleRecord& rec : t.records) {
    if (rec.action.op == ReceiverOp::Measure) ++acc.measure_actions;
    switch (rec.case_label) {
      case CaseLabel::ZMeasure: {
        ++acc.z_measure.slots;
        bool consistent = rec.alice_return_value.has_value() &&
                          rec.prepared_value == *rec.action.measured_value &&
                          rec.prepared_value == *rec.alice_return_value;
        if (!consistent) ++acc.z_measure.mismatches;
        break;
      }
      case CaseLabel::Reflected: {
        ScenarioTally& tally =
            rec.prepared_basis == Basis::Z ? acc.z_reflect : acc.x_reflect;
        ++tally.slots;
        if (!rec.alice_return_value.has_value() ||
            *rec.alice_return_value != rec.prepared_value) {
          ++tally.mismatches;
        }
        break;
      }
      case CaseLabel::Ignored:
        break;
    }
  }
}

void merge(BatchResult& into, const BatchResult& part) {
  into.sessions += part.sessions;
  into.completed += part.completed;
  into.aborts_reflect += part.aborts_reflect;
  into.aborts_zmeasure += part.aborts_zmeasure;
  into.aborts_insufficient += part.aborts_insufficient;
  into.z_measure.slots += part.z_measure.slots;
  into.z_measure.mismatches += part.z_measure.mismatches;
  into.z_reflect.slots += part.z_reflect.slots;
  into.z_reflect.mismatches += part.z_reflect.mismatches;
  into.x_reflect.slots += part.x_reflect.slots;
  into.x_reflect.mismatches += part.x_reflect.mismatches;
  into.measure_actions += part.measure_actions;
}

}  // namespace

const char* to_string(CheckStage stage) {
  return stage == CheckStage::Reflect ? "reflect" : "zmeasure";
}

std::vector<Scenario> checked_scenarios() {
  return {{Basis::Z, ReceiverOp::Measure, CheckStage::ZMeasure},
          {Basis::Z, ReceiverOp::Reflect, CheckStage::Reflect},
          {Basis::X, ReceiverOp::Reflect, CheckStage::Reflect}};
}

std::string to_string(const Scenario& scenario) {
  return std::string(to_string(scenario.prepared)) + "+" + to_string(scenario.action) + ":" +
         to_string(scenario.stage);
}

double analytic_detection(AttackKind kind, int d, const Scenario& scenario) {
  require(d >= 2, "dimension must be at least 2");
  const bool stage_matches = (scenario.action == ReceiverOp::Reflect &&
                              scenario.stage == CheckStage::Reflect) ||
                             (scenario.action == ReceiverOp::Measure &&
                              scenario.stage == CheckStage::ZMeasure);
  require(stage_matches, "scenario " + to_string(scenario) + " is outside the case table");
  switch (kind) {
    case AttackKind::None:
      return 0.0;
    case AttackKind::InterceptResend:
      if (scenario.prepared == Basis::Z && scenario.action == ReceiverOp::Measure) {
        return static_cast<double>(d - 1) / (2.0 * d);
      }
      return 0.0;
    case AttackKind::MeasureResend:
      if (scenario.prepared == Basis::X && scenario.action == ReceiverOp::Reflect) {
        return static_cast<double>(d - 1) / static_cast<double>(d);
      }
      return 0.0;
    case AttackKind::EntangleMeasure:
      throw std::invalid_argument(
          "entangle-measure has no closed-form detection; use exact_detection");
  }
  throw std::logic_error("unhandled attack kind");
}

double DetectionProfile::at(const Scenario& scenario) const {
  if (scenario.action == ReceiverOp::Measure) {
    return scenario.prepared == Basis::Z ? z_measure : x_measure;
  }
  return scenario.prepared == Basis::Z ? z_reflect : x_reflect;
}

DetectionProfile exact_detection(int d, const AttackModel& attack) {
  require(d >= 2, "dimension must be at least 2");
  attack.validate(d);
  double zm = 0.0;
  double zr = 0.0;
  double xr = 0.0;
  for (int t = 0; t < d; ++t) {
    zm += propagate_detect(d, attack, Basis::Z, t, ReceiverOp::Measure);
    zr += propagate_detect(d, attack, Basis::Z, t, ReceiverOp::Reflect);
    xr += propagate_detect(d, attack, Basis::X, t, ReceiverOp::Reflect);
  }
  DetectionProfile profile;
  // Half of the Z_MEASURE slots are checked in Step 4.
  profile.z_measure = floor_zero(0.5 * zm / d);
  profile.z_reflect = floor_zero(zr / d);
  profile.x_reflect = floor_zero(xr / d);
  profile.x_measure = 0.0;
  return profile;
}

double BatchResult::mean_lambda(const SessionConfig& config) const {
  if (sessions == 0) return 0.0;
  const double prepared = 8.0 * config.key_length * config.receivers;
  return prepared + static_cast<double>(measure_actions) / sessions;
}

BatchResult run_batch_from(SplitRng root, const SessionConfig& config, int sessions,
                           int threads) {
  require(sessions >= 1, "at least one session required");
  config.validate();
  SessionConfig quiet = config;
  quiet.log_events = false;

  int workers = std::max(1, threads);
  workers = std::min(workers, sessions);

  std::vector<BatchResult> parts(static_cast<std::size_t>(workers));
  std::vector<int> first_completed(static_cast<std::size_t>(workers),
                                   std::numeric_limits<int>::max());
  std::vector<std::vector<int>> first_keys(static_cast<std::size_t>(workers));

  auto work = [&](int w, int begin, int end) {
    BatchResult& acc = parts[static_cast<std::size_t>(w)];
    for (int k = begin; k < end; ++k) {
      SplitRng trial = root.child(k);
      SessionTranscript t = run_session(quiet, trial);
      tally_session(t, acc);
      if (!t.aborted && k < first_completed[static_cast<std::size_t>(w)]) {
        first_completed[static_cast<std::size_t>(w)] = k;
        first_keys[static_cast<std::size_t>(w)] = t.combined_key;
      }
    }
  };

  if (workers == 1) {
    work(0, 0, sessions);
  } else {
    const int chunk = (sessions + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(sessions, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, w, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  BatchResult out;
  int best = std::numeric_limits<int>::max();
  for (int w = 0; w < workers; ++w) {
    merge(out, parts[static_cast<std::size_t>(w)]);
    if (first_completed[static_cast<std::size_t>(w)] < best) {
      best = first_completed[static_cast<std::size_t>(w)];
      out.first_key = first_keys[static_cast<std::size_t>(w)];
    }
  }
  return out;
}

BatchResult run_batch(const SessionConfig& config, int sessions, int threads) {
  return run_batch_from(SplitRng(config.seed), config, sessions, threads);
}

DetectionEstimate estimate_from(const BatchResult& batch, const SessionConfig& config,
                                const Scenario& scenario) {
  DetectionEstimate est;
  est.sessions = batch.sessions;
  est.abort_rate = batch.abort_rate();

  const ScenarioTally* tally = nullptr;
  double scale = 1.0;
  if (scenario.action == ReceiverOp::Measure && scenario.prepared == Basis::Z) {
    tally = &batch.z_measure;
    scale = 0.5;  // checked-fraction convention, matching the closed forms
  } else if (scenario.action == ReceiverOp::Reflect) {
    tally = scenario.prepared == Basis::Z ? &batch.z_reflect : &batch.x_reflect;
  }
  if (tally != nullptr && tally->slots > 0) {
    est.trials = tally->slots;
    est.estimate = scale * static_cast<double>(tally->mismatches) /
                   static_cast<double>(tally->slots);
    est.standard_error =
        std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(tally->slots));
  }
  if (config.attack.kind != AttackKind::EntangleMeasure) {
    est.analytic_reference = analytic_detection(config.attack.kind, config.d, scenario);
  }
  return est;
}

DetectionEstimate estimate_detection(const SessionConfig& config, const Scenario& scenario,
                                     int sessions, SplitRng& rng) {
  BatchResult batch = run_batch_from(rng, config, sessions, 1);
  return estimate_from(batch, config, scenario);
}

Rational Rational::of(long long num, long long den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (num == 0) return {0, 1};
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long long g = std::gcd(num < 0 ? -num : num, den);
  return {num / g, den / g};
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

EfficiencyReport efficiency_expected(int receivers, int key_length) {
  require(receivers >= 1, "at least one receiver required");
  require(key_length >= 1, "key length must be at least 1");
  EfficiencyReport report;
  const long long n = key_length;
  const long long N = receivers;
  report.gamma = n;
  // 8n prepared by Alice per receiver plus 4n expected fresh particles.
  report.lambda = 12 * n * N;
  report.nu = 0;
  report.eta = Rational::of(report.gamma, report.lambda + report.nu);
  // Announcement, check-position, outcome-publication and key-position
  // messages, one of each per receiver.
  report.classical_messages = 4 * N;
  return report;
}

EfficiencyReport efficiency_measured(const SessionTranscript& transcript) {
  const SessionConfig& config = transcript.config;
  EfficiencyReport report;
  long long fresh = 0;
  for (const ParticleRecord& rec : transcript.records) {
    if (rec.action.op == ReceiverOp::Measure) ++fresh;
  }
  report.lambda = 8LL * config.key_length * config.receivers + fresh;
  report.nu = 0;
  report.gamma = transcript.aborted ? 0 : config.key_length;
  report.eta = Rational::of(report.gamma, report.lambda + report.nu);
  const long long N = config.receivers;
  switch (transcript.abort_reason) {
    case AbortReason::None:
      report.classical_messages = 4 * N;
      break;
    case AbortReason::ZMeasureCheck:
      report.classical_messages = 3 * N;  // no key-position broadcast
      break;
    case AbortReason::ReflectCheck:
    case AbortReason::InsufficientZMeasure:
      report.classical_messages = N;  // only the MEASURE announcements
      break;
  }
  return report;
}

}  // namespace msqss
