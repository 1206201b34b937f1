// Acceptance gate: seven end-to-end criteria over the full toolkit, one
// verdict line each. Exit code is the number of failed criteria, so a zero
// exit is the green light. Every experiment below is seeded; reruns are
// byte-for-byte repeats.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "msqss/analysis.hpp"
#include "msqss/attack_file.hpp"
#include "msqss/experiment.hpp"
#include "msqss/protocol.hpp"

using msqss::AbortReason;
using msqss::AttackKind;
using msqss::AttackModel;
using msqss::Basis;
using msqss::BatchResult;
using msqss::CheckStage;
using msqss::ConstraintReport;
using msqss::CountMode;
using msqss::DetectionEstimate;
using msqss::DetectionProfile;
using msqss::ExperimentReport;
using msqss::ExperimentSpec;
using msqss::Rational;
using msqss::ReceiverOp;
using msqss::Scenario;
using msqss::SessionConfig;
using msqss::SessionTranscript;
using msqss::SplitRng;

namespace {

using Problems = std::vector<std::string>;

const Scenario kZMeasure{Basis::Z, ReceiverOp::Measure, CheckStage::ZMeasure};
const Scenario kZReflect{Basis::Z, ReceiverOp::Reflect, CheckStage::Reflect};
const Scenario kXReflect{Basis::X, ReceiverOp::Reflect, CheckStage::Reflect};

std::string tag(int d, int receivers, int n, int seed) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "d=%d N=%d n=%d seed=%d", d, receivers, n, seed);
  return buf;
}

// Criterion 1: honest balanced sessions never abort at a check, report error
// rates that are exactly zero, and combine shares into K = sum K_i mod d.
void criterion_honest_soundness(Problems& bad) {
  for (int d : {2, 3, 5, 7}) {
    for (int receivers = 1; receivers <= 4; ++receivers) {
      for (int n : {2, 8}) {
        SessionConfig config;
        config.d = d;
        config.receivers = receivers;
        config.key_length = n;
        config.count_mode = CountMode::Balanced;
        config.log_events = false;
        int completed = 0;
        for (int seed = 0; seed < 200; ++seed) {
          config.seed = static_cast<std::uint64_t>(seed);
          SessionTranscript t = msqss::run_session(config);
          if (t.abort_reason == AbortReason::ReflectCheck ||
              t.abort_reason == AbortReason::ZMeasureCheck) {
            bad.push_back(tag(d, receivers, n, seed) + ": check abort in an honest run");
            continue;
          }
          for (int i = 0; i < receivers; ++i) {
            if (t.reflect_error_rate[static_cast<std::size_t>(i)] != 0.0 ||
                t.zmeasure_error_rate[static_cast<std::size_t>(i)] != 0.0) {
              bad.push_back(tag(d, receivers, n, seed) + ": nonzero honest error rate");
            }
          }
          if (t.aborted) continue;
          ++completed;
          if (static_cast<int>(t.key_shares.size()) != receivers) {
            bad.push_back(tag(d, receivers, n, seed) + ": wrong share count");
            continue;
          }
          std::vector<int> expected(static_cast<std::size_t>(n), 0);
          bool shares_ok = true;
          for (const msqss::KeyShare& share : t.key_shares) {
            if (static_cast<int>(share.dits.size()) != n) {
              bad.push_back(tag(d, receivers, n, seed) + ": share length != n");
              shares_ok = false;
              break;
            }
            for (int j = 0; j < n; ++j) {
              int dit = share.dits[static_cast<std::size_t>(j)];
              if (dit < 0 || dit >= d) {
                bad.push_back(tag(d, receivers, n, seed) + ": share dit out of range");
                shares_ok = false;
              }
              expected[static_cast<std::size_t>(j)] =
                  (expected[static_cast<std::size_t>(j)] + dit) % d;
            }
          }
          if (shares_ok && t.combined_key != expected) {
            bad.push_back(tag(d, receivers, n, seed) + ": combined key != sum of shares mod d");
          }
        }
        if (completed == 0) {
          bad.push_back(tag(d, receivers, n, -1) + ": no completed session in 200 seeds");
        }
      }
    }
  }
}

// Criterion 2: intercept-resend is caught on Z_MEASURE slots at (d-1)/(2d),
// exactly by the propagation engine and within 3 standard errors by
// Monte-Carlo over at least 10^4 qualifying slots; reflected slots never
// raise an error.
void criterion_intercept_resend(Problems& bad) {
  for (int d : {2, 3, 5}) {
    double expected = static_cast<double>(d - 1) / (2.0 * d);
    DetectionProfile profile = msqss::exact_detection(d, AttackModel::intercept_resend());
    if (std::abs(profile.z_measure - expected) > 1e-12) {
      bad.push_back("d=" + std::to_string(d) + ": exact Z_MEASURE rate " +
                    std::to_string(profile.z_measure) + " != (d-1)/2d");
    }
    if (profile.z_reflect != 0.0 || profile.x_reflect != 0.0) {
      bad.push_back("d=" + std::to_string(d) + ": exact reflected rate not exactly 0");
    }

    SessionConfig config;
    config.d = d;
    config.key_length = 8;
    config.count_mode = CountMode::Balanced;
    config.attack = AttackModel::intercept_resend();
    config.seed = 9000u + static_cast<std::uint64_t>(d);
    config.log_events = false;
    BatchResult batch = msqss::run_batch(config, 800, 4);
    DetectionEstimate est = msqss::estimate_from(batch, config, kZMeasure);
    if (est.trials < 10000) {
      bad.push_back("d=" + std::to_string(d) + ": only " + std::to_string(est.trials) +
                    " Z_MEASURE slots sampled");
    }
    if (std::abs(est.estimate - expected) > 3.0 * est.standard_error) {
      bad.push_back("d=" + std::to_string(d) + ": Monte-Carlo " + std::to_string(est.estimate) +
                    " outside 3 SE of " + std::to_string(expected));
    }
    if (msqss::estimate_from(batch, config, kZReflect).estimate != 0.0 ||
        msqss::estimate_from(batch, config, kXReflect).estimate != 0.0) {
      bad.push_back("d=" + std::to_string(d) + ": reflected slots produced errors");
    }
  }
}

// Criterion 3: measure-resend never trips MEASURE slots or Z+REFLECT slots,
// is caught on X+REFLECT slots at (d-1)/d, and for d=2, n=8 aborts almost
// every session, beating the bound derived from the exact engine's own
// per-slot rate.
void criterion_measure_resend(Problems& bad) {
  for (int d : {2, 3, 5}) {
    double expected = static_cast<double>(d - 1) / d;
    DetectionProfile profile = msqss::exact_detection(d, AttackModel::measure_resend());
    if (profile.z_measure != 0.0 || profile.z_reflect != 0.0 || profile.x_measure != 0.0) {
      bad.push_back("d=" + std::to_string(d) + ": exact rate not exactly 0 off X+REFLECT");
    }
    if (std::abs(profile.x_reflect - expected) > 1e-12) {
      bad.push_back("d=" + std::to_string(d) + ": exact X+REFLECT rate " +
                    std::to_string(profile.x_reflect) + " != (d-1)/d");
    }

    SessionConfig config;
    config.d = d;
    config.key_length = 8;
    config.count_mode = CountMode::Balanced;
    config.attack = AttackModel::measure_resend();
    config.seed = 9100u + static_cast<std::uint64_t>(d);
    config.log_events = false;
    BatchResult batch = msqss::run_batch(config, 800, 4);
    DetectionEstimate est = msqss::estimate_from(batch, config, kXReflect);
    if (std::abs(est.estimate - expected) > 3.0 * est.standard_error) {
      bad.push_back("d=" + std::to_string(d) + ": Monte-Carlo " + std::to_string(est.estimate) +
                    " outside 3 SE of " + std::to_string(expected));
    }
    if (msqss::estimate_from(batch, config, kZMeasure).estimate != 0.0 ||
        msqss::estimate_from(batch, config, kZReflect).estimate != 0.0) {
      bad.push_back("d=" + std::to_string(d) + ": Z slots produced errors");
    }
  }

  // Session-level abort probability, d=2 n=8. A stochastic slot is X-prepared
  // and reflected with probability 1/4, so 2n * 1/4 = 4 expected X+REFLECT
  // slots bound the miss chance by (1 - rate)^4.
  SessionConfig config;
  config.d = 2;
  config.key_length = 8;
  config.count_mode = CountMode::Stochastic;
  config.attack = AttackModel::measure_resend();
  config.seed = 9200;
  config.log_events = false;
  double slot_rate = msqss::exact_detection(2, AttackModel::measure_resend()).x_reflect;
  double bound = 1.0 - std::pow(1.0 - slot_rate, 2.0 * config.key_length * 0.25);
  BatchResult batch = msqss::run_batch(config, 1000, 4);
  double abort_rate = batch.abort_rate();
  if (abort_rate < 0.95 || abort_rate <= bound) {
    bad.push_back("abort rate " + std::to_string(abort_rate) + " below max(0.95, bound " +
                  std::to_string(bound) + ")");
  }
}

// Criterion 4: every member of the undetectable family passes the constraint
// check, shows zero detection in every scenario and leaves one common probe
// state; breaking the return-leg correction is always detectable.
void criterion_undetectable_family(Problems& bad) {
  const int dims[] = {2, 3, 5};
  SplitRng rng(20260818);

  for (int i = 0; i < 50; ++i) {
    int d = dims[i % 3];
    SplitRng attack_rng = rng.child(static_cast<std::uint64_t>(i));
    AttackModel model = msqss::build_undetectable_attack(d, d, attack_rng);
    std::string label = "undetectable #" + std::to_string(i) + " d=" + std::to_string(d);

    ConstraintReport report = msqss::check_constraints(model);
    if (!report.undetectable) {
      bad.push_back(label + ": constraint check failed, eq21 " +
                    std::to_string(report.eq21_violation));
      continue;
    }
    DetectionProfile profile = msqss::exact_detection(d, model);
    for (double rate : {profile.z_measure, profile.z_reflect, profile.x_reflect}) {
      if (rate >= 1e-10) {
        bad.push_back(label + ": detection " + std::to_string(rate) + " >= 1e-10");
      }
    }
    std::vector<msqss::ProbeScenario> branches = msqss::final_probe_states(model);
    for (std::size_t a = 0; a < branches.size(); ++a) {
      for (std::size_t b = a + 1; b < branches.size(); ++b) {
        double f = msqss::fidelity(branches[a].probe, branches[b].probe);
        if (std::abs(f - 1.0) > 1e-10) {
          bad.push_back(label + ": probe fidelity " + std::to_string(f) + " != 1");
        }
      }
    }
  }

  for (int i = 0; i < 100; ++i) {
    int d = dims[i % 3];
    SplitRng attack_rng = rng.child(1000u + static_cast<std::uint64_t>(i));
    AttackModel model = msqss::build_undetectable_attack(d, d, attack_rng);
    // Replace the return-leg unitary until the common-probe constraint is
    // violated by a clear margin.
    double violation = 0.0;
    int resamples = 0;
    do {
      model.em->u_backward = msqss::random_unitary(d * d, attack_rng);
      violation = msqss::check_constraints(model).eq21_violation;
    } while (violation <= 0.1 && ++resamples < 64);
    std::string label = "perturbed #" + std::to_string(i) + " d=" + std::to_string(d);
    if (violation <= 0.1) {
      bad.push_back(label + ": could not reach eq21 violation > 0.1");
      continue;
    }
    DetectionProfile profile = msqss::exact_detection(d, model);
    double worst = std::max({profile.z_measure, profile.z_reflect, profile.x_reflect});
    if (!(worst > 0.0)) {
      bad.push_back(label + ": eq21 violation " + std::to_string(violation) +
                    " but zero detection in every scenario");
    }
  }
}

// Criterion 5: expected qudit efficiency is the exact rational 1/(12N), and
// the measured mean qudit consumption for n=100, N=3 sits within 3 sigma of
// its 3600 expectation.
void criterion_efficiency(Problems& bad) {
  for (int receivers = 1; receivers <= 8; ++receivers) {
    msqss::EfficiencyReport report = msqss::efficiency_expected(receivers, 100);
    if (!(report.eta == Rational::of(1, 12ll * receivers))) {
      bad.push_back("N=" + std::to_string(receivers) + ": eta " + report.eta.str() +
                    " != 1/" + std::to_string(12 * receivers));
    }
  }

  SessionConfig config;
  config.d = 2;
  config.receivers = 3;
  config.key_length = 100;
  config.count_mode = CountMode::Stochastic;
  config.seed = 424242;
  config.log_events = false;
  BatchResult batch = msqss::run_batch(config, 100, 4);
  double mean = batch.mean_lambda(config);
  // Fresh particles per session are Binomial(2400, 1/2): variance 600, so
  // the mean of 100 sessions has sigma sqrt(6).
  double sigma = std::sqrt(6.0);
  if (std::abs(mean - 3600.0) > 3.0 * sigma) {
    bad.push_back("mean lambda " + std::to_string(mean) + " outside 3600 +- " +
                  std::to_string(3.0 * sigma));
  }
}

// Criterion 6: Fourier unitarity, the inverse identity and mutual
// unbiasedness hold for every dimension 2..16.
void criterion_basis_math(Problems& bad) {
  for (int d = 2; d <= 16; ++d) {
    msqss::UnitaryMatrix fourier = msqss::fourier_matrix(d);
    double defect = msqss::UnitaryMatrix::gram_defect(d, fourier.entries());
    if (defect > 1e-12) {
      bad.push_back("d=" + std::to_string(d) + ": Fourier Gram defect " +
                    std::to_string(defect));
    }
    for (int v = 0; v < d; ++v) {
      // Rotating an X state back with the adjoint must land on e_v.
      msqss::QuditState x_state = msqss::prepare(d, Basis::X, v);
      for (int row = 0; row < d; ++row) {
        msqss::Complex amp = 0.0;
        for (int col = 0; col < d; ++col) {
          amp += std::conj(fourier.at(col, row)) * x_state[col];
        }
        double target = row == v ? 1.0 : 0.0;
        if (std::abs(std::abs(amp) - target) > 1e-10) {
          bad.push_back("d=" + std::to_string(d) + " v=" + std::to_string(v) +
                        ": inverse identity residue at row " + std::to_string(row));
        }
      }
      // Each basis is uniform in the other.
      for (Basis from : {Basis::Z, Basis::X}) {
        Basis to = from == Basis::Z ? Basis::X : Basis::Z;
        std::vector<double> dist =
            msqss::outcome_distribution(msqss::prepare(d, from, v), to);
        for (double p : dist) {
          if (std::abs(p - 1.0 / d) > 1e-10) {
            bad.push_back("d=" + std::to_string(d) + " v=" + std::to_string(v) +
                          ": unbiasedness off by " + std::to_string(p - 1.0 / d));
          }
        }
      }
    }
  }
}

// Criterion 7: equal seeds give byte-identical record output, for every
// attack kind and independent of the worker count.
void criterion_determinism(Problems& bad) {
  namespace fs = std::filesystem;
  SplitRng rng(31337);
  AttackModel em = msqss::build_undetectable_attack(3, 3, rng);
  fs::path attack_path =
      fs::temp_directory_path() / ("msqss_acceptance_" + std::to_string(::getpid()) + ".attack");
  msqss::save_attack_file(attack_path.string(), em);

  std::vector<std::pair<std::string, std::string>> experiments = {
      {"honest", "d=3\nreceivers=2\nkey_length=2\nseed=5150\ncount_mode=balanced\ntrials=40\n"},
      {"intercept_resend",
       "d=2\nkey_length=4\nseed=5151\ncount_mode=balanced\nattack=intercept_resend\ntrials=40\n"},
      {"measure_resend",
       "d=3\nkey_length=4\nseed=5152\ncount_mode=balanced\nattack=measure_resend\ntrials=40\n"},
      {"entangle_measure", "d=3\nkey_length=2\nseed=5153\nattack=entangle_measure\nattack_file=" +
                               attack_path.string() + "\ntrials=20\n"},
  };
  for (const auto& [name, text] : experiments) {
    ExperimentSpec spec = msqss::parse_experiment_text(text);
    std::string first = msqss::render_records(msqss::run_experiment(spec), false);
    std::string second = msqss::render_records(msqss::run_experiment(spec), false);
    if (first != second) {
      bad.push_back(name + ": two runs with equal seeds differ");
    }
    ExperimentSpec threaded = spec;
    threaded.threads = 4;
    std::string fanned = msqss::render_records(msqss::run_experiment(threaded), false);
    if (first != fanned) {
      bad.push_back(name + ": report depends on the worker count");
    }
  }
  fs::remove(attack_path);
}

struct Criterion {
  const char* name;
  std::function<void(Problems&)> body;
  double time_limit_s;  // 0 means no stated target
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"honest-run soundness", criterion_honest_soundness, 30.0},
      {"intercept-resend detection rate", criterion_intercept_resend, 0.0},
      {"measure-resend detection profile", criterion_measure_resend, 0.0},
      {"undetectable-family property suite", criterion_undetectable_family, 60.0},
      {"qudit efficiency", criterion_efficiency, 0.0},
      {"basis-math invariants", criterion_basis_math, 0.0},
      {"determinism", criterion_determinism, 0.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Problems problems;
    auto begin = std::chrono::steady_clock::now();
    try {
      criteria[i].body(problems);
    } catch (const std::exception& e) {
      problems.push_back(std::string("exception: ") + e.what());
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    if (criteria[i].time_limit_s > 0.0 && seconds > criteria[i].time_limit_s) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "runtime %.1f s exceeds the %.0f s target", seconds,
                    criteria[i].time_limit_s);
      problems.push_back(buf);
    }

    const std::size_t kShown = 6;
    for (std::size_t k = 0; k < problems.size() && k < kShown; ++k) {
      std::printf("    - %s\n", problems[k].c_str());
    }
    if (problems.size() > kShown) {
      std::printf("    - (+%zu more)\n", problems.size() - kShown);
    }
    char label[96];
    std::snprintf(label, sizeof(label), "criterion %zu: %s", i + 1, criteria[i].name);
    std::printf("%-52s %s  %6.2f s\n", label, problems.empty() ? "PASS" : "FAIL", seconds);
    std::fflush(stdout);
    if (!problems.empty()) ++failures;
  }
  return failures;
}
