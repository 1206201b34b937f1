#pragma once

#include <map>
#include <optional>
#include <vector>

#include "msqss/qudit.hpp"

namespace msqss {

enum class AttackKind { None, InterceptResend, MeasureResend, EntangleMeasure };

const char* to_string(AttackKind kind);

// Entangle-measure attack: a probe of dimension p coupled to the transiting
// particle by U_E on the forward leg and U_F on the return leg. Both act on
// the d*p joint space; the probe starts in probe_init.
struct EntangleMeasureAttack {
  int probe_dim;
  UnitaryMatrix u_forward;
  UnitaryMatrix u_backward;
  std::vector<Complex> probe_init;

  int particle_dim() const { return u_forward.dim() / probe_dim; }
  void validate() const;
};

struct AttackModel {
  AttackKind kind = AttackKind::None;
  std::optional<EntangleMeasureAttack> em;

  static AttackModel none() { return {}; }
  static AttackModel intercept_resend() { return {AttackKind::InterceptResend, std::nullopt}; }
  static AttackModel measure_resend() { return {AttackKind::MeasureResend, std::nullopt}; }
  static AttackModel entangle_measure(EntangleMeasureAttack attack);

  void validate(int d) const;
};

// Eve's per-slot working memory for one tapped leg pair.
struct EveMemory {
  struct Slot {
    bool tapped = false;
    std::optional<JointState> stashed_genuine;          // intercept-resend
    std::optional<int> measured_value;                  // measure-resend
    std::optional<JointState> post_backward;            // entangle-measure, still joint
    std::optional<std::vector<Complex>> final_probe;    // resolved once Alice measures
  };

  Slot& at(int slot) { return slots[slot]; }
  std::map<int, Slot> slots;
};

// Transforms the particle on the Alice -> receiver leg. What comes back is
// what the receiver sees; for entangle-measure the returned state carries the
// probe subsystem along.
JointState forward_tap(const AttackModel& model, int slot, const JointState& incoming,
                       EveMemory& memory, SplitRng& rng);

// Transforms the particle on the receiver -> Alice leg. Requires forward_tap
// to have run on the same slot.
JointState backward_tap(const AttackModel& model, int slot, const JointState& from_receiver,
                        EveMemory& memory, SplitRng& rng);

// Residuals of the two undetectability constraints of the entangle-measure
// family.
//
// eq7_violation: largest off-diagonal |beta_tg| where beta_tg is the weight
// of particle value g in U_E(|t> (x) probe_init). Zero means a receiver's Z
// measurement can never contradict a Z-prepared value.
//
// eq21_violation: the diagonal branches' post-U_F vectors beta_tt *
// U_F(|t> (x) eps_tt) must all equal |t> (x) f for one shared probe vector f.
// The residual is the largest distance to |t> (x) f_mean, which also catches
// U_F moving particle weight off |t>.
struct ConstraintReport {
  double eq7_violation;
  double eq21_violation;
  bool undetectable;
  double tolerance;
};

ConstraintReport check_constraints(const AttackModel& model, double tol = 1e-10);

// Member of the undetectable family: U_E applies a random probe unitary V_t
// controlled on the particle value, U_F undoes it up to one shared probe
// rotation, so every protocol branch leaves the probe in the same state.
AttackModel build_undetectable_attack(int d, int p, SplitRng& rng);

// Exact conditional probe state for one realizable protocol branch:
// preparation, receiver move, and every measurement outcome fixed.
// receiver_outcome is -1 on REFLECT branches (the receiver measures nothing).
struct ProbeScenario {
  Basis prepared_basis;
  int prepared_value;
  ReceiverOp action;
  int receiver_outcome;
  int alice_outcome;
  double probability;
  std::vector<Complex> probe;
};

// Enumerates the branches the checks can condition on: Z-prepared MEASURE,
// Z-prepared REFLECT and X-prepared REFLECT slots (X-prepared MEASURE slots
// are ignored by the protocol and carry no comparison). Probabilities are
// conditional on the preparation basis: uniform value times the fair
// MEASURE/REFLECT coin times the branch weight, so the two Z cells sum to 1
// and X+REFLECT to 1/2. Branches below probability 1e-12 are dropped.
std::vector<ProbeScenario> final_probe_states(const AttackModel& model);

}  // namespace msqss
