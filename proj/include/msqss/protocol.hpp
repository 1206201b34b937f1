#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msqss/adversary.hpp"
#include "msqss/qudit.hpp"

namespace msqss {

// Alice's basis scheduling: stochastic flips a fair coin per slot, balanced
// deals exactly 4n Z-slots and 4n X-slots in random order. Receiver moves are
// coin flips in both modes.
enum class CountMode { Stochastic, Balanced };

// Who operates the channel taps. Dishonest receivers colluding against one
// honest receiver act through exactly the same taps as an outside
// eavesdropper, so the role changes bookkeeping only, never dynamics.
enum class AttackerRole { OutsideEve, DishonestReceivers };

// Step-3 classification of a slot. A Z-prepared slot the receiver measured
// carries key material; an X-prepared measured slot is discarded; reflected
// slots feed the reflect check.
enum class CaseLabel { ZMeasure, Ignored, Reflected };

enum class AbortReason { None, ReflectCheck, ZMeasureCheck, InsufficientZMeasure };

const char* to_string(CountMode mode);
const char* to_string(AttackerRole role);
const char* to_string(CaseLabel label);
const char* to_string(AbortReason reason);

struct SessionConfig {
  int d = 2;
  int receivers = 1;       // N
  int key_length = 1;      // n, dits of shared key per receiver
  std::uint64_t seed = 0;
  CountMode count_mode = CountMode::Stochastic;
  AttackModel attack;
  // 1-based receiver whose legs are tapped; empty taps every receiver's legs
  // when an attack is configured.
  std::optional<int> attack_target;
  AttackerRole attacker_role = AttackerRole::OutsideEve;
  // Ideal channels carry no natural noise, so any positive error rate aborts.
  double error_threshold = 0.0;
  // Chance that a given slot's legs are tapped; 1.0 is the always-on attacker.
  double tap_probability = 1.0;
  bool log_events = true;

  int slots_per_receiver() const { return 8 * key_length; }
  void validate() const;
};

struct ReceiverAction {
  ReceiverOp op;
  std::optional<int> measured_value;  // present exactly when op == Measure
};

// Full history of one slot. receiver and slot are 1-based, matching the
// sequence labels S_1..S_N and positions 1..8n; measured values use 0..d-1.
struct ParticleRecord {
  int receiver;
  int slot;
  Basis prepared_basis;
  int prepared_value;
  ReceiverAction action;
  std::optional<Basis> alice_return_basis;
  std::optional<int> alice_return_value;
  CaseLabel case_label;
  bool tapped = false;
};

struct Event {
  int seq;            // 1-based, strictly increasing
  std::string actor;  // "alice", "p1".."pN", "eve"
  std::string kind;
  int receiver;       // 1-based, 0 for session-wide events
  int slot;           // 1-based, 0 when not slot-specific
  std::string payload;
};

struct KeyShare {
  std::vector<int> dits;
};

struct SessionTranscript {
  SessionConfig config;
  std::vector<Event> events;
  // Receiver-major, slot-minor: records[(i-1)*8n + (j-1)] is slot j of S_i.
  std::vector<ParticleRecord> records;
  std::vector<double> reflect_error_rate;          // per receiver
  std::vector<double> zmeasure_error_rate;         // per receiver
  std::vector<std::vector<int>> check_positions;   // per receiver, 1-based slots
  std::vector<std::vector<int>> key_positions;     // per receiver, 1-based slots
  std::vector<KeyShare> key_shares;                // empty when aborted
  std::vector<int> combined_key;                   // length n when completed
  bool aborted = false;
  AbortReason abort_reason = AbortReason::None;

  const ParticleRecord& record(int receiver, int slot) const {
    return records[static_cast<std::size_t>(receiver - 1) * config.slots_per_receiver() +
                   (slot - 1)];
  }
};

// Alice's preparation schedule for one receiver: 8n (basis, value) pairs.
std::vector<std::pair<Basis, int>> alice_prepare_sequence(const SessionConfig& config,
                                                          int receiver, SplitRng& rng);

// One receiver move: a fair coin picks MEASURE or REFLECT. MEASURE collapses
// the particle in Z and sends a fresh particle in the found state; since the
// fresh particle equals the collapsed one, the joint overload returns the
// collapsed state directly (the probe factorizes off after collapse).
std::pair<ReceiverAction, QuditState> receiver_turn(const QuditState& incoming, SplitRng& rng);
std::pair<ReceiverAction, JointState> receiver_turn(const JointState& incoming, SplitRng& rng);

// Indices (0-based positions into the given slice) of each Step-3 case.
struct Classification {
  std::vector<int> z_measure;
  std::vector<int> ignored;
  std::vector<int> reflected;
};
Classification classify(std::span<const ParticleRecord> records);

// Fraction of REFLECTED slots whose return measurement differs from the
// prepared value. Zero when the slice has no reflected slots.
double reflect_check(std::span<const ParticleRecord> receiver_records);

// Picks exactly n of the slice's Z_MEASURE slots uniformly at random and
// returns (error rate over the checked slots, chosen 1-based slot numbers,
// ascending). An error is any checked slot where prepared value, receiver
// outcome and Alice's return outcome are not all equal. Requires at least 2n
// Z_MEASURE slots so n unchecked ones remain for the key.
std::pair<double, std::vector<int>> zmeasure_check(std::span<const ParticleRecord> receiver_records,
                                                   int key_length, SplitRng& rng);

// Key material: for each receiver, n slots drawn uniformly from the unchecked
// Z_MEASURE remainder. Shares hold Alice's return-leg values; positions are
// the broadcast slot choices that let each receiver assemble the same share
// from her own outcomes.
struct ShareExtraction {
  std::vector<KeyShare> shares;
  std::vector<std::vector<int>> positions;  // per receiver, 1-based, ascending
};
ShareExtraction extract_shares(const SessionTranscript& transcript, SplitRng& rng);

// Positionwise sum of the shares mod d.
std::vector<int> combine_key(const std::vector<KeyShare>& shares, int d);

// Executes Steps 1 through 5 for every receiver: strictly sequential two-way
// transmission (slot j+1 leaves only after slot j returned), classification,
// reflect check, Z_MEASURE check, extraction. Randomness forks off `rng` by
// fixed keys, one subtree per receiver leg, so legs are independent streams:
//   leg_i = rng.child(16 + i), with children 0 preparation, 1 receiver coins,
//   2 return-leg measurements, 3 tap internals, 4 check positions, 5 tap
//   coins; key extraction draws from rng.child(48).child(i).
SessionTranscript run_session(const SessionConfig& config, SplitRng& rng);

// Convenience entry seeding the stream from config.seed.
SessionTranscript run_session(const SessionConfig& config);

}  // namespace msqss
