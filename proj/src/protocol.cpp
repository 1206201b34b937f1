#include "msqss/protocol.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace msqss {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// First k elements of `items` chosen uniformly without replacement, by a
// partial Fisher-Yates pass.
std::vector<int> choose_without_replacement(std::vector<int> items, int k, SplitRng& rng) {
  const int size = static_cast<int>(items.size());
  for (int idx = 0; idx < k; ++idx) {
    int pick = idx + rng.next_below(size - idx);
    std::swap(items[static_cast<std::size_t>(idx)], items[static_cast<std::size_t>(pick)]);
  }
  items.resize(static_cast<std::size_t>(k));
  return items;
}

std::string join_slots(const std::vector<int>& slots) {
  std::string out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(slots[i]);
  }
  return out;
}

CaseLabel label_for(Basis prepared, ReceiverOp op) {
  if (op == ReceiverOp::Reflect) return CaseLabel::Reflected;
  return prepared == Basis::Z ? CaseLabel::ZMeasure : CaseLabel::Ignored;
}

}  // namespace

const char* to_string(CountMode mode) {
  return mode == CountMode::Stochastic ? "stochastic" : "balanced";
}

const char* to_string(AttackerRole role) {
  return role == AttackerRole::OutsideEve ? "outside" : "participants";
}

const char* to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::ZMeasure:
      return "Z_MEASURE";
    case CaseLabel::Ignored:
      return "IGNORED";
    case CaseLabel::Reflected:
      return "REFLECTED";
  }
  return "unknown";
}

const char* to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::None:
      return "none";
    case AbortReason::ReflectCheck:
      return "reflect_check";
    case AbortReason::ZMeasureCheck:
      return "zmeasure_check";
    case AbortReason::InsufficientZMeasure:
      return "insufficient_zmeasure";
  }
  return "unknown";
}

void SessionConfig::validate() const {
  require(d >= 2, "dimension must be at least 2");
  require(receivers >= 1, "at least one receiver required");
  require(key_length >= 1, "key length must be at least 1");
  require(error_threshold >= 0.0 && error_threshold <= 1.0, "error threshold outside [0, 1]");
  require(tap_probability >= 0.0 && tap_probability <= 1.0, "tap probability outside [0, 1]");
  attack.validate(d);
  if (attack_target.has_value()) {
    require(*attack_target >= 1 && *attack_target <= receivers,
            "attack target " + std::to_string(*attack_target) + " outside 1.." +
                std::to_string(receivers));
  }
  if (attacker_role == AttackerRole::DishonestReceivers) {
    require(receivers >= 2, "a participant attack needs at least two receivers");
    require(attack_target.has_value(),
            "a participant attack must name the honest receiver under attack");
  }
}

std::vector<std::pair<Basis, int>> alice_prepare_sequence(const SessionConfig& config,
                                                          int receiver, SplitRng& rng) {
  config.validate();
  require(receiver >= 1 && receiver <= config.receivers, "receiver index out of range");
  const int slots = config.slots_per_receiver();
  std::vector<Basis> bases;
  bases.reserve(static_cast<std::size_t>(slots));
  if (config.count_mode == CountMode::Balanced) {
    // Exactly half Z, half X, order shuffled.
    for (int j = 0; j < slots; ++j) bases.push_back(j < slots / 2 ? Basis::Z : Basis::X);
    for (int j = slots - 1; j > 0; --j) {
      int pick = rng.next_below(j + 1);
      std::swap(bases[static_cast<std::size_t>(j)], bases[static_cast<std::size_t>(pick)]);
    }
  } else {
    for (int j = 0; j < slots; ++j) bases.push_back(rng.next_bool() ? Basis::Z : Basis::X);
  }
  std::vector<std::pair<Basis, int>> out;
  out.reserve(static_cast<std::size_t>(slots));
  for (int j = 0; j < slots; ++j) {
    out.emplace_back(bases[static_cast<std::size_t>(j)], rng.next_below(config.d));
  }
  return out;
}

std::pair<ReceiverAction, QuditState> receiver_turn(const QuditState& incoming, SplitRng& rng) {
  if (rng.next_bool()) {
    auto [value, collapsed] = measure(incoming, Basis::Z, rng);
    return {{ReceiverOp::Measure, value}, std::move(collapsed)};
  }
  return {{ReceiverOp::Reflect, std::nullopt}, incoming};
}

std::pair<ReceiverAction, JointState> receiver_turn(const JointState& incoming, SplitRng& rng) {
  if (rng.next_bool()) {
    auto [value, collapsed] = partial_measure_particle_z(incoming, rng);
    return {{ReceiverOp::Measure, value}, std::move(collapsed)};
  }
  return {{ReceiverOp::Reflect, std::nullopt}, incoming};
}

Classification classify(std::span<const ParticleRecord> records) {
  Classification out;
  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    switch (records[idx].case_label) {
      case CaseLabel::ZMeasure:
        out.z_measure.push_back(static_cast<int>(idx));
        break;
      case CaseLabel::Ignored:
        out.ignored.push_back(static_cast<int>(idx));
        break;
      case CaseLabel::Reflected:
        out.reflected.push_back(static_cast<int>(idx));
        break;
    }
  }
  return out;
}

double reflect_check(std::span<const ParticleRecord> receiver_records) {
  int reflected = 0;
  int mismatches = 0;
  for (const ParticleRecord& rec : receiver_records) {
    if (rec.case_label != CaseLabel::Reflected) continue;
    if (!rec.alice_return_value.has_value()) {
      throw std::logic_error("reflected slot " + std::to_string(rec.slot) +
                             " has no return measurement");
    }
    ++reflected;
    if (*rec.alice_return_value != rec.prepared_value) ++mismatches;
  }
  if (reflected == 0) return 0.0;
  return static_cast<double>(mismatches) / static_cast<double>(reflected);
}

std::pair<double, std::vector<int>> zmeasure_check(std::span<const ParticleRecord> receiver_records,
                                                   int key_length, SplitRng& rng) {
  std::vector<int> z_slots;
  for (const ParticleRecord& rec : receiver_records) {
    if (rec.case_label == CaseLabel::ZMeasure) z_slots.push_back(rec.slot);
  }
  const int m = static_cast<int>(z_slots.size());
  require(m >= 2 * key_length, "only " + std::to_string(m) + " Z_MEASURE slots, need " +
                                   std::to_string(2 * key_length));
  std::vector<int> chosen = choose_without_replacement(z_slots, key_length, rng);
  std::sort(chosen.begin(), chosen.end());

  int errors = 0;
  for (int slot : chosen) {
    const ParticleRecord* rec = nullptr;
    for (const ParticleRecord& r : receiver_records) {
      if (r.slot == slot) {
        rec = &r;
        break;
      }
    }
    if (rec == nullptr || !rec->alice_return_value.has_value() ||
        !rec->action.measured_value.has_value()) {
      throw std::logic_error("checked slot " + std::to_string(slot) + " lacks measurements");
    }
    const bool consistent = rec->prepared_value == *rec->action.measured_value &&
                            rec->prepared_value == *rec->alice_return_value;
    if (!consistent) ++errors;
  }
  return {static_cast<double>(errors) / static_cast<double>(key_length), std::move(chosen)};
}

ShareExtraction extract_shares(const SessionTranscript& transcript, SplitRng& rng) {
  const SessionConfig& config = transcript.config;
  const int slots = config.slots_per_receiver();
  const int n = config.key_length;
  ShareExtraction out;
  for (int i = 1; i <= config.receivers; ++i) {
    std::span<const ParticleRecord> slice(
        transcript.records.data() + static_cast<std::size_t>(i - 1) * slots,
        static_cast<std::size_t>(slots));
    const std::vector<int>& checked = transcript.check_positions[static_cast<std::size_t>(i - 1)];
    std::vector<int> remainder;
    for (const ParticleRecord& rec : slice) {
      if (rec.case_label != CaseLabel::ZMeasure) continue;
      if (std::binary_search(checked.begin(), checked.end(), rec.slot)) continue;
      remainder.push_back(rec.slot);
    }
    require(static_cast<int>(remainder.size()) >= n,
            "receiver " + std::to_string(i) + " has only " + std::to_string(remainder.size()) +
                " unchecked Z_MEASURE slots, need " + std::to_string(n));
    SplitRng pick_rng = rng.child(i);
    std::vector<int> picked = choose_without_replacement(std::move(remainder), n, pick_rng);
    std::sort(picked.begin(), picked.end());

    KeyShare share;
    share.dits.reserve(static_cast<std::size_t>(n));
    for (int slot : picked) {
      const ParticleRecord& rec = transcript.record(i, slot);
      if (!rec.alice_return_value.has_value()) {
        throw std::logic_error("key slot " + std::to_string(slot) + " has no return measurement");
      }
      share.dits.push_back(*rec.alice_return_value);
    }
    out.shares.push_back(std::move(share));
    out.positions.push_back(std::move(picked));
  }
  return out;
}

std::vector<int> combine_key(const std::vector<KeyShare>& shares, int d) {
  require(d >= 2, "dimension must be at least 2");
  require(!shares.empty(), "no shares to combine");
  const std::size_t n = shares.front().dits.size();
  std::vector<int> key(n, 0);
  for (const KeyShare& share : shares) {
    require(share.dits.size() == n, "share length mismatch: " + std::to_string(share.dits.size()) +
                                        " vs " + std::to_string(n));
    for (std::size_t t = 0; t < n; ++t) {
      int dit = share.dits[t];
      require(dit >= 0 && dit < d, "share value " + std::to_string(dit) + " outside 0.." +
                                       std::to_string(d - 1));
      key[t] = (key[t] + dit) % d;
    }
  }
  return key;
}

SessionTranscript run_session(const SessionConfig& config, SplitRng& rng) {
  config.validate();
  const int d = config.d;
  const int receivers = config.receivers;
  const int n = config.key_length;
  const int slots = config.slots_per_receiver();

  SessionTranscript t;
  t.config = config;
  t.reflect_error_rate.assign(static_cast<std::size_t>(receivers), 0.0);
  t.zmeasure_error_rate.assign(static_cast<std::size_t>(receivers), 0.0);
  t.check_positions.assign(static_cast<std::size_t>(receivers), {});
  t.key_positions.assign(static_cast<std::size_t>(receivers), {});
  t.records.reserve(static_cast<std::size_t>(receivers) * slots);

  int seq = 0;
  auto log = [&](const std::string& actor, const char* kind, int receiver, int slot,
                 std::string payload) {
    if (!config.log_events) return;
    t.events.push_back({++seq, actor, kind, receiver, slot, std::move(payload)});
  };
  auto abort_session = [&](AbortReason reason, int receiver) {
    t.aborted = true;
    t.abort_reason = reason;
    log("alice", "abort", receiver, 0, std::string("reason=") + to_string(reason));
  };

  const bool attacking = config.attack.kind != AttackKind::None;
  auto leg_tapped = [&](int i) {
    if (!attacking) return false;
    return !config.attack_target.has_value() || *config.attack_target == i;
  };

  // Step 1 and 2: one strictly sequential two-way leg per receiver. Alice
  // keeps every returned state; nothing is measured until classification.
  std::vector<std::vector<JointState>> stored(static_cast<std::size_t>(receivers));
  std::vector<EveMemory> memories(static_cast<std::size_t>(receivers));
  for (int i = 1; i <= receivers; ++i) {
    SplitRng leg = rng.child(16 + i);
    SplitRng prep_rng = leg.child(0);
    SplitRng coins = leg.child(1);
    SplitRng tap_rng = leg.child(3);
    SplitRng tap_coin = leg.child(5);
    const std::string actor = "p" + std::to_string(i);
    const bool tapped_leg = leg_tapped(i);

    auto prep = alice_prepare_sequence(config, i, prep_rng);
    stored[static_cast<std::size_t>(i - 1)].reserve(static_cast<std::size_t>(slots));
    std::vector<int> measured_slots;
    for (int j = 1; j <= slots; ++j) {
      const auto [basis, value] = prep[static_cast<std::size_t>(j - 1)];
      log("alice", "send", i, j,
          "basis=" + std::string(to_string(basis)) + " value=" + std::to_string(value));
      JointState state = JointState::from_particle(prepare(d, basis, value));
      bool tapped = tapped_leg && (config.tap_probability >= 1.0 ||
                                   tap_coin.next_unit() < config.tap_probability);
      if (tapped) {
        state = forward_tap(config.attack, j, state, memories[static_cast<std::size_t>(i - 1)],
                            tap_rng);
        log("eve", "tap_forward", i, j, "");
      }
      log(actor, "receive", i, j, "");
      auto [action, outgoing] = receiver_turn(state, coins);
      log(actor, "return", i, j, "");
      if (tapped) {
        outgoing = backward_tap(config.attack, j, outgoing,
                                memories[static_cast<std::size_t>(i - 1)], tap_rng);
        log("eve", "tap_backward", i, j, "");
      }
      log("alice", "receive_back", i, j, "");
      stored[static_cast<std::size_t>(i - 1)].push_back(std::move(outgoing));
      if (action.op == ReceiverOp::Measure) measured_slots.push_back(j);

      ParticleRecord rec;
      rec.receiver = i;
      rec.slot = j;
      rec.prepared_basis = basis;
      rec.prepared_value = value;
      rec.action = action;
      rec.case_label = label_for(basis, action.op);
      rec.tapped = tapped;
      t.records.push_back(std::move(rec));
    }
    log(actor, "announce_measure", i, 0, "slots=" + join_slots(measured_slots));
  }

  // Step 3 classification: Alice measures Z_MEASURE slots in Z and REFLECTED
  // slots in their preparation basis; IGNORED slots stay untouched.
  for (int i = 1; i <= receivers; ++i) {
    SplitRng ret_rng = rng.child(16 + i).child(2);
    for (int j = 1; j <= slots; ++j) {
      ParticleRecord& rec =
          t.records[static_cast<std::size_t>(i - 1) * slots + static_cast<std::size_t>(j - 1)];
      if (rec.case_label == CaseLabel::Ignored) continue;
      Basis basis = rec.case_label == CaseLabel::ZMeasure ? Basis::Z : rec.prepared_basis;
      const JointState& kept =
          stored[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
      auto [outcome, collapsed] = partial_measure_particle(kept, basis, ret_rng);
      (void)collapsed;
      rec.alice_return_basis = basis;
      rec.alice_return_value = outcome;
      log("alice", "measure", i, j,
          "basis=" + std::string(to_string(basis)) + " outcome=" + std::to_string(outcome));
    }
  }

  auto slice = [&](int i) {
    return std::span<const ParticleRecord>(
        t.records.data() + static_cast<std::size_t>(i - 1) * slots, static_cast<std::size_t>(slots));
  };

  // Step 3 reflect check, all receivers before the abort decision so the
  // transcript always carries every rate.
  for (int i = 1; i <= receivers; ++i) {
    double rate = reflect_check(slice(i));
    t.reflect_error_rate[static_cast<std::size_t>(i - 1)] = rate;
    log("alice", "reflect_check", i, 0, "rate=" + std::to_string(rate));
  }
  for (int i = 1; i <= receivers; ++i) {
    if (t.reflect_error_rate[static_cast<std::size_t>(i - 1)] > config.error_threshold) {
      abort_session(AbortReason::ReflectCheck, i);
      return t;
    }
  }

  // Step 4 needs 2n Z_MEASURE slots per receiver: n for the check, n left
  // for the key.
  for (int i = 1; i <= receivers; ++i) {
    Classification cls = classify(slice(i));
    if (static_cast<int>(cls.z_measure.size()) < 2 * n) {
      abort_session(AbortReason::InsufficientZMeasure, i);
      return t;
    }
  }

  for (int i = 1; i <= receivers; ++i) {
    SplitRng check_rng = rng.child(16 + i).child(4);
    auto [rate, positions] = zmeasure_check(slice(i), n, check_rng);
    t.zmeasure_error_rate[static_cast<std::size_t>(i - 1)] = rate;
    log("alice", "zmeasure_select", i, 0, "slots=" + join_slots(positions));
    std::vector<int> published;
    published.reserve(positions.size());
    for (int slot : positions) published.push_back(*t.record(i, slot).action.measured_value);
    log("p" + std::to_string(i), "zmeasure_publish", i, 0, "values=" + join_slots(published));
    log("alice", "zmeasure_check", i, 0, "rate=" + std::to_string(rate));
    t.check_positions[static_cast<std::size_t>(i - 1)] = std::move(positions);
  }
  for (int i = 1; i <= receivers; ++i) {
    if (t.zmeasure_error_rate[static_cast<std::size_t>(i - 1)] > config.error_threshold) {
      abort_session(AbortReason::ZMeasureCheck, i);
      return t;
    }
  }

  // Step 5: shares from the unchecked remainder, combined mod d.
  SplitRng extract_rng = rng.child(48);
  ShareExtraction extraction = extract_shares(t, extract_rng);
  t.key_shares = std::move(extraction.shares);
  t.key_positions = std::move(extraction.positions);
  for (int i = 1; i <= receivers; ++i) {
    log("alice", "share_select", i, 0,
        "slots=" + join_slots(t.key_positions[static_cast<std::size_t>(i - 1)]));
  }
  t.combined_key = combine_key(t.key_shares, d);
  log("alice", "combine", 0, 0, "key=" + join_slots(t.combined_key));
  return t;
}

SessionTranscript run_session(const SessionConfig& config) {
  SplitRng rng(config.seed);
  return run_session(config, rng);
}

}  // namespace msqss
