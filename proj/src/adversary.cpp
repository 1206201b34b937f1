#include "msqss/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace msqss {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// |t> (x) probe as a joint state; probe must be unit norm.
JointState basis_joint(int d, int p, int t, std::span<const Complex> probe) {
  std::vector<Complex> amps(static_cast<std::size_t>(d) * p, Complex(0.0, 0.0));
  for (int e = 0; e < p; ++e) {
    amps[static_cast<std::size_t>(t) * p + e] = probe[static_cast<std::size_t>(e)];
  }
  return JointState(std::move(amps), d, p);
}

}  // namespace

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::None:
      return "none";
    case AttackKind::InterceptResend:
      return "intercept_resend";
    case AttackKind::MeasureResend:
      return "measure_resend";
    case AttackKind::EntangleMeasure:
      return "entangle_measure";
  }
  return "unknown";
}

void EntangleMeasureAttack::validate() const {
  require(probe_dim >= 1, "probe dimension must be at least 1");
  require(u_forward.dim() == u_backward.dim(),
          "forward and backward unitaries act on different spaces (" +
              std::to_string(u_forward.dim()) + " vs " + std::to_string(u_backward.dim()) + ")");
  require(u_forward.dim() % probe_dim == 0,
          "joint dimension " + std::to_string(u_forward.dim()) +
              " is not a multiple of the probe dimension " + std::to_string(probe_dim));
  require(u_forward.dim() / probe_dim >= 2, "particle dimension must be at least 2");
  require(static_cast<int>(probe_init.size()) == probe_dim,
          "probe state has " + std::to_string(probe_init.size()) + " amplitudes, expected " +
              std::to_string(probe_dim));
  double norm = vector_norm(probe_init);
  require(std::abs(norm - 1.0) <= kNormTolerance,
          "probe state is not normalized (norm " + std::to_string(norm) + ")");
}

AttackModel AttackModel::entangle_measure(EntangleMeasureAttack attack) {
  attack.validate();
  AttackModel model;
  model.kind = AttackKind::EntangleMeasure;
  model.em = std::move(attack);
  return model;
}

void AttackModel::validate(int d) const {
  if (kind == AttackKind::EntangleMeasure) {
    require(em.has_value(), "entangle-measure attack without unitaries");
    em->validate();
    require(em->particle_dim() == d,
            "attack unitaries are sized for particle dimension " +
                std::to_string(em->particle_dim()) + ", session uses " + std::to_string(d));
  } else {
    require(!em.has_value(), "probe unitaries present but attack kind is not entangle-measure");
  }
}

JointState forward_tap(const AttackModel& model, int slot, const JointState& incoming,
                       EveMemory& memory, SplitRng& rng) {
  EveMemory::Slot& mem = memory.at(slot);
  mem.tapped = true;
  switch (model.kind) {
    case AttackKind::None:
      return incoming;
    case AttackKind::InterceptResend: {
      // Stash the genuine particle; the receiver gets a uniformly random Z
      // eigenstate in its place.
      mem.stashed_genuine = incoming;
      int fake = rng.next_below(incoming.particle_dim());
      return JointState::from_particle(prepare(incoming.particle_dim(), Basis::Z, fake));
    }
    case AttackKind::MeasureResend: {
      auto [value, collapsed] = partial_measure_particle_z(incoming, rng);
      mem.measured_value = value;
      return collapsed;
    }
    case AttackKind::EntangleMeasure: {
      const EntangleMeasureAttack& attack = *model.em;
      require(incoming.probe_dim() == 1, "entangle-measure tap expects an unentangled particle");
      require(incoming.particle_dim() == attack.particle_dim(),
              "attack unitaries sized for dimension " + std::to_string(attack.particle_dim()) +
                  ", particle has " + std::to_string(incoming.particle_dim()));
      const int d = incoming.particle_dim();
      const int p = attack.probe_dim;
      std::vector<Complex> amps(static_cast<std::size_t>(d) * p);
      for (int k = 0; k < d; ++k) {
        for (int e = 0; e < p; ++e) {
          amps[static_cast<std::size_t>(k) * p + e] =
              incoming.amp(k, 0) * attack.probe_init[static_cast<std::size_t>(e)];
        }
      }
      return apply_unitary(JointState(std::move(amps), d, p), attack.u_forward);
    }
  }
  throw std::logic_error("unhandled attack kind");
}

JointState backward_tap(const AttackModel& model, int slot, const JointState& from_receiver,
                        EveMemory& memory, SplitRng& rng) {
  (void)rng;  // the return leg is deterministic for every attack kind
  auto it = memory.slots.find(slot);
  require(it != memory.slots.end() && it->second.tapped,
          "backward tap on slot " + std::to_string(slot) + " before the forward tap");
  EveMemory::Slot& mem = it->second;
  switch (model.kind) {
    case AttackKind::None:
      return from_receiver;
    case AttackKind::InterceptResend: {
      require(mem.stashed_genuine.has_value(),
              "intercept-resend return leg on slot " + std::to_string(slot) +
                  " has no stashed particle");
      JointState genuine = std::move(*mem.stashed_genuine);
      mem.stashed_genuine.reset();
      return genuine;
    }
    case AttackKind::MeasureResend:
      return from_receiver;
    case AttackKind::EntangleMeasure: {
      const EntangleMeasureAttack& attack = *model.em;
      require(from_receiver.probe_dim() == attack.probe_dim,
              "return leg carries probe dimension " + std::to_string(from_receiver.probe_dim()) +
                  ", attack uses " + std::to_string(attack.probe_dim));
      JointState out = apply_unitary(from_receiver, attack.u_backward);
      mem.post_backward = out;
      return out;
    }
  }
  throw std::logic_error("unhandled attack kind");
}

ConstraintReport check_constraints(const AttackModel& model, double tol) {
  require(model.kind == AttackKind::EntangleMeasure && model.em.has_value(),
          "constraint check applies to entangle-measure attacks only");
  const EntangleMeasureAttack& attack = *model.em;
  attack.validate();
  const int d = attack.particle_dim();
  const int p = attack.probe_dim;

  double eq7 = 0.0;
  // w[t] = beta_tt * U_F(|t> (x) eps_tt): the unnormalized diagonal branch a
  // MEASURE slot hands back to Alice when preparation and outcome agree.
  std::vector<std::vector<Complex>> w(static_cast<std::size_t>(d));
  for (int t = 0; t < d; ++t) {
    JointState after_forward =
        apply_unitary(basis_joint(d, p, t, attack.probe_init), attack.u_forward);
    std::vector<Complex> diagonal;
    for (int g = 0; g < d; ++g) {
      std::vector<Complex> row = probe_component(after_forward, g);
      if (g == t) {
        diagonal = std::move(row);
      } else {
        eq7 = std::max(eq7, vector_norm(row));
      }
    }
    double beta = vector_norm(diagonal);
    auto& target = w[static_cast<std::size_t>(t)];
    if (beta > 1e-15) {
      for (auto& a : diagonal) a /= beta;
      JointState after_backward =
          apply_unitary(basis_joint(d, p, t, diagonal), attack.u_backward);
      target.assign(after_backward.amplitudes().begin(), after_backward.amplitudes().end());
      for (auto& a : target) a *= beta;
    } else {
      // The diagonal branch never occurs; leave w[t] zero and let the
      // residual report the distance.
      target.assign(static_cast<std::size_t>(d) * p, Complex(0.0, 0.0));
    }
  }

  // Mean probe vector over the particle-preserving parts of the w[t].
  std::vector<Complex> f_mean(static_cast<std::size_t>(p), Complex(0.0, 0.0));
  for (int t = 0; t < d; ++t) {
    for (int e = 0; e < p; ++e) {
      f_mean[static_cast<std::size_t>(e)] +=
          w[static_cast<std::size_t>(t)][static_cast<std::size_t>(t) * p + e];
    }
  }
  for (auto& a : f_mean) a /= static_cast<double>(d);

  // Distance of each branch to |t> (x) f_mean in the full joint space, so
  // both a probe that depends on t and particle weight leaking off |t> show
  // up in the residual.
  double eq21 = 0.0;
  for (int t = 0; t < d; ++t) {
    double sq = 0.0;
    for (int k = 0; k < d; ++k) {
      for (int e = 0; e < p; ++e) {
        Complex expected = (k == t) ? f_mean[static_cast<std::size_t>(e)] : Complex(0.0, 0.0);
        Complex delta = w[static_cast<std::size_t>(t)][static_cast<std::size_t>(k) * p + e] -
                        expected;
        sq += std::norm(delta);
      }
    }
    eq21 = std::max(eq21, std::sqrt(sq));
  }

  ConstraintReport report;
  report.eq7_violation = eq7;
  report.eq21_violation = eq21;
  report.tolerance = tol;
  report.undetectable = eq7 <= tol && eq21 <= tol;
  return report;
}

AttackModel build_undetectable_attack(int d, int p, SplitRng& rng) {
  require(d >= 2, "particle dimension must be at least 2");
  require(p >= 1, "probe dimension must be at least 1");
  // U_E applies a probe unitary V_t controlled on the particle value, so the
  // particle itself is never disturbed in the Z basis. U_F applies W * V_t
  // adjoint, which parks every branch's probe at W|eps> regardless of t, the
  // receiver's move, or anyone's outcomes.
  std::vector<UnitaryMatrix> forward_blocks;
  forward_blocks.reserve(static_cast<std::size_t>(d));
  for (int t = 0; t < d; ++t) {
    SplitRng block_rng = rng.child(1000 + t);
    forward_blocks.push_back(random_unitary(p, block_rng));
  }
  SplitRng w_rng = rng.child(2000);
  UnitaryMatrix w = random_unitary(p, w_rng);
  std::vector<UnitaryMatrix> backward_blocks;
  backward_blocks.reserve(static_cast<std::size_t>(d));
  for (int t = 0; t < d; ++t) {
    backward_blocks.push_back(
        matrix_multiply(w, matrix_adjoint(forward_blocks[static_cast<std::size_t>(t)])));
  }

  SplitRng probe_rng = rng.child(3000);
  EntangleMeasureAttack attack{p, controlled_probe_blocks(forward_blocks),
                               controlled_probe_blocks(backward_blocks),
                               random_unit_vector(p, probe_rng)};
  return AttackModel::entangle_measure(std::move(attack));
}

std::vector<ProbeScenario> final_probe_states(const AttackModel& model) {
  require(model.kind == AttackKind::EntangleMeasure && model.em.has_value(),
          "probe enumeration applies to entangle-measure attacks only");
  const EntangleMeasureAttack& attack = *model.em;
  attack.validate();
  const int d = attack.particle_dim();
  const int p = attack.probe_dim;
  const double branch_floor = 1e-12;
  // Uniform preparation value times the fair MEASURE/REFLECT coin.
  const double base = 1.0 / (2.0 * d);

  std::vector<ProbeScenario> out;

  // Unnormalized probe row for particle outcome `index` of `state` measured
  // in `basis`; returns the branch probability and normalizes in place.
  auto project = [](const JointState& state, Basis basis, int index, std::vector<Complex>* probe) {
    JointState rotated = basis == Basis::Z
                             ? state
                             : apply_particle_unitary(
                                   state, matrix_adjoint(fourier_matrix(state.particle_dim())));
    *probe = probe_component(rotated, index);
    double norm = vector_norm(*probe);
    if (norm > 0.0) {
      for (auto& a : *probe) a /= norm;
    }
    return norm * norm;
  };

  for (int t = 0; t < d; ++t) {
    // Z-prepared, MEASURE: the receiver's Z outcome g collapses the joint,
    // the resent particle |g> carries the collapsed probe through U_F, and
    // Alice Z-measures outcome a.
    JointState forward_z = apply_unitary(basis_joint(d, p, t, attack.probe_init),
                                         attack.u_forward);
    for (int g = 0; g < d; ++g) {
      std::vector<Complex> collapsed;
      double pg = project(forward_z, Basis::Z, g, &collapsed);
      if (pg <= branch_floor) continue;
      JointState back = apply_unitary(basis_joint(d, p, g, collapsed), attack.u_backward);
      for (int a = 0; a < d; ++a) {
        std::vector<Complex> probe;
        double pa = project(back, Basis::Z, a, &probe);
        if (pa <= branch_floor) continue;
        out.push_back({Basis::Z, t, ReceiverOp::Measure, g, a, base * pg * pa, std::move(probe)});
      }
    }

    // Z-prepared, REFLECT: U_F acts on the untouched joint, Alice Z-measures.
    JointState reflected_z = apply_unitary(forward_z, attack.u_backward);
    for (int a = 0; a < d; ++a) {
      std::vector<Complex> probe;
      double pa = project(reflected_z, Basis::Z, a, &probe);
      if (pa <= branch_floor) continue;
      out.push_back({Basis::Z, t, ReceiverOp::Reflect, -1, a, base * pa, std::move(probe)});
    }

    // X-prepared, REFLECT: same path, Alice measures in the X basis.
    std::vector<Complex> x_amps(static_cast<std::size_t>(d) * p);
    QuditState x_state = prepare(d, Basis::X, t);
    for (int k = 0; k < d; ++k) {
      for (int e = 0; e < p; ++e) {
        x_amps[static_cast<std::size_t>(k) * p + e] =
            x_state[k] * attack.probe_init[static_cast<std::size_t>(e)];
      }
    }
    JointState reflected_x = apply_unitary(
        apply_unitary(JointState(std::move(x_amps), d, p), attack.u_forward), attack.u_backward);
    for (int a = 0; a < d; ++a) {
      std::vector<Complex> probe;
      double pa = project(reflected_x, Basis::X, a, &probe);
      if (pa <= branch_floor) continue;
      out.push_back({Basis::X, t, ReceiverOp::Reflect, -1, a, base * pa, std::move(probe)});
    }
  }
  return out;
}

}  // namespace msqss
