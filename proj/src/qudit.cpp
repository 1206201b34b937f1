#include "msqss/qudit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace msqss {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

double norm_squared(std::span<const Complex> v) {
  double s = 0.0;
  for (const Complex& a : v) s += std::norm(a);
  return s;
}

}  // namespace

double vector_norm(std::span<const Complex> v) { return std::sqrt(norm_squared(v)); }

double fidelity(std::span<const Complex> a, std::span<const Complex> b) {
  require(a.size() == b.size(), "fidelity: length mismatch");
  Complex overlap{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) overlap += std::conj(a[i]) * b[i];
  return std::abs(overlap);
}

QuditState::QuditState(std::vector<Complex> amplitudes) : amplitudes_(std::move(amplitudes)) {
  require(amplitudes_.size() >= 2, "QuditState: dimension must be at least 2");
  require(std::abs(norm_squared(amplitudes_) - 1.0) <= kNormTolerance,
          "QuditState: amplitudes are not unit norm");
}

double UnitaryMatrix::gram_defect(int dim, std::span<const Complex> entries, int* worst_i,
                                  int* worst_j) {
  double worst = 0.0;
  int wi = 0, wj = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      Complex g{0.0, 0.0};
      for (int k = 0; k < dim; ++k) {
        g += std::conj(entries[static_cast<std::size_t>(k) * dim + i]) *
             entries[static_cast<std::size_t>(k) * dim + j];
      }
      if (i == j) g -= 1.0;
      const double defect = std::abs(g);
      if (defect > worst) {
        worst = defect;
        wi = i;
        wj = j;
      }
    }
  }
  if (worst_i) *worst_i = wi;
  if (worst_j) *worst_j = wj;
  return worst;
}

UnitaryMatrix::UnitaryMatrix(int dim, std::vector<Complex> row_major_entries)
    : dim_(dim), entries_(std::move(row_major_entries)) {
  require(dim_ >= 1, "UnitaryMatrix: dimension must be positive");
  require(entries_.size() == static_cast<std::size_t>(dim_) * dim_,
          "UnitaryMatrix: entry count does not match dimension");
  int i = 0, j = 0;
  const double defect = gram_defect(dim_, entries_, &i, &j);
  if (defect > kUnitaryTolerance) {
    throw std::invalid_argument("UnitaryMatrix: not unitary, Gram defect " +
                                std::to_string(defect) + " at columns (" + std::to_string(i) +
                                ", " + std::to_string(j) + ")");
  }
}

JointState::JointState(std::vector<Complex> amplitudes, int particle_dim, int probe_dim)
    : amplitudes_(std::move(amplitudes)), particle_dim_(particle_dim), probe_dim_(probe_dim) {
  require(particle_dim_ >= 2, "JointState: particle dimension must be at least 2");
  require(probe_dim_ >= 1, "JointState: probe dimension must be at least 1");
  require(amplitudes_.size() == static_cast<std::size_t>(particle_dim_) * probe_dim_,
          "JointState: amplitude count does not match dimensions");
  require(std::abs(norm_squared(amplitudes_) - 1.0) <= kNormTolerance,
          "JointState: amplitudes are not unit norm");
}

JointState JointState::from_particle(const QuditState& particle) {
  std::vector<Complex> amps(particle.amplitudes().begin(), particle.amplitudes().end());
  return JointState(std::move(amps), particle.dim(), 1);
}

UnitaryMatrix fourier_matrix(int d) {
  require(d >= 2, "fourier_matrix: dimension must be at least 2");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Complex> entries(static_cast<std::size_t>(d) * d);
  for (int k = 0; k < d; ++k) {
    for (int j = 0; j < d; ++j) {
      const double phase = 2.0 * kPi * j * k / d;
      entries[static_cast<std::size_t>(k) * d + j] = std::polar(scale, phase);
    }
  }
  return UnitaryMatrix(d, std::move(entries));
}

QuditState prepare(int d, Basis basis, int value) {
  require(d >= 2, "prepare: dimension must be at least 2");
  require(value >= 0 && value < d, "prepare: value out of range");
  std::vector<Complex> amps(static_cast<std::size_t>(d), Complex{0.0, 0.0});
  if (basis == Basis::Z) {
    amps[static_cast<std::size_t>(value)] = Complex{1.0, 0.0};
  } else {
    const UnitaryMatrix f = fourier_matrix(d);
    for (int k = 0; k < d; ++k) amps[static_cast<std::size_t>(k)] = f.at(k, value);
  }
  return QuditState(std::move(amps));
}

std::vector<double> outcome_distribution(const QuditState& state, Basis basis) {
  const int d = state.dim();
  std::vector<double> probs(static_cast<std::size_t>(d), 0.0);
  if (basis == Basis::Z) {
    for (int k = 0; k < d; ++k) probs[static_cast<std::size_t>(k)] = std::norm(state[k]);
  } else {
    const UnitaryMatrix f = fourier_matrix(d);
    for (int t = 0; t < d; ++t) {
      Complex overlap{0.0, 0.0};
      for (int k = 0; k < d; ++k) overlap += std::conj(f.at(k, t)) * state[k];
      probs[static_cast<std::size_t>(t)] = std::norm(overlap);
    }
  }
  return probs;
}

std::pair<int, QuditState> measure(const QuditState& state, Basis basis, SplitRng& rng) {
  const std::vector<double> probs = outcome_distribution(state, basis);
  const int outcome = static_cast<int>(rng.sample(probs));
  return {outcome, prepare(state.dim(), basis, outcome)};
}

JointState tensor(const QuditState& particle, const QuditState& probe) {
  const int d = particle.dim();
  const int p = probe.dim();
  std::vector<Complex> amps(static_cast<std::size_t>(d) * p);
  for (int k = 0; k < d; ++k) {
    for (int e = 0; e < p; ++e) {
      amps[static_cast<std::size_t>(k) * p + e] = particle[k] * probe[e];
    }
  }
  return JointState(std::move(amps), d, p);
}

JointState apply_unitary(const JointState& state, const UnitaryMatrix& u) {
  const int dim = state.particle_dim() * state.probe_dim();
  require(u.dim() == dim, "apply_unitary: matrix dimension does not match state");
  std::vector<Complex> out(static_cast<std::size_t>(dim), Complex{0.0, 0.0});
  const std::span<const Complex> in = state.amplitudes();
  for (int r = 0; r < dim; ++r) {
    Complex acc{0.0, 0.0};
    for (int c = 0; c < dim; ++c) acc += u.at(r, c) * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return JointState(std::move(out), state.particle_dim(), state.probe_dim());
}

std::vector<double> particle_marginal(const JointState& state, Basis basis) {
  const JointState* s = &state;
  JointState rotated = state;
  if (basis == Basis::X) {
    rotated = apply_particle_unitary(state, matrix_adjoint(fourier_matrix(state.particle_dim())));
    s = &rotated;
  }
  std::vector<double> probs(static_cast<std::size_t>(state.particle_dim()), 0.0);
  for (int k = 0; k < state.particle_dim(); ++k) {
    double mass = 0.0;
    for (int e = 0; e < state.probe_dim(); ++e) mass += std::norm(s->amp(k, e));
    probs[static_cast<std::size_t>(k)] = mass;
  }
  return probs;
}

std::pair<int, JointState> partial_measure_particle_z(const JointState& state, SplitRng& rng) {
  const std::vector<double> probs = particle_marginal(state, Basis::Z);
  const int outcome = static_cast<int>(rng.sample(probs));
  const int d = state.particle_dim();
  const int p = state.probe_dim();
  std::vector<Complex> row = probe_component(state, outcome);
  const double norm = vector_norm(row);
  std::vector<Complex> amps(static_cast<std::size_t>(d) * p, Complex{0.0, 0.0});
  for (int e = 0; e < p; ++e) {
    amps[static_cast<std::size_t>(outcome) * p + e] = row[static_cast<std::size_t>(e)] / norm;
  }
  return {outcome, JointState(std::move(amps), d, p)};
}

std::pair<int, JointState> partial_measure_particle(const JointState& state, Basis basis,
                                                    SplitRng& rng) {
  if (basis == Basis::Z) return partial_measure_particle_z(state, rng);
  const UnitaryMatrix f = fourier_matrix(state.particle_dim());
  const JointState rotated = apply_particle_unitary(state, matrix_adjoint(f));
  auto [outcome, collapsed_z] = partial_measure_particle_z(rotated, rng);
  return {outcome, apply_particle_unitary(collapsed_z, f)};
}

std::vector<Complex> probe_component(const JointState& state, int particle_index) {
  require(particle_index >= 0 && particle_index < state.particle_dim(),
          "probe_component: particle index out of range");
  std::vector<Complex> row(static_cast<std::size_t>(state.probe_dim()));
  for (int e = 0; e < state.probe_dim(); ++e) {
    row[static_cast<std::size_t>(e)] = state.amp(particle_index, e);
  }
  return row;
}

JointState apply_particle_unitary(const JointState& state, const UnitaryMatrix& u) {
  const int d = state.particle_dim();
  const int p = state.probe_dim();
  require(u.dim() == d, "apply_particle_unitary: matrix dimension does not match particle");
  std::vector<Complex> out(static_cast<std::size_t>(d) * p, Complex{0.0, 0.0});
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const Complex coeff = u.at(r, c);
      if (coeff == Complex{0.0, 0.0}) continue;
      for (int e = 0; e < p; ++e) {
        out[static_cast<std::size_t>(r) * p + e] += coeff * state.amp(c, e);
      }
    }
  }
  return JointState(std::move(out), d, p);
}

UnitaryMatrix identity_matrix(int dim) {
  std::vector<Complex> entries(static_cast<std::size_t>(dim) * dim, Complex{0.0, 0.0});
  for (int i = 0; i < dim; ++i) entries[static_cast<std::size_t>(i) * dim + i] = Complex{1.0, 0.0};
  return UnitaryMatrix(dim, std::move(entries));
}

UnitaryMatrix matrix_adjoint(const UnitaryMatrix& u) {
  const int dim = u.dim();
  std::vector<Complex> entries(static_cast<std::size_t>(dim) * dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      entries[static_cast<std::size_t>(r) * dim + c] = std::conj(u.at(c, r));
    }
  }
  return UnitaryMatrix(dim, std::move(entries));
}

UnitaryMatrix matrix_multiply(const UnitaryMatrix& a, const UnitaryMatrix& b) {
  require(a.dim() == b.dim(), "matrix_multiply: dimension mismatch");
  const int dim = a.dim();
  std::vector<Complex> entries(static_cast<std::size_t>(dim) * dim, Complex{0.0, 0.0});
  for (int r = 0; r < dim; ++r) {
    for (int k = 0; k < dim; ++k) {
      const Complex av = a.at(r, k);
      if (av == Complex{0.0, 0.0}) continue;
      for (int c = 0; c < dim; ++c) {
        entries[static_cast<std::size_t>(r) * dim + c] += av * b.at(k, c);
      }
    }
  }
  return UnitaryMatrix(dim, std::move(entries));
}

UnitaryMatrix tensor_product(const UnitaryMatrix& a, const UnitaryMatrix& b) {
  const int da = a.dim();
  const int db = b.dim();
  const int dim = da * db;
  std::vector<Complex> entries(static_cast<std::size_t>(dim) * dim);
  for (int ra = 0; ra < da; ++ra) {
    for (int rb = 0; rb < db; ++rb) {
      for (int ca = 0; ca < da; ++ca) {
        for (int cb = 0; cb < db; ++cb) {
          entries[static_cast<std::size_t>(ra * db + rb) * dim + (ca * db + cb)] =
              a.at(ra, ca) * b.at(rb, cb);
        }
      }
    }
  }
  return UnitaryMatrix(dim, std::move(entries));
}

UnitaryMatrix controlled_probe_blocks(const std::vector<UnitaryMatrix>& blocks) {
  require(!blocks.empty(), "controlled_probe_blocks: no blocks");
  const int d = static_cast<int>(blocks.size());
  const int p = blocks.front().dim();
  for (const UnitaryMatrix& v : blocks) {
    require(v.dim() == p, "controlled_probe_blocks: block dimension mismatch");
  }
  const int dim = d * p;
  std::vector<Complex> entries(static_cast<std::size_t>(dim) * dim, Complex{0.0, 0.0});
  for (int t = 0; t < d; ++t) {
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) {
        entries[static_cast<std::size_t>(t * p + r) * dim + (t * p + c)] =
            blocks[static_cast<std::size_t>(t)].at(r, c);
      }
    }
  }
  return UnitaryMatrix(dim, std::move(entries));
}

UnitaryMatrix random_unitary(int dim, SplitRng& rng) {
  require(dim >= 1, "random_unitary: dimension must be positive");
  // Columns of a complex Gaussian matrix, orthonormalized. Two Gram-Schmidt
  // passes keep the result unitary well below the construction tolerance.
  std::vector<std::vector<Complex>> cols(static_cast<std::size_t>(dim),
                                         std::vector<Complex>(static_cast<std::size_t>(dim)));
  for (auto& col : cols) {
    for (auto& entry : col) entry = Complex{rng.next_gaussian(), rng.next_gaussian()};
  }
  for (int j = 0; j < dim; ++j) {
    auto& col = cols[static_cast<std::size_t>(j)];
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) {
        const auto& prev = cols[static_cast<std::size_t>(i)];
        Complex overlap{0.0, 0.0};
        for (int k = 0; k < dim; ++k) {
          overlap += std::conj(prev[static_cast<std::size_t>(k)]) * col[static_cast<std::size_t>(k)];
        }
        for (int k = 0; k < dim; ++k) {
          col[static_cast<std::size_t>(k)] -= overlap * prev[static_cast<std::size_t>(k)];
        }
      }
    }
    const double norm = vector_norm(col);
    require(norm > 1e-8, "random_unitary: degenerate Gaussian draw");
    for (auto& entry : col) entry /= norm;
  }
  std::vector<Complex> entries(static_cast<std::size_t>(dim) * dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      entries[static_cast<std::size_t>(r) * dim + c] = cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
    }
  }
  return UnitaryMatrix(dim, std::move(entries));
}

std::vector<Complex> random_unit_vector(int dim, SplitRng& rng) {
  require(dim >= 1, "random_unit_vector: dimension must be positive");
  std::vector<Complex> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    for (auto& entry : v) entry = Complex{rng.next_gaussian(), rng.next_gaussian()};
    norm = vector_norm(v);
  } while (norm < 1e-8);
  for (auto& entry : v) entry /= norm;
  return v;
}

}  // namespace msqss
