#pragma once

#include <span>
#include <utility>
#include <vector>

#include "msqss/rng.hpp"
#include "msqss/types.hpp"

namespace msqss {

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kUnitaryTolerance = 1e-10;

// Pure state of a single d-level system: d complex amplitudes, unit norm.
class QuditState {
 public:
  explicit QuditState(std::vector<Complex> amplitudes);

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  const Complex& operator[](int k) const { return amplitudes_[static_cast<std::size_t>(k)]; }

 private:
  std::vector<Complex> amplitudes_;
};

// Square complex matrix validated as unitary on construction.
class UnitaryMatrix {
 public:
  UnitaryMatrix(int dim, std::vector<Complex> row_major_entries);

  int dim() const { return dim_; }
  const Complex& at(int row, int col) const {
    return entries_[static_cast<std::size_t>(row) * dim_ + col];
  }
  std::span<const Complex> entries() const { return entries_; }

  // Largest |(U†U - I)(i,j)| together with the column pair (i, j) realizing
  // it. Exposed so file validation can report the offending columns.
  static double gram_defect(int dim, std::span<const Complex> entries, int* worst_i = nullptr,
                            int* worst_j = nullptr);

 private:
  int dim_;
  std::vector<Complex> entries_;
};

// Pure state of particle (dim d) tensor probe (dim p), amplitudes stored
// row-major: index (k, e) lives at k*p + e. The ordering is part of the
// public contract.
class JointState {
 public:
  JointState(std::vector<Complex> amplitudes, int particle_dim, int probe_dim);

  // A bare particle with a trivial one-dimensional probe attached, so plain
  // and probe-entangled particles share one channel representation.
  static JointState from_particle(const QuditState& particle);

  int particle_dim() const { return particle_dim_; }
  int probe_dim() const { return probe_dim_; }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  const Complex& amp(int particle_index, int probe_index) const {
    return amplitudes_[static_cast<std::size_t>(particle_index) * probe_dim_ + probe_index];
  }

 private:
  std::vector<Complex> amplitudes_;
  int particle_dim_;
  int probe_dim_;
};

// Discrete Fourier transform on d levels: entry (k, j) = exp(2*pi*i*j*k/d)/sqrt(d).
UnitaryMatrix fourier_matrix(int d);

// Basis states: Z -> computational vector e_value, X -> column `value` of the
// Fourier matrix.
QuditState prepare(int d, Basis basis, int value);

// Born-rule outcome probabilities of measuring `state` in `basis`.
std::vector<double> outcome_distribution(const QuditState& state, Basis basis);

// Projective measurement; collapses to the exact basis state of the outcome.
std::pair<int, QuditState> measure(const QuditState& state, Basis basis, SplitRng& rng);

// Product state particle (x) probe.
JointState tensor(const QuditState& particle, const QuditState& probe);

JointState apply_unitary(const JointState& state, const UnitaryMatrix& u);

// Z measurement of the particle subsystem only. The collapsed state is a
// product |g> (x) probe with the probe renormalized.
std::pair<int, JointState> partial_measure_particle_z(const JointState& state, SplitRng& rng);

// Marginal outcome distribution of the particle subsystem.
std::vector<double> particle_marginal(const JointState& state, Basis basis);

// Particle-subsystem measurement in either basis; X is realized by rotating
// with F† (x) I, measuring in Z and rotating the collapsed state back.
std::pair<int, JointState> partial_measure_particle(const JointState& state, Basis basis,
                                                    SplitRng& rng);

// Unnormalized probe row <k| (x) I |state> for particle index k.
std::vector<Complex> probe_component(const JointState& state, int particle_index);

// (U (x) I_probe) |state| without forming the full product matrix.
JointState apply_particle_unitary(const JointState& state, const UnitaryMatrix& u);

UnitaryMatrix identity_matrix(int dim);
UnitaryMatrix matrix_adjoint(const UnitaryMatrix& u);
UnitaryMatrix matrix_multiply(const UnitaryMatrix& a, const UnitaryMatrix& b);
UnitaryMatrix tensor_product(const UnitaryMatrix& a, const UnitaryMatrix& b);

// Sum_t |t><t| (x) V_t: applies V_t to the probe when the particle is |t>.
UnitaryMatrix controlled_probe_blocks(const std::vector<UnitaryMatrix>& blocks);

// Random unitary via Gram-Schmidt of a complex Gaussian matrix.
UnitaryMatrix random_unitary(int dim, SplitRng& rng);

// Random unit vector with complex Gaussian entries.
std::vector<Complex> random_unit_vector(int dim, SplitRng& rng);

// |<a|b>| for unit vectors of equal length.
double fidelity(std::span<const Complex> a, std::span<const Complex> b);

double vector_norm(std::span<const Complex> v);

}  // namespace msqss
