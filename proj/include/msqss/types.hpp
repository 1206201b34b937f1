#pragma once

#include <complex>

namespace msqss {

using Complex = std::complex<double>;

// Preparation/measurement basis: Z is computational, X is its discrete
// Fourier image. The two are mutually unbiased.
enum class Basis { Z, X };

// A classical receiver's two moves on an incoming particle.
enum class ReceiverOp { Measure, Reflect };

inline const char* to_string(Basis b) { return b == Basis::Z ? "Z" : "X"; }
inline const char* to_string(ReceiverOp op) {
  return op == ReceiverOp::Measure ? "MEASURE" : "REFLECT";
}

}  // namespace msqss
