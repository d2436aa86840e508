// Copyright 2026 The qsimnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qsimnet/circuit.hpp"
#include "qsimnet/errors.hpp"
#include "qsimnet/network.hpp"

namespace qsimnet {

/// Default qubit cap: a 2^24 vector of complex doubles is 256 MiB, the most
/// this verification-only simulator should ever allocate.
constexpr int kOracleQubitCap = 24;

/// Dense state vector. Basis convention (pinned, tested): qubit 0 is the
/// most significant bit, so the bit of qubit q in basis index i is
/// (i >> (n-1-q)) & 1.
struct StateVector {
  int n = 0;
  std::vector<std::complex<double>> amplitudes;
};

namespace detail {

inline void apply_single_qubit(StateVector& state, int q,
                               const std::vector<std::complex<double>>& m) {
  const uint64_t stride = uint64_t{1} << (state.n - 1 - q);
  const uint64_t size = uint64_t{1} << state.n;
  for (uint64_t base = 0; base < size; base += 2 * stride) {
    for (uint64_t off = 0; off < stride; ++off) {
      const uint64_t i0 = base + off;
      const uint64_t i1 = i0 + stride;
      const auto v0 = state.amplitudes[i0];
      const auto v1 = state.amplitudes[i1];
      state.amplitudes[i0] = m[0] * v0 + m[1] * v1;
      state.amplitudes[i1] = m[2] * v0 + m[3] * v1;
    }
  }
}

inline void apply_cz(StateVector& state, int qa, int qb) {
  const uint64_t ma = uint64_t{1} << (state.n - 1 - qa);
  const uint64_t mb = uint64_t{1} << (state.n - 1 - qb);
  const uint64_t size = uint64_t{1} << state.n;
  const uint64_t both = ma | mb;
  for (uint64_t i = 0; i < size; ++i) {
    if ((i & both) == both) state.amplitudes[i] = -state.amplitudes[i];
  }
}

}  // namespace detail

/// Applies the circuit to |0...0> gate by gate. Plain kernels, single
/// threaded: this simulator exists to be obviously correct, not fast.
inline StateVector simulate(const Circuit& circuit,
                            int qubit_cap = kOracleQubitCap) {
  if (circuit.n_qubits > qubit_cap) {
    throw CapacityError("circuit has " + std::to_string(circuit.n_qubits) +
                        " qubits, oracle cap is " + std::to_string(qubit_cap));
  }
  StateVector state;
  state.n = circuit.n_qubits;
  state.amplitudes.assign(uint64_t{1} << state.n, {0.0, 0.0});
  state.amplitudes[0] = {1.0, 0.0};
  for (const Gate& g : circuit.gates) {
    if (g.kind == GateKind::CZ) {
      detail::apply_cz(state, g.qubits[0], g.qubits[1]);
    } else {
      detail::apply_single_qubit(state, g.qubits[0], gate_matrix(g.kind));
    }
  }
  return state;
}

/// <output|psi> from a fresh simulation of the circuit.
inline std::complex<double> oracle_amplitude(const Circuit& circuit,
                                             const Bitstring& output,
                                             int qubit_cap = kOracleQubitCap) {
  if (output.n() != circuit.n_qubits) {
    throw BuildError("bitstring length does not match circuit");
  }
  return simulate(circuit, qubit_cap).amplitudes[output.to_basis_index()];
}

}  // namespace qsimnet
