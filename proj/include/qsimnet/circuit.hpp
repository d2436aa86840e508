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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qsimnet/errors.hpp"
#include "qsimnet/rng.hpp"

namespace qsimnet {

using Complex = std::complex<double>;

enum class GateKind { H, T, SqrtX, SqrtY, CZ };

inline int gate_arity(GateKind kind) { return kind == GateKind::CZ ? 2 : 1; }

/// Text name used by the circuit file format.
inline const char* gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::H:
      return "h";
    case GateKind::T:
      return "t";
    case GateKind::SqrtX:
      return "x_1_2";
    case GateKind::SqrtY:
      return "y_1_2";
    case GateKind::CZ:
      return "cz";
  }
  return "?";
}

inline std::optional<GateKind> gate_kind_from_name(std::string_view name) {
  if (name == "h") return GateKind::H;
  if (name == "t") return GateKind::T;
  if (name == "x_1_2") return GateKind::SqrtX;
  if (name == "y_1_2") return GateKind::SqrtY;
  if (name == "cz") return GateKind::CZ;
  return std::nullopt;
}

/// Unitary matrix of a gate, row-major. 2x2 for single-qubit kinds, 4x4 for
/// CZ. Entries are exact in double precision.
inline std::vector<Complex> gate_matrix(GateKind kind) {
  const double s = M_SQRT1_2;  // 1/sqrt(2)
  switch (kind) {
    case GateKind::H:
      return {{s, 0}, {s, 0}, {s, 0}, {-s, 0}};
    case GateKind::T:
      return {{1, 0}, {0, 0}, {0, 0}, {s, s}};
    case GateKind::SqrtX:
      return {{0.5, 0.5}, {0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}};
    case GateKind::SqrtY:
      return {{0.5, 0.5}, {-0.5, -0.5}, {0.5, 0.5}, {0.5, 0.5}};
    case GateKind::CZ: {
      std::vector<Complex> m(16, Complex(0, 0));
      m[0 * 4 + 0] = m[1 * 4 + 1] = m[2 * 4 + 2] = Complex(1, 0);
      m[3 * 4 + 3] = Complex(-1, 0);
      return m;
    }
  }
  return {};
}

struct Gate {
  GateKind kind;
  std::vector<int> qubits;  // length 1 or 2; CZ stored lower qubit first
  int cycle = 0;

  bool operator==(const Gate&) const = default;
};

/// Rectangular qubit layout. Qubit ids are row-major: id = row * cols + col.
struct GridSpec {
  int rows = 0;
  int cols = 0;

  int qubit_count() const { return rows * cols; }
  int qubit_at(int row, int col) const { return row * cols + col; }
};

struct Circuit {
  int n_qubits = 0;
  /// Number of inner cycles t; the circuit spans cycles 0..t+1 where cycle 0
  /// and cycle t+1 are the Hadamard boundary layers.
  int depth_t = 0;
  std::vector<Gate> gates;  // nondecreasing cycle order
  std::optional<GridSpec> grid;
};

namespace detail {

inline Gate make_gate(GateKind kind, std::vector<int> qubits, int cycle) {
  if (kind == GateKind::CZ && qubits.size() == 2 && qubits[0] > qubits[1]) {
    std::swap(qubits[0], qubits[1]);  // CZ is symmetric; canonical order
  }
  return Gate{kind, std::move(qubits), cycle};
}

}  // namespace detail

/// Edge set of CZ configuration `config` (0..7) on a rectangular grid.
///
/// Even configurations hold horizontal couplers, odd ones vertical couplers;
/// within each direction the four configurations select one of four diagonal
/// stripes, so every grid coupler belongs to exactly one configuration:
///
///   horizontal (r,c)-(r,c+1): active in config 2*((2r + c) mod 4)
///   vertical   (r,c)-(r+1,c): active in config 2*((r + 2c) mod 4) + 1
///
/// Edges are listed in row-major scan order of the lower-id endpoint.
inline std::vector<std::pair<int, int>> cz_layer_edges(const GridSpec& grid,
                                                       int config) {
  std::vector<std::pair<int, int>> edges;
  const bool vertical = (config % 2) != 0;
  const int stripe = (config / 2) % 4;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (!vertical) {
        if (c + 1 < grid.cols && (2 * r + c) % 4 == stripe) {
          edges.emplace_back(grid.qubit_at(r, c), grid.qubit_at(r, c + 1));
        }
      } else {
        if (r + 1 < grid.rows && (r + 2 * c) % 4 == stripe) {
          edges.emplace_back(grid.qubit_at(r, c), grid.qubit_at(r + 1, c));
        }
      }
    }
  }
  return edges;
}

/// Generates the random circuit family on a rectangular grid.
///
/// Layout of a generated circuit with t inner cycles:
///   cycle 0:     H on every qubit.
///   cycle i=1..t: CZ configuration (i-1) mod 8, then single-qubit fill:
///     - a qubit in a CZ at cycle i-1 and CZ-free at cycle i gets sqrt(X) or
///       sqrt(Y), chosen by one PRNG bit (0 -> sqrt(X), 1 -> sqrt(Y));
///     - a qubit with sqrt(X), sqrt(Y) or H at cycle i-1 and CZ-free at
///       cycle i gets T;
///     - any other CZ-free qubit gets no gate this cycle (in particular a
///       qubit whose previous-cycle gate was T idles until its next CZ).
///   cycle t+1:   H on every qubit.
///
/// PRNG bits are drawn from SplitMix64(seed), one per sqrt(X)/sqrt(Y)
/// placement, scanning qubits in ascending id within each cycle. The result
/// is therefore byte-identical across platforms for fixed (grid, t, seed).
inline Circuit generate_random_circuit(const GridSpec& grid, int t,
                                       uint64_t seed) {
  if (grid.rows <= 0 || grid.cols <= 0) {
    throw BuildError("grid dimensions must be positive");
  }
  if (t < 0) {
    throw BuildError("depth must be non-negative");
  }
  const int n = grid.qubit_count();
  Circuit circuit;
  circuit.n_qubits = n;
  circuit.depth_t = t;
  circuit.grid = grid;

  SplitMix64 rng(seed);

  enum class Prev { None, H, Sqrt, T, CZ };
  std::vector<Prev> prev(n, Prev::None);

  for (int q = 0; q < n; ++q) {
    circuit.gates.push_back(detail::make_gate(GateKind::H, {q}, 0));
    prev[q] = Prev::H;
  }

  for (int cycle = 1; cycle <= t; ++cycle) {
    const auto edges = cz_layer_edges(grid, (cycle - 1) % 8);
    std::vector<bool> in_cz(n, false);
    for (const auto& [a, b] : edges) {
      circuit.gates.push_back(detail::make_gate(GateKind::CZ, {a, b}, cycle));
      in_cz[a] = in_cz[b] = true;
    }
    std::vector<Prev> next(n, Prev::None);
    for (int q = 0; q < n; ++q) {
      if (in_cz[q]) {
        next[q] = Prev::CZ;
      } else if (prev[q] == Prev::CZ) {
        GateKind kind = rng.next_bit() ? GateKind::SqrtY : GateKind::SqrtX;
        circuit.gates.push_back(detail::make_gate(kind, {q}, cycle));
        next[q] = Prev::Sqrt;
      } else if (prev[q] == Prev::H || prev[q] == Prev::Sqrt) {
        circuit.gates.push_back(detail::make_gate(GateKind::T, {q}, cycle));
        next[q] = Prev::T;
      }
      // else: no gate; next[q] stays None, so the qubit keeps idling.
    }
    prev = std::move(next);
  }

  for (int q = 0; q < n; ++q) {
    circuit.gates.push_back(detail::make_gate(GateKind::H, {q}, t + 1));
  }
  return circuit;
}

/// Parses circuit text: first non-comment line is the qubit count, each
/// following non-empty line is `<cycle> <gate> <q0> [<q1>]` with gate one of
/// h, t, x_1_2, y_1_2, cz. Lines starting with '#' are ignored.
inline Circuit parse_grcs(std::string_view text) {
  if (text.empty()) {
    throw ParseError("empty circuit text");
  }
  Circuit circuit;
  bool have_count = false;
  int max_cycle = 0;
  // (cycle, qubit) occupancy for duplicate detection.
  std::vector<std::vector<bool>> busy;

  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    if (!have_count) {
      int n = 0;
      if (!(fields >> n) || n <= 0) {
        throw ParseError(line_no, "expected positive qubit count");
      }
      std::string extra;
      if (fields >> extra) {
        throw ParseError(line_no, "trailing tokens after qubit count");
      }
      circuit.n_qubits = n;
      have_count = true;
      continue;
    }

    int cycle = 0;
    std::string name;
    if (!(fields >> cycle >> name)) {
      throw ParseError(line_no, "expected `<cycle> <gate> <q0> [<q1>]`");
    }
    if (cycle < 0) {
      throw ParseError(line_no, "negative cycle");
    }
    auto kind = gate_kind_from_name(name);
    if (!kind) {
      throw ParseError(line_no, "unknown gate \"" + name + "\"");
    }
    std::vector<int> qubits;
    int q = 0;
    while (fields >> q) qubits.push_back(q);
    if (static_cast<int>(qubits.size()) != gate_arity(*kind)) {
      throw ParseError(line_no, "gate \"" + name + "\" takes " +
                                    std::to_string(gate_arity(*kind)) +
                                    " qubit(s)");
    }
    for (int qi : qubits) {
      if (qi < 0 || qi >= circuit.n_qubits) {
        throw ParseError(line_no, "qubit id " + std::to_string(qi) +
                                      " out of range [0, " +
                                      std::to_string(circuit.n_qubits) + ")");
      }
    }
    if (qubits.size() == 2 && qubits[0] == qubits[1]) {
      throw ParseError(line_no, "two-qubit gate on identical qubits");
    }
    if (static_cast<size_t>(cycle) >= busy.size()) {
      busy.resize(cycle + 1, std::vector<bool>(circuit.n_qubits, false));
    }
    for (int qi : qubits) {
      if (busy[cycle][qi]) {
        throw ParseError(line_no, "qubit " + std::to_string(qi) +
                                      " already has a gate at cycle " +
                                      std::to_string(cycle));
      }
      busy[cycle][qi] = true;
    }
    max_cycle = std::max(max_cycle, cycle);
    circuit.gates.push_back(detail::make_gate(*kind, std::move(qubits), cycle));
  }
  if (!have_count) {
    throw ParseError("no qubit count line found");
  }
  std::stable_sort(
      circuit.gates.begin(), circuit.gates.end(),
      [](const Gate& a, const Gate& b) { return a.cycle < b.cycle; });
  circuit.depth_t = std::max(0, max_cycle - 1);
  return circuit;
}

/// Inverse of parse_grcs: emits the exact file format.
inline std::string render_grcs(const Circuit& circuit) {
  std::ostringstream out;
  out << circuit.n_qubits << "\n";
  for (const Gate& g : circuit.gates) {
    out << g.cycle << " " << gate_name(g.kind);
    for (int q : g.qubits) out << " " << q;
    out << "\n";
  }
  return out.str();
}

struct PrescriptionViolation {
  int cycle = 0;
  int qubit = 0;
  /// "a": sqrt(X)/sqrt(Y)-after-CZ rule; "b": T-after-sqrt/H rule;
  /// "boundary": missing or misplaced Hadamard boundary layer.
  std::string rule;
  std::string message;
};

/// Checks the single-qubit placement rules of the random-circuit family.
/// Empty result means the circuit is consistent with the prescription; each
/// violation names the (cycle, qubit, rule) that failed.
inline std::vector<PrescriptionViolation> validate_prescription(
    const Circuit& circuit) {
  std::vector<PrescriptionViolation> out;
  const int n = circuit.n_qubits;
  const int last_cycle = circuit.gates.empty() ? 0
                                               : circuit.gates.back().cycle;

  // occupancy[cycle][qubit] -> gate kind at that spot, if any.
  std::vector<std::vector<std::optional<GateKind>>> at(
      last_cycle + 1, std::vector<std::optional<GateKind>>(n));
  for (const Gate& g : circuit.gates) {
    for (int q : g.qubits) at[g.cycle][q] = g.kind;
  }

  for (int q = 0; q < n; ++q) {
    if (at[0][q] != GateKind::H) {
      out.push_back({0, q, "boundary", "cycle 0 must be all Hadamards"});
    }
    if (at[last_cycle][q] != GateKind::H) {
      out.push_back(
          {last_cycle, q, "boundary", "final cycle must be all Hadamards"});
    }
  }

  for (int cycle = 1; cycle < last_cycle; ++cycle) {
    for (int q = 0; q < n; ++q) {
      const auto prev = at[cycle - 1][q];
      const auto here = at[cycle][q];
      if (here == GateKind::CZ) continue;  // CZ placement is the layout's job
      const bool prev_cz = prev == GateKind::CZ;
      const bool prev_sq = prev == GateKind::H || prev == GateKind::SqrtX ||
                           prev == GateKind::SqrtY;
      if (prev_cz) {
        if (here != GateKind::SqrtX && here != GateKind::SqrtY) {
          out.push_back({cycle, q, "a",
                         "qubit left a CZ and must carry sqrt(X) or sqrt(Y)"});
        }
      } else if (prev_sq) {
        if (here != GateKind::T) {
          out.push_back(
              {cycle, q, "b", "qubit after sqrt(X)/sqrt(Y)/H must carry T"});
        }
      } else if (here.has_value()) {
        const char* rule = (*here == GateKind::T) ? "b" : "a";
        out.push_back({cycle, q, rule,
                       "qubit had no CZ or sqrt/H in the previous cycle and "
                       "must idle"});
      }
    }
  }
  return out;
}

}  // namespace qsimnet
