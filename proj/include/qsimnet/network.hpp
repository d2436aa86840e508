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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsimnet/circuit.hpp"
#include "qsimnet/errors.hpp"
#include "qsimnet/tensor.hpp"

namespace qsimnet {

using NodeId = int64_t;

/// Measurement outcome: bits[q] is the bit of qubit q.
struct Bitstring {
  std::vector<uint8_t> bits;

  int n() const { return static_cast<int>(bits.size()); }

  static Bitstring zeros(int n) { return Bitstring{std::vector<uint8_t>(n, 0)}; }

  static Bitstring from_string(const std::string& s) {
    Bitstring b;
    b.bits.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') {
        throw ParseError("bitstring must contain only 0 and 1");
      }
      b.bits.push_back(c == '1' ? 1 : 0);
    }
    return b;
  }

  std::string to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (uint8_t b : bits) s.push_back(b ? '1' : '0');
    return s;
  }

  /// Basis index with qubit 0 as the most significant bit.
  uint64_t to_basis_index() const {
    uint64_t v = 0;
    for (uint8_t b : bits) v = (v << 1) | b;
    return v;
  }

  static Bitstring from_basis_index(uint64_t v, int n) {
    Bitstring b;
    b.bits.resize(n);
    for (int q = 0; q < n; ++q) b.bits[q] = (v >> (n - 1 - q)) & 1u;
    return b;
  }

  bool operator==(const Bitstring&) const = default;
};

/// A closed tensor network: nodes hold tensors, hyperedges are running
/// indices shared between nodes. `wire_of` is builder metadata mapping each
/// index to the qubit worldline it lives on; it is empty for networks that
/// did not come from a circuit and is carried through simplification.
struct TensorNetwork {
  std::map<NodeId, Tensor> nodes;
  std::map<IndexId, std::set<NodeId>> edges;
  std::vector<IndexId> open_indices;
  std::map<IndexId, int> wire_of;

  size_t node_count() const { return nodes.size(); }

  void check_consistent() const {
    std::map<IndexId, std::set<NodeId>> rebuilt;
    for (const auto& [id, t] : nodes) {
      for (IndexId idx : t.indices) rebuilt[idx].insert(id);
    }
    if (rebuilt != edges) {
      throw BuildError("edge map out of sync with node tensors");
    }
  }
};

namespace detail {

inline void index_edges(TensorNetwork& net) {
  net.edges.clear();
  for (const auto& [id, t] : net.nodes) {
    for (IndexId idx : t.indices) net.edges[idx].insert(id);
  }
}

/// Contracts nodes `a` and `b` of `net` in place; the result keeps id
/// `survivor` (one of the two). Sums exactly the indices shared by a and b
/// that no third node holds.
inline void contract_nodes(TensorNetwork& net, NodeId a, NodeId b,
                           NodeId survivor) {
  const Tensor& ta = net.nodes.at(a);
  const Tensor& tb = net.nodes.at(b);
  std::vector<IndexId> summed;
  for (IndexId id : ta.indices) {
    if (!tb.has_index(id)) continue;
    const auto& holders = net.edges.at(id);
    bool external = false;
    for (NodeId h : holders) {
      if (h != a && h != b) {
        external = true;
        break;
      }
    }
    if (!external) summed.push_back(id);
  }
  Tensor result = contract_over(ta, tb, summed);

  for (IndexId id : summed) net.edges.erase(id);
  for (IndexId id : ta.indices) {
    auto it = net.edges.find(id);
    if (it != net.edges.end()) it->second.erase(a);
  }
  for (IndexId id : tb.indices) {
    auto it = net.edges.find(id);
    if (it != net.edges.end()) it->second.erase(b);
  }
  net.nodes.erase(a);
  net.nodes.erase(b);
  for (IndexId id : result.indices) net.edges[id].insert(survivor);
  net.nodes.emplace(survivor, std::move(result));
}

}  // namespace detail

/// Builds the closed network whose contraction is <output|circuit|0...0>.
///
/// One rank-1 tensor (1,0) per input qubit, one tensor per gate with fresh
/// output indices per touched wire, one rank-1 projector per output qubit.
/// Node ids are assigned in that construction order, index ids in wire order;
/// both are deterministic for a given (circuit, output).
inline TensorNetwork build_network(const Circuit& circuit,
                                   const Bitstring& output) {
  if (output.n() != circuit.n_qubits) {
    throw BuildError("output bitstring length " +
                     std::to_string(output.n()) + " does not match circuit (" +
                     std::to_string(circuit.n_qubits) + " qubits)");
  }
  TensorNetwork net;
  NodeId next_node = 0;
  IndexId next_index = 0;
  std::vector<IndexId> cur(circuit.n_qubits);

  for (int q = 0; q < circuit.n_qubits; ++q) {
    IndexId idx = next_index++;
    cur[q] = idx;
    net.wire_of[idx] = q;
    net.nodes.emplace(next_node++,
                      make_tensor({idx}, {2}, {{1.0, 0.0}, {0.0, 0.0}}));
  }

  for (const Gate& g : circuit.gates) {
    const auto m = gate_matrix(g.kind);
    if (g.qubits.size() == 1) {
      const int q = g.qubits[0];
      IndexId in = cur[q];
      IndexId out = next_index++;
      net.wire_of[out] = q;
      // indices [out, in], row-major: data[o*2 + i] = M[o][i].
      net.nodes.emplace(next_node++, make_tensor({out, in}, {2, 2}, m));
      cur[q] = out;
    } else {
      const int qa = g.qubits[0], qb = g.qubits[1];
      IndexId ia = cur[qa], ib = cur[qb];
      IndexId oa = next_index++;
      IndexId ob = next_index++;
      net.wire_of[oa] = qa;
      net.wire_of[ob] = qb;
      // indices [oa, ob, ia, ib]; entry = M[(oa,ob)][(ia,ib)].
      std::vector<std::complex<double>> data(16);
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) data[r * 4 + c] = m[r * 4 + c];
      }
      net.nodes.emplace(next_node++,
                        make_tensor({oa, ob, ia, ib}, {2, 2, 2, 2}, data));
      cur[qa] = oa;
      cur[qb] = ob;
    }
  }

  for (int q = 0; q < circuit.n_qubits; ++q) {
    std::vector<std::complex<double>> proj = {{0.0, 0.0}, {0.0, 0.0}};
    proj[output.bits[q]] = {1.0, 0.0};
    net.nodes.emplace(next_node++, make_tensor({cur[q]}, {2}, proj));
  }

  detail::index_edges(net);
  return net;
}

/// Contracts the whole network to a scalar in a fixed canonical order:
/// repeatedly merge the lowest-id node with its lowest-id neighbour (or with
/// the next node by id when it has none). Reference path for tests and for
/// small networks; no attempt at a good ordering.
inline std::complex<double> contract_all(TensorNetwork net) {
  if (net.nodes.empty()) throw ContractError("empty network");
  while (net.nodes.size() > 1) {
    const NodeId a = net.nodes.begin()->first;
    NodeId target = -1;
    for (IndexId id : net.nodes.begin()->second.indices) {
      for (NodeId h : net.edges.at(id)) {
        if (h != a && (target < 0 || h < target)) target = h;
      }
    }
    if (target < 0) target = std::next(net.nodes.begin())->first;
    detail::contract_nodes(net, a, target, std::min(a, target));
  }
  const Tensor& last = net.nodes.begin()->second;
  if (last.rank() != 0) {
    throw ContractError("network did not close to a scalar");
  }
  return last.scalar();
}

/// Entry-count guard for pendant-wire folding in simplify().
constexpr size_t kSimplifyFoldCap = size_t{1} << 16;

/// Structural simplification. Exact: the contracted value of the network is
/// unchanged (up to floating-point reassociation).
///
/// Two rules run to a joint fixpoint:
///  1. every rank<=2 tensor is absorbed into its lowest-id neighbour (a
///     lone scalar is multiplied into the lowest-id remaining node), which
///     never grows the neighbour;
///  2. when wire metadata is present, a pendant qubit -- one whose tensors
///     touch at most one other qubit's wire -- has its whole worldline chain
///     folded into a single node attached to that neighbouring wire, as long
///     as no fold intermediate exceeds kSimplifyFoldCap entries. This is
///     what eliminates single-neighbour corner qubits from grid-like
///     layouts.
///
/// Surviving nodes keep the smallest id involved, so the output structure is
/// deterministic and independent of tensor values.
inline TensorNetwork simplify(const TensorNetwork& input) {
  TensorNetwork net = input;
  bool changed = true;
  while (changed) {
    changed = false;

    // Rule 1: absorb small tensors.
    bool absorbed = true;
    while (absorbed && net.nodes.size() > 1) {
      absorbed = false;
      for (const auto& [id, t] : net.nodes) {
        if (t.rank() > 2) continue;
        NodeId target = -1;
        for (IndexId idx : t.indices) {
          for (NodeId h : net.edges.at(idx)) {
            if (h != id && (target < 0 || h < target)) target = h;
          }
        }
        if (target < 0) {
          // Disconnected scalar (or an isolated small tensor cannot occur in
          // a closed network): fold into the lowest-id other node.
          if (t.rank() == 0) {
            target = net.nodes.begin()->first;
            if (target == id) target = std::next(net.nodes.begin())->first;
          } else {
            continue;
          }
        }
        detail::contract_nodes(net, id, target, target);
        absorbed = true;
        changed = true;
        break;
      }
    }

    // Rule 2: fold pendant qubit wires.
    if (net.wire_of.empty()) continue;
    std::set<int> wires;
    for (const auto& [idx, q] : net.wire_of) {
      if (net.edges.count(idx)) wires.insert(q);
    }
    for (int q : wires) {
      std::set<NodeId> chain;
      std::set<int> partners;
      for (const auto& [idx, holders] : net.edges) {
        auto w = net.wire_of.find(idx);
        if (w == net.wire_of.end() || w->second != q) continue;
        for (NodeId h : holders) chain.insert(h);
      }
      if (chain.size() < 2) continue;
      for (NodeId id : chain) {
        for (IndexId idx : net.nodes.at(id).indices) {
          auto w = net.wire_of.find(idx);
          if (w != net.wire_of.end() && w->second != q) partners.insert(w->second);
        }
      }
      if (partners.size() > 1) continue;

      // Predict fold sizes structurally before touching data.
      std::vector<NodeId> order(chain.begin(), chain.end());
      {
        // Symmetric difference tracks the fold intermediates exactly while
        // every index has two holders, which is all the builder produces.
        std::set<IndexId> acc(net.nodes.at(order[0]).indices.begin(),
                              net.nodes.at(order[0]).indices.end());
        bool ok = true;
        for (size_t i = 1; i < order.size(); ++i) {
          for (IndexId idx : net.nodes.at(order[i]).indices) {
            if (acc.count(idx)) {
              acc.erase(idx);
            } else {
              acc.insert(idx);
            }
          }
          if ((size_t{1} << acc.size()) > kSimplifyFoldCap) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
      }

      NodeId survivor = order[0];
      for (size_t i = 1; i < order.size(); ++i) {
        NodeId other = order[i];
        NodeId keep = std::min(survivor, other);
        detail::contract_nodes(net, survivor, other, keep);
        survivor = keep;
      }
      changed = true;
      break;  // edge structure changed; recompute wire sets
    }
  }
  return net;
}

/// JSON dump of a network: nodes with indices, dims and data as [re, im]
/// pairs, plus the edge and wire maps. Used by the planner golden tests.
inline nlohmann::json network_to_json(const TensorNetwork& net) {
  nlohmann::json j;
  j["v"] = 1;
  j["nodes"] = nlohmann::json::array();
  for (const auto& [id, t] : net.nodes) {
    nlohmann::json n;
    n["id"] = id;
    n["indices"] = t.indices;
    n["dims"] = t.dims;
    auto data = nlohmann::json::array();
    for (const auto& c : t.data) {
      data.push_back({c.real(), c.imag()});
    }
    n["data"] = std::move(data);
    j["nodes"].push_back(std::move(n));
  }
  j["edges"] = nlohmann::json::object();
  for (const auto& [idx, holders] : net.edges) {
    j["edges"][std::to_string(idx)] =
        std::vector<NodeId>(holders.begin(), holders.end());
  }
  j["open_indices"] = net.open_indices;
  j["wires"] = nlohmann::json::object();
  for (const auto& [idx, q] : net.wire_of) {
    j["wires"][std::to_string(idx)] = q;
  }
  return j;
}

inline TensorNetwork network_from_json(const nlohmann::json& j) {
  TensorNetwork net;
  for (const auto& n : j.at("nodes")) {
    std::vector<IndexId> indices = n.at("indices").get<std::vector<IndexId>>();
    std::vector<int> dims = n.at("dims").get<std::vector<int>>();
    std::vector<std::complex<double>> data;
    for (const auto& c : n.at("data")) {
      data.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    }
    net.nodes.emplace(n.at("id").get<NodeId>(),
                      make_tensor(std::move(indices), std::move(dims),
                                  std::move(data)));
  }
  net.open_indices = j.at("open_indices").get<std::vector<IndexId>>();
  if (j.contains("wires")) {
    for (const auto& [k, v] : j.at("wires").items()) {
      net.wire_of[std::stoll(k)] = v.get<int>();
    }
  }
  detail::index_edges(net);
  return net;
}

}  // namespace qsimnet
