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

#include <atomic>
#include <chrono>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <thread>
#include <vector>

#include "qsimnet/errors.hpp"
#include "qsimnet/network.hpp"
#include "qsimnet/planner.hpp"

namespace qsimnet {

/// Values for the sliced indices of one subtask.
struct SliceAssignment {
  std::map<IndexId, int> values;
};

/// Assignment for subtask `ordinal` in [0, 2^k): bit j of the ordinal is the
/// value of sliced_indices[j]. This enumeration order is also the fixed
/// accumulation order of amplitude().
inline SliceAssignment assignment_from_ordinal(const SlicePlan& plan,
                                               uint64_t ordinal) {
  SliceAssignment a;
  for (size_t j = 0; j < plan.sliced_indices.size(); ++j) {
    a.values[plan.sliced_indices[j]] = static_cast<int>((ordinal >> j) & 1u);
  }
  return a;
}

struct AmplitudeResult {
  Bitstring bitstring;
  std::complex<double> amplitude;
  uint64_t subtasks_evaluated = 0;
  double wall_seconds = 0.0;
};

struct EvalStats {
  /// Largest entry count over the step results of the replay; 0 when the
  /// plan is empty (nothing is allocated).
  size_t peak_intermediate_entries = 0;
};

/// Evaluates one subtask: pins every sliced index on every tensor holding
/// it, replays the per-slice plan, returns the resulting scalar. Scratch
/// state (tensor copies, edge map) is fresh per call; nothing is shared.
inline std::complex<double> evaluate_subtask(const TensorNetwork& network,
                                             const SlicePlan& plan,
                                             const SliceAssignment& assignment,
                                             EvalStats* stats = nullptr) {
  if (assignment.values.size() != plan.sliced_indices.size()) {
    throw SliceError("assignment does not cover the sliced indices");
  }
  TensorNetwork net = network;
  for (IndexId idx : plan.sliced_indices) {
    auto vit = assignment.values.find(idx);
    if (vit == assignment.values.end()) {
      throw SliceError("assignment missing sliced index " +
                       std::to_string(idx));
    }
    auto eit = net.edges.find(idx);
    if (eit == net.edges.end()) {
      throw SliceError("sliced index " + std::to_string(idx) +
                       " not present in network");
    }
    for (NodeId holder : eit->second) {
      net.nodes.at(holder) = fix_index(net.nodes.at(holder), idx, vit->second);
    }
    net.edges.erase(eit);
  }

  size_t peak = 0;
  for (const auto& [a, b] : plan.per_slice_plan.steps) {
    if (!net.nodes.count(a) || !net.nodes.count(b)) {
      throw ContractError("plan step references a missing node");
    }
    detail::contract_nodes(net, a, b, a);
    peak = std::max(peak, net.nodes.at(a).size());
  }
  if (stats) stats->peak_intermediate_entries = peak;
  if (net.nodes.size() != 1) {
    throw ContractError("plan did not reduce the network to a single node");
  }
  const Tensor& last = net.nodes.begin()->second;
  if (last.rank() != 0) {
    throw ContractError("plan left open structure behind");
  }
  return last.scalar();
}

namespace detail {

/// Runs fn(i) for i in [0, count) on `parallelism` threads, dispatching by
/// atomic counter. Exceptions are rethrown on the caller thread.
inline void parallel_for(uint64_t count, int parallelism,
                         const std::function<void(uint64_t)>& fn) {
  if (parallelism < 1) {
    throw Error("parallelism must be >= 1");
  }
  const int threads =
      static_cast<int>(std::min<uint64_t>(parallelism, std::max<uint64_t>(count, 1)));
  if (threads <= 1) {
    for (uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<uint64_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (uint64_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          fn(i);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Full amplitude: sum of evaluate_subtask over all 2^k assignments.
/// Subtasks run on a pool of `parallelism` threads and land in a pre-sized
/// slot array; the reduction is a single-threaded left fold in ordinal
/// order, so the result is bit-identical at any parallelism level.
inline AmplitudeResult amplitude(const TensorNetwork& network,
                                 const SlicePlan& plan, int parallelism,
                                 Bitstring label = {},
                                 EvalStats* stats = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const uint64_t count = plan.subtask_count;
  std::vector<std::complex<double>> slots(count);
  std::vector<size_t> peaks(count, 0);
  detail::parallel_for(count, parallelism, [&](uint64_t i) {
    EvalStats s;
    slots[i] = evaluate_subtask(network, plan, assignment_from_ordinal(plan, i),
                                &s);
    peaks[i] = s.peak_intermediate_entries;
  });
  std::complex<double> sum(0.0, 0.0);
  for (uint64_t i = 0; i < count; ++i) sum += slots[i];
  AmplitudeResult result;
  result.bitstring = std::move(label);
  result.amplitude = sum;
  result.subtasks_evaluated = count;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (stats) {
    stats->peak_intermediate_entries = 0;
    for (size_t p : peaks) {
      stats->peak_intermediate_entries =
          std::max(stats->peak_intermediate_entries, p);
    }
  }
  return result;
}

/// Recipe for stamping out structurally identical networks that differ only
/// in the output projectors, so one slice plan serves a whole batch.
struct NetworkTemplate {
  Circuit circuit;
  bool simplify_network = true;

  TensorNetwork instantiate(const Bitstring& output) const {
    TensorNetwork net = build_network(circuit, output);
    return simplify_network ? simplify(net) : net;
  }

  /// Plans once on a throwaway instantiation. The structure of every
  /// instantiation is identical (simplification decisions depend only on
  /// ranks and ids, never on tensor values), so the plan transfers.
  SlicePlan plan(int max_log2_size, uint64_t seed, int restarts = 4) const {
    TensorNetwork net = instantiate(Bitstring::zeros(circuit.n_qubits));
    ContractionPlan order = find_order(net, seed, restarts);
    return select_slices(net, order, max_log2_size);
  }
};

/// Amplitudes for a batch of output bitstrings sharing one slice plan.
///
/// All subtasks of a window of amplitudes feed one thread pool, so trailing
/// idle slots appear once per window rather than once per amplitude; that is
/// what makes the per-amplitude cost of a large batch no worse than a
/// single-amplitude run. Reported wall_seconds is batch elapsed divided by
/// the batch size (planning/instantiation happens inside and is included;
/// order-finding is not, it happened when the plan was made).
inline std::vector<AmplitudeResult> batch_amplitudes(
    const NetworkTemplate& tmpl, const SlicePlan& plan,
    const std::vector<Bitstring>& outputs, int parallelism) {
  const auto t0 = std::chrono::steady_clock::now();
  const uint64_t n_s = plan.subtask_count;
  std::vector<AmplitudeResult> results(outputs.size());

  const size_t window =
      std::max<size_t>(64, static_cast<size_t>(parallelism) * 4);
  for (size_t base = 0; base < outputs.size(); base += window) {
    const size_t n_amp = std::min(window, outputs.size() - base);
    std::vector<TensorNetwork> nets;
    nets.reserve(n_amp);
    for (size_t a = 0; a < n_amp; ++a) {
      nets.push_back(tmpl.instantiate(outputs[base + a]));
    }
    std::vector<std::complex<double>> slots(n_amp * n_s);
    detail::parallel_for(n_amp * n_s, parallelism, [&](uint64_t g) {
      const uint64_t a = g / n_s;
      const uint64_t s = g % n_s;
      slots[g] =
          evaluate_subtask(nets[a], plan, assignment_from_ordinal(plan, s));
    });
    for (size_t a = 0; a < n_amp; ++a) {
      std::complex<double> sum(0.0, 0.0);
      for (uint64_t s = 0; s < n_s; ++s) sum += slots[a * n_s + s];
      auto& r = results[base + a];
      r.bitstring = outputs[base + a];
      r.amplitude = sum;
      r.subtasks_evaluated = n_s;
    }
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  for (auto& r : results) {
    r.wall_seconds = outputs.empty() ? 0.0 : elapsed / outputs.size();
  }
  return results;
}

}  // namespace qsimnet
