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
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsimnet/errors.hpp"
#include "qsimnet/network.hpp"
#include "qsimnet/rng.hpp"

namespace qsimnet {

/// Pairwise contraction sequence. Each step merges `second` into `first`
/// (the result adopts the first id). An empty plan is the valid plan for a
/// single-node network.
struct ContractionPlan {
  std::vector<std::pair<NodeId, NodeId>> steps;
  /// Complex multiply-adds, counting 2^|index union| per step.
  double est_flops = 0.0;
  /// log2 of the largest step-result entry count; 0 for an empty plan.
  int est_max_log2_size = 0;
  /// Search parameters, kept so slicing can re-plan consistently.
  uint64_t seed = 0;
  int restarts = 1;
};

struct SlicePlan {
  std::vector<IndexId> sliced_indices;  // in pick order
  uint64_t subtask_count = 1;           // 2^k
  ContractionPlan per_slice_plan;
  int per_slice_max_log2_size = 0;
};

struct CostReport {
  double total_flops = 0.0;
  double per_slice_flops = 0.0;
  int max_log2_size = 0;
  uint64_t subtask_count = 1;

  /// Predicted wall seconds for computing `n_amplitudes` amplitudes with
  /// `workers` equal workers, given a measured per-subtask time.
  double predicted_seconds(uint64_t n_amplitudes, int workers,
                           double per_subtask_seconds) const {
    const uint64_t units = n_amplitudes * subtask_count;
    const uint64_t waves = (units + workers - 1) / workers;
    return per_subtask_seconds * static_cast<double>(waves);
  }
};

/// Index-only view of a network: everything the planner needs, no tensor
/// data. Also the replay structure used to validate plans.
struct PlanGraph {
  std::map<NodeId, std::set<IndexId>> node_indices;
  std::map<IndexId, std::set<NodeId>> holders;
  std::map<IndexId, int> dim;

  static PlanGraph from_network(const TensorNetwork& net) {
    PlanGraph g;
    for (const auto& [id, t] : net.nodes) {
      g.node_indices[id] = {t.indices.begin(), t.indices.end()};
      for (size_t i = 0; i < t.indices.size(); ++i) {
        g.holders[t.indices[i]].insert(id);
        g.dim[t.indices[i]] = t.dims[i];
      }
    }
    return g;
  }

  size_t entries_of(NodeId id) const {
    size_t e = 1;
    for (IndexId idx : node_indices.at(id)) {
      e *= static_cast<size_t>(dim.at(idx));
    }
    return e;
  }

  /// Drops an index everywhere (slicing pins it outside the plan).
  void remove_index(IndexId idx) {
    auto it = holders.find(idx);
    if (it == holders.end()) {
      throw SliceError("index " + std::to_string(idx) + " not in graph");
    }
    for (NodeId id : it->second) node_indices.at(id).erase(idx);
    holders.erase(it);
    dim.erase(idx);
  }

  bool connected() const {
    if (node_indices.size() <= 1) return true;
    std::set<NodeId> seen;
    std::vector<NodeId> stack = {node_indices.begin()->first};
    seen.insert(stack.back());
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      for (IndexId idx : node_indices.at(id)) {
        for (NodeId h : holders.at(idx)) {
          if (seen.insert(h).second) stack.push_back(h);
        }
      }
    }
    return seen.size() == node_indices.size();
  }

  struct StepEffect {
    size_t result_entries = 1;
    size_t summed_entries = 1;
  };

  /// Applies one contraction step; mirrors the engine's execution exactly.
  /// Sums the indices shared by the pair that no third node holds.
  StepEffect contract(NodeId survivor, NodeId other) {
    if (survivor == other || !node_indices.count(survivor) ||
        !node_indices.count(other)) {
      throw PlanError("invalid contraction step");
    }
    auto& sa = node_indices.at(survivor);
    auto& sb = node_indices.at(other);
    StepEffect effect;
    std::set<IndexId> result;
    for (IndexId idx : sa) {
      if (sb.count(idx)) {
        bool external = false;
        for (NodeId h : holders.at(idx)) {
          if (h != survivor && h != other) {
            external = true;
            break;
          }
        }
        if (!external) {
          effect.summed_entries *= static_cast<size_t>(dim.at(idx));
          continue;
        }
      }
      result.insert(idx);
    }
    for (IndexId idx : sb) {
      if (!sa.count(idx)) result.insert(idx);
    }
    for (IndexId idx : result) {
      effect.result_entries *= static_cast<size_t>(dim.at(idx));
    }
    for (IndexId idx : sa) {
      auto& h = holders.at(idx);
      h.erase(survivor);
      if (h.empty()) {
        holders.erase(idx);
        dim.erase(idx);
      }
    }
    for (IndexId idx : sb) {
      auto it = holders.find(idx);
      if (it != holders.end()) {
        it->second.erase(other);
        if (it->second.empty()) {
          holders.erase(it);
          dim.erase(idx);
        }
      }
    }
    node_indices.erase(other);
    sa = result;
    for (IndexId idx : result) holders[idx].insert(survivor);
    return effect;
  }
};

namespace detail {

inline int log2_entries(size_t entries) {
  int b = 0;
  while ((size_t{1} << (b + 1)) <= entries) ++b;
  if ((size_t{1} << b) < entries) ++b;  // round up for non-powers of two
  return b;
}

/// One greedy elimination pass. At every step, among the adjacent pairs,
/// contract the one minimizing (result entries - entries removed); ties go
/// to the lexicographically lowest pair after the seeded relabeling. When no
/// adjacent pair remains but several nodes do (sliced structures can be
/// disconnected), the two smallest nodes are merged as an outer product.
inline ContractionPlan greedy_order(PlanGraph g, uint64_t restart_seed) {
  ContractionPlan plan;
  std::vector<NodeId> ids;
  for (const auto& [id, _] : g.node_indices) ids.push_back(id);
  SplitMix64 rng(restart_seed);
  rng.shuffle(ids);
  std::map<NodeId, size_t> perm;
  for (size_t i = 0; i < ids.size(); ++i) perm[ids[i]] = i;

  size_t max_entries = 0;
  while (g.node_indices.size() > 1) {
    double best_score = std::numeric_limits<double>::infinity();
    std::pair<size_t, size_t> best_rank{0, 0};
    std::optional<std::pair<NodeId, NodeId>> best;

    for (const auto& [a, idxs] : g.node_indices) {
      std::set<NodeId> partners;
      for (IndexId idx : idxs) {
        for (NodeId h : g.holders.at(idx)) {
          if (h > a) partners.insert(h);
        }
      }
      const double ea = static_cast<double>(g.entries_of(a));
      for (NodeId b : partners) {
        // Result entries if we contracted (a, b) right now.
        double result_entries = 1.0;
        const auto& sa = g.node_indices.at(a);
        const auto& sb = g.node_indices.at(b);
        for (IndexId idx : sa) {
          bool shared = sb.count(idx) > 0;
          bool external = false;
          if (shared) {
            for (NodeId h : g.holders.at(idx)) {
              if (h != a && h != b) {
                external = true;
                break;
              }
            }
          }
          if (!shared || external) result_entries *= g.dim.at(idx);
        }
        for (IndexId idx : sb) {
          if (!sa.count(idx)) result_entries *= g.dim.at(idx);
        }
        const double score =
            result_entries - ea - static_cast<double>(g.entries_of(b));
        std::pair<size_t, size_t> rank{std::min(perm[a], perm[b]),
                                       std::max(perm[a], perm[b])};
        if (score < best_score ||
            (score == best_score && rank < best_rank)) {
          best_score = score;
          best_rank = rank;
          best = {a, b};
        }
      }
    }

    NodeId u, v;
    if (best) {
      u = best->first;
      v = best->second;
    } else {
      // Outer-product fallback: two smallest nodes, then perm order.
      std::vector<NodeId> rest;
      for (const auto& [id, _] : g.node_indices) rest.push_back(id);
      std::sort(rest.begin(), rest.end(), [&](NodeId x, NodeId y) {
        auto kx = std::make_pair(g.entries_of(x), perm[x]);
        auto ky = std::make_pair(g.entries_of(y), perm[y]);
        return kx < ky;
      });
      u = rest[0];
      v = rest[1];
    }
    const NodeId survivor = std::min(u, v);
    const NodeId other = std::max(u, v);
    auto effect = g.contract(survivor, other);
    plan.steps.emplace_back(survivor, other);
    plan.est_flops += static_cast<double>(effect.result_entries) *
                      static_cast<double>(effect.summed_entries);
    max_entries = std::max(max_entries, effect.result_entries);
  }
  plan.est_max_log2_size =
      plan.steps.empty() ? 0 : log2_entries(std::max<size_t>(max_entries, 1));
  return plan;
}

inline bool plan_better(const ContractionPlan& a, const ContractionPlan& b) {
  if (a.est_flops != b.est_flops) return a.est_flops < b.est_flops;
  return a.est_max_log2_size < b.est_max_log2_size;
}

inline ContractionPlan best_order_on_graph(const PlanGraph& g, uint64_t seed,
                                           int restarts) {
  ContractionPlan best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    ContractionPlan candidate = greedy_order(g, derive_seed(seed, r));
    if (!have || plan_better(candidate, best)) {
      best = std::move(candidate);
      have = true;
    }
  }
  best.seed = seed;
  best.restarts = restarts;
  return best;
}

}  // namespace detail

/// Finds a pairwise contraction order for a closed, connected network.
/// Greedy with seeded random tie-breaking; keeps the best of `restarts`
/// independent trials (by est_flops, then est_max_log2_size, then trial
/// index). Deterministic for fixed (network structure, seed, restarts); cost
/// fields come from index bookkeeping only.
inline ContractionPlan find_order(const TensorNetwork& net, uint64_t seed,
                                  int restarts = 4) {
  if (!net.open_indices.empty()) {
    throw PlanError("network has open indices");
  }
  if (restarts < 1) {
    throw PlanError("restarts must be >= 1");
  }
  if (net.nodes.empty()) {
    throw PlanError("empty network");
  }
  PlanGraph g = PlanGraph::from_network(net);
  if (!g.connected()) {
    throw PlanError(
        "network is disconnected; contract components independently");
  }
  return detail::best_order_on_graph(g, seed, restarts);
}

constexpr int kDefaultMaxSlicedIndices = 30;

/// Picks slicing indices until every per-slice intermediate fits in
/// 2^max_log2_size entries. Greedy: each round re-plans with every remaining
/// index pinned, keeps the index that most reduces est_max_log2_size (ties:
/// lower est_flops, then lower index id), then re-plans from the reduced
/// structure. All 2^k assignments share one per-slice plan, so every subtask
/// has identical cost by construction.
inline SlicePlan select_slices(const TensorNetwork& net,
                               const ContractionPlan& plan, int max_log2_size,
                               int max_sliced = kDefaultMaxSlicedIndices) {
  if (max_log2_size < 1) {
    throw SliceError("memory cap must be at least 2^1 entries");
  }
  SlicePlan out;
  out.per_slice_plan = plan;
  out.per_slice_max_log2_size = plan.est_max_log2_size;
  PlanGraph current = PlanGraph::from_network(net);

  while (out.per_slice_max_log2_size > max_log2_size) {
    if (static_cast<int>(out.sliced_indices.size()) >= max_sliced) {
      throw SliceError("cannot reach memory cap 2^" +
                       std::to_string(max_log2_size) + " within " +
                       std::to_string(max_sliced) + " sliced indices");
    }
    if (current.holders.empty()) {
      throw SliceError("no indices left to slice");
    }
    std::optional<IndexId> best_idx;
    ContractionPlan best_plan;
    for (const auto& [idx, _] : current.holders) {
      PlanGraph probe = current;
      probe.remove_index(idx);
      ContractionPlan p =
          detail::best_order_on_graph(probe, plan.seed, plan.restarts);
      const bool better =
          !best_idx || p.est_max_log2_size < best_plan.est_max_log2_size ||
          (p.est_max_log2_size == best_plan.est_max_log2_size &&
           p.est_flops < best_plan.est_flops);
      if (better) {
        best_idx = idx;
        best_plan = std::move(p);
      }
    }
    current.remove_index(*best_idx);
    out.sliced_indices.push_back(*best_idx);
    out.per_slice_plan = std::move(best_plan);
    out.per_slice_max_log2_size = out.per_slice_plan.est_max_log2_size;
  }
  out.subtask_count = uint64_t{1} << out.sliced_indices.size();
  return out;
}

/// Exact flop and size accounting for a sliced plan, plus the wall-time
/// predictor (see CostReport::predicted_seconds).
inline CostReport estimate_cost(const ContractionPlan& plan,
                                const SlicePlan& slice_plan) {
  (void)plan;
  CostReport report;
  report.per_slice_flops = slice_plan.per_slice_plan.est_flops;
  report.subtask_count = slice_plan.subtask_count;
  report.total_flops =
      report.per_slice_flops * static_cast<double>(report.subtask_count);
  report.max_log2_size = slice_plan.per_slice_max_log2_size;
  return report;
}

/// True iff replaying `steps` on the graph consumes every node and ends with
/// exactly one.
inline bool replay_valid(PlanGraph g,
                         const std::vector<std::pair<NodeId, NodeId>>& steps) {
  for (const auto& [a, b] : steps) {
    if (!g.node_indices.count(a) || !g.node_indices.count(b) || a == b) {
      return false;
    }
    g.contract(a, b);
  }
  return g.node_indices.size() == 1;
}

inline nlohmann::json plan_to_json(const ContractionPlan& plan) {
  nlohmann::json j;
  j["v"] = 1;
  j["steps"] = plan.steps;
  j["est_flops"] = plan.est_flops;
  j["est_max_log2_size"] = plan.est_max_log2_size;
  j["seed"] = plan.seed;
  j["restarts"] = plan.restarts;
  return j;
}

inline ContractionPlan plan_from_json(const nlohmann::json& j) {
  ContractionPlan plan;
  plan.steps = j.at("steps").get<std::vector<std::pair<NodeId, NodeId>>>();
  plan.est_flops = j.at("est_flops").get<double>();
  plan.est_max_log2_size = j.at("est_max_log2_size").get<int>();
  plan.seed = j.at("seed").get<uint64_t>();
  plan.restarts = j.at("restarts").get<int>();
  return plan;
}

inline nlohmann::json slice_plan_to_json(const SlicePlan& sp) {
  nlohmann::json j;
  j["v"] = 1;
  j["sliced_indices"] = sp.sliced_indices;
  j["subtask_count"] = sp.subtask_count;
  j["per_slice_plan"] = plan_to_json(sp.per_slice_plan);
  j["per_slice_max_log2_size"] = sp.per_slice_max_log2_size;
  return j;
}

inline SlicePlan slice_plan_from_json(const nlohmann::json& j) {
  SlicePlan sp;
  sp.sliced_indices = j.at("sliced_indices").get<std::vector<IndexId>>();
  sp.subtask_count = j.at("subtask_count").get<uint64_t>();
  sp.per_slice_plan = plan_from_json(j.at("per_slice_plan"));
  sp.per_slice_max_log2_size = j.at("per_slice_max_log2_size").get<int>();
  return sp;
}

inline nlohmann::json cost_report_to_json(const CostReport& r) {
  nlohmann::json j;
  j["total_flops"] = r.total_flops;
  j["per_slice_flops"] = r.per_slice_flops;
  j["max_log2_size"] = r.max_log2_size;
  j["subtask_count"] = r.subtask_count;
  return j;
}

}  // namespace qsimnet
