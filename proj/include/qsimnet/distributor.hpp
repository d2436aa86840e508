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

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsimnet/circuit.hpp"
#include "qsimnet/engine.hpp"
#include "qsimnet/errors.hpp"
#include "qsimnet/planner.hpp"
#include "qsimnet/store.hpp"

namespace qsimnet {

/// One unit of distributable work: the global subtask indices [begin, end).
/// Global index g covers amplitude g / N_s, slice ordinal g % N_s.
struct UnitRange {
  uint64_t unit_id = 0;
  uint64_t begin = 0;
  uint64_t end = 0;

  uint64_t size() const { return end - begin; }
  bool operator==(const UnitRange&) const = default;
};

/// Splits the N_a * N_s global subtask indices into n_workers contiguous
/// ranges whose sizes differ by at most one (subtasks all cost the same, so
/// cardinality is the load).
inline std::vector<UnitRange> partition(uint64_t n_amplitudes,
                                        uint64_t n_subtasks, int n_workers) {
  if (n_amplitudes == 0 || n_subtasks == 0 || n_workers <= 0) {
    throw Error("partition arguments must be positive");
  }
  const uint64_t total = n_amplitudes * n_subtasks;
  const uint64_t w = static_cast<uint64_t>(n_workers);
  std::vector<UnitRange> units;
  units.reserve(w);
  uint64_t cursor = 0;
  for (uint64_t i = 0; i < w; ++i) {
    const uint64_t size = total / w + (i < total % w ? 1 : 0);
    units.push_back({i, cursor, cursor + size});
    cursor += size;
  }
  return units;
}

/// Work-distribution mode. Claim mode lets any worker take any unit through
/// an atomic claim object (fault tolerant); push mode pre-assigns units to
/// named workers in the manifest.
enum class DistributionMode { Claim, Push };

inline std::string to_string(DistributionMode m) {
  return m == DistributionMode::Claim ? "claim" : "push";
}

struct TaskManifest {
  std::string task_id;
  std::string circuit_grcs;  // inline circuit text
  std::vector<Bitstring> outputs;
  SlicePlan slice_plan;
  bool simplify_network = true;
  std::vector<UnitRange> units;
  DistributionMode mode = DistributionMode::Claim;
  std::map<uint64_t, std::string> assigned;  // push mode: unit -> worker id
  int64_t created_at_ms = 0;

  uint64_t n_amplitudes() const { return outputs.size(); }
  uint64_t n_subtasks() const { return slice_plan.subtask_count; }
};

struct SubtaskResult {
  std::string task_id;
  uint64_t unit_id = 0;
  /// One (amplitude index, re, im) entry per global subtask in the unit's
  /// range, in range order; each entry is that slice's partial sum of its
  /// amplitude. Keeping per-slice granularity lets the agent reproduce the
  /// engine's accumulation order bit for bit.
  std::vector<std::tuple<uint64_t, double, double>> partial_sums;
  std::string worker_id;
  double seconds = 0.0;
};

/// Run-level knobs: the paper's N_a / N_s / worker-count triple plus the
/// polling behaviour.
struct RunConfig {
  uint64_t n_amplitudes = 1;
  uint64_t n_subtasks = 1;
  int n_workers = 1;
  int poll_interval_ms = 50;
  double timeout_s = 300.0;
  /// Worker-only: keep scanning for new work this long after the store runs
  /// dry. 0 means exit as soon as nothing is claimable.
  int linger_ms = 0;
  DistributionMode mode = DistributionMode::Claim;
};

inline std::string manifest_key(const std::string& task_id) {
  return "runs/" + task_id + "/manifest";
}
inline std::string claim_key(const std::string& task_id, uint64_t unit) {
  return "runs/" + task_id + "/claims/" + std::to_string(unit);
}
inline std::string result_key(const std::string& task_id, uint64_t unit) {
  return "runs/" + task_id + "/results/" + std::to_string(unit);
}

inline nlohmann::json manifest_to_json(const TaskManifest& m) {
  nlohmann::json j;
  j["v"] = 1;
  j["task_id"] = m.task_id;
  j["circuit"] = m.circuit_grcs;
  auto outs = nlohmann::json::array();
  for (const auto& b : m.outputs) outs.push_back(b.to_string());
  j["outputs"] = std::move(outs);
  j["slice_plan"] = slice_plan_to_json(m.slice_plan);
  j["simplify"] = m.simplify_network;
  auto units = nlohmann::json::array();
  for (const auto& u : m.units) units.push_back({u.unit_id, u.begin, u.end});
  j["units"] = std::move(units);
  j["mode"] = to_string(m.mode);
  auto assigned = nlohmann::json::object();
  for (const auto& [unit, worker] : m.assigned) {
    assigned[std::to_string(unit)] = worker;
  }
  j["assigned"] = std::move(assigned);
  j["created_at_ms"] = m.created_at_ms;
  return j;
}

inline TaskManifest manifest_from_json(const nlohmann::json& j) {
  TaskManifest m;
  m.task_id = j.at("task_id").get<std::string>();
  m.circuit_grcs = j.at("circuit").get<std::string>();
  for (const auto& s : j.at("outputs")) {
    m.outputs.push_back(Bitstring::from_string(s.get<std::string>()));
  }
  m.slice_plan = slice_plan_from_json(j.at("slice_plan"));
  m.simplify_network = j.at("simplify").get<bool>();
  for (const auto& u : j.at("units")) {
    m.units.push_back({u.at(0).get<uint64_t>(), u.at(1).get<uint64_t>(),
                       u.at(2).get<uint64_t>()});
  }
  m.mode = j.at("mode").get<std::string>() == "push" ? DistributionMode::Push
                                                     : DistributionMode::Claim;
  for (const auto& [unit, worker] : j.at("assigned").items()) {
    m.assigned[std::stoull(unit)] = worker.get<std::string>();
  }
  m.created_at_ms = j.at("created_at_ms").get<int64_t>();
  return m;
}

inline nlohmann::json subtask_result_to_json(const SubtaskResult& r) {
  nlohmann::json j;
  j["v"] = 1;
  j["task_id"] = r.task_id;
  j["unit_id"] = r.unit_id;
  auto sums = nlohmann::json::array();
  for (const auto& [a, re, im] : r.partial_sums) sums.push_back({a, re, im});
  j["partial_sums"] = std::move(sums);
  j["worker_id"] = r.worker_id;
  j["seconds"] = r.seconds;
  return j;
}

inline SubtaskResult subtask_result_from_json(const nlohmann::json& j) {
  SubtaskResult r;
  r.task_id = j.at("task_id").get<std::string>();
  r.unit_id = j.at("unit_id").get<uint64_t>();
  for (const auto& e : j.at("partial_sums")) {
    r.partial_sums.emplace_back(e.at(0).get<uint64_t>(),
                                e.at(1).get<double>(), e.at(2).get<double>());
  }
  r.worker_id = j.at("worker_id").get<std::string>();
  r.seconds = j.at("seconds").get<double>();
  return r;
}

inline int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

/// Builds a manifest for one distributed batch. `worker_ids` is only needed
/// in push mode, where units are pre-assigned round robin.
inline TaskManifest make_manifest(std::string task_id, const Circuit& circuit,
                                  std::vector<Bitstring> outputs,
                                  SlicePlan slice_plan, bool simplify_network,
                                  int n_workers,
                                  DistributionMode mode = DistributionMode::Claim,
                                  const std::vector<std::string>& worker_ids = {}) {
  TaskManifest m;
  m.task_id = std::move(task_id);
  m.circuit_grcs = render_grcs(circuit);
  m.outputs = std::move(outputs);
  m.slice_plan = std::move(slice_plan);
  m.simplify_network = simplify_network;
  m.units = partition(m.outputs.size(), m.slice_plan.subtask_count, n_workers);
  m.mode = mode;
  if (mode == DistributionMode::Push) {
    if (worker_ids.empty()) {
      throw Error("push mode requires worker ids");
    }
    for (const auto& u : m.units) {
      m.assigned[u.unit_id] = worker_ids[u.unit_id % worker_ids.size()];
    }
  }
  m.created_at_ms = now_ms();
  return m;
}

namespace detail {

/// Store calls from the worker go through bounded exponential backoff before
/// giving up: transient store hiccups should not kill a unit.
template <typename Fn>
auto with_retry(Fn&& fn) -> decltype(fn()) {
  int delay_ms = 10;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const StoreError& e) {
      if (attempt >= 3) {
        throw WorkerError(std::string("store unavailable: ") + e.what());
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
  }
}

/// Computes every subtask in the unit's range. Networks are rebuilt per
/// amplitude from the manifest circuit; build and simplification are
/// deterministic, so node and index ids match the plan that the agent made.
inline SubtaskResult compute_unit(const TaskManifest& manifest,
                                  const Circuit& circuit, const UnitRange& unit,
                                  const std::string& worker_id) {
  const auto t0 = std::chrono::steady_clock::now();
  SubtaskResult out;
  out.task_id = manifest.task_id;
  out.unit_id = unit.unit_id;
  out.worker_id = worker_id;
  const uint64_t n_s = manifest.n_subtasks();
  std::optional<uint64_t> current_amp;
  TensorNetwork net;
  for (uint64_t g = unit.begin; g < unit.end; ++g) {
    const uint64_t a = g / n_s;
    const uint64_t s = g % n_s;
    if (!current_amp || *current_amp != a) {
      net = build_network(circuit, manifest.outputs[a]);
      if (manifest.simplify_network) net = simplify(net);
      current_amp = a;
    }
    const auto v = evaluate_subtask(
        net, manifest.slice_plan,
        assignment_from_ordinal(manifest.slice_plan, s));
    out.partial_sums.emplace_back(a, v.real(), v.imag());
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace detail

/// Publishes the manifest, then polls the store until every unit result is
/// present, summing partial results in fixed unit-then-entry order (which is
/// global subtask order, so the sums are bit-identical to a local engine
/// run). Reported per-amplitude wall time is the elapsed polling time over
/// n_amplitudes; the preprocessing that produced the plan happened before
/// this call and is excluded.
inline std::vector<AmplitudeResult> run_agent(const TaskManifest& manifest,
                                              ObjectStore& store,
                                              const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  store.put(manifest_key(manifest.task_id), manifest_to_json(manifest).dump());

  const std::string results_prefix = "runs/" + manifest.task_id + "/results/";
  std::vector<const UnitRange*> missing;
  while (true) {
    missing.clear();
    for (const auto& u : manifest.units) {
      // list() would do, but point reads keep partial-progress checks cheap.
      if (!store.get(result_key(manifest.task_id, u.unit_id))) {
        missing.push_back(&u);
      }
    }
    if (missing.empty()) break;
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (elapsed > config.timeout_s) {
      std::string ids;
      for (const auto* u : missing) {
        if (!ids.empty()) ids += ", ";
        ids += std::to_string(u->unit_id);
      }
      throw TimeoutError("timed out waiting for unit results: " + ids);
    }
    std::this_thread::sleep_for(
        std::chrono::milliseconds(config.poll_interval_ms));
  }

  const uint64_t n_s = manifest.n_subtasks();
  std::vector<std::complex<double>> sums(manifest.outputs.size(), {0.0, 0.0});
  for (const auto& u : manifest.units) {
    const auto bytes = store.get(result_key(manifest.task_id, u.unit_id));
    if (!bytes) {
      throw IntegrityError("unit result vanished: " +
                           std::to_string(u.unit_id));
    }
    SubtaskResult r;
    try {
      r = subtask_result_from_json(nlohmann::json::parse(*bytes));
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError("malformed result object for unit " +
                           std::to_string(u.unit_id) + ": " + e.what());
    }
    if (r.task_id != manifest.task_id || r.unit_id != u.unit_id ||
        r.partial_sums.size() != u.size()) {
      throw IntegrityError("result object inconsistent for unit " +
                           std::to_string(u.unit_id));
    }
    uint64_t g = u.begin;
    for (const auto& [a, re, im] : r.partial_sums) {
      if (a != g / n_s) {
        throw IntegrityError("amplitude index mismatch in unit " +
                             std::to_string(u.unit_id));
      }
      sums[a] += std::complex<double>(re, im);
      ++g;
    }
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::vector<AmplitudeResult> results(manifest.outputs.size());
  for (size_t a = 0; a < manifest.outputs.size(); ++a) {
    results[a].bitstring = manifest.outputs[a];
    results[a].amplitude = sums[a];
    results[a].subtasks_evaluated = n_s;
    results[a].wall_seconds = elapsed / static_cast<double>(results.size());
  }
  return results;
}

/// Scans manifests, claims and computes units, uploads one result object per
/// unit, and returns how many units this call uploaded. In claim mode a unit
/// is taken by winning put_if_absent on its claim key; a claim already held
/// by this worker id with no result yet (a restart after a crash) is
/// recomputed, which is safe because result upload is first-write-wins.
/// Exits once nothing is claimable and the linger window has passed.
inline uint64_t run_worker(ObjectStore& store, const std::string& worker_id,
                           const RunConfig& config) {
  uint64_t processed = 0;
  std::map<std::string, TaskManifest> manifests;
  std::map<std::string, Circuit> circuits;
  auto idle_since = std::chrono::steady_clock::now();

  while (true) {
    bool progress = false;
    std::vector<std::string> keys = detail::with_retry(
        [&] { return store.list("runs/"); });
    for (const auto& key : keys) {
      if (key.size() < 9 || key.compare(key.size() - 9, 9, "/manifest") != 0) {
        continue;
      }
      if (!manifests.count(key)) {
        const auto bytes = detail::with_retry([&] { return store.get(key); });
        if (!bytes) continue;
        try {
          manifests[key] = manifest_from_json(nlohmann::json::parse(*bytes));
        } catch (const nlohmann::json::exception& e) {
          throw IntegrityError("malformed manifest at " + key + ": " +
                               e.what());
        }
        circuits[key] = parse_grcs(manifests[key].circuit_grcs);
      }
      const TaskManifest& manifest = manifests[key];
      const Circuit& circuit = circuits[key];

      for (const auto& unit : manifest.units) {
        const auto rk = result_key(manifest.task_id, unit.unit_id);
        if (detail::with_retry([&] { return store.get(rk); })) continue;

        bool mine = false;
        if (manifest.mode == DistributionMode::Push) {
          auto it = manifest.assigned.find(unit.unit_id);
          mine = it != manifest.assigned.end() && it->second == worker_id;
        } else {
          const auto ck = claim_key(manifest.task_id, unit.unit_id);
          nlohmann::json claim;
          claim["v"] = 1;
          claim["worker_id"] = worker_id;
          claim["claimed_at_ms"] = now_ms();
          if (detail::with_retry(
                  [&] { return store.put_if_absent(ck, claim.dump()); })) {
            mine = true;
          } else {
            const auto existing =
                detail::with_retry([&] { return store.get(ck); });
            if (existing) {
              try {
                mine = nlohmann::json::parse(*existing)
                           .at("worker_id")
                           .get<std::string>() == worker_id;
              } catch (const nlohmann::json::exception&) {
                mine = false;
              }
            }
          }
        }
        if (!mine) continue;

        const auto result =
            detail::compute_unit(manifest, circuit, unit, worker_id);
        if (detail::with_retry([&] {
              return store.put_if_absent(rk,
                                         subtask_result_to_json(result).dump());
            })) {
          ++processed;
        }
        progress = true;
      }
    }

    if (progress) {
      idle_since = std::chrono::steady_clock::now();
      continue;
    }
    const auto idle_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - idle_since)
                             .count();
    if (idle_ms >= config.linger_ms) break;
    std::this_thread::sleep_for(
        std::chrono::milliseconds(config.poll_interval_ms));
  }
  return processed;
}

}  // namespace qsimnet
