/* COUNTERS.HPP  Global operation counters. The live engine's fixed-budget
 *               guarantee is asserted against these, and reports echo them.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <atomic>
#include <cstdint>

namespace ptycho {

struct OpCounters {
  std::atomic<std::uint64_t> amplitude_projections{0};   // per exit wave
  std::atomic<std::uint64_t> consistency_projections{0}; // per (partial) set
  std::atomic<std::uint64_t> object_updates{0};
  std::atomic<std::uint64_t> probe_updates{0};

  std::uint64_t projection_total() const {
    return amplitude_projections.load() + consistency_projections.load();
  }
  void reset() {
    amplitude_projections = 0;
    consistency_projections = 0;
    object_updates = 0;
    probe_updates = 0;
  }
};

inline OpCounters& op_counters() {
  static OpCounters counters;
  return counters;
}

/// Plain snapshot for before/after deltas.
struct OpCountersSnapshot {
  std::uint64_t amplitude_projections = 0;
  std::uint64_t consistency_projections = 0;
  std::uint64_t object_updates = 0;
  std::uint64_t probe_updates = 0;

  bool operator==(const OpCountersSnapshot&) const = default;
  OpCountersSnapshot operator-(const OpCountersSnapshot& rhs) const {
    return {amplitude_projections - rhs.amplitude_projections,
            consistency_projections - rhs.consistency_projections,
            object_updates - rhs.object_updates, probe_updates - rhs.probe_updates};
  }
};

inline OpCountersSnapshot snapshot_counters() {
  auto& c = op_counters();
  return {c.amplitude_projections.load(), c.consistency_projections.load(),
          c.object_updates.load(), c.probe_updates.load()};
}

}  // namespace ptycho
