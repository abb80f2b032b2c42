#pragma once

#include <string>
#include <vector>

namespace taurus::harness {

// Bundled scenario library. Each entry is a scenario script in the
// documented line format; times are offsets from cluster-ready.
//   fig3_writepath         plain write burst through the full write path
//   fig5a                  short page-store outage repaired by gossip
//   fig5b                  record lost with a persistent-LSN decrease,
//                          reread from Log Stores after replica replacement
//   fig5c                  record missing from all replicas without a
//                          decrease; stall detection resends it
//   truncation_then_crash  write, truncate, crash the master, redo recovery
//   replica_lag            steady writes with a pumping read replica
//   quiescent_convergence  faulty run followed by fault-free quiescence
const std::string& bundled_scenario(const std::string& name);
std::vector<std::string> bundled_scenario_names();

}  // namespace taurus::harness
