#pragma once

#include <optional>

#include "taurus/harness/cluster.hpp"
#include "taurus/simnet/scenario.hpp"

namespace taurus::harness {

struct RunOptions {
    ClusterSpec spec;
    sim::ScenarioScript script;
    // Extra simulated time after the last scripted event before final checks.
    sim::Time drain_ms = 3000;
    bool strict_durability = true;
    // READ events without an explicit lsn pick a random valid LSN instead of
    // the latest (randomized-oracle scenarios).
    bool random_read_lsn = false;
    std::string out_dir;  // empty: no files written
};

struct RunResult {
    bool ok = false;
    std::vector<std::string> failures;
    sim::Time end_time = 0;
    uint64_t trace_hash = 0;
    uint64_t checks_run = 0;
    std::unique_ptr<Cluster> cluster;  // final state, for further inspection
};

// Runs one scenario end to end: builds the cluster, schedules every scripted
// event, runs the clock, executes CHECK lines, and finishes with the global
// audits (append-only checker, read mismatches, data loss).
RunResult run_scenario(const RunOptions& opts);

// Named invariant checks usable from CHECK lines.
//   durability        every acked record on >= 3 nodes (auditor)
//   convergence       slice replicas equal: persistent, no holes, same pages
//   oracle_pages      every page on every live replica matches the oracle
//   replica_boundaries visible LSN is a group boundary and within persistents
//   atomic_pair       pages 0 and 1 observed all-or-nothing per group (replica r1)
//   recycle_safety    no read has ever hit BelowRecycleLsn
//   append_only       the shadow write checker saw no overwrites
bool run_check(const std::string& name, Cluster& c, std::vector<std::string>& failures);

// Convergence helper: after a faulty run, heal and verify all replicas of
// every slice converge within `max_rounds` forced gossip sweeps. Returns the
// rounds actually needed, or nullopt if still diverged.
std::optional<int> converge_with_gossip(Cluster& c, int max_rounds,
                                        std::vector<std::string>& failures);

bool slices_converged(Cluster& c, std::vector<std::string>* failures);

// Deterministic generator for randomized scenarios (cmd_run --gen and the
// oracle-equivalence acceptance runs).
struct GenParams {
    uint64_t pages = 64;
    sim::Time duration_ms = 30000;
    sim::Time write_every_ms = 5;
    uint32_t group_max = 4;
    double fault_rate_per_s = 0.0;  // crash/partition events per simulated second
    uint64_t reads = 200;
    bool reads_on_replica = false;
    uint64_t seed = 1;
};
sim::ScenarioScript generate_scenario(const GenParams& p);

std::string metrics_csv(Cluster& c);

}  // namespace taurus::harness
