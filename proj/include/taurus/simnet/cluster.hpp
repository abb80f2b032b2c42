#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "taurus/simnet/config.hpp"
#include "taurus/simnet/sim.hpp"

namespace taurus::sim {

enum class NodeKind : uint8_t { kLogStore, kPageStore, kMaster, kReadReplica, kClusterManager };

enum class FailureClass : uint8_t { kShortTerm = 0, kLongTerm = 1 };

struct FailureClassification {
    NodeId node = kNoNode;
    FailureClass cls = FailureClass::kShortTerm;
    Time detected_at = 0;
    Time classified_at = 0;
};

// Cluster manager: liveness monitoring via heartbeats, short/long-term
// failure classification, PLog placement and location registry, slice
// membership and replica replacement, and the small KV registry that holds
// the metadata PLog pointer per database. Modeled as a reliable service:
// scenarios must not inject faults into it.
class ClusterManager : public Actor {
public:
    ClusterManager(Simulator& sim, NodeId self, StoreConfig cfg);

    // Bootstrap-time wiring (before the simulation starts).
    void register_node(NodeId node, NodeKind kind);
    void set_master(NodeId node) { master_ = node; }
    void bootstrap_slice(const core::SliceId& slice, const std::array<NodeId, 3>& replicas);

    void start();  // arms the monitor timer

    void on_message(NodeId from, msg::Message m) override;
    void on_timer(const Timer& t) override;

    // True in the manager's current health view (heartbeat-based, plus any
    // forced overrides).
    bool healthy(NodeId node) const;
    std::vector<NodeId> healthy_nodes(NodeKind kind) const;

    // Test support: overrides the heartbeat view entirely for the given
    // set (nodes in the set are considered down).
    void debug_force_down(const std::set<NodeId>& down) { forced_down_ = down; use_forced_ = true; }
    void debug_clear_forced() { use_forced_ = false; }

    const std::vector<FailureClassification>& classifications() const { return classifications_; }
    std::optional<std::array<NodeId, 3>> slice_replicas(const core::SliceId& slice) const;
    uint64_t replica_source_lost_events() const { return replica_source_lost_; }
    uint64_t slice_unrecoverable_events() const { return slice_unrecoverable_; }

private:
    struct NodeState {
        NodeKind kind = NodeKind::kLogStore;
        Time last_seen = 0;
        bool down = false;
        Time down_since = 0;
        bool long_termed = false;
        uint64_t stored_bytes = 0;
        uint32_t hosted_slices = 0;
    };
    struct PlogState {
        logstore::PlogKind kind = logstore::PlogKind::kData;
        std::vector<NodeId> replicas;
        bool sealed = false;
        bool deleted = false;
        // replicas that still hold the file of a deleted plog (down at the
        // time of deletion); reconciled lazily when the node returns
        std::set<NodeId> lazy_delete;
        std::set<NodeId> lazy_seal;
    };
    struct SliceState {
        std::array<NodeId, 3> replicas{};
        NodeId rebuilding = kNoNode;
    };

    void monitor_tick();
    void node_returned(NodeId node);
    void classify_long_term(NodeId node);
    void recover_log_store_node(NodeId node);
    void replace_page_store_replicas(NodeId node);
    NodeId pick_log_node(const std::set<NodeId>& exclude) const;
    NodeId pick_page_node(const core::SliceId& slice, const std::set<NodeId>& exclude) const;

    Simulator& sim_;
    NodeId self_;
    StoreConfig cfg_;
    Rng rng_;
    NodeId master_ = kNoNode;
    std::map<NodeId, NodeState> nodes_;
    std::map<logstore::PlogId, PlogState> plogs_;
    std::map<core::SliceId, SliceState> slices_;
    std::map<uint32_t, logstore::PlogId> registry_;  // database -> metadata plog
    std::vector<FailureClassification> classifications_;
    std::set<NodeId> forced_down_;
    bool use_forced_ = false;
    uint64_t replica_source_lost_ = 0;
    uint64_t slice_unrecoverable_ = 0;
};

}  // namespace taurus::sim
