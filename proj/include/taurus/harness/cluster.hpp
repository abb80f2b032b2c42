#pragma once

#include <memory>

#include "taurus/harness/master.hpp"
#include "taurus/logstore/node.hpp"
#include "taurus/pagestore/node.hpp"
#include "taurus/replica/replica.hpp"
#include "taurus/simnet/cluster.hpp"

namespace taurus::harness {

struct ClusterSpec {
    int log_stores = 6;
    int page_stores = 6;
    int read_replicas = 1;
    uint32_t slices = 4;
    uint32_t database = 1;
    sim::StoreConfig cfg = sim::StoreConfig::test_profile();
    sim::SimConfig sim_cfg;
    uint64_t seed = 1;
};

// A fully wired database instance: cluster manager, log stores, page
// stores, one master (driver + SAL) and read replicas, plus the auditor.
struct Cluster {
    ClusterSpec spec;
    std::unique_ptr<sim::Simulator> sim;
    std::unique_ptr<sim::ClusterManager> cm;
    std::vector<std::unique_ptr<logstore::LogStoreNode>> log_nodes;
    std::vector<std::unique_ptr<pagestore::PageStoreNode>> page_nodes;
    std::unique_ptr<MasterNode> master;
    std::vector<std::unique_ptr<replica::ReplicaNode>> replicas;
    std::unique_ptr<Auditor> auditor;
    sim::NodeId cm_id = sim::kNoNode;
    sim::NodeId master_id = sim::kNoNode;

    // Runs the bootstrap until SAL reports ready. Returns false on timeout.
    bool start();

    pagestore::PageStoreNode* page_node(sim::NodeId id);
    replica::ReplicaNode* replica_by_name(const std::string& name);

    // All live normal replicas of a slice (actors, for invariant checks).
    std::vector<pagestore::PageStoreNode*> live_replicas(const core::SliceId& slice);
    std::vector<core::SliceId> all_slices() const;
};

std::unique_ptr<Cluster> build_cluster(const ClusterSpec& spec);

}  // namespace taurus::harness
