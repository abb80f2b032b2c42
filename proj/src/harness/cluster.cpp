#include "taurus/harness/cluster.hpp"

namespace taurus::harness {

using sim::NodeId;

std::unique_ptr<Cluster> build_cluster(const ClusterSpec& spec) {
    auto c = std::make_unique<Cluster>();
    c->spec = spec;
    c->sim = std::make_unique<sim::Simulator>(spec.seed, spec.sim_cfg);
    c->auditor = std::make_unique<Auditor>(spec.cfg.page);

    Auditor* auditor = c->auditor.get();
    c->sim->set_remove_hook([auditor](NodeId n) { auditor->on_node_removed(n); });
    c->sim->set_message_hook([auditor](NodeId, NodeId, const msg::Message& m) {
        if (const auto* done = std::get_if<msg::LsCopyPlogDone>(&m.body)) {
            if (done->ok) auditor->on_plog_copied(done->id, done->host);
        }
    });

    c->cm_id = c->sim->add_node("cm", nullptr);
    c->cm = std::make_unique<sim::ClusterManager>(*c->sim, c->cm_id, spec.cfg);
    c->sim->set_actor(c->cm_id, c->cm.get());
    c->cm->register_node(c->cm_id, sim::NodeKind::kClusterManager);

    for (int i = 0; i < spec.log_stores; ++i) {
        NodeId id = c->sim->add_node("ls" + std::to_string(i + 1), nullptr);
        auto node = std::make_unique<logstore::LogStoreNode>(*c->sim, id, c->cm_id, spec.cfg);
        c->sim->set_actor(id, node.get());
        c->cm->register_node(id, sim::NodeKind::kLogStore);
        c->log_nodes.push_back(std::move(node));
    }
    for (int i = 0; i < spec.page_stores; ++i) {
        NodeId id = c->sim->add_node("ps" + std::to_string(i + 1), nullptr);
        auto node = std::make_unique<pagestore::PageStoreNode>(*c->sim, id, c->cm_id, spec.cfg);
        node->set_observer(c->auditor.get());
        c->sim->set_actor(id, node.get());
        c->cm->register_node(id, sim::NodeKind::kPageStore);
        c->page_nodes.push_back(std::move(node));
    }

    c->master_id = c->sim->add_node("master", nullptr);
    c->master = std::make_unique<MasterNode>(*c->sim, c->master_id, c->cm_id, spec.cfg,
                                             spec.database, spec.seed ^ 0x5EEDF00D, c->auditor.get());
    c->sim->set_actor(c->master_id, c->master.get());
    c->cm->register_node(c->master_id, sim::NodeKind::kMaster);
    c->cm->set_master(c->master_id);

    for (int i = 0; i < spec.read_replicas; ++i) {
        NodeId id = c->sim->add_node("r" + std::to_string(i + 1), nullptr);
        auto node = std::make_unique<replica::ReplicaNode>(*c->sim, id, c->master_id, c->cm_id,
                                                           spec.cfg, spec.database);
        c->sim->set_actor(id, node.get());
        c->cm->register_node(id, sim::NodeKind::kReadReplica);
        c->replicas.push_back(std::move(node));
    }

    // Slice placement: round-robin over page stores (SAL creates slices at
    // database creation; here it is part of cluster bootstrap).
    for (uint32_t s = 0; s < spec.slices; ++s) {
        core::SliceId slice{spec.database, s};
        std::array<NodeId, 3> replicas{};
        for (int k = 0; k < 3; ++k) {
            size_t idx = (s + static_cast<size_t>(k)) % c->page_nodes.size();
            replicas[static_cast<size_t>(k)] = c->page_nodes[idx]->id();
        }
        c->cm->bootstrap_slice(slice, replicas);
        for (NodeId n : replicas) c->page_node(n)->host_slice(slice, replicas);
        c->master->sal().add_slice(slice, replicas);
    }

    return c;
}

bool Cluster::start() {
    // Track when a page-store node holding records is removed long-term.
    // (Simulator removal hook feeds the durability auditor.)
    cm->start();
    for (auto& n : log_nodes) n->start();
    for (auto& n : page_nodes) n->start();
    master->start();
    bool ready = false;
    master->sal().start_fresh([&ready]() { ready = true; });
    // Heartbeats and plog creation run; give it a little simulated time.
    sim->run(sim->now() + 200);
    for (auto& r : replicas) r->start();
    sim->run(sim->now() + 200);
    return ready;
}

pagestore::PageStoreNode* Cluster::page_node(NodeId id) {
    for (auto& n : page_nodes)
        if (n->id() == id) return n.get();
    return nullptr;
}

replica::ReplicaNode* Cluster::replica_by_name(const std::string& name) {
    NodeId id = sim->find(name);
    if (id == sim::kNoNode) return nullptr;
    for (size_t i = 0; i < replicas.size(); ++i) {
        if (sim->find("r" + std::to_string(i + 1)) == id) return replicas[i].get();
    }
    return nullptr;
}

std::vector<pagestore::PageStoreNode*> Cluster::live_replicas(const core::SliceId& slice) {
    std::vector<pagestore::PageStoreNode*> out;
    auto members = cm->slice_replicas(slice);
    if (!members) return out;
    for (NodeId n : *members) {
        if (n == sim::kNoNode || !sim->is_up(n)) continue;
        pagestore::PageStoreNode* node = page_node(n);
        if (!node) continue;
        const auto* rep = node->replica(slice);
        if (rep && rep->mode == msg::ReplicaMode::kNormal) out.push_back(node);
    }
    return out;
}

std::vector<core::SliceId> Cluster::all_slices() const {
    std::vector<core::SliceId> out;
    for (uint32_t s = 0; s < spec.slices; ++s) out.push_back({spec.database, s});
    return out;
}

}  // namespace taurus::harness
