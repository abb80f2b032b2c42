#include "taurus/simnet/cluster.hpp"

#include <algorithm>
#include <cassert>

namespace taurus::sim {

namespace {
constexpr uint32_t kTimerMonitor = 1;
}

ClusterManager::ClusterManager(Simulator& sim, NodeId self, StoreConfig cfg)
    : sim_(sim), self_(self), cfg_(cfg), rng_(sim.rng().fork()) {}

void ClusterManager::register_node(NodeId node, NodeKind kind) {
    NodeState st;
    st.kind = kind;
    st.last_seen = sim_.now();
    nodes_[node] = st;
}

void ClusterManager::bootstrap_slice(const core::SliceId& slice,
                                     const std::array<NodeId, 3>& replicas) {
    SliceState st;
    st.replicas = replicas;
    slices_[slice] = st;
    for (NodeId n : replicas) nodes_[n].hosted_slices++;
}

void ClusterManager::start() { sim_.set_timer(self_, cfg_.heartbeat_ms, Timer{kTimerMonitor}); }

bool ClusterManager::healthy(NodeId node) const {
    if (use_forced_) return !forced_down_.count(node) && !sim_.is_removed(node);
    auto it = nodes_.find(node);
    if (it == nodes_.end()) return false;
    return !it->second.down && !sim_.is_removed(node);
}

std::vector<NodeId> ClusterManager::healthy_nodes(NodeKind kind) const {
    std::vector<NodeId> out;
    for (const auto& [id, st] : nodes_)
        if (st.kind == kind && healthy(id)) out.push_back(id);
    return out;
}

std::optional<std::array<NodeId, 3>> ClusterManager::slice_replicas(
    const core::SliceId& slice) const {
    auto it = slices_.find(slice);
    if (it == slices_.end()) return std::nullopt;
    return it->second.replicas;
}

void ClusterManager::on_timer(const Timer& t) {
    if (t.kind == kTimerMonitor) {
        monitor_tick();
        sim_.set_timer(self_, cfg_.heartbeat_ms, Timer{kTimerMonitor});
    }
}

void ClusterManager::monitor_tick() {
    Time now = sim_.now();
    Time down_after = cfg_.heartbeat_ms * cfg_.heartbeat_miss_down;
    for (auto& [id, st] : nodes_) {
        if (sim_.is_removed(id)) continue;
        bool alive = now < st.last_seen + down_after;
        if (!alive && !st.down) {
            st.down = true;
            st.down_since = st.last_seen + down_after;
            classifications_.push_back({id, FailureClass::kShortTerm, now, now});
            sim_.trace_key(self_, "detected down: " + sim_.name(id) + " (short-term)");
        }
        if (st.down && !st.long_termed && now - st.down_since >= cfg_.long_term_ms) {
            st.long_termed = true;
            classifications_.push_back({id, FailureClass::kLongTerm, st.down_since, now});
            sim_.trace_key(self_, "classified long-term: " + sim_.name(id));
            classify_long_term(id);
        }
    }
}

void ClusterManager::node_returned(NodeId node) {
    NodeState& st = nodes_[node];
    if (!st.down) return;
    st.down = false;
    st.long_termed = false;
    sim_.trace_key(self_, "node returned: " + sim_.name(node));
    if (st.kind == NodeKind::kLogStore) {
        // Lazy reconciliation of deletions/seals the node missed.
        msg::LsReconcile rec;
        for (auto& [id, ps] : plogs_) {
            if (ps.lazy_delete.erase(node)) rec.deleted.push_back(id);
            if (ps.lazy_seal.erase(node)) rec.sealed.push_back(id);
        }
        if (!rec.deleted.empty() || !rec.sealed.empty())
            sim_.send(self_, node, msg::Message{std::move(rec)});
    }
}

void ClusterManager::classify_long_term(NodeId node) {
    NodeKind kind = nodes_[node].kind;
    switch (kind) {
        case NodeKind::kLogStore:
            recover_log_store_node(node);
            break;
        case NodeKind::kPageStore:
            replace_page_store_replicas(node);
            break;
        case NodeKind::kReadReplica:
            sim_.remove_node(node);
            if (master_ != kNoNode)
                sim_.send(self_, master_, msg::Message{msg::CmReplicaDown{node}});
            break;
        case NodeKind::kMaster:
            // The master restarts in place; fail-over to a promoted replica
            // is a front-end concern outside the storage layer.
            break;
        case NodeKind::kClusterManager:
            break;
    }
}

NodeId ClusterManager::pick_log_node(const std::set<NodeId>& exclude) const {
    NodeId best = kNoNode;
    uint64_t best_bytes = ~0ULL;
    std::vector<NodeId> ties;
    for (const auto& [id, st] : nodes_) {
        if (st.kind != NodeKind::kLogStore || !healthy(id) || exclude.count(id)) continue;
        if (st.stored_bytes < best_bytes) {
            best_bytes = st.stored_bytes;
            ties.clear();
            ties.push_back(id);
        } else if (st.stored_bytes == best_bytes) {
            ties.push_back(id);
        }
    }
    if (ties.empty()) return kNoNode;
    best = ties[const_cast<Rng&>(rng_).below(ties.size())];
    return best;
}

NodeId ClusterManager::pick_page_node(const core::SliceId& slice,
                                      const std::set<NodeId>& exclude) const {
    (void)slice;
    std::vector<NodeId> ties;
    uint32_t best_slices = ~0u;
    for (const auto& [id, st] : nodes_) {
        if (st.kind != NodeKind::kPageStore || !healthy(id) || exclude.count(id)) continue;
        if (st.hosted_slices < best_slices) {
            best_slices = st.hosted_slices;
            ties.clear();
            ties.push_back(id);
        } else if (st.hosted_slices == best_slices) {
            ties.push_back(id);
        }
    }
    if (ties.empty()) return kNoNode;
    return ties[const_cast<Rng&>(rng_).below(ties.size())];
}

void ClusterManager::recover_log_store_node(NodeId node) {
    sim_.remove_node(node);
    for (auto& [id, ps] : plogs_) {
        if (ps.deleted) continue;
        auto it = std::find(ps.replicas.begin(), ps.replicas.end(), node);
        if (it == ps.replicas.end()) continue;
        // Pick a surviving copy to recreate from.
        NodeId source = kNoNode;
        for (NodeId r : ps.replicas)
            if (r != node && !sim_.is_removed(r)) source = r;
        std::set<NodeId> exclude(ps.replicas.begin(), ps.replicas.end());
        NodeId host = pick_log_node(exclude);
        if (source == kNoNode || host == kNoNode) {
            ++replica_source_lost_;
            sim_.trace_key(self_, "ReplicaSourceLost: plog " + id.hex());
            continue;
        }
        *it = host;
        nodes_[host].stored_bytes += 1;  // placeholder until next heartbeat
        sim_.send(self_, host, msg::Message{msg::LsCopyPlog{id, source, ps.sealed}});
        sim_.trace_key(self_, "re-replicating plog " + id.hex() + " to " + sim_.name(host));
    }
}

void ClusterManager::replace_page_store_replicas(NodeId node) {
    sim_.remove_node(node);
    for (auto& [slice, st] : slices_) {
        auto it = std::find(st.replicas.begin(), st.replicas.end(), node);
        if (it == st.replicas.end()) continue;
        NodeId source = kNoNode;
        for (NodeId r : st.replicas)
            if (r != node && !sim_.is_removed(r) && healthy(r)) source = r;
        if (source == kNoNode) {
            // Fall back to any remaining member; the fetch retries until the
            // source responds.
            for (NodeId r : st.replicas)
                if (r != node && !sim_.is_removed(r)) source = r;
        }
        std::set<NodeId> exclude(st.replicas.begin(), st.replicas.end());
        NodeId host = pick_page_node(slice, exclude);
        if (source == kNoNode || host == kNoNode) {
            ++slice_unrecoverable_;
            sim_.trace_key(self_, "SliceUnrecoverable: " + core::to_string(slice));
            continue;
        }
        *it = host;
        st.rebuilding = host;
        nodes_[host].hosted_slices++;
        msg::PsAssignSlice assign;
        assign.slice = slice;
        assign.replicas = st.replicas;
        assign.source = source;
        sim_.send(self_, host, msg::Message{assign});
        if (master_ != kNoNode) {
            msg::CmMembership mem;
            mem.slice = slice;
            mem.replicas = st.replicas;
            mem.rebuilding = host;
            mem.replaced = node;
            sim_.send(self_, master_, msg::Message{mem});
        }
        sim_.trace_key(self_, "slice " + core::to_string(slice) + " replica " + sim_.name(node) +
                                  " -> " + sim_.name(host) + " (rebuild from " + sim_.name(source) +
                                  ")");
    }
}

void ClusterManager::on_message(NodeId from, msg::Message m) {
    std::visit(
        msg::match{
            [&](const msg::CmHeartbeat& hb) {
                auto it = nodes_.find(from);
                if (it == nodes_.end()) return;
                it->second.last_seen = sim_.now();
                it->second.stored_bytes = hb.stored_bytes;
                node_returned(from);
            },
            [&](const msg::CmChooseLogNodes& req) {
                msg::CmChooseLogNodesResp resp;
                resp.req_id = req.req_id;
                std::set<NodeId> exclude;
                for (uint32_t i = 0; i < req.count; ++i) {
                    NodeId n = pick_log_node(exclude);
                    if (n == kNoNode) break;
                    exclude.insert(n);
                    resp.nodes.push_back(n);
                }
                resp.ok = resp.nodes.size() == req.count;
                if (!resp.ok) resp.nodes.clear();
                sim_.send(self_, from, msg::Message{resp});
            },
            [&](const msg::CmRegistrySet& set) { registry_[set.database] = set.metadata_plog; },
            [&](const msg::CmRegistryGet& get) {
                msg::CmRegistryGetResp resp;
                resp.req_id = get.req_id;
                auto it = registry_.find(get.database);
                if (it != registry_.end()) {
                    resp.ok = true;
                    resp.metadata_plog = it->second;
                }
                sim_.send(self_, from, msg::Message{resp});
            },
            [&](const msg::CmPlogCreated& c) {
                PlogState ps;
                ps.kind = c.kind;
                ps.replicas = c.replicas;
                plogs_[c.id] = ps;
                for (NodeId n : c.replicas) nodes_[n].stored_bytes += 1;
            },
            [&](const msg::CmPlogSealed& s) {
                auto it = plogs_.find(s.id);
                if (it == plogs_.end()) return;
                it->second.sealed = true;
                for (NodeId n : it->second.replicas)
                    if (!healthy(n) && !sim_.is_removed(n)) it->second.lazy_seal.insert(n);
            },
            [&](const msg::CmPlogDeleted& d) {
                auto it = plogs_.find(d.id);
                if (it == plogs_.end()) return;
                it->second.deleted = true;
                for (NodeId n : it->second.replicas)
                    if (!healthy(n) && !sim_.is_removed(n)) it->second.lazy_delete.insert(n);
            },
            [&](const msg::CmPlogLocate& loc) {
                msg::CmPlogLocateResp resp;
                resp.req_id = loc.req_id;
                resp.id = loc.id;
                auto it = plogs_.find(loc.id);
                if (it != plogs_.end() && !it->second.deleted) {
                    resp.ok = true;
                    resp.replicas = it->second.replicas;
                    resp.sealed = it->second.sealed;
                }
                sim_.send(self_, from, msg::Message{resp});
            },
            [&](const msg::PsRebuildDone& done) {
                auto it = slices_.find(done.slice);
                if (it == slices_.end()) return;
                if (it->second.rebuilding == done.node) it->second.rebuilding = kNoNode;
                if (master_ != kNoNode) {
                    msg::CmMembership mem;
                    mem.slice = done.slice;
                    mem.replicas = it->second.replicas;
                    mem.rebuilding = kNoNode;
                    sim_.send(self_, master_, msg::Message{mem});
                }
            },
            [&](const msg::LsCopyPlogDone& done) {
                sim_.trace_key(self_, "plog re-replicated: " + done.id.hex() + " on " +
                                          sim_.name(done.host));
            },
            [&](const msg::CmListSlices& ls) {
                msg::CmListSlicesResp resp;
                resp.req_id = ls.req_id;
                for (const auto& [slice, st] : slices_) {
                    msg::CmMembership mem;
                    mem.slice = slice;
                    mem.replicas = st.replicas;
                    mem.rebuilding = st.rebuilding;
                    resp.slices.push_back(mem);
                }
                sim_.send(self_, from, msg::Message{resp});
            },
            [&](const auto&) {},
        },
        m.body);
}

}  // namespace taurus::sim
