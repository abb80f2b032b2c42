#include "taurus/simnet/sim.hpp"

#include <cassert>
#include <cstdio>

namespace taurus::msg {

const char* kind_name(const Message& m) {
    static const char* names[] = {
        "LsCreatePlog", "LsCreatePlogResp", "LsAppend", "LsAppendResp", "LsSeal", "LsRead",
        "LsReadResp", "LsDelete", "LsDeleteResp", "LsCopyPlog", "LsFetchPlog", "LsFetchPlogResp",
        "LsCopyPlogDone", "LsReconcile", "PsWriteLogs", "PsWriteLogsResp", "PsReadPage",
        "PsReadPageResp", "PsSetRecycle", "PsSetRecycleResp", "PsGetState", "PsGetStateResp",
        "PsGossipPull", "PsGossipData", "PsGossipNow", "PsAssignSlice", "PsFetchSlice",
        "PsFetchSliceResp", "PsRebuildDone", "CmHeartbeat", "CmChooseLogNodes",
        "CmChooseLogNodesResp", "CmRegistrySet", "CmRegistryGet", "CmRegistryGetResp",
        "CmPlogCreated", "CmPlogSealed", "CmPlogDeleted", "CmPlogLocate", "CmPlogLocateResp",
        "CmMembership", "CmReplicaDown", "RepMasterMsg", "RepMinTv", "RepResync", "RepResyncResp",
        "CmListSlices", "CmListSlicesResp"};
    return names[m.body.index()];
}

}  // namespace taurus::msg

namespace taurus::sim {

namespace {

uint64_t fnv1a(uint64_t h, const std::string& s) {
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001B3ULL;
    }
    h ^= '\n';
    h *= 0x100000001B3ULL;
    return h;
}

}  // namespace

Simulator::Simulator(uint64_t seed, SimConfig cfg) : cfg_(cfg), rng_(seed) {}

NodeId Simulator::add_node(const std::string& name, Actor* actor) {
    assert(by_name_.count(name) == 0);
    NodeId id = static_cast<NodeId>(nodes_.size());
    Node n;
    n.name = name;
    n.actor = actor;
    n.disk = SimDisk(name, &disk_audit_);
    nodes_.push_back(std::move(n));
    by_name_[name] = id;
    return id;
}

void Simulator::set_actor(NodeId node, Actor* actor) { nodes_.at(node).actor = actor; }

SimDisk& Simulator::disk(NodeId node) { return nodes_.at(node).disk; }

NodeId Simulator::find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? kNoNode : it->second;
}

const std::string& Simulator::name(NodeId node) const { return nodes_.at(node).name; }

void Simulator::push(std::unique_ptr<Event> ev) {
    ev->seq = next_seq_++;
    queue_.push(std::move(ev));
}

Time Simulator::latency(NodeId from, NodeId to) {
    auto it = link_latency_.find({std::min(from, to), std::max(from, to)});
    Time base = it != link_latency_.end() ? it->second : cfg_.base_latency_ms;
    Time jitter = cfg_.jitter_ms > 0 ? rng_.below(cfg_.jitter_ms + 1) : 0;
    return base + jitter;
}

void Simulator::set_link_latency(NodeId a, NodeId b, Time ms) {
    link_latency_[{std::min(a, b), std::max(a, b)}] = ms;
}

void Simulator::send(NodeId from, NodeId to, msg::Message m) {
    auto ev = std::make_unique<Event>();
    ev->time = now_ + latency(from, to);
    ev->kind = 0;
    ev->from = from;
    ev->to = to;
    ev->message = std::move(m);
    push(std::move(ev));
}

void Simulator::set_timer(NodeId node, Time delay, Timer t) {
    auto ev = std::make_unique<Event>();
    ev->time = now_ + delay;
    ev->kind = 1;
    ev->to = node;
    ev->timer = t;
    push(std::move(ev));
}

void Simulator::at(Time when, std::function<void()> fn) {
    auto ev = std::make_unique<Event>();
    ev->time = when < now_ ? now_ : when;
    ev->kind = 2;
    ev->fn = std::move(fn);
    push(std::move(ev));
}

void Simulator::crash(NodeId node, Time duration) {
    Node& n = nodes_.at(node);
    if (n.removed) return;
    Time until = now_ + duration;
    if (!n.crashed) {
        n.crashed = true;
        n.crashed_until = until;
        trace_key(node, "crash until t=" + std::to_string(until));
        if (n.actor) n.actor->on_crash();
    } else if (until > n.crashed_until) {
        n.crashed_until = until;
    }
    auto ev = std::make_unique<Event>();
    ev->time = n.crashed_until;
    ev->kind = 3;
    ev->to = node;
    push(std::move(ev));
}

void Simulator::maybe_restart(NodeId node) {
    Node& n = nodes_.at(node);
    if (n.removed || !n.crashed || now_ < n.crashed_until) return;
    n.crashed = false;
    trace_key(node, "restart");
    if (n.actor) n.actor->on_restart();
}

void Simulator::hang(NodeId node, Time duration) {
    Node& n = nodes_.at(node);
    if (n.removed) return;
    Time until = now_ + duration;
    n.hung = true;
    n.hung_until = std::max(n.hung_until, until);
    trace_key(node, "hang until t=" + std::to_string(n.hung_until));
}

void Simulator::partition(NodeId a, NodeId b, Time duration) {
    partitions_.emplace_back(a, b, now_ + duration);
    trace_key(a, "partition from " + name(b) + " until t=" + std::to_string(now_ + duration));
}

void Simulator::drop_next(NodeId node, int n) { nodes_.at(node).drop_next += n; }

void Simulator::remove_node(NodeId node) {
    Node& n = nodes_.at(node);
    n.removed = true;
    n.crashed = false;
    n.disk.wipe();
    trace_key(node, "removed from cluster");
    if (remove_hook_) remove_hook_(node);
}

bool Simulator::is_up(NodeId node) const {
    const Node& n = nodes_.at(node);
    return !n.removed && !n.crashed;
}

bool Simulator::is_removed(NodeId node) const { return nodes_.at(node).removed; }

bool Simulator::is_partitioned(NodeId a, NodeId b) const {
    for (const auto& [x, y, until] : partitions_) {
        if (now_ < until && ((x == a && y == b) || (x == b && y == a))) return true;
    }
    return false;
}

bool Simulator::step() {
    while (!queue_.empty()) {
        // priority_queue exposes const&; the unique_ptr content is moved out
        // via const_cast, which is safe because we pop immediately.
        auto& top = const_cast<std::unique_ptr<Event>&>(queue_.top());
        std::unique_ptr<Event> ev = std::move(top);
        queue_.pop();
        if (ev->time > cfg_.time_limit) return false;
        now_ = std::max(now_, ev->time);
        dispatch(*ev);
        return true;
    }
    return false;
}

void Simulator::run(Time until) {
    while (!queue_.empty()) {
        const auto& top = queue_.top();
        if (top->time > until || top->time > cfg_.time_limit) break;
        step();
    }
    if (until != kForever && now_ < until) now_ = until;
}

void Simulator::dispatch(Event& ev) {
    switch (ev.kind) {
        case 2:
            ev.fn();
            return;
        case 3:
            maybe_restart(ev.to);
            return;
        case 1: {
            Node& n = nodes_.at(ev.to);
            if (n.removed || n.crashed) return;  // timers die with the crash
            if (n.hung && now_ < n.hung_until) {
                auto delayed = std::make_unique<Event>();
                delayed->time = n.hung_until;
                delayed->kind = 1;
                delayed->to = ev.to;
                delayed->timer = ev.timer;
                push(std::move(delayed));
                return;
            }
            if (n.actor) n.actor->on_timer(ev.timer);
            return;
        }
        case 0: {
            Node& n = nodes_.at(ev.to);
            if (n.removed || n.crashed) {
                ++messages_dropped_;
                if (cfg_.trace_detail >= 1)
                    trace(ev.to, std::string("drop (down) ") + msg::kind_name(ev.message));
                return;
            }
            if (n.hung && now_ < n.hung_until) {
                auto delayed = std::make_unique<Event>();
                delayed->time = n.hung_until;
                delayed->kind = 0;
                delayed->from = ev.from;
                delayed->to = ev.to;
                delayed->message = std::move(ev.message);
                push(std::move(delayed));
                return;
            }
            if (is_partitioned(ev.from, ev.to)) {
                ++messages_dropped_;
                if (cfg_.trace_detail >= 1)
                    trace(ev.to, std::string("drop (partition) ") + msg::kind_name(ev.message));
                return;
            }
            if (n.drop_next > 0) {
                --n.drop_next;
                ++messages_dropped_;
                trace_key(ev.to, std::string("drop (fault) ") + msg::kind_name(ev.message));
                return;
            }
            ++messages_delivered_;
            if (cfg_.trace_detail >= 1)
                trace(ev.to, std::string("recv ") + msg::kind_name(ev.message) + " from " +
                                 name(ev.from));
            if (message_hook_) message_hook_(ev.from, ev.to, ev.message);
            if (n.actor) n.actor->on_message(ev.from, std::move(ev.message));
            return;
        }
    }
}

void Simulator::trace(NodeId node, const std::string& text) {
    if (cfg_.trace_detail < 1) return;
    trace_key(node, text);
}

void Simulator::trace_key(NodeId node, const std::string& text) {
    char head[64];
    std::snprintf(head, sizeof(head), "t=%llu ", static_cast<unsigned long long>(now_));
    trace_.push_back(head + (node == kNoNode ? std::string("-") : nodes_.at(node).name) + ": " +
                     text);
}

uint64_t Simulator::trace_hash() const {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& line : trace_) h = fnv1a(h, line);
    return h;
}

}  // namespace taurus::sim
