#pragma once

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "taurus/simnet/disk.hpp"
#include "taurus/simnet/ids.hpp"
#include "taurus/simnet/messages.hpp"
#include "taurus/simnet/rng.hpp"

namespace taurus::sim {

struct Timer {
    uint32_t kind = 0;
    uint64_t a = 0;
    uint64_t b = 0;
};

class Simulator;

// A node-resident state machine. Exactly one event is delivered at a time;
// all cross-node effects must travel through Simulator::send.
class Actor {
public:
    virtual ~Actor() = default;
    virtual void on_message(NodeId from, msg::Message m) = 0;
    virtual void on_timer(const Timer& t) = 0;
    // Crash start: wipe volatile state (durable disk survives).
    virtual void on_crash() {}
    // Crash end: rebuild from durable state and re-arm timers.
    virtual void on_restart() {}
};

struct SimConfig {
    Time base_latency_ms = 1;
    Time jitter_ms = 1;
    // 0: key events only, 1: all deliveries and drops.
    int trace_detail = 0;
    Time time_limit = kForever;
};

// Deterministic discrete-event scheduler: logical clock, seeded RNG, message
// delivery with loss/delay/partition, crash and hang windows. Execution is a
// pure function of (initial state, scheduled events, seed).
class Simulator {
public:
    explicit Simulator(uint64_t seed, SimConfig cfg = {});

    NodeId add_node(const std::string& name, Actor* actor);
    void set_actor(NodeId node, Actor* actor);

    SimDisk& disk(NodeId node);
    AppendAudit& disk_audit() { return disk_audit_; }
    Rng& rng() { return rng_; }
    Time now() const { return now_; }

    void send(NodeId from, NodeId to, msg::Message m);
    void set_timer(NodeId node, Time delay, Timer t);
    // Harness control hook; runs regardless of fault state.
    void at(Time when, std::function<void()> fn);

    // Fault injection. Windows compose; most severe wins at delivery time.
    void crash(NodeId node, Time duration);
    void hang(NodeId node, Time duration);
    void partition(NodeId a, NodeId b, Time duration);
    void drop_next(NodeId node, int n);
    // Long-term removal: the node leaves the cluster and its durable state
    // is destroyed.
    void remove_node(NodeId node);
    void set_remove_hook(std::function<void(NodeId)> fn) { remove_hook_ = std::move(fn); }
    // Observation tap on every delivered message (auditing only).
    void set_message_hook(std::function<void(NodeId, NodeId, const msg::Message&)> fn) {
        message_hook_ = std::move(fn);
    }

    bool is_up(NodeId node) const;
    bool is_removed(NodeId node) const;
    bool is_partitioned(NodeId a, NodeId b) const;

    NodeId find(const std::string& name) const;  // kNoNode if absent
    const std::string& name(NodeId node) const;
    size_t node_count() const { return nodes_.size(); }

    void set_link_latency(NodeId a, NodeId b, Time ms);

    // Runs events until the queue is empty or logical time passes `until`.
    void run(Time until = kForever);
    bool step();

    void trace(NodeId node, const std::string& text);
    void trace_key(NodeId node, const std::string& text);  // always recorded
    const std::vector<std::string>& trace_lines() const { return trace_; }
    uint64_t trace_hash() const;

    uint64_t messages_delivered() const { return messages_delivered_; }
    uint64_t messages_dropped() const { return messages_dropped_; }

private:
    struct Event {
        Time time = 0;
        uint64_t seq = 0;
        // 0: message, 1: timer, 2: control, 3: restart-check
        int kind = 0;
        NodeId from = kNoNode;
        NodeId to = kNoNode;
        msg::Message message;
        Timer timer;
        std::function<void()> fn;
    };
    struct EventCmp {
        bool operator()(const std::unique_ptr<Event>& a, const std::unique_ptr<Event>& b) const {
            if (a->time != b->time) return a->time > b->time;
            return a->seq > b->seq;
        }
    };
    struct Node {
        std::string name;
        Actor* actor = nullptr;
        SimDisk disk;
        bool crashed = false;
        Time crashed_until = 0;
        bool hung = false;
        Time hung_until = 0;
        bool removed = false;
        int drop_next = 0;
    };

    void push(std::unique_ptr<Event> ev);
    void dispatch(Event& ev);
    Time latency(NodeId from, NodeId to);
    void maybe_restart(NodeId node);

    SimConfig cfg_;
    Rng rng_;
    Time now_ = 0;
    uint64_t next_seq_ = 0;
    std::priority_queue<std::unique_ptr<Event>, std::vector<std::unique_ptr<Event>>, EventCmp> queue_;
    std::vector<Node> nodes_;
    std::map<std::string, NodeId> by_name_;
    std::vector<std::tuple<NodeId, NodeId, Time>> partitions_;  // (a, b, until)
    std::map<std::pair<NodeId, NodeId>, Time> link_latency_;
    AppendAudit disk_audit_;
    std::function<void(NodeId)> remove_hook_;
    std::function<void(NodeId, NodeId, const msg::Message&)> message_hook_;
    std::vector<std::string> trace_;
    uint64_t messages_delivered_ = 0;
    uint64_t messages_dropped_ = 0;
};

}  // namespace taurus::sim
