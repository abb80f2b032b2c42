#pragma once

#include <functional>
#include <map>

#include "taurus/simnet/config.hpp"
#include "taurus/simnet/sim.hpp"

namespace taurus::sal {

// Routes a versioned page read across the three replicas of a slice:
// preferred replica first (lowest observed latency, EWMA), then the rest;
// NotCaughtUp / unavailable replicas are skipped; after a full unsuccessful
// round the host is told (so it can trigger repair) and the read retries
// until the round budget runs out.
class ReadRouter {
public:
    using Callback = std::function<void(msg::PsStatus, const msg::PsReadPageResp&)>;

    struct Host {
        sim::Simulator* sim = nullptr;
        sim::NodeId self = sim::kNoNode;
        uint32_t timeout_timer_kind = 0;  // Timer{kind, a=attempt req id}
        uint32_t retry_timer_kind = 0;    // Timer{kind, a=read id}
        std::function<std::vector<sim::NodeId>(const core::SliceId&)> candidates;
        std::function<void(const core::SliceId&, int rounds)> on_round_failed;
    };

    ReadRouter(Host host, sim::StoreConfig cfg, sim::Rng rng)
        : host_(std::move(host)), cfg_(cfg), rng_(rng) {}

    void start_read(const core::SliceId& slice, core::PageId page, core::Lsn lsn, Callback cb);

    // Returns true if the response/timer belonged to this router.
    bool handle_response(sim::NodeId from, const msg::PsReadPageResp& resp);
    bool handle_timeout(uint64_t attempt_req);
    bool handle_retry(uint64_t read_id);

    void clear();  // volatile state (crash)
    size_t pending() const { return reads_.size(); }

    uint64_t reads_started() const { return reads_started_; }
    uint64_t attempts_sent() const { return attempts_; }
    uint64_t failed_reads() const { return failed_; }

private:
    struct PendingRead {
        uint64_t id = 0;
        core::SliceId slice;
        core::PageId page = 0;
        core::Lsn lsn = core::kNoLsn;
        std::vector<sim::NodeId> order;
        size_t next = 0;
        int rounds = 0;
        uint64_t outstanding_req = 0;
        sim::NodeId outstanding_node = sim::kNoNode;
        sim::Time sent_at = 0;
        Callback cb;
    };

    void next_attempt(PendingRead& rd);
    std::vector<sim::NodeId> ordered_candidates(const core::SliceId& slice);

    Host host_;
    sim::StoreConfig cfg_;
    sim::Rng rng_;
    uint64_t next_id_ = 1;
    std::map<uint64_t, PendingRead> reads_;       // read id -> state
    std::map<uint64_t, uint64_t> by_attempt_;     // attempt req -> read id
    std::map<sim::NodeId, double> ewma_ms_;
    std::map<sim::NodeId, uint64_t> tie_break_;
    uint64_t reads_started_ = 0;
    uint64_t attempts_ = 0;
    uint64_t failed_ = 0;
};

}  // namespace taurus::sal
