#pragma once

#include <deque>
#include <map>
#include <set>

#include "taurus/replica/wire.hpp"
#include "taurus/sal/router.hpp"
#include "taurus/simnet/config.hpp"
#include "taurus/simnet/sim.hpp"

namespace taurus::replica {

struct ReplicaMetrics {
    uint64_t master_msgs = 0;
    uint64_t resyncs = 0;
    uint64_t groups_applied = 0;
    uint64_t records_applied = 0;
    uint64_t pool_hits = 0;
    uint64_t store_reads = 0;
    uint64_t lag_samples = 0;
    uint64_t lag_total_ms = 0;
    uint64_t lag_max_ms = 0;
    uint64_t below_recycle_errors = 0;
};

// A read replica's storage-side state machine (physical consistency only):
// ingests master metadata messages, pumps the log straight from Log Stores,
// applies complete groups atomically to pooled pages, and serves page reads
// at transaction-visible LSNs.
class ReplicaNode : public sim::Actor {
public:
    ReplicaNode(sim::Simulator& sim, sim::NodeId self, sim::NodeId master, sim::NodeId cm,
                sim::StoreConfig cfg, uint32_t database);

    void start();

    void on_message(sim::NodeId from, msg::Message m) override;
    void on_timer(const sim::Timer& t) override;
    void on_crash() override;
    void on_restart() override;

    // Read views.
    core::Lsn open_read_view();
    bool release_read_view(core::Lsn tv);  // false: UnknownTvLsn
    core::Lsn report_min_tv() const;
    core::Lsn visible_lsn() const { return visible_; }

    // One read operation under a fresh view: open, read, release.
    using ReadCb = std::function<void(msg::PsStatus, const core::PageImage&, core::Lsn tv,
                                      core::Lsn eff_lsn)>;
    void read_page_op(core::PageId page, ReadCb cb);
    // Multi-page read under one view (group-atomicity checks).
    using MultiReadCb =
        std::function<void(bool ok, const std::vector<core::PageImage>&, core::Lsn tv)>;
    void read_pages_op(std::vector<core::PageId> pages, MultiReadCb cb);

    const ReplicaMetrics& metrics() const { return metrics_; }
    bool synced() const { return synced_; }
    core::Lsn known_slice_persistent(const core::SliceId& slice) const;

private:
    struct Group {
        std::vector<core::LogRecord> records;
        core::Lsn boundary = core::kNoLsn;
    };
    struct PoolEntry {
        core::Lsn valid_from = core::kNoLsn;  // visible LSN when seeded
        std::vector<core::PageImage> versions;  // ascending
    };

    void request_resync();
    void pump();
    void issue_extent_read();
    void parse_new_bytes();
    void try_apply_groups();
    void apply_group(const Group& g);
    void prune_pool();
    core::Lsn effective_read_lsn(const core::SliceId& slice, core::Lsn tv) const;

    sim::Simulator& sim_;
    sim::NodeId self_;
    sim::NodeId master_;
    sim::NodeId cm_;
    sim::StoreConfig cfg_;
    uint32_t database_;
    sal::ReadRouter router_;

    bool synced_ = false;
    uint64_t incarnation_ = 0;
    uint64_t last_seq_ = 0;
    uint64_t resync_req_ = 0;
    core::Lsn visible_ = core::kNoLsn;
    core::Lsn last_db_lsn_ = core::kNoLsn;
    std::map<core::SliceId, core::Lsn> slice_persistent_;
    std::map<core::Lsn, uint64_t> boundary_commit_time_;  // for lag measurement

    std::deque<LogExtent> extent_queue_;
    uint64_t outstanding_read_req_ = 0;
    logstore::PlogId outstanding_plog_;
    std::map<logstore::PlogId, std::pair<std::vector<sim::NodeId>, size_t>> plog_locations_;
    std::map<uint64_t, logstore::PlogId> pending_locates_;
    std::deque<LogExtent> blocked_on_locate_;
    core::Bytes parse_buf_;
    Group building_;
    std::deque<Group> ready_groups_;

    std::map<core::PageId, PoolEntry> pool_;
    std::multiset<core::Lsn> tv_registry_;
    std::map<core::SliceId, std::array<sim::NodeId, 3>> slice_replicas_;
    uint64_t list_req_ = 0;

    ReplicaMetrics metrics_;
    uint64_t next_multi_ = 1;
};

}  // namespace taurus::replica
