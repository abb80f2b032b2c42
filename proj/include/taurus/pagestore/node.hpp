#pragma once

#include <map>
#include <set>

#include "taurus/core/apply.hpp"
#include "taurus/core/interval_set.hpp"
#include "taurus/pagestore/caches.hpp"
#include "taurus/pagestore/slog.hpp"
#include "taurus/simnet/config.hpp"
#include "taurus/simnet/sim.hpp"

namespace taurus::pagestore {

struct PageStoreMetrics {
    uint64_t buffer_pool_hits = 0;    // mirrors BufferPool counters at sample time
    uint64_t buffer_pool_misses = 0;
    uint64_t log_cache_spills = 0;
    uint64_t log_cache_reloads = 0;
    uint64_t disk_record_reads = 0;   // record payloads read from disk by consolidation
    uint64_t read_record_disk_fetches = 0;  // record payloads fetched while serving reads
    uint64_t gossip_records_exchanged = 0;
    uint64_t gossip_rounds = 0;
    uint64_t fragments_ingested = 0;
    uint64_t duplicate_fragments = 0;
    uint64_t records_ingested = 0;
    uint64_t duplicate_records = 0;
    uint64_t seq_gaps_detected = 0;
    uint64_t pages_consolidated = 0;
    uint64_t pages_flushed = 0;
    uint64_t reads_served = 0;
    uint64_t reads_refused = 0;
};

// Harness hook: lets an auditor observe exactly when a record (or a page
// embodying records) becomes durable on this node.
struct PageStoreObserver {
    virtual ~PageStoreObserver() = default;
    virtual void on_record_stored(sim::NodeId, const core::SliceId&, core::Lsn) {}
    virtual void on_coverage_installed(sim::NodeId, const core::SliceId&,
                                       const std::vector<core::LsnRange>&) {}
};

// One Page Store server. Hosts slice replicas (Log Directory + append-only
// slice log each), a node-global log cache and buffer pool, background
// consolidation and dirty-page flushing, the gossip protocol, and the
// replacement-rebuild protocol.
class PageStoreNode : public sim::Actor {
public:
    PageStoreNode(sim::Simulator& sim, sim::NodeId self, sim::NodeId cm, sim::StoreConfig cfg);

    // Bootstrap (before the sim runs): host a slice as a normal replica.
    void host_slice(const core::SliceId& slice, const std::array<sim::NodeId, 3>& replicas);

    void start();

    void on_message(sim::NodeId from, msg::Message m) override;
    void on_timer(const sim::Timer& t) override;
    void on_crash() override;
    void on_restart() override;

    void set_observer(PageStoreObserver* obs) { observer_ = obs; }

    // Directly drives one background step; used by tests and bench tooling.
    size_t consolidate_step();
    size_t flush_dirty_pages();
    void gossip_now(const core::SliceId& slice);

    // Introspection for invariant checks (same-process; not part of the
    // message protocol).
    struct DirEntry {
        core::Lsn lsn = core::kNoLsn;
        uint8_t kind = 0;  // 0 record, 1 consolidated page
        uint64_t off = 0;
        uint32_t len = 0;
    };
    struct PageDir {
        std::vector<DirEntry> entries;  // ascending by lsn
        core::Lsn floor = core::kNoLsn; // oldest servable version after GC
    };
    struct SliceReplica {
        core::SliceId slice;
        msg::ReplicaMode mode = msg::ReplicaMode::kNormal;
        std::array<sim::NodeId, 3> replicas{};
        sim::NodeId rebuild_source = sim::kNoNode;
        uint64_t fetch_req = 0;
        core::IntervalSet coverage;
        core::Lsn persistent = core::kNoLsn;
        uint64_t last_seq = 0;
        core::Lsn recycle = core::kNoLsn;
        std::map<core::PageId, PageDir> dir;
        struct RecordLoc {
            core::PageId page = 0;
            uint64_t off = 0;
            uint32_t len = 0;
        };
        std::map<core::Lsn, RecordLoc> lsn_index;
        std::string file;
        int gossip_rotor = 0;
        uint64_t gossip_req = 0;
    };

    std::vector<core::SliceId> hosted_slices() const;
    const SliceReplica* replica(const core::SliceId& slice) const;
    msg::PsReadPageResp read_page_local(const core::SliceId& slice, core::PageId page,
                                        core::Lsn lsn);
    const PageStoreMetrics& metrics() const;
    const BufferPool& pool() const { return pool_; }
    sim::NodeId id() const { return self_; }

private:
    struct IngestResult {
        bool duplicate = false;
        size_t fresh = 0;
    };

    SliceReplica* find_slice(const core::SliceId& slice);
    std::string slice_file_name(const core::SliceId& slice) const;

    IngestResult ingest_records(SliceReplica& r, core::Lsn cover_lo, core::Lsn cover_hi,
                                uint64_t seq, const std::vector<core::LogRecord>& records);
    void handle_write_logs(sim::NodeId from, const msg::PsWriteLogs& w);
    void handle_read_page(sim::NodeId from, const msg::PsReadPage& rd);
    void handle_set_recycle(sim::NodeId from, const msg::PsSetRecycle& sr);
    void handle_get_state(sim::NodeId from, const msg::PsGetState& gs);
    void handle_gossip_pull(sim::NodeId from, const msg::PsGossipPull& pull);
    void handle_gossip_data(sim::NodeId from, const msg::PsGossipData& data);
    void handle_assign(const msg::PsAssignSlice& assign);
    void handle_fetch_slice(sim::NodeId from, const msg::PsFetchSlice& f);
    void handle_fetch_slice_resp(const msg::PsFetchSliceResp& resp);

    core::LogRecord fetch_record(SliceReplica& r, const SliceReplica::RecordLoc& loc,
                                 bool for_consolidation, bool for_read);
    core::PageImage read_page_block(SliceReplica& r, const DirEntry& e);
    // Consolidates one page: applies its pending records (cache resident
    // ones under the log-cache-centric policy; any, with disk fetches, under
    // longest-chain-first). Returns true if a new version was produced.
    bool consolidate_page(SliceReplica& r, core::PageId page);
    void pool_make_room(const PoolKey& incoming);
    void flush_pool_page(const PoolKey& key, PoolEntry& e);
    void reload_spills();
    size_t consolidate_lcc(size_t budget);
    size_t consolidate_lcf(size_t budget);
    std::vector<msg::RepairChunk> build_chunks(SliceReplica& r,
                                               const std::vector<core::LsnRange>& ranges);
    void initiate_gossip(SliceReplica& r);
    void start_fetch(SliceReplica& r);
    void rebuild_from_disk();
    void heartbeat();
    void arm_background_timers();
    uint64_t slice_timer_tag(const core::SliceId& s) const {
        return (static_cast<uint64_t>(s.database) << 32) | s.index;
    }

    sim::Simulator& sim_;
    sim::NodeId self_;
    sim::NodeId cm_;
    sim::StoreConfig cfg_;
    sim::Rng rng_;
    std::map<core::SliceId, SliceReplica> slices_;
    BufferPool pool_;
    LogCache cache_;
    uint64_t record_entries_total_ = 0;
    uint64_t next_req_ = 1;
    PageStoreObserver* observer_ = nullptr;
    mutable PageStoreMetrics metrics_;
};

}  // namespace taurus::pagestore
