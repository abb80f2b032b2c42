#pragma once

#include <deque>
#include <functional>
#include <map>
#include <set>

#include "taurus/core/interval_set.hpp"
#include "taurus/logstore/plog.hpp"
#include "taurus/replica/wire.hpp"
#include "taurus/sal/router.hpp"
#include "taurus/simnet/config.hpp"
#include "taurus/simnet/sim.hpp"

namespace taurus::sal {

using logstore::PlogId;
using logstore::PlogInfo;

struct SalMetrics {
    uint64_t buffers_written = 0;
    uint64_t plogs_created = 0;
    uint64_t plogs_sealed = 0;
    uint64_t truncated_plogs = 0;
    uint64_t resent_records = 0;
    uint64_t repair_persistent_decrease = 0;  // mechanism A triggers
    uint64_t repair_stall = 0;                // mechanism B triggers
    uint64_t accelerated_gossip = 0;
    uint64_t throttle_delays = 0;
    uint64_t metadata_writes = 0;
    uint64_t fragments_sent = 0;
    uint64_t fragment_resends = 0;
    uint64_t records_unrecoverable = 0;
    uint64_t recovery_resent_records = 0;
};

// Observation points for the test harness (oracle and durability auditor).
struct SalHooks {
    std::function<void(const std::vector<core::LogRecord>&, const PlogId&,
                       const std::vector<sim::NodeId>&, uint64_t off, uint64_t len)>
        on_buffer_durable;
    std::function<void(const PlogId&)> on_plog_deleted;
    std::function<void(const std::vector<core::LogRecord>&)> on_recovery_scanned;
};

// The Storage Abstraction Layer: a library living inside the master node's
// actor. Routes log writes to Log Stores then per-slice buffers to Page
// Stores, tracks the LSN frontiers (CV-LSN, flush LSNs, per-replica
// persistent LSNs, database persistent LSN), truncates the log, repairs
// records missing from all replicas, and performs redo recovery after a
// master restart.
class Sal {
public:
    Sal(sim::Simulator& sim, sim::NodeId self, sim::NodeId cm, sim::StoreConfig cfg,
        uint32_t database);

    void set_hooks(SalHooks hooks) { hooks_ = std::move(hooks); }

    // Bootstrap wiring (pre-run): which page stores host each slice.
    void add_slice(const core::SliceId& slice, const std::array<sim::NodeId, 3>& replicas);
    // Creates the metadata PLog and the first data PLog, then reports ready.
    void start_fresh(std::function<void()> ready);

    bool ready() const { return ready_; }

    // Write path. The buffer must end on a group boundary; `committed` fires
    // at the durable ack (the commit point).
    void write_log_buffer(core::DatabaseLogBuffer buffer, std::function<void()> committed);

    // Read path: versioned read routed across the slice's replicas. The
    // callback receives the LSN actually used (requests above the slice
    // flush LSN are clamped to it).
    using ReadCb =
        std::function<void(msg::PsStatus, const core::PageImage&, core::Lsn lsn_used)>;
    void read_page_at(core::PageId page, core::Lsn lsn, ReadCb cb);

    // Dirty-page eviction rule: true iff at least one replica of the page's
    // slice has persisted every record of the page.
    bool eviction_permitted(core::PageId page, core::Lsn last_record_lsn) const;

    // Master restart: rebuild state from the metadata PLog and the log, then
    // resend whatever is missing from all replicas of each slice.
    void recover(std::function<void(core::Lsn max_durable_lsn)> done);

    // Wiring into the owning actor.
    bool handle_message(sim::NodeId from, const msg::Message& m);
    bool handle_timer(const sim::Timer& t);
    void on_crash();

    // Introspection.
    core::Lsn cv_lsn() const { return cv_lsn_; }
    core::Lsn db_persistent_lsn() const { return db_persistent_; }
    core::Lsn flush_lsn(const core::SliceId& slice) const;
    core::Lsn recorded_persistent(const core::SliceId& slice, sim::NodeId node) const;
    core::Lsn min_recorded_persistent(const core::SliceId& slice) const;
    core::Lsn max_recorded_persistent(const core::SliceId& slice) const;
    size_t chain_size() const { return chain_.size(); }
    const SalMetrics& metrics() const { return metrics_; }
    const std::map<core::SliceId, std::array<sim::NodeId, 3>> slice_map() const;
    core::Lsn last_recycle_sent(const core::SliceId& slice) const;
    uint64_t incarnation() const { return incarnation_; }

private:
    // ------------- per-slice state
    struct SliceState {
        core::SliceId slice;
        std::array<sim::NodeId, 3> replicas{};
        sim::NodeId rebuilding = sim::kNoNode;
        core::Lsn flush_lsn = core::kNoLsn;        // max record lsn sent
        core::Lsn acked_flush_lsn = core::kNoLsn;  // max fragment end acked by >=1 replica
        core::Lsn cover_prev = core::kNoLsn;       // coverage chain tail
        uint64_t next_seq = 1;
        std::vector<core::LogRecord> pending;
        std::vector<core::Lsn> pending_group_ends;
        uint64_t pending_bytes = 0;
        sim::Time pending_since = 0;
        std::map<sim::NodeId, core::Lsn> recorded;     // last reported persistent
        std::map<sim::NodeId, sim::Time> last_advance;
        std::map<sim::NodeId, int> stall_polls;
        core::Lsn recycle_sent = core::kNoLsn;
        bool repair_busy = false;
    };
    struct InflightFragment {
        uint64_t req = 0;
        core::SliceId slice;
        core::LogFragment frag;
        sim::Time sent_at = 0;
        bool repair = false;  // built from a Log Store re-read
    };
    struct OutstandingBuffer {
        core::Lsn last_lsn = core::kNoLsn;
        std::map<core::SliceId, core::Lsn> slice_max;
    };
    // ------------- append machinery (one in flight at a time per target log)
    struct AppendMachine {
        bool metadata = false;
        std::deque<std::pair<core::Bytes, uint64_t>> queue;  // (payload, buffer idx or 0)
        bool busy = false;
        uint64_t attempt = 0;
        core::Bytes data;
        uint64_t buffer_ref = 0;
        std::set<sim::NodeId> waiting;
        uint64_t append_off = 0;
    };
    struct PendingBuffer {
        uint64_t id = 0;
        core::DatabaseLogBuffer buffer;
        std::function<void()> committed;
    };
    // ------------- repair / chain reads
    struct ChainRead {
        uint64_t id = 0;
        std::vector<PlogId> plogs;
        size_t next_plog = 0;
        // Recovery mode: read every live replica of each plog and keep the
        // longest valid prefix, so nothing any replica holds can later be
        // assigned a colliding LSN. Repair mode reads one replica, bounded
        // by the acknowledged length.
        bool all_replicas = false;
        size_t replica_idx = 0;
        std::map<uint64_t, sim::NodeId> outstanding;  // req -> node, current plog
        core::Bytes best;
        bool got_any = false;
        std::map<PlogId, core::Bytes> data;
        std::function<void(ChainRead&)> done;
    };
    struct GapQuery {
        core::SliceId slice;
        uint64_t id = 0;
        std::map<sim::NodeId, msg::PsGetStateResp> responses;
        std::set<sim::NodeId> waiting;
        bool recovery = false;
    };
    enum class RecoverPhase : uint8_t {
        kIdle,
        kRegistry,
        kLocateMeta,
        kReadMeta,
        kScanChain,
        kQueryStates,
        kResend,
    };
    struct RecoverCtx {
        RecoverPhase phase = RecoverPhase::kIdle;
        std::function<void(core::Lsn)> done;
        PlogId meta_plog;
        size_t meta_replica_idx = 0;
        uint64_t meta_read_req = 0;
        std::set<PlogId> locate_waiting;
        std::map<core::Lsn, core::LogRecord> scanned;  // records above the checkpoint
        core::Lsn max_lsn = core::kNoLsn;
        core::Lsn max_boundary = core::kNoLsn;
        std::set<core::SliceId> state_waiting;
        std::set<uint64_t> resend_reqs;
    };

    SliceState* slice_for_page(core::PageId page);
    SliceState* find_slice(const core::SliceId& slice);
    const SliceState* find_slice(const core::SliceId& slice) const;

    void admit_buffers();
    void pump_append(AppendMachine& m);
    void start_append(AppendMachine& m);
    void roll_plog(AppendMachine& m);
    void on_append_resp(sim::NodeId from, const msg::LsAppendResp& resp);
    void on_append_timeout(uint64_t attempt);
    void append_durable(AppendMachine& m);
    void create_plog(bool metadata);
    void on_choose_nodes(const msg::CmChooseLogNodesResp& resp);
    void write_metadata();
    void distribute(const core::DatabaseLogBuffer& buffer);
    void flush_slice_buffer(SliceState& s);
    void check_flush_timers();
    void advance_cv();
    void send_master_update(const PlogId& plog, uint64_t off, uint64_t len);
    void ingest_persistent_report(const core::SliceId& slice, sim::NodeId node, core::Lsn p,
                                  msg::ReplicaMode mode);
    void poll_tick();
    void maintenance_tick();
    void recycle_tick();
    void compute_db_persistent();
    void trigger_stall_repair(SliceState& s, bool recovery);
    void on_gap_responses(GapQuery& q);
    void repair_from_logstore(SliceState& s, core::Lsn from_lsn);
    void send_repair_fragments(SliceState& s, const std::vector<core::LsnRange>& ranges,
                               const std::vector<core::LogRecord>& records, bool recovery);
    void start_chain_read(std::vector<PlogId> plogs, std::function<void(ChainRead&)> done,
                          bool all_replicas = false);
    void chain_read_step(ChainRead& cr);
    void on_plog_read(const msg::LsReadResp& resp);
    std::vector<sim::NodeId> read_candidates(const core::SliceId& slice);
    void recover_step();
    void begin_chain_scan();
    void recovery_resend();
    void finish_recovery_if_done();
    void arm_timers();

    sim::Simulator& sim_;
    sim::NodeId self_;
    sim::NodeId cm_;
    sim::StoreConfig cfg_;
    uint32_t database_;
    sim::Rng rng_;
    SalHooks hooks_;

    bool ready_ = false;
    std::function<void()> ready_cb_;
    uint64_t next_req_ = 1;

    std::map<core::SliceId, SliceState> slices_;
    std::vector<PlogInfo> chain_;  // data plogs, oldest first; back() is active
    PlogInfo meta_plog_;
    bool meta_valid_ = false;
    uint64_t epoch_ = 0;
    uint64_t incarnation_ = 1;
    core::Lsn cv_lsn_ = core::kNoLsn;
    core::Lsn db_persistent_ = core::kNoLsn;
    core::Lsn last_db_lsn_ = core::kNoLsn;
    int buffers_since_ckpt_ = 0;

    AppendMachine data_machine_;
    AppendMachine meta_machine_;
    bool creating_data_plog_ = false;
    bool creating_meta_plog_ = false;
    uint64_t choose_req_data_ = 0;
    uint64_t choose_req_meta_ = 0;
    PlogId delete_after_roll_;  // old metadata plog retired after rollover
    std::vector<sim::NodeId> old_meta_replicas_;
    std::map<uint64_t, std::pair<int, PlogId>> pending_locates_;

    std::map<uint64_t, PendingBuffer> buffers_;  // durable-pending buffers by id
    uint64_t next_buffer_id_ = 1;
    std::deque<uint64_t> admit_queue_;
    sim::Time throttled_until_ = 0;

    std::deque<OutstandingBuffer> outstanding_;
    std::map<uint64_t, InflightFragment> inflight_;

    std::map<uint64_t, ChainRead> chain_reads_;
    std::map<uint64_t, GapQuery> gap_queries_;

    ReadRouter router_;

    // read replica support
    std::set<sim::NodeId> replicas_;
    std::map<sim::NodeId, core::Lsn> replica_min_tv_;
    uint64_t master_seq_ = 0;

    RecoverCtx rec_;
    SalMetrics metrics_;
};

}  // namespace taurus::sal
