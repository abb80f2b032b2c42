#include "taurus/sal/sal.hpp"

#include <algorithm>
#include <cassert>

namespace taurus::sal {

using core::Bytes;
using core::DatabaseLogBuffer;
using core::LogFragment;
using core::LogRecord;
using core::Lsn;
using core::LsnRange;
using core::PageId;
using core::SliceId;
using sim::NodeId;
using sim::Timer;

namespace {
constexpr uint32_t kTimerFlushCheck = 100;
constexpr uint32_t kTimerAppendTimeout = 101;  // a = attempt id
constexpr uint32_t kTimerPoll = 102;
constexpr uint32_t kTimerMaintenance = 103;
constexpr uint32_t kTimerRecycle = 104;
constexpr uint32_t kTimerReadTimeout = 105;  // a = attempt req
constexpr uint32_t kTimerReadRetry = 106;    // a = read id
constexpr uint32_t kTimerFlushRetry = 107;
constexpr uint32_t kTimerCreateRetry = 108;  // a = metadata flag
constexpr uint32_t kTimerThrottleDrain = 109;
constexpr uint32_t kTimerGapTimeout = 110;  // a = gap query id
constexpr uint32_t kTimerHousekeeping = 111;

constexpr size_t kRepairChunkRecords = 256;

// locate purposes
constexpr int kLocateMeta = 1;
constexpr int kLocateChain = 2;
}  // namespace

Sal::Sal(sim::Simulator& sim, NodeId self, NodeId cm, sim::StoreConfig cfg, uint32_t database)
    : sim_(sim),
      self_(self),
      cm_(cm),
      cfg_(cfg),
      database_(database),
      rng_(sim.rng().fork()),
      router_(
          ReadRouter::Host{
              &sim, self, kTimerReadTimeout, kTimerReadRetry,
              [this](const SliceId& s) { return read_candidates(s); },
              [this](const SliceId& s, int rounds) {
                  if (rounds == 2) {
                      SliceState* st = find_slice(s);
                      if (st) {
                          trigger_stall_repair(*st, false);
                          for (NodeId n : st->replicas)
                              if (n != sim::kNoNode)
                                  sim_.send(self_, n, msg::Message{msg::PsGossipNow{s}});
                          ++metrics_.accelerated_gossip;
                      }
                  }
              }},
          cfg, sim.rng().fork()) {}

void Sal::arm_timers() {
    sim_.set_timer(self_, std::max<sim::Time>(1, cfg_.slice_buffer_timeout_ms / 2),
                   Timer{kTimerFlushCheck});
    sim_.set_timer(self_, cfg_.poll_interval_ms, Timer{kTimerPoll});
    sim_.set_timer(self_, cfg_.maintenance_interval_ms, Timer{kTimerMaintenance});
    sim_.set_timer(self_, cfg_.recycle_interval_ms, Timer{kTimerRecycle});
    sim_.set_timer(self_, cfg_.flush_retry_ms, Timer{kTimerFlushRetry});
    sim_.set_timer(self_, 500, Timer{kTimerHousekeeping});
}

void Sal::add_slice(const SliceId& slice, const std::array<NodeId, 3>& replicas) {
    SliceState s;
    s.slice = slice;
    s.replicas = replicas;
    for (NodeId n : replicas) {
        s.recorded[n] = core::kNoLsn;
        s.last_advance[n] = 0;
        s.stall_polls[n] = 0;
    }
    slices_[slice] = std::move(s);
}

Sal::SliceState* Sal::find_slice(const SliceId& slice) {
    auto it = slices_.find(slice);
    return it == slices_.end() ? nullptr : &it->second;
}

const Sal::SliceState* Sal::find_slice(const SliceId& slice) const {
    auto it = slices_.find(slice);
    return it == slices_.end() ? nullptr : &it->second;
}

Sal::SliceState* Sal::slice_for_page(PageId page) {
    return find_slice(core::page_to_slice(page, cfg_.page, database_));
}

Lsn Sal::flush_lsn(const SliceId& slice) const {
    const SliceState* s = find_slice(slice);
    return s ? s->flush_lsn : core::kNoLsn;
}

Lsn Sal::recorded_persistent(const SliceId& slice, NodeId node) const {
    const SliceState* s = find_slice(slice);
    if (!s) return core::kNoLsn;
    auto it = s->recorded.find(node);
    return it == s->recorded.end() ? core::kNoLsn : it->second;
}

Lsn Sal::min_recorded_persistent(const SliceId& slice) const {
    const SliceState* s = find_slice(slice);
    if (!s) return core::kNoLsn;
    Lsn m = ~0ULL;
    for (NodeId n : s->replicas) {
        auto it = s->recorded.find(n);
        m = std::min(m, it == s->recorded.end() ? core::kNoLsn : it->second);
    }
    return m == ~0ULL ? core::kNoLsn : m;
}

Lsn Sal::max_recorded_persistent(const SliceId& slice) const {
    const SliceState* s = find_slice(slice);
    if (!s) return core::kNoLsn;
    Lsn m = core::kNoLsn;
    for (const auto& [n, p] : s->recorded) m = std::max(m, p);
    return m;
}

const std::map<SliceId, std::array<NodeId, 3>> Sal::slice_map() const {
    std::map<SliceId, std::array<NodeId, 3>> out;
    for (const auto& [s, st] : slices_) out[s] = st.replicas;
    return out;
}

bool Sal::eviction_permitted(PageId page, Lsn last_record_lsn) const {
    if (last_record_lsn == core::kNoLsn) return true;  // clean page
    SliceId slice = core::page_to_slice(page, cfg_.page, database_);
    return max_recorded_persistent(slice) >= last_record_lsn;
}

std::vector<NodeId> Sal::read_candidates(const SliceId& slice) {
    std::vector<NodeId> out;
    SliceState* s = find_slice(slice);
    if (!s) return out;
    for (NodeId n : s->replicas) {
        if (n == sim::kNoNode || n == s->rebuilding || sim_.is_removed(n)) continue;
        out.push_back(n);
    }
    return out;
}

// ------------------------------------------------------------ bootstrapping

void Sal::start_fresh(std::function<void()> ready) {
    ready_cb_ = std::move(ready);
    arm_timers();
    create_plog(true);   // metadata plog first
    create_plog(false);  // then the first data plog
}

void Sal::create_plog(bool metadata) {
    if (metadata ? creating_meta_plog_ : creating_data_plog_) return;
    (metadata ? creating_meta_plog_ : creating_data_plog_) = true;
    msg::CmChooseLogNodes req;
    req.req_id = next_req_++;
    (metadata ? choose_req_meta_ : choose_req_data_) = req.req_id;
    sim_.send(self_, cm_, msg::Message{req});
}

void Sal::on_choose_nodes(const msg::CmChooseLogNodesResp& resp) {
    bool metadata;
    if (resp.req_id == choose_req_meta_ && choose_req_meta_ != 0) {
        metadata = true;
        choose_req_meta_ = 0;
    } else if (resp.req_id == choose_req_data_ && choose_req_data_ != 0) {
        metadata = false;
        choose_req_data_ = 0;
    } else {
        return;
    }
    if (!resp.ok) {
        // InsufficientHealthyNodes: fewer than three healthy Log Stores.
        // Retry until the cluster heals; writes queue meanwhile.
        (metadata ? creating_meta_plog_ : creating_data_plog_) = false;
        sim_.set_timer(self_, 1000, Timer{kTimerCreateRetry, metadata ? 1ULL : 0ULL});
        return;
    }
    PlogInfo info;
    info.id = PlogId{rng_.next(), rng_.next()};
    info.kind = metadata ? logstore::PlogKind::kMetadata : logstore::PlogKind::kData;
    info.replicas = resp.nodes;
    ++metrics_.plogs_created;
    msg::CmPlogCreated created;
    created.id = info.id;
    created.kind = info.kind;
    created.replicas = info.replicas;
    sim_.send(self_, cm_, msg::Message{created});
    for (NodeId n : info.replicas)
        sim_.send(self_, n, msg::Message{msg::LsCreatePlog{info.id, info.kind}});
    // Replica creation is fire-and-forget: an append to a replica whose
    // create message was lost fails the append, seals the plog and rolls
    // over, which is the normal failure path anyway.
    if (metadata) {
        if (meta_valid_) delete_after_roll_ = meta_plog_.id;
        meta_plog_ = info;
        meta_valid_ = true;
        creating_meta_plog_ = false;
        sim_.send(self_, cm_, msg::Message{msg::CmRegistrySet{database_, info.id}});
        if (!delete_after_roll_.is_null()) {
            // Metadata rollover: write the latest snapshot to the new plog,
            // then retire the old one.
            if (meta_machine_.queue.size() > 1) {
                auto latest = std::move(meta_machine_.queue.back());
                meta_machine_.queue.clear();
                meta_machine_.queue.push_back(std::move(latest));
            }
            if (meta_machine_.queue.empty()) write_metadata();
            // The old metadata plog is deleted only after the snapshot is
            // durable on the new one (append_durable), else a crash in
            // between would lose the metadata entirely.
        }
        pump_append(meta_machine_);
    } else {
        info.lsn_range = {core::kNoLsn, core::kNoLsn};
        chain_.push_back(info);
        creating_data_plog_ = false;
        write_metadata();
        pump_append(data_machine_);
    }
    if (!ready_ && rec_.phase == RecoverPhase::kIdle && meta_valid_ && !chain_.empty()) {
        ready_ = true;
        if (ready_cb_) {
            auto cb = std::move(ready_cb_);
            ready_cb_ = nullptr;
            cb();
        }
    }
}

// ------------------------------------------------------------ write path

void Sal::write_log_buffer(DatabaseLogBuffer buffer, std::function<void()> committed) {
    assert(buffer.ends_on_boundary());
    assert(!buffer.records.empty());
    PendingBuffer pb;
    pb.id = next_buffer_id_++;
    pb.buffer = std::move(buffer);
    pb.committed = std::move(committed);
    uint64_t id = pb.id;
    buffers_.emplace(id, std::move(pb));
    admit_queue_.push_back(id);
    admit_buffers();
}

void Sal::admit_buffers() {
    while (!admit_queue_.empty()) {
        if (sim_.now() < throttled_until_) {
            ++metrics_.throttle_delays;
            sim_.set_timer(self_, cfg_.throttle_drain_ms, Timer{kTimerThrottleDrain});
            return;
        }
        uint64_t id = admit_queue_.front();
        admit_queue_.pop_front();
        PendingBuffer& pb = buffers_.at(id);
        Bytes payload;
        for (const LogRecord& rec : pb.buffer.records) core::encode_log_record(rec, payload);
        data_machine_.queue.emplace_back(std::move(payload), id);
    }
    pump_append(data_machine_);
}

void Sal::write_metadata() {
    logstore::MetadataRecord rec;
    rec.epoch = ++epoch_;
    rec.db_persistent_lsn = db_persistent_;
    for (const PlogInfo& p : chain_) rec.data_chain.emplace_back(p.id, p.lsn_range);
    meta_machine_.metadata = true;
    meta_machine_.queue.emplace_back(rec.encode(), 0);
    ++metrics_.metadata_writes;
    buffers_since_ckpt_ = 0;
    pump_append(meta_machine_);
}

void Sal::pump_append(AppendMachine& m) {
    if (m.busy || m.queue.empty()) return;
    PlogInfo* target = m.metadata ? (meta_valid_ ? &meta_plog_ : nullptr)
                                  : (chain_.empty() ? nullptr : &chain_.back());
    uint64_t limit = m.metadata ? cfg_.metadata_plog_size_limit : cfg_.plog_size_limit;
    const Bytes& payload = m.queue.front().first;
    if (!target || target->sealed || target->acked_len + payload.size() > limit) {
        // SizeLimitExceeded or sealed: roll to a fresh plog and retry there.
        roll_plog(m);
        return;
    }
    m.busy = true;
    m.attempt = next_req_++;
    m.data = payload;
    m.buffer_ref = m.queue.front().second;
    m.append_off = target->acked_len;
    m.waiting.clear();
    for (NodeId n : target->replicas) {
        m.waiting.insert(n);
        msg::LsAppend ap;
        ap.req_id = m.attempt;
        ap.id = target->id;
        ap.data = m.data;
        sim_.send(self_, n, msg::Message{ap});
    }
    sim_.set_timer(self_, cfg_.append_timeout_ms, Timer{kTimerAppendTimeout, m.attempt});
}

void Sal::roll_plog(AppendMachine& m) {
    PlogInfo* target = m.metadata ? (meta_valid_ ? &meta_plog_ : nullptr)
                                  : (chain_.empty() ? nullptr : &chain_.back());
    if (target && !target->sealed) {
        target->sealed = true;
        ++metrics_.plogs_sealed;
        for (NodeId n : target->replicas)
            if (!sim_.is_removed(n)) sim_.send(self_, n, msg::Message{msg::LsSeal{target->id}});
        sim_.send(self_, cm_, msg::Message{msg::CmPlogSealed{target->id}});
        if (m.metadata) old_meta_replicas_ = target->replicas;
    }
    create_plog(m.metadata);
}

void Sal::on_append_resp(NodeId from, const msg::LsAppendResp& resp) {
    AppendMachine* m = nullptr;
    if (data_machine_.busy && resp.req_id == data_machine_.attempt) m = &data_machine_;
    else if (meta_machine_.busy && resp.req_id == meta_machine_.attempt) m = &meta_machine_;
    if (!m) return;  // stale attempt
    if (resp.status != msg::LsAppendStatus::kOk) {
        // Sealed or unknown replica: stop writing to this plog, roll over.
        m->busy = false;
        roll_plog(*m);
        return;
    }
    m->waiting.erase(from);
    if (m->waiting.empty()) append_durable(*m);
}

void Sal::on_append_timeout(uint64_t attempt) {
    AppendMachine* m = nullptr;
    if (data_machine_.busy && attempt == data_machine_.attempt) m = &data_machine_;
    else if (meta_machine_.busy && attempt == meta_machine_.attempt) m = &meta_machine_;
    if (!m || m->waiting.empty()) return;
    // One or more replicas missed the deadline: the plog is sealed and the
    // same payload is rewritten to a fresh plog on other nodes.
    m->busy = false;
    roll_plog(*m);
}

void Sal::append_durable(AppendMachine& m) {
    m.busy = false;
    PlogInfo& target = m.metadata ? meta_plog_ : chain_.back();
    uint64_t off = m.append_off;
    uint64_t len = m.data.size();
    target.acked_len += len;
    m.queue.pop_front();

    if (m.metadata) {
        if (!delete_after_roll_.is_null()) {
            PlogId old = delete_after_roll_;
            delete_after_roll_ = PlogId{};
            for (NodeId n : old_meta_replicas_)
                if (!sim_.is_removed(n)) sim_.send(self_, n, msg::Message{msg::LsDelete{old}});
            sim_.send(self_, cm_, msg::Message{msg::CmPlogDeleted{old}});
            if (hooks_.on_plog_deleted) hooks_.on_plog_deleted(old);
        }
        pump_append(m);
        return;
    }

    auto bit = buffers_.find(m.buffer_ref);
    assert(bit != buffers_.end());
    PendingBuffer pb = std::move(bit->second);
    buffers_.erase(bit);

    const DatabaseLogBuffer& buffer = pb.buffer;
    if (target.lsn_range.lo == core::kNoLsn) target.lsn_range.lo = buffer.records.front().lsn;
    target.lsn_range.hi = buffer.records.back().lsn;
    last_db_lsn_ = buffer.last_lsn;
    ++metrics_.buffers_written;
    ++buffers_since_ckpt_;

    if (hooks_.on_buffer_durable)
        hooks_.on_buffer_durable(buffer.records, target.id, target.replicas, off, len);

    OutstandingBuffer ob;
    ob.last_lsn = buffer.last_lsn;
    for (const LogRecord& rec : buffer.records) {
        Lsn& mx = ob.slice_max[rec.slice];
        mx = std::max(mx, rec.lsn);
    }
    outstanding_.push_back(std::move(ob));

    distribute(buffer);
    if (pb.committed) pb.committed();
    send_master_update(target.id, off, len);
    advance_cv();
    if (buffers_since_ckpt_ >= cfg_.checkpoint_every_buffers) write_metadata();
    pump_append(m);
}

void Sal::distribute(const DatabaseLogBuffer& buffer) {
    for (const LogRecord& rec : buffer.records) {
        SliceState* s = find_slice(rec.slice);
        assert(s);
        if (s->pending.empty()) s->pending_since = sim_.now();
        s->pending.push_back(rec);
        if (rec.group_end) s->pending_group_ends.push_back(rec.lsn);
        s->pending_bytes += core::encoded_record_size(rec);
        if (s->pending_bytes >= cfg_.slice_buffer_flush_bytes) flush_slice_buffer(*s);
    }
}

void Sal::flush_slice_buffer(SliceState& s) {
    if (s.pending.empty()) return;
    LogFragment frag;
    frag.slice = s.slice;
    frag.sequence = s.next_seq++;
    frag.records = std::move(s.pending);
    frag.group_ends = std::move(s.pending_group_ends);
    frag.cover_lo = s.cover_prev + 1;
    frag.cover_hi = frag.records.back().lsn;
    s.cover_prev = frag.cover_hi;
    s.pending.clear();
    s.pending_group_ends.clear();
    s.pending_bytes = 0;
    s.flush_lsn = std::max(s.flush_lsn, frag.cover_hi);

    InflightFragment inf;
    inf.req = next_req_++;
    inf.slice = s.slice;
    inf.frag = frag;
    inf.sent_at = sim_.now();
    uint64_t req = inf.req;
    inflight_.emplace(req, std::move(inf));
    msg::PsWriteLogs w;
    w.req_id = req;
    w.frag = std::move(frag);
    for (NodeId n : s.replicas)
        if (n != sim::kNoNode && !sim_.is_removed(n)) sim_.send(self_, n, msg::Message{w});
    ++metrics_.fragments_sent;
}

void Sal::check_flush_timers() {
    for (auto& [slice, s] : slices_) {
        if (!s.pending.empty() && sim_.now() - s.pending_since >= cfg_.slice_buffer_timeout_ms)
            flush_slice_buffer(s);
    }
}

void Sal::advance_cv() {
    while (!outstanding_.empty()) {
        const OutstandingBuffer& ob = outstanding_.front();
        bool all_acked = true;
        for (const auto& [slice, mx] : ob.slice_max) {
            SliceState* s = find_slice(slice);
            if (!s || s->acked_flush_lsn < mx) {
                all_acked = false;
                break;
            }
        }
        if (!all_acked) break;
        cv_lsn_ = ob.last_lsn;  // advances in database-log-buffer increments
        outstanding_.pop_front();
    }
}

// ------------------------------------------------- persistent LSN tracking

void Sal::ingest_persistent_report(const SliceId& slice, NodeId node, Lsn p,
                                   msg::ReplicaMode mode) {
    SliceState* s = find_slice(slice);
    if (!s) return;
    if (std::find(s->replicas.begin(), s->replicas.end(), node) == s->replicas.end()) return;
    if (mode == msg::ReplicaMode::kRebuilding) return;  // not meaningful until the copy lands
    if (s->rebuilding == node) s->rebuilding = sim::kNoNode;

    Lsn prev = core::kNoLsn;
    auto it = s->recorded.find(node);
    if (it != s->recorded.end()) prev = it->second;
    if (p < prev) {
        // Mechanism A (persistent LSN decreased, e.g. a replacement replica
        // built from a lagging source): reread the log from the smallest
        // replica persistent LSN and resend.
        ++metrics_.repair_persistent_decrease;
        s->recorded[node] = p;
        sim_.trace_key(self_, "persistent decrease on " + sim_.name(node) + " slice " +
                                  core::to_string(slice) + ": " + std::to_string(prev) + "->" +
                                  std::to_string(p));
        repair_from_logstore(*s, min_recorded_persistent(slice));
        return;
    }
    if (p > prev) {
        s->last_advance[node] = sim_.now();
        s->stall_polls[node] = 0;
    }
    s->recorded[node] = p;
}

void Sal::poll_tick() {
    for (auto& [slice, s] : slices_) {
        for (NodeId n : s.replicas) {
            if (n == sim::kNoNode || n == s.rebuilding || sim_.is_removed(n)) continue;
            msg::PsGetState gs;
            gs.req_id = 0;  // plain poll; response feeds ingest_persistent_report
            gs.slice = slice;
            sim_.send(self_, n, msg::Message{gs});
            if (s.recorded[n] < s.flush_lsn) {
                if (++s.stall_polls[n] >= cfg_.staleness_polls && !s.repair_busy)
                    trigger_stall_repair(s, false);
            } else {
                s.stall_polls[n] = 0;
            }
        }
    }
    sim_.set_timer(self_, cfg_.poll_interval_ms, Timer{kTimerPoll});
}

void Sal::trigger_stall_repair(SliceState& s, bool recovery) {
    if (s.repair_busy) return;
    s.repair_busy = true;
    ++metrics_.repair_stall;
    GapQuery q;
    q.slice = s.slice;
    q.id = next_req_++;
    q.recovery = recovery;
    for (NodeId n : s.replicas) {
        if (n == sim::kNoNode || n == s.rebuilding || sim_.is_removed(n)) continue;
        q.waiting.insert(n);
        msg::PsGetState gs;
        gs.req_id = q.id;
        gs.slice = s.slice;
        gs.want_gaps = true;
        sim_.send(self_, n, msg::Message{gs});
    }
    for (NodeId n : s.replicas) s.stall_polls[n] = 0;
    uint64_t id = q.id;
    bool empty = q.waiting.empty();
    gap_queries_.emplace(id, std::move(q));
    if (empty) on_gap_responses(gap_queries_.at(id));
    else sim_.set_timer(self_, 4 * cfg_.read_attempt_timeout_ms, Timer{kTimerGapTimeout, id});
}

namespace {

// Rebuilds "which LSNs this replica provably has" from a state response.
core::IntervalSet has_set_from_state(const msg::PsGetStateResp& r) {
    core::IntervalSet has;
    if (r.coverage_end == core::kNoLsn) return has;
    Lsn prev = 1;
    for (const LsnRange& gap : r.gaps) {
        if (gap.lo > prev) has.add(prev, gap.lo - 1);
        prev = gap.hi + 1;
    }
    if (prev <= r.coverage_end) has.add(prev, r.coverage_end);
    return has;
}

}  // namespace

void Sal::on_gap_responses(GapQuery& q) {
    SliceState* s = find_slice(q.slice);
    uint64_t qid = q.id;
    bool recovery = q.recovery;
    if (!s) {
        gap_queries_.erase(qid);
        return;
    }
    Lsn hi = s->flush_lsn;
    Lsn lo = std::max<Lsn>(1, db_persistent_ + 1);
    core::IntervalSet union_has;
    bool any_missing_somewhere = false;
    std::map<NodeId, core::IntervalSet> has_by_node;
    for (const auto& [node, resp] : q.responses) {
        core::IntervalSet has = has_set_from_state(resp);
        for (const LsnRange& iv : has.intervals()) union_has.add(iv);
        has_by_node[node] = std::move(has);
    }
    std::vector<LsnRange> missing_all =
        hi >= lo ? union_has.missing_in(lo, hi) : std::vector<LsnRange>{};
    for (const auto& [node, has] : has_by_node) {
        if (hi >= lo && !has.missing_in(lo, hi).empty()) any_missing_somewhere = true;
    }

    if (!missing_all.empty()) {
        // Records missing from every replica: only the Log Stores have them.
        std::vector<PlogId> plogs;
        for (const PlogInfo& p : chain_) {
            if (p.lsn_range.lo == core::kNoLsn) continue;
            for (const LsnRange& r : missing_all)
                if (p.lsn_range.hi >= r.lo && p.lsn_range.lo <= r.hi) {
                    plogs.push_back(p.id);
                    break;
                }
        }
        SliceId slice = q.slice;
        std::vector<LsnRange> ranges = missing_all;
        start_chain_read(plogs, [this, slice, ranges, recovery](ChainRead& cr) {
            SliceState* s2 = find_slice(slice);
            if (!s2) return;
            std::vector<LogRecord> records;
            for (auto& [id, bytes] : cr.data) {
                core::LogScan scan = core::scan_log(bytes);
                for (LogRecord& rec : scan.records) {
                    if (rec.slice != slice) continue;
                    bool wanted = false;
                    for (const LsnRange& r : ranges)
                        if (rec.lsn >= r.lo && rec.lsn <= r.hi) wanted = true;
                    if (wanted) records.push_back(std::move(rec));
                }
            }
            std::sort(records.begin(), records.end(),
                      [](const LogRecord& a, const LogRecord& b) { return a.lsn < b.lsn; });
            records.erase(std::unique(records.begin(), records.end(),
                                      [](const LogRecord& a, const LogRecord& b) {
                                          return a.lsn == b.lsn;
                                      }),
                          records.end());
            send_repair_fragments(*s2, ranges, records, recovery);
            s2->repair_busy = false;
            if (recovery) {
                rec_.state_waiting.erase(slice);
                finish_recovery_if_done();
            }
        });
    } else {
        if (any_missing_somewhere) {
            // Missing from some replicas only: gossip can repair it; nudge.
            for (NodeId n : s->replicas)
                if (n != sim::kNoNode && !sim_.is_removed(n))
                    sim_.send(self_, n, msg::Message{msg::PsGossipNow{q.slice}});
            ++metrics_.accelerated_gossip;
        }
        s->repair_busy = false;
        if (recovery) {
            rec_.state_waiting.erase(q.slice);
            finish_recovery_if_done();
        }
    }
    gap_queries_.erase(qid);
}

void Sal::repair_from_logstore(SliceState& s, Lsn from_lsn) {
    if (s.repair_busy) return;
    s.repair_busy = true;
    Lsn lo = std::max(from_lsn, db_persistent_) + 1;
    Lsn hi = s.flush_lsn;
    if (hi < lo) {
        s.repair_busy = false;
        return;
    }
    std::vector<PlogId> plogs;
    for (const PlogInfo& p : chain_) {
        if (p.lsn_range.lo == core::kNoLsn) continue;
        if (p.lsn_range.hi >= lo && p.lsn_range.lo <= hi) plogs.push_back(p.id);
    }
    SliceId slice = s.slice;
    start_chain_read(plogs, [this, slice, lo, hi](ChainRead& cr) {
        SliceState* s2 = find_slice(slice);
        if (!s2) return;
        std::vector<LogRecord> records;
        for (auto& [id, bytes] : cr.data) {
            core::LogScan scan = core::scan_log(bytes);
            for (LogRecord& rec : scan.records)
                if (rec.slice == slice && rec.lsn >= lo && rec.lsn <= hi)
                    records.push_back(std::move(rec));
        }
        std::sort(records.begin(), records.end(),
                  [](const LogRecord& a, const LogRecord& b) { return a.lsn < b.lsn; });
        records.erase(std::unique(records.begin(), records.end(),
                                  [](const LogRecord& a, const LogRecord& b) {
                                      return a.lsn == b.lsn;
                                  }),
                      records.end());
        send_repair_fragments(*s2, {{lo, hi}}, records, false);
        s2->repair_busy = false;
    });
}

void Sal::send_repair_fragments(SliceState& s, const std::vector<LsnRange>& ranges,
                                const std::vector<LogRecord>& records, bool recovery) {
    for (const LsnRange& range : ranges) {
        // Chunk the range; every chunk carries an exact coverage interval.
        std::vector<LogRecord> in_range;
        for (const LogRecord& rec : records)
            if (rec.lsn >= range.lo && rec.lsn <= range.hi) in_range.push_back(rec);
        size_t i = 0;
        Lsn cover_start = range.lo;
        do {
            size_t n = std::min(kRepairChunkRecords, in_range.size() - i);
            LogFragment frag;
            frag.slice = s.slice;
            frag.sequence = 0;
            frag.records.assign(in_range.begin() + i, in_range.begin() + i + n);
            frag.cover_lo = cover_start;
            bool last_chunk = i + n >= in_range.size();
            frag.cover_hi = last_chunk ? range.hi : frag.records.back().lsn;
            cover_start = frag.cover_hi + 1;
            i += n;

            InflightFragment inf;
            inf.req = next_req_++;
            inf.slice = s.slice;
            inf.frag = frag;
            inf.sent_at = sim_.now();
            inf.repair = true;
            uint64_t req = inf.req;
            inflight_.emplace(req, std::move(inf));
            if (recovery) rec_.resend_reqs.insert(req);
            msg::PsWriteLogs w;
            w.req_id = req;
            w.frag = std::move(frag);
            for (NodeId node : s.replicas)
                if (node != sim::kNoNode && !sim_.is_removed(node))
                    sim_.send(self_, node, msg::Message{w});
            metrics_.resent_records += n;
            if (recovery) metrics_.recovery_resent_records += n;
        } while (i < in_range.size());
    }
}

// --------------------------------------------------------- chain plog reads

void Sal::start_chain_read(std::vector<PlogId> plogs, std::function<void(ChainRead&)> done,
                           bool all_replicas) {
    ChainRead cr;
    cr.id = next_req_++;
    cr.plogs = std::move(plogs);
    cr.done = std::move(done);
    cr.all_replicas = all_replicas;
    uint64_t id = cr.id;
    chain_reads_.emplace(id, std::move(cr));
    chain_read_step(chain_reads_.at(id));
}

void Sal::chain_read_step(ChainRead& cr) {
    if (cr.next_plog >= cr.plogs.size()) {
        auto done = std::move(cr.done);
        ChainRead finished = std::move(cr);
        chain_reads_.erase(finished.id);
        done(finished);
        return;
    }
    const PlogId& id = cr.plogs[cr.next_plog];
    const PlogInfo* info = nullptr;
    for (const PlogInfo& p : chain_)
        if (p.id == id) info = &p;
    if (!info) {
        // Truncated between scheduling and reading; its records were fully
        // replicated, skip it.
        ++cr.next_plog;
        cr.replica_idx = 0;
        chain_read_step(cr);
        return;
    }
    if (cr.all_replicas) {
        cr.outstanding.clear();
        cr.best.clear();
        cr.got_any = false;
        for (NodeId n : info->replicas) {
            if (sim_.is_removed(n) || !sim_.is_up(n)) continue;
            msg::LsRead rd;
            rd.req_id = next_req_++;
            rd.id = id;
            rd.off = 0;
            rd.len = 0;  // whole replica file; prefixes agree byte for byte
            cr.outstanding[rd.req_id] = n;
            sim_.send(self_, n, msg::Message{rd});
        }
        if (cr.outstanding.empty()) {
            ++metrics_.records_unrecoverable;
            sim_.trace_key(self_, "RecordsUnrecoverable: plog " + id.hex());
            ++cr.next_plog;
            chain_read_step(cr);
        }
        return;
    }
    // Repair mode: one replica suffices, but never read past the
    // acknowledged length (replica tails may diverge beyond it).
    NodeId target = sim::kNoNode;
    for (size_t k = cr.replica_idx; k < info->replicas.size(); ++k) {
        if (!sim_.is_removed(info->replicas[k])) {
            target = info->replicas[k];
            cr.replica_idx = k;
            break;
        }
    }
    if (target == sim::kNoNode) {
        ++metrics_.records_unrecoverable;
        sim_.trace_key(self_, "RecordsUnrecoverable: plog " + id.hex());
        ++cr.next_plog;
        cr.replica_idx = 0;
        chain_read_step(cr);
        return;
    }
    if (info->acked_len == 0) {
        ++cr.next_plog;
        cr.replica_idx = 0;
        chain_read_step(cr);
        return;
    }
    msg::LsRead rd;
    rd.req_id = next_req_++;
    rd.id = id;
    rd.off = 0;
    rd.len = info->acked_len;
    cr.outstanding.clear();
    cr.outstanding[rd.req_id] = target;
    sim_.send(self_, target, msg::Message{rd});
}

void Sal::on_plog_read(const msg::LsReadResp& resp) {
    for (auto& [id, cr] : chain_reads_) {
        auto oit = cr.outstanding.find(resp.req_id);
        if (oit == cr.outstanding.end()) continue;
        cr.outstanding.erase(oit);
        if (cr.all_replicas) {
            if (resp.ok) {
                cr.got_any = true;
                if (resp.data.size() > cr.best.size()) cr.best = resp.data;
            }
            if (cr.outstanding.empty()) {
                if (!cr.got_any) {
                    // No replica answered; housekeeping retries the plog.
                    chain_read_step(cr);
                    return;
                }
                cr.data[cr.plogs[cr.next_plog]] = std::move(cr.best);
                cr.best.clear();
                ++cr.next_plog;
                chain_read_step(cr);
            }
            return;
        }
        if (!resp.ok) {
            ++cr.replica_idx;
            chain_read_step(cr);
            return;
        }
        cr.data[resp.id] = resp.data;
        ++cr.next_plog;
        cr.replica_idx = 0;
        chain_read_step(cr);
        return;
    }
}

// ------------------------------------------------------------- maintenance

void Sal::compute_db_persistent() {
    // Minimum persistent LSN across slices that still have records not yet
    // on all three replicas; when no slice lags, the global max flush LSN.
    Lsn result = ~0ULL;
    bool any_laggard = false;
    Lsn max_flush = core::kNoLsn;
    for (const auto& [slice, s] : slices_) {
        max_flush = std::max(max_flush, s.flush_lsn);
        Lsn min_rp = ~0ULL;
        for (NodeId n : s.replicas) {
            auto it = s.recorded.find(n);
            min_rp = std::min(min_rp, it == s.recorded.end() ? core::kNoLsn : it->second);
        }
        if (min_rp == ~0ULL) min_rp = core::kNoLsn;
        if (s.flush_lsn > min_rp || !s.pending.empty()) {
            any_laggard = true;
            result = std::min(result, min_rp);
        }
    }
    db_persistent_ = any_laggard ? result : max_flush;
}

void Sal::maintenance_tick() {
    compute_db_persistent();
    bool rebuilding = false;
    for (const auto& [slice, s] : slices_)
        if (s.rebuilding != sim::kNoNode) rebuilding = true;
    // Truncation pauses while a replica rebuild is in flight so that every
    // record keeps three homes throughout.
    if (!rebuilding && chain_.size() > 1) {
        bool changed = false;
        for (auto it = chain_.begin(); it + 1 != chain_.end();) {
            const PlogInfo& p = *it;
            bool deletable = p.sealed && (p.lsn_range.hi == core::kNoLsn ||
                                          p.lsn_range.hi < db_persistent_);
            if (deletable) {
                for (NodeId n : p.replicas)
                    if (!sim_.is_removed(n)) sim_.send(self_, n, msg::Message{msg::LsDelete{p.id}});
                sim_.send(self_, cm_, msg::Message{msg::CmPlogDeleted{p.id}});
                if (hooks_.on_plog_deleted) hooks_.on_plog_deleted(p.id);
                ++metrics_.truncated_plogs;
                it = chain_.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
        if (changed) write_metadata();
    }
    if (buffers_since_ckpt_ >= cfg_.checkpoint_every_buffers) write_metadata();
    sim_.set_timer(self_, cfg_.maintenance_interval_ms, Timer{kTimerMaintenance});
}

void Sal::recycle_tick() {
    Lsn candidate = cv_lsn_;
    for (const auto& [node, tv] : replica_min_tv_) candidate = std::min(candidate, tv);
    for (auto& [slice, s] : slices_) {
        // Capped at the slice's minimum replica persistent LSN: a record may
        // only be garbage-collected once every current member has it, else a
        // lagging replica could never be repaired from its peers.
        Lsn value = std::min(candidate, min_recorded_persistent(slice));
        if (value > s.recycle_sent) {
            s.recycle_sent = value;
            for (NodeId n : s.replicas)
                if (n != sim::kNoNode && !sim_.is_removed(n))
                    sim_.send(self_, n, msg::Message{msg::PsSetRecycle{slice, value}});
        }
    }
    sim_.set_timer(self_, cfg_.recycle_interval_ms, Timer{kTimerRecycle});
}

Lsn Sal::last_recycle_sent(const core::SliceId& slice) const {
    const SliceState* s = find_slice(slice);
    return s ? s->recycle_sent : core::kNoLsn;
}

// ------------------------------------------------------------------- reads

void Sal::read_page_at(PageId page, Lsn lsn, ReadCb cb) {
    SliceId slice = core::page_to_slice(page, cfg_.page, database_);
    SliceState* s = find_slice(slice);
    if (!s) {
        cb(msg::PsStatus::kUnknownSlice, core::PageImage{}, lsn);
        return;
    }
    if (lsn == core::kNoLsn || lsn > s->flush_lsn) lsn = s->flush_lsn;
    router_.start_read(slice, page, lsn,
                       [cb, lsn](msg::PsStatus st, const msg::PsReadPageResp& resp) {
                           cb(st, resp.image, lsn);
                       });
}

// ------------------------------------------------------------ read replicas

void Sal::send_master_update(const PlogId& plog, uint64_t off, uint64_t len) {
    if (replicas_.empty()) return;
    replica::MasterUpdate u;
    u.seq = ++master_seq_;
    u.incarnation = incarnation_;
    u.last_db_lsn = last_db_lsn_;
    u.last_boundary = last_db_lsn_;  // buffers end on group boundaries
    u.commit_time_ms = sim_.now();
    u.extents.push_back({plog, off, len});
    for (const auto& [slice, s] : slices_)
        u.slice_persistents.emplace_back(slice, max_recorded_persistent(slice));
    msg::RepMasterMsg m;
    m.encoded = u.encode();
    for (NodeId r : replicas_) sim_.send(self_, r, msg::Message{m});
}

// ---------------------------------------------------------------- recovery

void Sal::on_crash() {
    ready_ = false;
    ready_cb_ = nullptr;
    slices_.clear();
    chain_.clear();
    meta_valid_ = false;
    creating_data_plog_ = creating_meta_plog_ = false;
    choose_req_data_ = choose_req_meta_ = 0;
    delete_after_roll_ = PlogId{};
    data_machine_ = AppendMachine{};
    meta_machine_ = AppendMachine{};
    meta_machine_.metadata = true;
    buffers_.clear();
    admit_queue_.clear();
    outstanding_.clear();
    inflight_.clear();
    chain_reads_.clear();
    gap_queries_.clear();
    router_.clear();
    replicas_.clear();
    replica_min_tv_.clear();
    rec_ = RecoverCtx{};
    cv_lsn_ = core::kNoLsn;
    last_db_lsn_ = core::kNoLsn;
    throttled_until_ = 0;
    buffers_since_ckpt_ = 0;
}

void Sal::recover(std::function<void(Lsn)> done) {
    arm_timers();
    rec_.phase = RecoverPhase::kRegistry;
    rec_.done = std::move(done);
    msg::CmRegistryGet get;
    get.req_id = next_req_++;
    get.database = database_;
    sim_.send(self_, cm_, msg::Message{get});
    msg::CmListSlices ls;
    ls.req_id = next_req_++;
    sim_.send(self_, cm_, msg::Message{ls});
}

void Sal::begin_chain_scan() {
    // All chain plogs located. Seal the tail plog (post-crash appends go to
    // a fresh one), then scan everything at or above the checkpoint.
    if (!chain_.empty() && !chain_.back().sealed) {
        chain_.back().sealed = true;
        ++metrics_.plogs_sealed;
        for (NodeId n : chain_.back().replicas)
            if (!sim_.is_removed(n))
                sim_.send(self_, n, msg::Message{msg::LsSeal{chain_.back().id}});
        sim_.send(self_, cm_, msg::Message{msg::CmPlogSealed{chain_.back().id}});
    }
    std::vector<PlogId> to_scan;
    for (const PlogInfo& p : chain_) {
        if (p.lsn_range.lo == core::kNoLsn || p.lsn_range.hi == core::kNoLsn ||
            p.lsn_range.hi > db_persistent_)
            to_scan.push_back(p.id);
    }
    start_chain_read(
        to_scan,
        [this](ChainRead& cr) {
        std::vector<LogRecord> all;
        for (auto& [pid, bytes] : cr.data) {
            core::LogScan scan = core::scan_log(bytes);
            // Refresh the chain entry from what is actually durable (the
            // tail entry was open at the last metadata write).
            for (PlogInfo& p : chain_) {
                if (p.id != pid || scan.records.empty()) continue;
                p.acked_len = scan.valid_bytes;
                p.lsn_range.lo = scan.records.front().lsn;
                p.lsn_range.hi = scan.records.back().lsn;
            }
            for (LogRecord& rec : scan.records) {
                rec_.max_lsn = std::max(rec_.max_lsn, rec.lsn);
                if (rec.group_end) rec_.max_boundary = std::max(rec_.max_boundary, rec.lsn);
                all.push_back(rec);
                if (rec.lsn > db_persistent_) rec_.scanned.emplace(rec.lsn, std::move(rec));
            }
        }
        if (hooks_.on_recovery_scanned) hooks_.on_recovery_scanned(all);
        // Reconstruct per-slice frontiers.
        for (auto& [lsn, rec] : rec_.scanned) {
            SliceState* s = find_slice(rec.slice);
            if (s) s->flush_lsn = std::max(s->flush_lsn, lsn);
        }
        for (auto& [slice, s] : slices_) {
            s.cover_prev = std::max(s.cover_prev, s.flush_lsn);
            rec_.state_waiting.insert(slice);
        }
        // A fresh data plog takes new writes.
        create_plog(false);
        recovery_resend();
        },
        /*all_replicas=*/true);
}

void Sal::recover_step() {
    // Drives retries for the current phase; all requests are idempotent.
    switch (rec_.phase) {
        case RecoverPhase::kRegistry: {
            msg::CmRegistryGet get;
            get.req_id = next_req_++;
            get.database = database_;
            sim_.send(self_, cm_, msg::Message{get});
            break;
        }
        case RecoverPhase::kLocateMeta: {
            msg::CmPlogLocate loc;
            loc.req_id = next_req_++;
            loc.id = rec_.meta_plog;
            pending_locates_[loc.req_id] = {kLocateMeta, loc.id};
            sim_.send(self_, cm_, msg::Message{loc});
            break;
        }
        case RecoverPhase::kReadMeta: {
            if (meta_plog_.replicas.empty()) break;
            msg::LsRead rd;
            rd.req_id = next_req_++;
            rd.id = meta_plog_.id;
            rec_.meta_read_req = rd.req_id;
            NodeId target =
                meta_plog_.replicas[rec_.meta_replica_idx % meta_plog_.replicas.size()];
            ++rec_.meta_replica_idx;
            if (!sim_.is_removed(target)) sim_.send(self_, target, msg::Message{rd});
            break;
        }
        default:
            break;
    }
}

void Sal::recovery_resend() {
    // After the chain scan and the per-slice state queries, resend records
    // missing from all replicas of each slice. Duplicates are safe: Page
    // Stores disregard records they already have.
    for (auto& [slice, s] : slices_) {
        trigger_stall_repair(s, true);
    }
    rec_.phase = RecoverPhase::kResend;
    finish_recovery_if_done();
}

void Sal::finish_recovery_if_done() {
    if (rec_.phase != RecoverPhase::kResend) return;
    if (!rec_.state_waiting.empty()) return;
    if (!rec_.resend_reqs.empty()) return;
    rec_.phase = RecoverPhase::kIdle;
    cv_lsn_ = rec_.max_boundary;
    last_db_lsn_ = std::max(last_db_lsn_, rec_.max_lsn);
    incarnation_ = epoch_ + 1;
    compute_db_persistent();
    write_metadata();
    ready_ = true;
    sim_.trace_key(self_, "recovery complete: max_lsn=" + std::to_string(rec_.max_lsn) +
                              " resent=" + std::to_string(metrics_.recovery_resent_records));
    if (rec_.done) {
        auto done = std::move(rec_.done);
        rec_.done = nullptr;
        done(rec_.max_lsn);
    }
}

// --------------------------------------------------------------- dispatch

bool Sal::handle_message(NodeId from, const msg::Message& m) {
    return std::visit(
        msg::match{
            [&](const msg::CmChooseLogNodesResp& resp) {
                on_choose_nodes(resp);
                return true;
            },
            [&](const msg::LsAppendResp& resp) {
                on_append_resp(from, resp);
                return true;
            },
            [&](const msg::LsReadResp& resp) {
                if (rec_.phase == RecoverPhase::kReadMeta && resp.req_id == rec_.meta_read_req) {
                    if (!resp.ok) {
                        recover_step();  // try another replica
                        return true;
                    }
                    auto meta = logstore::last_valid_metadata(resp.data);
                    if (!meta) {
                        recover_step();
                        return true;
                    }
                    epoch_ = meta->epoch;
                    db_persistent_ = meta->db_persistent_lsn;
                    chain_.clear();
                    for (const auto& [id, range] : meta->data_chain) {
                        PlogInfo info;
                        info.id = id;
                        info.kind = logstore::PlogKind::kData;
                        info.lsn_range = range;
                        chain_.push_back(info);
                    }
                    rec_.phase = RecoverPhase::kScanChain;
                    // Locate every chain plog, then scan.
                    rec_.locate_waiting.clear();
                    for (const PlogInfo& p : chain_) {
                        msg::CmPlogLocate loc;
                        loc.req_id = next_req_++;
                        loc.id = p.id;
                        pending_locates_[loc.req_id] = {kLocateChain, p.id};
                        rec_.locate_waiting.insert(p.id);
                        sim_.send(self_, cm_, msg::Message{loc});
                    }
                    if (chain_.empty()) recovery_resend();
                    return true;
                }
                on_plog_read(resp);
                return true;
            },
            [&](const msg::CmRegistryGetResp& resp) {
                if (rec_.phase != RecoverPhase::kRegistry) return true;
                if (!resp.ok) {
                    recover_step();
                    return true;
                }
                rec_.meta_plog = resp.metadata_plog;
                rec_.phase = RecoverPhase::kLocateMeta;
                recover_step();
                return true;
            },
            [&](const msg::CmPlogLocateResp& resp) {
                auto it = pending_locates_.find(resp.req_id);
                if (it == pending_locates_.end()) return true;
                auto [purpose, id] = it->second;
                pending_locates_.erase(it);
                if (!resp.ok) {
                    if (purpose == kLocateChain) {
                        // Deleted between the checkpoint we read and the
                        // crash: its records were fully replicated, so the
                        // chain entry is simply dropped.
                        chain_.erase(std::remove_if(chain_.begin(), chain_.end(),
                                                    [&](const PlogInfo& p) { return p.id == id; }),
                                     chain_.end());
                        rec_.locate_waiting.erase(id);
                        if (rec_.locate_waiting.empty() &&
                            rec_.phase == RecoverPhase::kScanChain)
                            begin_chain_scan();
                    }
                    return true;
                }
                if (purpose == kLocateMeta && rec_.phase == RecoverPhase::kLocateMeta) {
                    meta_plog_.id = id;
                    meta_plog_.kind = logstore::PlogKind::kMetadata;
                    meta_plog_.replicas = resp.replicas;
                    meta_plog_.sealed = resp.sealed;
                    meta_valid_ = true;
                    rec_.phase = RecoverPhase::kReadMeta;
                    recover_step();
                } else if (purpose == kLocateChain) {
                    for (PlogInfo& p : chain_)
                        if (p.id == id) p.replicas = resp.replicas;
                    rec_.locate_waiting.erase(id);
                    if (rec_.locate_waiting.empty() && rec_.phase == RecoverPhase::kScanChain)
                        begin_chain_scan();
                }
                return true;
            },
            [&](const msg::CmListSlicesResp& resp) {
                for (const msg::CmMembership& mem : resp.slices) {
                    add_slice(mem.slice, mem.replicas);
                    find_slice(mem.slice)->rebuilding = mem.rebuilding;
                }
                return true;
            },
            [&](const msg::PsWriteLogsResp& resp) {
                if (resp.status == msg::PsStatus::kOk)
                    ingest_persistent_report(resp.slice, from, resp.persistent, resp.mode);
                if (resp.throttle) throttled_until_ = sim_.now() + cfg_.throttle_window_ms;
                auto it = inflight_.find(resp.req_id);
                if (it != inflight_.end() && resp.status == msg::PsStatus::kOk) {
                    SliceState* s = find_slice(resp.slice);
                    if (s) {
                        Lsn mx = it->second.frag.max_record_lsn();
                        if (mx == core::kNoLsn) mx = it->second.frag.cover_hi;
                        s->acked_flush_lsn = std::max(s->acked_flush_lsn, mx);
                    }
                    rec_.resend_reqs.erase(resp.req_id);
                    inflight_.erase(it);
                    advance_cv();
                    finish_recovery_if_done();
                }
                return true;
            },
            [&](const msg::PsGetStateResp& resp) {
                if (resp.status != msg::PsStatus::kOk) return true;
                ingest_persistent_report(resp.slice, from, resp.persistent, resp.mode);
                if (resp.req_id != 0) {
                    auto it = gap_queries_.find(resp.req_id);
                    if (it != gap_queries_.end()) {
                        it->second.responses[from] = resp;
                        it->second.waiting.erase(from);
                        if (it->second.waiting.empty()) on_gap_responses(it->second);
                    }
                }
                return true;
            },
            [&](const msg::PsReadPageResp& resp) {
                router_.handle_response(from, resp);
                return true;
            },
            [&](const msg::PsSetRecycleResp& resp) {
                assert(resp.status != msg::PsStatus::kRecycleLsnRegression);
                (void)resp;
                return true;
            },
            [&](const msg::CmMembership& mem) {
                SliceState* s = find_slice(mem.slice);
                if (!s) return true;
                // Carry the replaced member's recorded persistent LSN over to
                // the new member: a lower report from the replacement is the
                // mechanism-A trigger.
                if (mem.replaced != sim::kNoNode) {
                    Lsn carried = core::kNoLsn;
                    auto it = s->recorded.find(mem.replaced);
                    if (it != s->recorded.end()) {
                        carried = it->second;
                        s->recorded.erase(it);
                    }
                    s->last_advance.erase(mem.replaced);
                    s->stall_polls.erase(mem.replaced);
                    for (NodeId n : mem.replicas) {
                        if (n != sim::kNoNode && !s->recorded.count(n)) {
                            s->recorded[n] = carried;
                            s->last_advance[n] = sim_.now();
                            s->stall_polls[n] = 0;
                        }
                    }
                }
                s->replicas = mem.replicas;
                s->rebuilding = mem.rebuilding;
                return true;
            },
            [&](const msg::CmReplicaDown& down) {
                replicas_.erase(down.replica);
                replica_min_tv_.erase(down.replica);
                return true;
            },
            [&](const msg::RepResync& rs) {
                replicas_.insert(from);
                replica::MasterSnapshot snap;
                snap.seq = master_seq_;
                snap.incarnation = incarnation_;
                snap.last_db_lsn = last_db_lsn_;
                snap.last_boundary = last_db_lsn_;
                snap.commit_time_ms = sim_.now();
                for (const auto& [slice, s] : slices_)
                    snap.slice_persistents.emplace_back(slice, max_recorded_persistent(slice));
                msg::RepResyncResp resp;
                resp.req_id = rs.req_id;
                resp.encoded = snap.encode();
                sim_.send(self_, from, msg::Message{resp});
                return true;
            },
            [&](const msg::RepMinTv& tv) {
                replica_min_tv_[from] = tv.min_tv;
                return true;
            },
            [&](const auto&) { return false; },
        },
        m.body);
}

bool Sal::handle_timer(const Timer& t) {
    switch (t.kind) {
        case kTimerFlushCheck:
            check_flush_timers();
            sim_.set_timer(self_, std::max<sim::Time>(1, cfg_.slice_buffer_timeout_ms / 2),
                           Timer{kTimerFlushCheck});
            return true;
        case kTimerAppendTimeout:
            on_append_timeout(t.a);
            return true;
        case kTimerPoll:
            poll_tick();
            return true;
        case kTimerMaintenance:
            maintenance_tick();
            return true;
        case kTimerRecycle:
            recycle_tick();
            return true;
        case kTimerReadTimeout:
            router_.handle_timeout(t.a);
            return true;
        case kTimerReadRetry:
            router_.handle_retry(t.a);
            return true;
        case kTimerFlushRetry: {
            for (auto& [req, inf] : inflight_) {
                if (sim_.now() - inf.sent_at < cfg_.flush_retry_ms) continue;
                SliceState* s = find_slice(inf.slice);
                if (!s) continue;
                inf.sent_at = sim_.now();
                msg::PsWriteLogs w;
                w.req_id = req;
                w.frag = inf.frag;
                for (NodeId n : s->replicas)
                    if (n != sim::kNoNode && !sim_.is_removed(n))
                        sim_.send(self_, n, msg::Message{w});
                ++metrics_.fragment_resends;
            }
            sim_.set_timer(self_, cfg_.flush_retry_ms, Timer{kTimerFlushRetry});
            return true;
        }
        case kTimerCreateRetry:
            create_plog(t.a == 1);
            return true;
        case kTimerThrottleDrain:
            admit_buffers();
            return true;
        case kTimerGapTimeout: {
            auto it = gap_queries_.find(t.a);
            if (it != gap_queries_.end() && !it->second.waiting.empty()) {
                it->second.waiting.clear();
                on_gap_responses(it->second);
            }
            return true;
        }
        case kTimerHousekeeping: {
            // Re-drive stuck chain reads (target died without replying) and
            // stalled recovery phases.
            for (auto& [id, cr] : chain_reads_) {
                if (!cr.outstanding.empty()) {
                    // Stuck: the remaining targets died without replying.
                    cr.outstanding.clear();
                    if (cr.all_replicas) {
                        if (cr.got_any) {
                            cr.data[cr.plogs[cr.next_plog]] = std::move(cr.best);
                            cr.best.clear();
                            ++cr.next_plog;
                        }
                    } else {
                        ++cr.replica_idx;
                    }
                    chain_read_step(cr);
                    break;  // chain_reads_ may have changed
                }
            }
            if (rec_.phase == RecoverPhase::kRegistry || rec_.phase == RecoverPhase::kLocateMeta ||
                rec_.phase == RecoverPhase::kReadMeta)
                recover_step();
            sim_.set_timer(self_, 500, Timer{kTimerHousekeeping});
            return true;
        }
        default:
            return false;
    }
}

}  // namespace taurus::sal
