#include "taurus/pagestore/node.hpp"

#include <algorithm>
#include <cassert>

namespace taurus::pagestore {

using core::Bytes;
using core::BytesView;
using core::LogRecord;
using core::Lsn;
using core::LsnRange;
using core::PageId;
using core::PageImage;
using core::SliceId;
using sim::NodeId;
using sim::Timer;

namespace {
constexpr uint32_t kTimerHeartbeat = 1;
constexpr uint32_t kTimerConsolidate = 2;
constexpr uint32_t kTimerFlush = 3;
constexpr uint32_t kTimerGossip = 4;
constexpr uint32_t kTimerFetchRetry = 5;
}  // namespace

PageStoreNode::PageStoreNode(sim::Simulator& sim, NodeId self, NodeId cm, sim::StoreConfig cfg)
    : sim_(sim),
      self_(self),
      cm_(cm),
      cfg_(cfg),
      rng_(sim.rng().fork()),
      pool_(cfg.buffer_pool_pages, cfg.cache_policy, cfg.lfu_aging_every),
      cache_(cfg.log_cache_fragments) {}

std::string PageStoreNode::slice_file_name(const SliceId& slice) const {
    return "db" + std::to_string(slice.database) + "_" + std::to_string(slice.index) + ".slog";
}

void PageStoreNode::host_slice(const SliceId& slice, const std::array<NodeId, 3>& replicas) {
    SliceReplica r;
    r.slice = slice;
    r.replicas = replicas;
    r.file = slice_file_name(slice);
    AssignBlock ab;
    ab.slice = slice;
    ab.replicas = replicas;
    ab.mode = 0;
    sim_.disk(self_).create(r.file).append(encode_assign_block(ab));
    slices_[slice] = std::move(r);
}

void PageStoreNode::start() {
    heartbeat();
    arm_background_timers();
}

void PageStoreNode::arm_background_timers() {
    sim_.set_timer(self_, cfg_.consolidate_interval_ms, Timer{kTimerConsolidate});
    sim_.set_timer(self_, cfg_.flush_interval_ms, Timer{kTimerFlush});
    sim_.set_timer(self_, cfg_.gossip_interval_ms, Timer{kTimerGossip});
}

void PageStoreNode::heartbeat() {
    msg::CmHeartbeat hb;
    hb.hosted_slices = static_cast<uint32_t>(slices_.size());
    sim_.send(self_, cm_, msg::Message{hb});
    sim_.set_timer(self_, cfg_.heartbeat_ms, Timer{kTimerHeartbeat});
}

void PageStoreNode::on_timer(const Timer& t) {
    switch (t.kind) {
        case kTimerHeartbeat:
            heartbeat();
            break;
        case kTimerConsolidate:
            consolidate_step();
            sim_.set_timer(self_, cfg_.consolidate_interval_ms, Timer{kTimerConsolidate});
            break;
        case kTimerFlush:
            flush_dirty_pages();
            sim_.set_timer(self_, cfg_.flush_interval_ms, Timer{kTimerFlush});
            break;
        case kTimerGossip:
            for (auto& [slice, r] : slices_)
                if (r.mode == msg::ReplicaMode::kNormal) initiate_gossip(r);
            sim_.set_timer(self_, cfg_.gossip_interval_ms, Timer{kTimerGossip});
            break;
        case kTimerFetchRetry: {
            SliceId slice{static_cast<uint32_t>(t.a >> 32), static_cast<uint32_t>(t.a)};
            SliceReplica* r = find_slice(slice);
            if (r && r->mode == msg::ReplicaMode::kRebuilding) start_fetch(*r);
            break;
        }
    }
}

void PageStoreNode::on_crash() {
    pool_ = BufferPool(cfg_.buffer_pool_pages, cfg_.cache_policy, cfg_.lfu_aging_every);
    cache_.clear();
    slices_.clear();
    record_entries_total_ = 0;
}

void PageStoreNode::on_restart() {
    rebuild_from_disk();
    heartbeat();
    arm_background_timers();
    // A store returning from a short-term failure immediately gossips to
    // pick up whatever it missed.
    for (auto& [slice, r] : slices_) {
        if (r.mode == msg::ReplicaMode::kNormal) {
            initiate_gossip(r);
        } else {
            start_fetch(r);
        }
    }
}

PageStoreNode::SliceReplica* PageStoreNode::find_slice(const SliceId& slice) {
    auto it = slices_.find(slice);
    return it == slices_.end() ? nullptr : &it->second;
}

std::vector<SliceId> PageStoreNode::hosted_slices() const {
    std::vector<SliceId> out;
    for (const auto& [s, r] : slices_) out.push_back(s);
    return out;
}

const PageStoreNode::SliceReplica* PageStoreNode::replica(const SliceId& slice) const {
    auto it = slices_.find(slice);
    return it == slices_.end() ? nullptr : &it->second;
}

const PageStoreMetrics& PageStoreNode::metrics() const {
    metrics_.buffer_pool_hits = pool_.hits();
    metrics_.buffer_pool_misses = pool_.misses();
    return metrics_;
}

// ---------------------------------------------------------------- ingestion

PageStoreNode::IngestResult PageStoreNode::ingest_records(SliceReplica& r, Lsn cover_lo,
                                                          Lsn cover_hi, uint64_t seq,
                                                          const std::vector<LogRecord>& records) {
    IngestResult res;
    std::vector<LogRecord> fresh;
    fresh.reserve(records.size());
    for (const auto& rec : records) {
        if (r.lsn_index.count(rec.lsn)) {
            ++metrics_.duplicate_records;
            continue;
        }
        fresh.push_back(rec);
    }
    bool new_coverage =
        cover_lo != core::kNoLsn && !r.coverage.contains_range(cover_lo, cover_hi);
    if (fresh.empty() && !new_coverage) {
        res.duplicate = true;
        ++metrics_.duplicate_fragments;
        return res;
    }
    if (seq != 0) {
        if (r.last_seq != 0 && seq > r.last_seq + 1) ++metrics_.seq_gaps_detected;
        r.last_seq = std::max(r.last_seq, seq);
    }

    FragmentBlock fb;
    fb.seq = seq;
    fb.cover_lo = cover_lo;
    fb.cover_hi = cover_hi;
    fb.records = fresh;
    Bytes block = encode_fragment_block(fb);
    sim::SimFile& f = sim_.disk(self_).open(r.file);
    uint64_t block_off = f.append(block);

    // Index each record at its exact file offset (body starts after the
    // 4-byte length and 1-byte type).
    uint64_t pos = block_off + 5 + kFragmentBodyHeader;
    for (const auto& rec : fresh) {
        uint32_t len = static_cast<uint32_t>(core::encoded_record_size(rec));
        r.lsn_index[rec.lsn] = {rec.page, pos, len};
        PageDir& pd = r.dir[rec.page];
        DirEntry de{rec.lsn, 0, pos, len};
        auto it = std::lower_bound(pd.entries.begin(), pd.entries.end(), rec.lsn,
                                   [](const DirEntry& e, Lsn l) { return e.lsn < l; });
        pd.entries.insert(it, de);
        ++record_entries_total_;
        pos += len;
        if (observer_) observer_->on_record_stored(self_, r.slice, rec.lsn);
    }
    if (cover_lo != core::kNoLsn) r.coverage.add(cover_lo, cover_hi);
    r.persistent = r.coverage.prefix_end();
    ++metrics_.fragments_ingested;
    metrics_.records_ingested += fresh.size();
    res.fresh = fresh.size();

    if (!fresh.empty()) {
        if (cache_.has_space()) {
            cache_.add_fragment(r.slice, std::move(fresh));
        } else {
            std::vector<RecordRef> refs;
            uint64_t p = block_off + 5 + kFragmentBodyHeader;
            for (const auto& rec : fb.records) {
                uint32_t len = static_cast<uint32_t>(core::encoded_record_size(rec));
                refs.push_back({r.slice, rec.page, rec.lsn, p, len});
                p += len;
            }
            cache_.spill(std::move(refs));
            ++metrics_.log_cache_spills;
        }
    }
    return res;
}

void PageStoreNode::handle_write_logs(NodeId from, const msg::PsWriteLogs& w) {
    msg::PsWriteLogsResp resp;
    resp.req_id = w.req_id;
    resp.slice = w.frag.slice;
    SliceReplica* r = find_slice(w.frag.slice);
    if (!r) {
        resp.status = msg::PsStatus::kUnknownSlice;
        sim_.send(self_, from, msg::Message{resp});
        return;
    }
    ingest_records(*r, w.frag.cover_lo, w.frag.cover_hi, w.frag.sequence, w.frag.records);
    resp.status = msg::PsStatus::kOk;
    resp.persistent = r->persistent;
    resp.mode = r->mode;
    resp.throttle = record_entries_total_ > cfg_.dir_entry_high_water;
    sim_.send(self_, from, msg::Message{resp});
}

// -------------------------------------------------------------------- reads

core::LogRecord PageStoreNode::fetch_record(SliceReplica& r, const SliceReplica::RecordLoc& loc,
                                            bool for_consolidation, bool for_read) {
    // Callers check the log cache first; reaching here always costs a disk
    // read, attributed to whoever asked.
    if (for_consolidation) ++metrics_.disk_record_reads;
    if (for_read) ++metrics_.read_record_disk_fetches;
    sim::SimFile& f = sim_.disk(self_).open(r.file);
    Bytes raw = f.read(loc.off, loc.len);
    core::DecodeResult res = core::decode_log_record(raw);
    assert(res.status == core::DecodeStatus::kOk);
    return res.record;
}

core::PageImage PageStoreNode::read_page_block(SliceReplica& r, const DirEntry& e) {
    sim::SimFile& f = sim_.disk(self_).open(r.file);
    Bytes raw = f.read(e.off, e.len);
    auto scan = core::scan_blocks(raw);
    assert(scan.blocks.size() == 1 && scan.blocks[0].type == kBlockPage);
    auto pb = decode_page_body(scan.blocks[0].body);
    assert(pb);
    PageImage img;
    img.page = pb->page;
    img.version = pb->version;
    img.bytes = std::move(pb->bytes);
    return img;
}

msg::PsReadPageResp PageStoreNode::read_page_local(const SliceId& slice, PageId page, Lsn lsn) {
    msg::PsReadPageResp resp;
    SliceReplica* r = find_slice(slice);
    if (!r) {
        resp.status = msg::PsStatus::kUnknownSlice;
        return resp;
    }
    resp.persistent = r->persistent;
    if (r->mode == msg::ReplicaMode::kRebuilding) {
        resp.status = msg::PsStatus::kRebuilding;
        ++metrics_.reads_refused;
        return resp;
    }
    if (lsn > r->persistent) {
        resp.status = msg::PsStatus::kNotCaughtUp;
        ++metrics_.reads_refused;
        return resp;
    }

    auto dit = r->dir.find(page);
    PoolKey key{slice, page};
    PoolEntry* pe = pool_.lookup(key);

    if (dit != r->dir.end() && lsn < dit->second.floor) {
        resp.status = msg::PsStatus::kBelowRecycleLsn;
        ++metrics_.reads_refused;
        return resp;
    }

    // Best consolidated base <= lsn: the pool holds the newest version, the
    // directory knows every flushed one.
    PageImage base = core::zero_page(page, cfg_.page);
    bool have_base = false;
    if (pe && pe->image.version <= lsn) {
        base = pe->image;
        have_base = true;
    }
    const DirEntry* best_disk = nullptr;
    if (dit != r->dir.end()) {
        for (const auto& e : dit->second.entries) {
            if (e.lsn > lsn) break;
            if (e.kind == 1) best_disk = &e;
        }
    }
    if (best_disk && (!have_base || best_disk->lsn > base.version)) {
        base = read_page_block(*r, *best_disk);
        have_base = true;
    }

    // Apply the records above the base, up to the requested version.
    if (dit != r->dir.end()) {
        for (const auto& e : dit->second.entries) {
            if (e.kind != 0 || e.lsn <= base.version) continue;
            if (e.lsn > lsn) break;
            const LogRecord* rec = cache_.find(slice, page, e.lsn);
            LogRecord fetched;
            if (!rec) {
                fetched = fetch_record(*r, {page, e.off, e.len}, false, true);
                rec = &fetched;
            }
            core::ApplyStatus st = core::apply_record_inplace(base, *rec, cfg_.page);
            assert(st == core::ApplyStatus::kOk);
            (void)st;
        }
    }
    base.page = page;
    resp.status = msg::PsStatus::kOk;
    resp.image = std::move(base);
    ++metrics_.reads_served;
    return resp;
}

void PageStoreNode::handle_read_page(NodeId from, const msg::PsReadPage& rd) {
    msg::PsReadPageResp resp = read_page_local(rd.slice, rd.page, rd.lsn);
    resp.req_id = rd.req_id;
    sim_.send(self_, from, msg::Message{resp});
}

// ------------------------------------------------------------------ recycle

void PageStoreNode::handle_set_recycle(NodeId from, const msg::PsSetRecycle& sr) {
    msg::PsSetRecycleResp resp;
    resp.slice = sr.slice;
    SliceReplica* r = find_slice(sr.slice);
    if (!r) {
        resp.status = msg::PsStatus::kUnknownSlice;
        sim_.send(self_, from, msg::Message{resp});
        return;
    }
    if (sr.lsn < r->recycle) {
        resp.status = msg::PsStatus::kRecycleLsnRegression;
        sim_.send(self_, from, msg::Message{resp});
        return;
    }
    r->recycle = sr.lsn;
    // GC: per page, keep the newest consolidated version at or below the
    // recycle LSN (it may still serve reads at exactly the recycle LSN),
    // drop older versions and the records they consumed.
    for (auto& [page, pd] : r->dir) {
        Lsn cstar = core::kNoLsn;
        for (const auto& e : pd.entries) {
            if (e.lsn > sr.lsn) break;
            if (e.kind == 1) cstar = e.lsn;
        }
        if (cstar == core::kNoLsn) continue;
        pd.floor = std::max(pd.floor, cstar);
        auto keep = [&](const DirEntry& e) {
            if (e.kind == 1) return e.lsn >= cstar;
            return e.lsn > cstar;
        };
        std::vector<DirEntry> kept;
        kept.reserve(pd.entries.size());
        for (const auto& e : pd.entries) {
            if (keep(e)) {
                kept.push_back(e);
            } else if (e.kind == 0) {
                r->lsn_index.erase(e.lsn);
                --record_entries_total_;
            }
        }
        pd.entries = std::move(kept);
    }
    resp.status = msg::PsStatus::kOk;
    sim_.send(self_, from, msg::Message{resp});
}

// ---------------------------------------------------------------- get state

void PageStoreNode::handle_get_state(NodeId from, const msg::PsGetState& gs) {
    msg::PsGetStateResp resp;
    resp.req_id = gs.req_id;
    resp.slice = gs.slice;
    SliceReplica* r = find_slice(gs.slice);
    if (!r) {
        resp.status = msg::PsStatus::kUnknownSlice;
        sim_.send(self_, from, msg::Message{resp});
        return;
    }
    resp.status = msg::PsStatus::kOk;
    resp.persistent = r->persistent;
    resp.coverage_end = r->coverage.max_covered();
    resp.last_seq = r->last_seq;
    resp.mode = r->mode;
    if (gs.want_gaps) resp.gaps = r->coverage.holes();
    sim_.send(self_, from, msg::Message{resp});
}

// ------------------------------------------------------------- consolidation

void PageStoreNode::pool_make_room(const PoolKey& incoming) {
    while (pool_.full() && !pool_.peek(incoming)) {
        auto victim = pool_.pick_victim();
        if (!victim) return;
        PoolEntry* ve = pool_.peek(*victim);
        if (ve->dirty) flush_pool_page(*victim, *ve);
        pool_.erase(*victim);
    }
}

void PageStoreNode::flush_pool_page(const PoolKey& key, PoolEntry& e) {
    SliceReplica* r = find_slice(key.slice);
    if (!r) return;
    PageBlock pb;
    pb.page = key.page;
    pb.version = e.image.version;
    pb.bytes = e.image.bytes;
    Bytes block = encode_page_block(pb);
    uint64_t off = sim_.disk(self_).open(r->file).append(block);
    PageDir& pd = r->dir[key.page];
    DirEntry de{e.image.version, 1, off, static_cast<uint32_t>(block.size())};
    auto it = std::lower_bound(pd.entries.begin(), pd.entries.end(), de.lsn,
                               [](const DirEntry& en, Lsn l) { return en.lsn < l; });
    // A page version flushed twice (e.g. around a crash) would be a bug.
    assert(it == pd.entries.end() || it->lsn != de.lsn || it->kind != 1);
    pd.entries.insert(it, de);
    e.dirty = false;
    ++metrics_.pages_flushed;
}

size_t PageStoreNode::flush_dirty_pages() {
    size_t count = 0;
    for (const PoolKey& key : pool_.dirty_keys()) {
        PoolEntry* e = pool_.peek(key);
        if (!e || !e->dirty) continue;
        flush_pool_page(key, *e);
        ++count;
    }
    return count;
}

bool PageStoreNode::consolidate_page(SliceReplica& r, PageId page) {
    auto dit = r.dir.find(page);
    if (dit == r.dir.end()) return false;
    PoolKey key{r.slice, page};

    // Base image: the newest consolidated version (pool first, else disk).
    PageImage base = core::zero_page(page, cfg_.page);
    PoolEntry* pe = pool_.lookup(key);
    const DirEntry* best_disk = nullptr;
    for (const auto& e : dit->second.entries)
        if (e.kind == 1) best_disk = &e;
    if (pe && (!best_disk || pe->image.version >= best_disk->lsn)) {
        base = pe->image;
    } else if (best_disk) {
        base = read_page_block(r, *best_disk);
    }

    bool lcc = cfg_.consolidation == sim::ConsolidationPolicy::kLogCacheCentric;
    size_t applied = 0;
    std::vector<Lsn> consumed;
    for (const auto& e : dit->second.entries) {
        if (e.kind != 0 || e.lsn <= base.version) continue;
        if (e.lsn > r.persistent) break;  // beyond a hole; not yet safe
        const LogRecord* rec = cache_.find(r.slice, page, e.lsn);
        LogRecord fetched;
        if (!rec) {
            if (lcc) break;  // log-cache-centric never touches disk for records
            fetched = fetch_record(r, {page, e.off, e.len}, true, false);
            rec = &fetched;
        }
        core::ApplyStatus st = core::apply_record_inplace(base, *rec, cfg_.page);
        assert(st == core::ApplyStatus::kOk);
        (void)st;
        consumed.push_back(e.lsn);
        ++applied;
    }
    if (applied == 0) return false;
    base.page = page;
    pool_make_room(key);
    pool_.put(key, std::move(base), true);
    for (Lsn lsn : consumed) cache_.consume(r.slice, page, lsn);
    ++metrics_.pages_consolidated;
    return true;
}

void PageStoreNode::reload_spills() {
    while (auto refs = cache_.pop_spill_if_space()) {
        std::vector<LogRecord> records;
        SliceId slice = (*refs)[0].slice;
        SliceReplica* r = find_slice(slice);
        if (!r) continue;
        for (const RecordRef& ref : *refs) {
            // Skip records already consolidated while the fragment sat in
            // the spill queue.
            auto dit = r->dir.find(ref.page);
            if (dit == r->dir.end()) continue;
            bool superseded = false;
            for (const auto& e : dit->second.entries)
                if (e.kind == 1 && e.lsn >= ref.lsn) superseded = true;
            if (superseded || !r->lsn_index.count(ref.lsn)) continue;
            sim::SimFile& f = sim_.disk(self_).open(r->file);
            Bytes raw = f.read(ref.off, ref.len);
            auto res = core::decode_log_record(raw);
            assert(res.status == core::DecodeStatus::kOk);
            records.push_back(std::move(res.record));
        }
        ++metrics_.log_cache_reloads;
        if (!records.empty()) cache_.add_fragment(slice, std::move(records));
    }
}

size_t PageStoreNode::consolidate_lcc(size_t budget) {
    size_t done = 0;
    // Pages are consolidated in the order their records arrived in the log
    // cache. Consumption can drop fragments from the list mid-walk, so
    // resume by fragment id (ids are FIFO-ordered) instead of iterators.
    uint64_t last_id = 0;
    while (done < budget) {
        core::SliceId slice;
        std::vector<std::pair<PageId, Lsn>> keys;
        bool found = false;
        for (const auto& f : cache_.fragments()) {
            if (f.id <= last_id || f.live == 0) continue;
            last_id = f.id;
            slice = f.slice;
            keys = f.keys;
            found = true;
            break;
        }
        if (!found) break;
        SliceReplica* r = find_slice(slice);
        if (!r) continue;
        for (const auto& [page, lsn] : keys) {
            if (done >= budget) break;
            if (!cache_.find(slice, page, lsn)) continue;  // already consumed
            if (lsn > r->persistent) continue;             // beyond a hole
            if (consolidate_page(*r, page)) ++done;
        }
    }
    reload_spills();
    return done;
}

size_t PageStoreNode::consolidate_lcf(size_t budget) {
    size_t done = 0;
    while (done < budget) {
        // Longest chain of unconsolidated records first.
        SliceId best_slice;
        PageId best_page = 0;
        size_t best_len = 0;
        for (auto& [slice, r] : slices_) {
            for (const auto& [page, pd] : r.dir) {
                Lsn top = core::kNoLsn;
                const PoolEntry* pe = pool_.peek(PoolKey{slice, page});
                if (pe) top = pe->image.version;
                for (const auto& e : pd.entries)
                    if (e.kind == 1 && e.lsn > top) top = e.lsn;
                size_t len = 0;
                for (const auto& e : pd.entries)
                    if (e.kind == 0 && e.lsn > top && e.lsn <= r.persistent) ++len;
                if (len > best_len) {
                    best_len = len;
                    best_slice = slice;
                    best_page = page;
                }
            }
        }
        if (best_len == 0) break;
        SliceReplica* r = find_slice(best_slice);
        if (!consolidate_page(*r, best_page)) break;
        ++done;
    }
    reload_spills();
    return done;
}

size_t PageStoreNode::consolidate_step() {
    size_t budget = cfg_.consolidate_pages_per_step;
    if (cfg_.consolidation == sim::ConsolidationPolicy::kLogCacheCentric)
        return consolidate_lcc(budget);
    return consolidate_lcf(budget);
}

// ------------------------------------------------------------------- gossip

std::vector<msg::RepairChunk> PageStoreNode::build_chunks(SliceReplica& r,
                                                          const std::vector<LsnRange>& ranges) {
    std::vector<msg::RepairChunk> chunks;
    for (const LsnRange& range : ranges) {
        msg::RepairChunk ch;
        ch.range = range;
        auto it = r.lsn_index.lower_bound(range.lo);
        for (; it != r.lsn_index.end() && it->first <= range.hi; ++it) {
            const LogRecord* rec = cache_.find(r.slice, it->second.page, it->first);
            if (rec) {
                ch.records.push_back(*rec);
            } else {
                ch.records.push_back(fetch_record(r, it->second, false, false));
            }
        }
        chunks.push_back(std::move(ch));
    }
    return chunks;
}

void PageStoreNode::initiate_gossip(SliceReplica& r) {
    std::vector<NodeId> peers;
    for (NodeId n : r.replicas)
        if (n != self_ && n != sim::kNoNode) peers.push_back(n);
    if (peers.empty()) return;
    NodeId peer = peers[r.gossip_rotor++ % peers.size()];
    msg::PsGossipPull pull;
    pull.req_id = next_req_++;
    pull.slice = r.slice;
    pull.coverage = r.coverage.intervals();
    r.gossip_req = pull.req_id;
    sim_.send(self_, peer, msg::Message{pull});
}

void PageStoreNode::gossip_now(const SliceId& slice) {
    SliceReplica* r = find_slice(slice);
    if (r && r->mode == msg::ReplicaMode::kNormal) initiate_gossip(*r);
}

void PageStoreNode::handle_gossip_pull(NodeId from, const msg::PsGossipPull& pull) {
    SliceReplica* r = find_slice(pull.slice);
    if (!r || r->mode != msg::ReplicaMode::kNormal) return;
    core::IntervalSet peer_cov;
    for (const auto& iv : pull.coverage) peer_cov.add(iv);
    // Pieces of our coverage the peer lacks.
    std::vector<LsnRange> missing;
    for (const LsnRange& mine : r->coverage.intervals()) {
        for (const LsnRange& gap : peer_cov.missing_in(mine.lo, mine.hi)) missing.push_back(gap);
    }
    msg::PsGossipData data;
    data.req_id = pull.req_id;
    data.slice = pull.slice;
    data.sender_coverage = r->coverage.intervals();
    data.chunks = build_chunks(*r, missing);
    sim_.send(self_, from, msg::Message{data});
}

void PageStoreNode::handle_gossip_data(NodeId from, const msg::PsGossipData& data) {
    SliceReplica* r = find_slice(data.slice);
    if (!r) return;
    size_t got = 0;
    for (const msg::RepairChunk& ch : data.chunks) {
        got += ch.records.size();
        ingest_records(*r, ch.range.lo, ch.range.hi, 0, ch.records);
    }
    metrics_.gossip_records_exchanged += got;
    if (data.req_id != 0 && data.req_id == r->gossip_req) {
        // Our pull round: push back anything the peer lacks.
        ++metrics_.gossip_rounds;
        r->gossip_req = 0;
        core::IntervalSet peer_cov;
        for (const auto& iv : data.sender_coverage) peer_cov.add(iv);
        std::vector<LsnRange> missing;
        for (const LsnRange& mine : r->coverage.intervals()) {
            for (const LsnRange& gap : peer_cov.missing_in(mine.lo, mine.hi))
                missing.push_back(gap);
        }
        if (!missing.empty()) {
            msg::PsGossipData push;
            push.req_id = 0;
            push.slice = data.slice;
            push.sender_coverage = r->coverage.intervals();
            push.chunks = build_chunks(*r, missing);
            size_t pushed = 0;
            for (const auto& c : push.chunks) pushed += c.records.size();
            metrics_.gossip_records_exchanged += pushed;
            sim_.send(self_, from, msg::Message{push});
        }
    }
}

// ------------------------------------------------------------------ rebuild

void PageStoreNode::handle_assign(const msg::PsAssignSlice& assign) {
    if (find_slice(assign.slice)) {
        // Already hosting (e.g. duplicate assignment): just refresh members.
        SliceReplica* r = find_slice(assign.slice);
        r->replicas = assign.replicas;
        return;
    }
    SliceReplica r;
    r.slice = assign.slice;
    r.replicas = assign.replicas;
    r.mode = msg::ReplicaMode::kRebuilding;
    r.rebuild_source = assign.source;
    r.file = slice_file_name(assign.slice);
    AssignBlock ab;
    ab.slice = assign.slice;
    ab.replicas = assign.replicas;
    ab.source = assign.source;
    ab.mode = 1;
    sim_.disk(self_).create(r.file).append(encode_assign_block(ab));
    slices_[assign.slice] = std::move(r);
    start_fetch(slices_[assign.slice]);
}

void PageStoreNode::start_fetch(SliceReplica& r) {
    // Rotate away from an unavailable source: any other member can serve.
    if (sim_.is_removed(r.rebuild_source) || r.fetch_req != 0) {
        std::vector<NodeId> candidates;
        for (NodeId n : r.replicas)
            if (n != self_ && n != sim::kNoNode && !sim_.is_removed(n)) candidates.push_back(n);
        if (!candidates.empty())
            r.rebuild_source = candidates[r.gossip_rotor++ % candidates.size()];
    }
    msg::PsFetchSlice f;
    f.req_id = next_req_++;
    f.slice = r.slice;
    r.fetch_req = f.req_id;
    sim_.send(self_, r.rebuild_source, msg::Message{f});
    sim_.set_timer(self_, cfg_.resync_retry_ms, Timer{kTimerFetchRetry, slice_timer_tag(r.slice)});
}

void PageStoreNode::handle_fetch_slice(NodeId from, const msg::PsFetchSlice& f) {
    msg::PsFetchSliceResp resp;
    resp.req_id = f.req_id;
    resp.slice = f.slice;
    SliceReplica* r = find_slice(f.slice);
    if (!r || r->mode != msg::ReplicaMode::kNormal) {
        sim_.send(self_, from, msg::Message{resp});  // ok=false: try another member
        return;
    }
    resp.ok = true;
    resp.persistent = r->persistent;
    resp.recycle = r->recycle;
    resp.last_seq = r->last_seq;
    resp.coverage = r->coverage.intervals();
    // Latest consolidated version of every page, plus the records above it.
    for (auto& [page, pd] : r->dir) {
        const PoolEntry* pe = pool_.peek(PoolKey{r->slice, page});
        const DirEntry* best_disk = nullptr;
        for (const auto& e : pd.entries)
            if (e.kind == 1) best_disk = &e;
        PageImage latest;
        bool have = false;
        if (pe && (!best_disk || pe->image.version >= best_disk->lsn)) {
            latest = pe->image;
            have = true;
        } else if (best_disk) {
            latest = read_page_block(*r, *best_disk);
            have = true;
        }
        Lsn top = have ? latest.version : core::kNoLsn;
        if (have) {
            latest.page = page;
            resp.pages.push_back(std::move(latest));
        }
        for (const auto& e : pd.entries) {
            if (e.kind != 0 || e.lsn <= top) continue;
            const LogRecord* rec = cache_.find(r->slice, page, e.lsn);
            if (rec) resp.pending_records.push_back(*rec);
            else resp.pending_records.push_back(fetch_record(*r, {page, e.off, e.len}, false, false));
        }
    }
    std::sort(resp.pending_records.begin(), resp.pending_records.end(),
              [](const LogRecord& a, const LogRecord& b) { return a.lsn < b.lsn; });
    sim_.send(self_, from, msg::Message{resp});
}

void PageStoreNode::handle_fetch_slice_resp(const msg::PsFetchSliceResp& resp) {
    SliceReplica* r = find_slice(resp.slice);
    if (!r || r->mode != msg::ReplicaMode::kRebuilding || resp.req_id != r->fetch_req) return;
    r->fetch_req = 0;
    if (!resp.ok) return;  // retry timer rotates to another source

    sim::SimFile& f = sim_.disk(self_).open(r->file);
    for (const PageImage& img : resp.pages) {
        PageBlock pb;
        pb.page = img.page;
        pb.version = img.version;
        pb.bytes = img.bytes;
        Bytes block = encode_page_block(pb);
        uint64_t off = f.append(block);
        PageDir& pd = r->dir[img.page];
        DirEntry de{img.version, 1, off, static_cast<uint32_t>(block.size())};
        auto it = std::lower_bound(pd.entries.begin(), pd.entries.end(), de.lsn,
                                   [](const DirEntry& e, Lsn l) { return e.lsn < l; });
        if (it == pd.entries.end() || it->lsn != de.lsn || it->kind != 1) pd.entries.insert(it, de);
    }
    ingest_records(*r, core::kNoLsn, core::kNoLsn, 0, resp.pending_records);
    for (const LsnRange& iv : resp.coverage) r->coverage.add(iv);
    r->persistent = r->coverage.prefix_end();
    r->recycle = std::max(r->recycle, resp.recycle);
    r->last_seq = std::max(r->last_seq, resp.last_seq);

    RebuildBlock rb;
    rb.persistent = r->persistent;
    rb.last_seq = r->last_seq;
    rb.recycle = r->recycle;
    rb.coverage = r->coverage.intervals();
    f.append(encode_rebuild_block(rb));
    r->mode = msg::ReplicaMode::kNormal;
    if (observer_) observer_->on_coverage_installed(self_, r->slice, resp.coverage);
    sim_.send(self_, cm_, msg::Message{msg::PsRebuildDone{r->slice, self_, true}});
    sim_.trace_key(self_, "rebuild complete: " + core::to_string(r->slice) +
                              " persistent=" + std::to_string(r->persistent));
    initiate_gossip(*r);
}

// ------------------------------------------------------------------ restart

void PageStoreNode::rebuild_from_disk() {
    for (const std::string& name : sim_.disk(self_).list()) {
        if (name.size() < 5 || name.substr(name.size() - 5) != ".slog") continue;
        sim::SimFile& f = sim_.disk(self_).open(name);
        BytesView data = f.view();
        auto scan = core::scan_blocks(data);
        SliceReplica r;
        r.file = name;
        bool rebuilt_marker = false;
        // Walk blocks, tracking exact file offsets for the directory.
        uint64_t pos = 0;
        for (const core::Block& b : scan.blocks) {
            uint64_t body_off = pos + 5;
            uint64_t total = 4 + 1 + b.body.size() + 4;
            switch (b.type) {
                case kBlockAssign: {
                    auto ab = decode_assign_body(b.body);
                    assert(ab);
                    r.slice = ab->slice;
                    r.replicas = ab->replicas;
                    r.rebuild_source = ab->source;
                    r.mode = ab->mode == 1 ? msg::ReplicaMode::kRebuilding
                                           : msg::ReplicaMode::kNormal;
                    break;
                }
                case kBlockFragment: {
                    auto fb = decode_fragment_body(b.body);
                    assert(fb);
                    uint64_t rec_off = body_off + kFragmentBodyHeader;
                    for (const LogRecord& rec : fb->records) {
                        uint32_t len = static_cast<uint32_t>(core::encoded_record_size(rec));
                        if (!r.lsn_index.count(rec.lsn)) {
                            r.lsn_index[rec.lsn] = {rec.page, rec_off, len};
                            PageDir& pd = r.dir[rec.page];
                            DirEntry de{rec.lsn, 0, rec_off, len};
                            auto it = std::lower_bound(
                                pd.entries.begin(), pd.entries.end(), rec.lsn,
                                [](const DirEntry& e, Lsn l) { return e.lsn < l; });
                            pd.entries.insert(it, de);
                            ++record_entries_total_;
                        }
                        rec_off += len;
                    }
                    if (fb->cover_lo != core::kNoLsn) r.coverage.add(fb->cover_lo, fb->cover_hi);
                    r.last_seq = std::max(r.last_seq, fb->seq);
                    break;
                }
                case kBlockPage: {
                    auto pb = decode_page_body(b.body);
                    assert(pb);
                    PageDir& pd = r.dir[pb->page];
                    DirEntry de{pb->version, 1, pos, static_cast<uint32_t>(total)};
                    auto it =
                        std::lower_bound(pd.entries.begin(), pd.entries.end(), de.lsn,
                                         [](const DirEntry& e, Lsn l) { return e.lsn < l; });
                    if (it == pd.entries.end() || it->lsn != de.lsn || it->kind != 1)
                        pd.entries.insert(it, de);
                    break;
                }
                case kBlockRebuild: {
                    auto rb = decode_rebuild_body(b.body);
                    assert(rb);
                    for (const LsnRange& iv : rb->coverage) r.coverage.add(iv);
                    r.recycle = std::max(r.recycle, rb->recycle);
                    r.last_seq = std::max(r.last_seq, rb->last_seq);
                    r.mode = msg::ReplicaMode::kNormal;
                    rebuilt_marker = true;
                    break;
                }
            }
            pos += total;
        }
        (void)rebuilt_marker;
        r.persistent = r.coverage.prefix_end();
        SliceId slice = r.slice;
        slices_[slice] = std::move(r);
        SliceReplica& installed = slices_[slice];

        // Queue unconsolidated records for the log cache (they were lost
        // from memory with the crash; treat them like spilled fragments).
        std::vector<RecordRef> refs;
        for (const auto& [page, pd] : installed.dir) {
            Lsn top = core::kNoLsn;
            for (const auto& e : pd.entries)
                if (e.kind == 1) top = std::max(top, e.lsn);
            for (const auto& e : pd.entries)
                if (e.kind == 0 && e.lsn > top)
                    refs.push_back({slice, page, e.lsn, e.off, e.len});
        }
        std::sort(refs.begin(), refs.end(),
                  [](const RecordRef& a, const RecordRef& b) { return a.lsn < b.lsn; });
        if (!refs.empty()) {
            cache_.spill(std::move(refs));
            ++metrics_.log_cache_spills;
        }
    }
    reload_spills();
}

void PageStoreNode::on_message(NodeId from, msg::Message m) {
    std::visit(msg::match{
                   [&](const msg::PsWriteLogs& w) { handle_write_logs(from, w); },
                   [&](const msg::PsReadPage& rd) { handle_read_page(from, rd); },
                   [&](const msg::PsSetRecycle& sr) { handle_set_recycle(from, sr); },
                   [&](const msg::PsGetState& gs) { handle_get_state(from, gs); },
                   [&](const msg::PsGossipPull& p) { handle_gossip_pull(from, p); },
                   [&](const msg::PsGossipData& d) { handle_gossip_data(from, d); },
                   [&](const msg::PsGossipNow& g) { gossip_now(g.slice); },
                   [&](const msg::PsAssignSlice& a) { handle_assign(a); },
                   [&](const msg::PsFetchSlice& f) { handle_fetch_slice(from, f); },
                   [&](const msg::PsFetchSliceResp& r) { handle_fetch_slice_resp(r); },
                   [&](const msg::CmMembership& mem) {
                       SliceReplica* r = find_slice(mem.slice);
                       if (r) r->replicas = mem.replicas;
                   },
                   [&](const auto&) {},
               },
               m.body);
}

}  // namespace taurus::pagestore
