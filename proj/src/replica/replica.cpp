#include "taurus/replica/replica.hpp"

#include <algorithm>
#include <cassert>

#include "taurus/core/apply.hpp"

namespace taurus::replica {

using core::Lsn;
using core::PageId;
using core::PageImage;
using core::SliceId;
using sim::NodeId;
using sim::Timer;

namespace {
constexpr uint32_t kTimerHeartbeat = 1;
constexpr uint32_t kTimerPump = 2;
constexpr uint32_t kTimerMinTv = 3;
constexpr uint32_t kTimerResyncRetry = 4;
constexpr uint32_t kTimerReadTimeout = 5;
constexpr uint32_t kTimerReadRetry = 6;
}  // namespace

ReplicaNode::ReplicaNode(sim::Simulator& sim, NodeId self, NodeId master, NodeId cm,
                         sim::StoreConfig cfg, uint32_t database)
    : sim_(sim),
      self_(self),
      master_(master),
      cm_(cm),
      cfg_(cfg),
      database_(database),
      router_(
          sal::ReadRouter::Host{&sim, self, kTimerReadTimeout, kTimerReadRetry,
                                [this](const SliceId& slice) {
                                    std::vector<NodeId> out;
                                    auto it = slice_replicas_.find(slice);
                                    if (it == slice_replicas_.end()) return out;
                                    for (NodeId n : it->second)
                                        if (n != sim::kNoNode && !sim_.is_removed(n))
                                            out.push_back(n);
                                    return out;
                                },
                                [this](const SliceId&, int) {
                                    // Membership may have changed under us.
                                    msg::CmListSlices ls;
                                    ls.req_id = list_req_ = sim_.rng().next() | 1;
                                    sim_.send(self_, cm_, msg::Message{ls});
                                }},
          cfg, sim.rng().fork()) {}

void ReplicaNode::start() {
    sim_.send(self_, cm_, msg::Message{msg::CmHeartbeat{}});
    sim_.set_timer(self_, cfg_.heartbeat_ms, Timer{kTimerHeartbeat});
    request_resync();
    sim_.set_timer(self_, cfg_.pump_interval_ms, Timer{kTimerPump});
    sim_.set_timer(self_, cfg_.min_tv_report_ms, Timer{kTimerMinTv});
}

void ReplicaNode::on_crash() {
    synced_ = false;
    last_seq_ = 0;
    visible_ = core::kNoLsn;
    slice_persistent_.clear();
    boundary_commit_time_.clear();
    extent_queue_.clear();
    outstanding_read_req_ = 0;
    plog_locations_.clear();
    pending_locates_.clear();
    blocked_on_locate_.clear();
    parse_buf_.clear();
    building_ = Group{};
    ready_groups_.clear();
    pool_.clear();
    tv_registry_.clear();
    router_.clear();
}

void ReplicaNode::on_restart() { start(); }

void ReplicaNode::request_resync() {
    msg::RepResync rs;
    rs.req_id = resync_req_ = sim_.rng().next() | 1;
    rs.replica = self_;
    sim_.send(self_, master_, msg::Message{rs});
    msg::CmListSlices ls;
    ls.req_id = list_req_ = sim_.rng().next() | 1;
    sim_.send(self_, cm_, msg::Message{ls});
    sim_.set_timer(self_, cfg_.resync_retry_ms, Timer{kTimerResyncRetry});
    ++metrics_.resyncs;
}

Lsn ReplicaNode::known_slice_persistent(const SliceId& slice) const {
    auto it = slice_persistent_.find(slice);
    return it == slice_persistent_.end() ? core::kNoLsn : it->second;
}

// ------------------------------------------------------------------ views

Lsn ReplicaNode::open_read_view() {
    tv_registry_.insert(visible_);
    return visible_;
}

bool ReplicaNode::release_read_view(Lsn tv) {
    auto it = tv_registry_.find(tv);
    if (it == tv_registry_.end()) return false;
    tv_registry_.erase(it);
    prune_pool();
    return true;
}

Lsn ReplicaNode::report_min_tv() const {
    if (tv_registry_.empty()) return visible_;
    return *tv_registry_.begin();
}

// ------------------------------------------------------------------- reads

Lsn ReplicaNode::effective_read_lsn(const SliceId& slice, Lsn tv) const {
    // The store can only prove completeness up to its persistent LSN, so cap
    // the request at the best replica's known persistent LSN. Correct
    // because the visible-LSN rule guarantees the page has no records in
    // (cap, tv].
    Lsn known = known_slice_persistent(slice);
    return std::min(tv, known);
}

void ReplicaNode::read_page_op(PageId page, ReadCb cb) {
    Lsn tv = open_read_view();
    // Pool versions serve views at or after the entry's seed point.
    auto it = pool_.find(page);
    if (it != pool_.end() && tv >= it->second.valid_from) {
        const PageImage* best = nullptr;
        for (const PageImage& v : it->second.versions) {
            if (v.version <= tv) best = &v;
            else break;
        }
        if (best) {
            ++metrics_.pool_hits;
            PageImage copy = *best;
            release_read_view(tv);
            cb(msg::PsStatus::kOk, copy, tv, tv);
            return;
        }
    }
    SliceId slice = core::page_to_slice(page, cfg_.page, database_);
    Lsn eff = effective_read_lsn(slice, tv);
    ++metrics_.store_reads;
    Lsn seed_visible = visible_;
    router_.start_read(slice, page, eff,
                       [this, cb, tv, eff, page, seed_visible](msg::PsStatus st,
                                                               const msg::PsReadPageResp& resp) {
                           if (st == msg::PsStatus::kOk && tv == seed_visible && tv == visible_) {
                               // Still current: seed the pool so future
                               // groups extend this page in memory.
                               PoolEntry e;
                               e.valid_from = visible_;
                               e.versions.push_back(resp.image);
                               pool_[page] = std::move(e);
                           }
                           if (st == msg::PsStatus::kBelowRecycleLsn)
                               ++metrics_.below_recycle_errors;
                           release_read_view(tv);
                           cb(st, resp.image, tv, eff);
                       });
}

void ReplicaNode::read_pages_op(std::vector<PageId> pages, MultiReadCb cb) {
    // All reads share one view, so the result is one consistent snapshot.
    Lsn tv = open_read_view();
    auto images = std::make_shared<std::vector<PageImage>>(pages.size());
    auto remaining = std::make_shared<size_t>(pages.size());
    auto ok = std::make_shared<bool>(true);
    if (pages.empty()) {
        release_read_view(tv);
        cb(true, {}, tv);
        return;
    }
    for (size_t i = 0; i < pages.size(); ++i) {
        PageId page = pages[i];
        auto finish_one = [this, images, remaining, ok, cb, tv, i](msg::PsStatus st,
                                                                   const PageImage& img) {
            if (st != msg::PsStatus::kOk) *ok = false;
            (*images)[i] = img;
            if (--*remaining == 0) {
                release_read_view(tv);
                cb(*ok, *images, tv);
            }
        };
        auto it = pool_.find(page);
        bool served = false;
        if (it != pool_.end() && tv >= it->second.valid_from) {
            const PageImage* best = nullptr;
            for (const PageImage& v : it->second.versions)
                if (v.version <= tv) best = &v;
            if (best) {
                ++metrics_.pool_hits;
                finish_one(msg::PsStatus::kOk, *best);
                served = true;
            }
        }
        if (!served) {
            SliceId slice = core::page_to_slice(page, cfg_.page, database_);
            Lsn eff = effective_read_lsn(slice, tv);
            ++metrics_.store_reads;
            router_.start_read(slice, page, eff,
                               [finish_one](msg::PsStatus st, const msg::PsReadPageResp& resp) {
                                   finish_one(st, resp.image);
                               });
        }
    }
}

void ReplicaNode::prune_pool() {
    Lsn keep_from = std::min(report_min_tv(), visible_);
    for (auto& [page, e] : pool_) {
        // Keep the newest version at or below keep_from plus everything
        // above it; always keep the newest.
        if (e.versions.size() <= 1) continue;
        size_t first_keep = 0;
        for (size_t i = 0; i < e.versions.size(); ++i)
            if (e.versions[i].version <= keep_from) first_keep = i;
        if (first_keep > 0)
            e.versions.erase(e.versions.begin(), e.versions.begin() + first_keep);
    }
}

// ------------------------------------------------------------------- pump

void ReplicaNode::pump() {
    issue_extent_read();
    try_apply_groups();
}

void ReplicaNode::issue_extent_read() {
    if (!synced_ || outstanding_read_req_ != 0 || extent_queue_.empty()) return;
    LogExtent& ext = extent_queue_.front();
    auto lit = plog_locations_.find(ext.plog);
    if (lit == plog_locations_.end()) {
        if (!pending_locates_.empty()) return;  // one locate at a time
        msg::CmPlogLocate loc;
        loc.req_id = sim_.rng().next() | 1;
        loc.id = ext.plog;
        pending_locates_[loc.req_id] = ext.plog;
        sim_.send(self_, cm_, msg::Message{loc});
        return;
    }
    auto& [nodes, rotor] = lit->second;
    if (nodes.empty()) return;
    NodeId target = nodes[rotor % nodes.size()];
    msg::LsRead rd;
    rd.req_id = sim_.rng().next() | 1;
    rd.id = ext.plog;
    rd.off = ext.off;
    rd.len = ext.len;
    outstanding_read_req_ = rd.req_id;
    outstanding_plog_ = ext.plog;
    sim_.send(self_, target, msg::Message{rd});
}

void ReplicaNode::parse_new_bytes() {
    size_t pos = 0;
    core::BytesView view(parse_buf_);
    while (true) {
        core::DecodeResult res = core::decode_log_record(view.subspan(pos));
        if (res.status != core::DecodeStatus::kOk) break;
        pos += res.consumed;
        bool end = res.record.group_end;
        Lsn lsn = res.record.lsn;
        building_.records.push_back(std::move(res.record));
        if (end) {
            building_.boundary = lsn;
            ready_groups_.push_back(std::move(building_));
            building_ = Group{};
        }
    }
    parse_buf_.erase(parse_buf_.begin(), parse_buf_.begin() + pos);
}

void ReplicaNode::try_apply_groups() {
    while (!ready_groups_.empty()) {
        Group& g = ready_groups_.front();
        // Do not advance the view past what the Page Stores can serve: every
        // slice touched at or below the boundary must have its records
        // persisted per the master's reports.
        bool safe = true;
        std::map<SliceId, Lsn> touched;
        for (const core::LogRecord& rec : g.records)
            touched[rec.slice] = std::max(touched[rec.slice], rec.lsn);
        for (const auto& [slice, mx] : touched) {
            if (known_slice_persistent(slice) < mx) {
                safe = false;
                break;
            }
        }
        if (!safe) break;
        apply_group(g);
        ready_groups_.pop_front();
    }
}

void ReplicaNode::apply_group(const Group& g) {
    for (const core::LogRecord& rec : g.records) {
        auto it = pool_.find(rec.page);
        if (it == pool_.end()) continue;  // not pooled; stores serve it on demand
        PoolEntry& e = it->second;
        assert(!e.versions.empty());
        PageImage next = e.versions.back();
        if (rec.lsn <= next.version) continue;  // already reflected
        core::ApplyStatus st = core::apply_record_inplace(next, rec, cfg_.page);
        assert(st == core::ApplyStatus::kOk);
        (void)st;
        e.versions.push_back(std::move(next));
        ++metrics_.records_applied;
    }
    // The group boundary is the new physically-consistent frontier.
    assert(g.boundary >= visible_);
    visible_ = g.boundary;
    ++metrics_.groups_applied;
    auto bt = boundary_commit_time_.find(g.boundary);
    if (bt != boundary_commit_time_.end()) {
        uint64_t lag = sim_.now() - bt->second;
        ++metrics_.lag_samples;
        metrics_.lag_total_ms += lag;
        metrics_.lag_max_ms = std::max(metrics_.lag_max_ms, lag);
        boundary_commit_time_.erase(boundary_commit_time_.begin(), std::next(bt));
    }
    prune_pool();
}

// ----------------------------------------------------------------- handlers

void ReplicaNode::on_message(NodeId from, msg::Message m) {
    (void)from;
    std::visit(
        msg::match{
            [&](const msg::RepResyncResp& resp) {
                if (resp.req_id != resync_req_) return;
                auto snap = MasterSnapshot::decode(resp.encoded);
                if (!snap) return;
                resync_req_ = 0;
                synced_ = true;
                incarnation_ = snap->incarnation;
                last_seq_ = snap->seq;
                last_db_lsn_ = snap->last_db_lsn;
                visible_ = snap->last_boundary;
                slice_persistent_.clear();
                for (const auto& [slice, lsn] : snap->slice_persistents)
                    slice_persistent_[slice] = lsn;
                pool_.clear();
                extent_queue_.clear();
                parse_buf_.clear();
                building_ = Group{};
                ready_groups_.clear();
                sim_.trace_key(self_, "resynced: visible=" + std::to_string(visible_));
            },
            [&](const msg::RepMasterMsg& mm) {
                auto u = MasterUpdate::decode(mm.encoded);
                if (!u) return;
                if (!synced_) return;  // snapshot pending
                if (u->incarnation != incarnation_ || u->seq > last_seq_ + 1) {
                    // Missed a message (or a new master): full resync.
                    synced_ = false;
                    request_resync();
                    return;
                }
                if (u->seq <= last_seq_) return;  // duplicate
                last_seq_ = u->seq;
                ++metrics_.master_msgs;
                last_db_lsn_ = u->last_db_lsn;
                boundary_commit_time_[u->last_boundary] = u->commit_time_ms;
                for (const auto& [slice, lsn] : u->slice_persistents) {
                    Lsn& cur = slice_persistent_[slice];
                    cur = std::max(cur, lsn);
                }
                for (const LogExtent& e : u->extents) extent_queue_.push_back(e);
                pump();
            },
            [&](const msg::CmPlogLocateResp& resp) {
                auto it = pending_locates_.find(resp.req_id);
                if (it == pending_locates_.end()) return;
                pending_locates_.erase(it);
                if (resp.ok) plog_locations_[resp.id] = {resp.replicas, 0};
                issue_extent_read();
            },
            [&](const msg::LsReadResp& resp) {
                if (resp.req_id != outstanding_read_req_) return;
                outstanding_read_req_ = 0;
                if (!resp.ok) {
                    // Rotate to another replica of this plog next pump.
                    auto lit = plog_locations_.find(outstanding_plog_);
                    if (lit != plog_locations_.end()) ++lit->second.second;
                    return;
                }
                extent_queue_.pop_front();
                core::put_bytes(parse_buf_, resp.data);
                parse_new_bytes();
                try_apply_groups();
                issue_extent_read();
            },
            [&](const msg::PsReadPageResp& resp) { router_.handle_response(from, resp); },
            [&](const msg::CmListSlicesResp& resp) {
                if (resp.req_id != list_req_) return;
                for (const msg::CmMembership& mem : resp.slices)
                    slice_replicas_[mem.slice] = mem.replicas;
            },
            [&](const auto&) {},
        },
        m.body);
}

void ReplicaNode::on_timer(const Timer& t) {
    switch (t.kind) {
        case kTimerHeartbeat:
            sim_.send(self_, cm_, msg::Message{msg::CmHeartbeat{}});
            sim_.set_timer(self_, cfg_.heartbeat_ms, Timer{kTimerHeartbeat});
            break;
        case kTimerPump:
            pump();
            sim_.set_timer(self_, cfg_.pump_interval_ms, Timer{kTimerPump});
            break;
        case kTimerMinTv:
            if (synced_) {
                msg::RepMinTv tv;
                tv.replica = self_;
                tv.min_tv = report_min_tv();
                sim_.send(self_, master_, msg::Message{tv});
            }
            sim_.set_timer(self_, cfg_.min_tv_report_ms, Timer{kTimerMinTv});
            break;
        case kTimerResyncRetry:
            if (!synced_ && resync_req_ != 0) request_resync();
            break;
        case kTimerReadTimeout:
            router_.handle_timeout(t.a);
            break;
        case kTimerReadRetry:
            router_.handle_retry(t.a);
            break;
    }
}

}  // namespace taurus::replica
