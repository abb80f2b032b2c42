#include "taurus/logstore/node.hpp"

namespace taurus::logstore {

using sim::NodeId;
using sim::Timer;

namespace {
constexpr uint32_t kTimerHeartbeat = 1;
}

LogStoreNode::LogStoreNode(sim::Simulator& sim, NodeId self, NodeId cm, sim::StoreConfig cfg)
    : sim_(sim), self_(self), cm_(cm), cfg_(cfg) {}

void LogStoreNode::start() {
    heartbeat();
}

void LogStoreNode::heartbeat() {
    msg::CmHeartbeat hb;
    hb.stored_bytes = stored_bytes_;
    sim_.send(self_, cm_, msg::Message{hb});
    sim_.set_timer(self_, cfg_.heartbeat_ms, Timer{kTimerHeartbeat});
}

void LogStoreNode::on_timer(const Timer& t) {
    if (t.kind == kTimerHeartbeat) heartbeat();
}

void LogStoreNode::on_crash() {
    cache_.clear();
    cache_bytes_ = 0;
    pending_copies_.clear();
}

void LogStoreNode::on_restart() {
    stored_bytes_ = 0;
    for (const auto& name : sim_.disk(self_).list())
        stored_bytes_ += sim_.disk(self_).open(name).size();
    heartbeat();
}

bool LogStoreNode::is_sealed(const PlogId& id) const {
    return sim_.disk(self_).exists(seal_marker(id));
}

core::BytesView LogStoreNode::plog_view(const PlogId& id) const {
    const sim::SimFile* f = sim_.disk(self_).find(id.file_name());
    static const core::Bytes empty;
    return f ? f->view() : core::BytesView(empty);
}

void LogStoreNode::cache_insert(const PlogId& id, uint64_t off, core::BytesView data) {
    if (data.size() > cfg_.fifo_cache_bytes) return;
    cache_.push_back({id, off, core::Bytes(data.begin(), data.end())});
    cache_bytes_ += data.size();
    while (cache_bytes_ > cfg_.fifo_cache_bytes && !cache_.empty()) {
        cache_bytes_ -= cache_.front().data.size();
        cache_.pop_front();
    }
}

const LogStoreNode::CacheEntry* LogStoreNode::cache_lookup(const PlogId& id, uint64_t off,
                                                           uint64_t len) const {
    for (const auto& e : cache_) {
        if (e.id == id && e.off <= off && off + len <= e.off + e.data.size()) return &e;
    }
    return nullptr;
}

void LogStoreNode::handle_append(NodeId from, const msg::LsAppend& a) {
    msg::LsAppendResp resp;
    resp.req_id = a.req_id;
    resp.id = a.id;
    sim::SimDisk& disk = sim_.disk(self_);
    if (!disk.exists(a.id.file_name())) {
        resp.status = msg::LsAppendStatus::kUnknownPlog;
    } else if (is_sealed(a.id)) {
        resp.status = msg::LsAppendStatus::kSealed;
    } else {
        sim::SimFile& f = disk.open(a.id.file_name());
        uint64_t off = f.append(a.data);
        cache_insert(a.id, off, a.data);
        stored_bytes_ += a.data.size();
        ++metrics_.appends;
        metrics_.bytes_appended += a.data.size();
        resp.status = msg::LsAppendStatus::kOk;
        resp.new_len = f.size();
    }
    sim_.send(self_, from, msg::Message{resp});
}

void LogStoreNode::handle_read(NodeId from, const msg::LsRead& r) {
    msg::LsReadResp resp;
    resp.req_id = r.req_id;
    resp.id = r.id;
    resp.off = r.off;
    sim::SimDisk& disk = sim_.disk(self_);
    ++metrics_.reads;
    if (disk.exists(r.id.file_name())) {
        sim::SimFile& f = disk.open(r.id.file_name());
        uint64_t len = r.len == 0 ? (r.off <= f.size() ? f.size() - r.off : 0)
                                  : std::min(r.len, r.off <= f.size() ? f.size() - r.off : 0);
        if (r.off <= f.size()) {
            resp.ok = true;
            if (const CacheEntry* e = cache_lookup(r.id, r.off, len)) {
                resp.data.assign(e->data.begin() + (r.off - e->off),
                                 e->data.begin() + (r.off - e->off) + len);
                resp.from_cache = true;
                ++metrics_.cache_hits;
            } else {
                resp.data = f.read(r.off, len);
                ++metrics_.disk_reads;
            }
        }
    }
    sim_.send(self_, from, msg::Message{resp});
}

void LogStoreNode::on_message(NodeId from, msg::Message m) {
    std::visit(
        msg::match{
            [&](const msg::LsCreatePlog& c) {
                msg::LsCreatePlogResp resp;
                resp.id = c.id;
                if (!sim_.disk(self_).exists(c.id.file_name())) {
                    sim_.disk(self_).create(c.id.file_name());
                    ++metrics_.plogs_hosted;
                }
                resp.ok = true;
                sim_.send(self_, from, msg::Message{resp});
            },
            [&](const msg::LsAppend& a) { handle_append(from, a); },
            [&](const msg::LsSeal& s) {
                if (!sim_.disk(self_).exists(seal_marker(s.id)) &&
                    sim_.disk(self_).exists(s.id.file_name())) {
                    sim_.disk(self_).create(seal_marker(s.id)).append(core::Bytes{1});
                }
            },
            [&](const msg::LsRead& r) { handle_read(from, r); },
            [&](const msg::LsDelete& d) {
                msg::LsDeleteResp resp;
                resp.id = d.id;
                resp.existed = sim_.disk(self_).exists(d.id.file_name());
                if (resp.existed) {
                    stored_bytes_ -= sim_.disk(self_).open(d.id.file_name()).size();
                    sim_.disk(self_).remove(d.id.file_name());
                    sim_.disk(self_).remove(seal_marker(d.id));
                    ++metrics_.plogs_deleted;
                }
                sim_.send(self_, from, msg::Message{resp});
            },
            [&](const msg::LsCopyPlog& c) {
                uint64_t req = next_req_++;
                pending_copies_[req] = {c.id, c.sealed};
                sim_.send(self_, c.source, msg::Message{msg::LsFetchPlog{req, c.id}});
            },
            [&](const msg::LsFetchPlog& f) {
                msg::LsFetchPlogResp resp;
                resp.req_id = f.req_id;
                resp.id = f.id;
                if (sim_.disk(self_).exists(f.id.file_name())) {
                    resp.ok = true;
                    const sim::SimFile& file = sim_.disk(self_).open(f.id.file_name());
                    resp.data = file.read(0, file.size());
                }
                sim_.send(self_, from, msg::Message{resp});
            },
            [&](const msg::LsFetchPlogResp& resp) {
                auto it = pending_copies_.find(resp.req_id);
                if (it == pending_copies_.end() || !resp.ok) return;
                auto [id, sealed] = it->second;
                pending_copies_.erase(it);
                if (!sim_.disk(self_).exists(id.file_name())) {
                    sim_.disk(self_).create(id.file_name()).append(resp.data);
                    stored_bytes_ += resp.data.size();
                    ++metrics_.plogs_hosted;
                }
                if (sealed && !sim_.disk(self_).exists(seal_marker(id)))
                    sim_.disk(self_).create(seal_marker(id)).append(core::Bytes{1});
                sim_.send(self_, cm_, msg::Message{msg::LsCopyPlogDone{id, self_, true}});
            },
            [&](const msg::LsReconcile& rec) {
                for (const PlogId& id : rec.deleted) {
                    if (sim_.disk(self_).exists(id.file_name())) {
                        stored_bytes_ -= sim_.disk(self_).open(id.file_name()).size();
                        sim_.disk(self_).remove(id.file_name());
                        sim_.disk(self_).remove(seal_marker(id));
                        ++metrics_.plogs_deleted;
                    }
                }
                for (const PlogId& id : rec.sealed) {
                    if (sim_.disk(self_).exists(id.file_name()) &&
                        !sim_.disk(self_).exists(seal_marker(id)))
                        sim_.disk(self_).create(seal_marker(id)).append(core::Bytes{1});
                }
            },
            [&](const auto&) {},
        },
        m.body);
}

}  // namespace taurus::logstore
