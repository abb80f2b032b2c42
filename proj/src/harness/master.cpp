#include "taurus/harness/master.hpp"

namespace taurus::harness {

using core::Lsn;
using core::PageId;
using sim::NodeId;
using sim::Timer;

namespace {
constexpr uint32_t kTimerHeartbeat = 200;

uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace

MasterNode::MasterNode(sim::Simulator& sim, NodeId self, NodeId cm, sim::StoreConfig cfg,
                       uint32_t database, uint64_t payload_seed, Auditor* auditor)
    : sim_(sim),
      self_(self),
      cm_(cm),
      cfg_(cfg),
      database_(database),
      payload_seed_(payload_seed),
      auditor_(auditor),
      sal_(sim, self, cm, cfg, database) {
    sal::SalHooks hooks;
    hooks.on_buffer_durable = [this](const std::vector<core::LogRecord>& records,
                                     const logstore::PlogId& plog,
                                     const std::vector<NodeId>& nodes, uint64_t off,
                                     uint64_t len) {
        if (auditor_) auditor_->on_buffer_durable(records, plog, nodes, off, len);
    };
    hooks.on_plog_deleted = [this](const logstore::PlogId& plog) {
        if (auditor_) auditor_->on_plog_deleted(plog);
    };
    hooks.on_recovery_scanned = [this](const std::vector<core::LogRecord>& records) {
        // Tail records that were durable but never acknowledged to the
        // client re-enter through redo; they are part of replayable history
        // from here on.
        if (auditor_) auditor_->add_records(records, false);
    };
    sal_.set_hooks(std::move(hooks));
}

core::Bytes MasterNode::payload_bytes(uint64_t seed, Lsn lsn, uint64_t len) {
    core::Bytes out(len);
    uint64_t state = seed ^ (lsn * 0x9E3779B97F4A7C15ULL);
    for (uint64_t i = 0; i < len; ++i) {
        if (i % 8 == 0) state = mix(state + i);
        out[i] = static_cast<uint8_t>(state >> ((i % 8) * 8));
    }
    return out;
}

void MasterNode::heartbeat() {
    sim_.send(self_, cm_, msg::Message{msg::CmHeartbeat{}});
    sim_.set_timer(self_, cfg_.heartbeat_ms, Timer{kTimerHeartbeat});
}

void MasterNode::on_crash() {
    sal_.on_crash();
    in_group_ = false;
    open_group_.clear();
    page_last_lsn_.clear();
    next_lsn_ = 1;
}

void MasterNode::on_restart() {
    heartbeat();
    ++metrics_.recoveries;
    sal_.recover([this](Lsn max_durable) { next_lsn_ = max_durable + 1; });
}

void MasterNode::on_message(NodeId from, msg::Message m) {
    sal_.handle_message(from, m);
}

void MasterNode::on_timer(const Timer& t) {
    if (t.kind == kTimerHeartbeat) {
        heartbeat();
        return;
    }
    sal_.handle_timer(t);
}

core::LogRecord MasterNode::make_record(PageId page, uint64_t len) {
    core::LogRecord rec;
    rec.slice = core::page_to_slice(page, cfg_.page, database_);
    rec.page = page;
    rec.lsn = next_lsn_++;
    if (len >= cfg_.page.page_size) {
        rec.kind = core::OpKind::kFullImage;
        rec.payload = payload_bytes(payload_seed_, rec.lsn, cfg_.page.page_size);
    } else {
        rec.kind = core::OpKind::kDelta;
        if (len == 0) len = 1;
        uint64_t span = cfg_.page.page_size - len;
        rec.delta_offset = span == 0 ? 0 : static_cast<uint32_t>(mix(rec.lsn) % (span + 1));
        rec.payload = payload_bytes(payload_seed_, rec.lsn, len);
    }
    page_last_lsn_[page] = rec.lsn;
    return rec;
}

void MasterNode::begin_group() {
    if (!up() || !sal_.ready()) return;
    in_group_ = true;
}

void MasterNode::write_page(PageId page, uint64_t len) {
    if (!up() || !sal_.ready()) {
        ++metrics_.writes_dropped;
        return;
    }
    ++metrics_.writes_issued;
    core::LogRecord rec = make_record(page, len);
    if (in_group_) {
        open_group_.push_back(std::move(rec));
        return;
    }
    rec.group_end = true;
    commit_group({std::move(rec)});
}

void MasterNode::end_group() {
    in_group_ = false;
    if (open_group_.empty()) return;
    if (!up() || !sal_.ready()) {
        open_group_.clear();
        return;
    }
    open_group_.back().group_end = true;
    std::vector<core::LogRecord> records = std::move(open_group_);
    open_group_.clear();
    commit_group(std::move(records));
}

void MasterNode::commit_group(std::vector<core::LogRecord> records) {
    core::DatabaseLogBuffer buffer;
    buffer.last_lsn = records.back().lsn;
    buffer.records = std::move(records);
    sal_.write_log_buffer(std::move(buffer), [this]() { ++metrics_.groups_committed; });
}

void MasterNode::read_op(PageId page, Lsn lsn) {
    if (!up() || !sal_.ready()) {
        ++metrics_.reads_dropped;
        return;
    }
    ++metrics_.reads_issued;
    // Dirty-page rule: until the page's records reach at least one Page
    // Store replica, the page is only available from the master's pool.
    auto it = page_last_lsn_.find(page);
    Lsn last = it == page_last_lsn_.end() ? core::kNoLsn : it->second;
    if (!sal_.eviction_permitted(page, last)) {
        ++metrics_.reads_local;
        if (auditor_) {
            core::PageImage img = auditor_->replay(page, last);
            auditor_->verify_read(page, last, img.bytes, "master-pool");
        }
        return;
    }
    sal_.read_page_at(page, lsn,
                      [this, page](msg::PsStatus st, const core::PageImage& img, Lsn used) {
                          if (st == msg::PsStatus::kOk) {
                              ++metrics_.reads_ok;
                              if (auditor_) auditor_->verify_read(page, used, img.bytes, "master");
                          } else {
                              ++metrics_.reads_failed;
                          }
                      });
}

}  // namespace taurus::harness
