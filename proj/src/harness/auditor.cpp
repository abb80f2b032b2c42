#include "taurus/harness/auditor.hpp"

#include <algorithm>
#include <cassert>

namespace taurus::harness {

using core::Lsn;
using core::PageId;

void Auditor::note_failure(const std::string& msg) {
    if (failures_.size() < 256) failures_.push_back(msg);
}

void Auditor::add_records(const std::vector<core::LogRecord>& records, bool acked) {
    for (const core::LogRecord& rec : records) {
        auto it = records_.find(rec.lsn);
        if (it != records_.end()) {
            // Same LSN must mean the same record, always.
            if (!(it->second.rec == rec)) {
                note_failure("oracle: conflicting record content at lsn " +
                             std::to_string(rec.lsn));
                ++read_mismatches_;
            }
            if (acked) it->second.acked = true;
            continue;
        }
        RecordInfo info;
        info.rec = rec;
        info.acked = acked;
        records_.emplace(rec.lsn, std::move(info));
        auto& lsns = by_page_[rec.page];
        lsns.insert(std::lower_bound(lsns.begin(), lsns.end(), rec.lsn), rec.lsn);
        if (rec.group_end) boundaries_.insert(rec.lsn);
    }
}

core::PageImage Auditor::replay(PageId page, Lsn lsn) const {
    core::PageImage img = core::zero_page(page, page_cfg_);
    auto it = by_page_.find(page);
    if (it == by_page_.end()) return img;
    for (Lsn l : it->second) {
        if (l > lsn) break;
        const RecordInfo& info = records_.at(l);
        core::ApplyStatus st = core::apply_record_inplace(img, info.rec, page_cfg_);
        assert(st == core::ApplyStatus::kOk);
        (void)st;
    }
    return img;
}

bool Auditor::verify_read(PageId page, Lsn lsn, const core::Bytes& bytes,
                          const std::string& where) {
    ++reads_verified_;
    core::PageImage expect = replay(page, lsn);
    if (expect.bytes != bytes) {
        ++read_mismatches_;
        note_failure("read mismatch at " + where + ": page " + std::to_string(page) + " lsn " +
                     std::to_string(lsn));
        return false;
    }
    return true;
}

Lsn Auditor::max_record_lsn() const {
    return records_.empty() ? core::kNoLsn : records_.rbegin()->first;
}

bool Auditor::is_group_boundary(Lsn lsn) const { return boundaries_.count(lsn) > 0; }

size_t Auditor::records_at_or_below(PageId page, Lsn lsn) const {
    auto it = by_page_.find(page);
    if (it == by_page_.end()) return 0;
    return std::upper_bound(it->second.begin(), it->second.end(), lsn) - it->second.begin();
}

void Auditor::check_copies(Lsn lsn, RecordInfo& info) {
    if (!info.acked) return;
    size_t copies = info.log_nodes.size() + info.page_nodes.size();
    if (copies < 3) {
        if (mode_ == Mode::kStrict) {
            ++strict_violations_;
            note_failure("durability: record " + std::to_string(lsn) + " has " +
                         std::to_string(copies) + " copies");
        } else {
            ++sub3_dips_;
        }
    }
    if (copies < 1) {
        ++sub2_events_;
        note_failure("data loss: record " + std::to_string(lsn) + " has no copies");
    }
}

void Auditor::on_buffer_durable(const std::vector<core::LogRecord>& records,
                                const logstore::PlogId& plog,
                                const std::vector<sim::NodeId>& nodes, uint64_t off,
                                uint64_t len) {
    (void)off;
    (void)len;
    add_records(records, true);
    for (const core::LogRecord& rec : records) {
        RecordInfo& info = records_.at(rec.lsn);
        info.acked = true;
        info.plog = plog;
        for (sim::NodeId n : nodes) info.log_nodes.insert(n);
        plog_records_[plog].push_back(rec.lsn);
    }
}

void Auditor::on_plog_deleted(const logstore::PlogId& plog) {
    auto it = plog_records_.find(plog);
    if (it == plog_records_.end()) return;
    for (Lsn lsn : it->second) {
        RecordInfo& info = records_.at(lsn);
        info.log_nodes.clear();
        check_copies(lsn, info);
    }
    plog_records_.erase(it);
}

void Auditor::on_plog_copied(const logstore::PlogId& plog, sim::NodeId node) {
    auto it = plog_records_.find(plog);
    if (it == plog_records_.end()) return;
    for (Lsn lsn : it->second) records_.at(lsn).log_nodes.insert(node);
}

void Auditor::on_record_stored(sim::NodeId node, const core::SliceId& slice, Lsn lsn) {
    (void)slice;
    auto it = records_.find(lsn);
    if (it == records_.end()) {
        // A page store only receives records that were durable in Log Stores
        // first; recovery registers scanned tail records before resending.
        note_failure("page store " + std::to_string(node) + " stored unknown record " +
                     std::to_string(lsn));
        return;
    }
    it->second.page_nodes.insert(node);
}

void Auditor::on_coverage_installed(sim::NodeId node, const core::SliceId& slice,
                                    const std::vector<core::LsnRange>& ranges) {
    for (const core::LsnRange& r : ranges) {
        for (auto it = records_.lower_bound(r.lo); it != records_.end() && it->first <= r.hi;
             ++it) {
            if (it->second.rec.slice == slice) it->second.page_nodes.insert(node);
        }
    }
}

void Auditor::on_node_removed(sim::NodeId node) {
    for (auto& [lsn, info] : records_) {
        bool touched = info.log_nodes.erase(node) > 0;
        touched |= info.page_nodes.erase(node) > 0;
        if (touched) check_copies(lsn, info);
    }
}

std::string Auditor::report() const {
    std::string out;
    out += "records=" + std::to_string(records_.size());
    out += " reads_verified=" + std::to_string(reads_verified_);
    out += " read_mismatches=" + std::to_string(read_mismatches_);
    out += " strict_violations=" + std::to_string(strict_violations_);
    out += " sub3_dips=" + std::to_string(sub3_dips_);
    out += " data_loss=" + std::to_string(sub2_events_);
    out += "\n";
    for (const std::string& f : failures_) out += "  " + f + "\n";
    return out;
}

}  // namespace taurus::harness
