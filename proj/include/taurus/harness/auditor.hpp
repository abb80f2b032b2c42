#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "taurus/core/apply.hpp"
#include "taurus/logstore/plog.hpp"
#include "taurus/pagestore/node.hpp"

namespace taurus::harness {

// Global auditor: the naive replay oracle every read is compared against,
// plus a shadow count of where every acknowledged record lives (Log Store
// replicas of undeleted PLogs + Page Store replicas that received it). In
// strict mode, any acknowledged record whose copy count drops below three
// is a violation; observe mode just records the dip. Strict mode is used by
// scenarios that do not combine truncation with long-term failures (the one
// sequence where the protocol intentionally rides through a two-copy
// window while a replacement replica rebuilds).
class Auditor : public pagestore::PageStoreObserver {
public:
    enum class Mode { kStrict, kObserve };

    explicit Auditor(core::PageConfig page_cfg) : page_cfg_(page_cfg) {}

    void set_mode(Mode m) { mode_ = m; }

    // ----- oracle
    void add_records(const std::vector<core::LogRecord>& records, bool acked);
    core::PageImage replay(core::PageId page, core::Lsn lsn) const;
    bool verify_read(core::PageId page, core::Lsn lsn, const core::Bytes& bytes,
                     const std::string& where);
    core::Lsn max_record_lsn() const;
    size_t record_count() const { return records_.size(); }
    bool is_group_boundary(core::Lsn lsn) const;
    // Count of this page's records at or below lsn (group-atomicity checks).
    size_t records_at_or_below(core::PageId page, core::Lsn lsn) const;

    // ----- durability bookkeeping
    void on_buffer_durable(const std::vector<core::LogRecord>& records,
                           const logstore::PlogId& plog, const std::vector<sim::NodeId>& nodes,
                           uint64_t off, uint64_t len);
    void on_plog_deleted(const logstore::PlogId& plog);
    void on_plog_copied(const logstore::PlogId& plog, sim::NodeId node);
    void on_record_stored(sim::NodeId node, const core::SliceId& slice, core::Lsn lsn) override;
    void on_coverage_installed(sim::NodeId node, const core::SliceId& slice,
                               const std::vector<core::LsnRange>& ranges) override;
    void on_node_removed(sim::NodeId node);

    uint64_t strict_violations() const { return strict_violations_; }
    uint64_t sub3_dips() const { return sub3_dips_; }       // observe-mode dips below 3
    uint64_t data_loss_events() const { return sub2_events_; }  // below 1 copy
    uint64_t reads_verified() const { return reads_verified_; }
    uint64_t read_mismatches() const { return read_mismatches_; }
    const std::vector<std::string>& failures() const { return failures_; }

    std::string report() const;

private:
    struct RecordInfo {
        core::LogRecord rec;
        bool acked = false;
        logstore::PlogId plog;
        std::set<sim::NodeId> log_nodes;   // holding an undeleted plog replica
        std::set<sim::NodeId> page_nodes;  // slice replicas that received it
    };

    void check_copies(core::Lsn lsn, RecordInfo& info);
    void note_failure(const std::string& msg);

    core::PageConfig page_cfg_;
    Mode mode_ = Mode::kStrict;
    std::map<core::Lsn, RecordInfo> records_;
    std::map<core::PageId, std::vector<core::Lsn>> by_page_;  // ascending
    std::set<core::Lsn> boundaries_;
    std::map<logstore::PlogId, std::vector<core::Lsn>> plog_records_;
    uint64_t strict_violations_ = 0;
    uint64_t sub3_dips_ = 0;
    uint64_t sub2_events_ = 0;
    uint64_t reads_verified_ = 0;
    uint64_t read_mismatches_ = 0;
    std::vector<std::string> failures_;
};

}  // namespace taurus::harness
