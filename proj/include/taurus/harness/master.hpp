#pragma once

#include "taurus/harness/auditor.hpp"
#include "taurus/sal/sal.hpp"

namespace taurus::harness {

struct DriverMetrics {
    uint64_t writes_issued = 0;
    uint64_t writes_dropped = 0;  // master down
    uint64_t groups_committed = 0;
    uint64_t reads_issued = 0;
    uint64_t reads_ok = 0;
    uint64_t reads_failed = 0;
    uint64_t reads_local = 0;  // served from the master pool (eviction rule)
    uint64_t reads_dropped = 0;
    uint64_t recoveries = 0;
};

// The master node: the synthetic workload driver plus SAL living in the
// same actor (SAL is a library inside the database process). The driver
// assigns LSNs, forms group-flush boundaries, and checks every routed read
// against the replay oracle.
class MasterNode : public sim::Actor {
public:
    MasterNode(sim::Simulator& sim, sim::NodeId self, sim::NodeId cm, sim::StoreConfig cfg,
               uint32_t database, uint64_t payload_seed, Auditor* auditor);

    sal::Sal& sal() { return sal_; }

    void start() { heartbeat(); }

    void on_message(sim::NodeId from, msg::Message m) override;
    void on_timer(const sim::Timer& t) override;
    void on_crash() override;
    void on_restart() override;

    // Scripted operations (invoked by the scenario runner).
    void begin_group();
    void end_group();
    void write_page(core::PageId page, uint64_t len);
    // lsn == 0 reads at the slice flush LSN.
    void read_op(core::PageId page, core::Lsn lsn);

    bool up() const { return sim_.is_up(self_); }
    core::Lsn next_lsn() const { return next_lsn_; }
    const DriverMetrics& metrics() const { return metrics_; }
    sim::NodeId id() const { return self_; }

    // Deterministic payload content for a record: a function of (seed, lsn)
    // only, so it survives master crashes.
    static core::Bytes payload_bytes(uint64_t seed, core::Lsn lsn, uint64_t len);

private:
    void heartbeat();
    core::LogRecord make_record(core::PageId page, uint64_t len);
    void commit_group(std::vector<core::LogRecord> records);

    sim::Simulator& sim_;
    sim::NodeId self_;
    sim::NodeId cm_;
    sim::StoreConfig cfg_;
    uint32_t database_;
    uint64_t payload_seed_;
    Auditor* auditor_;
    sal::Sal sal_;

    core::Lsn next_lsn_ = 1;
    bool in_group_ = false;
    std::vector<core::LogRecord> open_group_;
    std::map<core::PageId, core::Lsn> page_last_lsn_;
    DriverMetrics metrics_;
};

}  // namespace taurus::harness
