#pragma once

#include <deque>
#include <map>
#include <set>

#include "taurus/logstore/plog.hpp"
#include "taurus/simnet/cluster.hpp"
#include "taurus/simnet/config.hpp"
#include "taurus/simnet/sim.hpp"

namespace taurus::logstore {

struct LogStoreMetrics {
    uint64_t appends = 0;
    uint64_t bytes_appended = 0;
    uint64_t reads = 0;
    uint64_t cache_hits = 0;
    uint64_t disk_reads = 0;
    uint64_t plogs_hosted = 0;
    uint64_t plogs_deleted = 0;
};

// One Log Store server: hosts PLog replica files (append-only), a FIFO
// write-through cache of recent appends, and the copy protocol used for
// re-replication after long-term failures.
class LogStoreNode : public sim::Actor {
public:
    LogStoreNode(sim::Simulator& sim, sim::NodeId self, sim::NodeId cm, sim::StoreConfig cfg);

    void start();

    void on_message(sim::NodeId from, msg::Message m) override;
    void on_timer(const sim::Timer& t) override;
    void on_crash() override;
    void on_restart() override;

    const LogStoreMetrics& metrics() const { return metrics_; }
    uint64_t stored_bytes() const { return stored_bytes_; }
    sim::NodeId id() const { return self_; }
    bool has_plog(const PlogId& id) const { return sim_.disk(self_).exists(id.file_name()); }
    bool is_sealed(const PlogId& id) const;
    core::BytesView plog_view(const PlogId& id) const;

private:
    struct CacheEntry {
        PlogId id;
        uint64_t off = 0;
        core::Bytes data;
    };

    void handle_append(sim::NodeId from, const msg::LsAppend& a);
    void handle_read(sim::NodeId from, const msg::LsRead& r);
    void cache_insert(const PlogId& id, uint64_t off, core::BytesView data);
    const CacheEntry* cache_lookup(const PlogId& id, uint64_t off, uint64_t len) const;
    void heartbeat();
    std::string seal_marker(const PlogId& id) const { return id.hex() + ".sealed"; }

    sim::Simulator& sim_;
    sim::NodeId self_;
    sim::NodeId cm_;
    sim::StoreConfig cfg_;
    std::deque<CacheEntry> cache_;  // FIFO eviction
    uint64_t cache_bytes_ = 0;
    uint64_t stored_bytes_ = 0;
    uint64_t next_req_ = 1;
    // outstanding plog copy fetches: req -> (plog, seal flag)
    std::map<uint64_t, std::pair<PlogId, bool>> pending_copies_;
    LogStoreMetrics metrics_;
};

}  // namespace taurus::logstore
