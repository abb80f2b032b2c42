#pragma once

#include <list>
#include <map>
#include <optional>

#include "taurus/core/types.hpp"
#include "taurus/simnet/config.hpp"

namespace taurus::pagestore {

struct PoolKey {
    core::SliceId slice;
    core::PageId page = 0;
    auto operator<=>(const PoolKey&) const = default;
};

struct PoolEntry {
    core::PageImage image;
    bool dirty = false;
    uint64_t freq = 0;
    uint64_t last_use = 0;
};

// Node-global write-back cache of the most recent consolidated version per
// page. LFU (with periodic frequency halving) by default, LRU selectable
// for the policy comparison harness.
class BufferPool {
public:
    BufferPool(size_t capacity, sim::CachePolicy policy, uint64_t aging_every)
        : capacity_(capacity), policy_(policy), aging_every_(aging_every) {}

    size_t size() const { return entries_.size(); }
    size_t capacity() const { return capacity_; }
    bool full() const { return entries_.size() >= capacity_; }

    // Counted lookup (hit/miss metrics, frequency update).
    PoolEntry* lookup(const PoolKey& key);
    // Uncounted lookup.
    PoolEntry* peek(const PoolKey& key);
    const PoolEntry* peek(const PoolKey& key) const;

    // Inserts or replaces. Caller must have made room first (capacity 0
    // disables caching entirely).
    void put(const PoolKey& key, core::PageImage image, bool dirty);
    void erase(const PoolKey& key) { entries_.erase(key); }

    // Deterministic eviction victim per the active policy; nullopt if empty.
    std::optional<PoolKey> pick_victim() const;

    std::vector<PoolKey> dirty_keys() const;
    void mark_clean(const PoolKey& key);

    uint64_t hits() const { return hits_; }
    uint64_t misses() const { return misses_; }

private:
    void touch(PoolEntry& e);

    size_t capacity_;
    sim::CachePolicy policy_;
    uint64_t aging_every_;
    uint64_t tick_ = 0;
    uint64_t accesses_ = 0;
    uint64_t hits_ = 0;
    uint64_t misses_ = 0;
    std::map<PoolKey, PoolEntry> entries_;
};

// A record reference inside the slice log file.
struct RecordRef {
    core::SliceId slice;
    core::PageId page = 0;
    core::Lsn lsn = core::kNoLsn;
    uint64_t off = 0;
    uint32_t len = 0;
};

// Node-global bounded pool of resident log fragments plus the overflow
// queue of fragment references spilled to disk. Consolidation under the
// log-cache-centric policy consumes records only from here.
class LogCache {
public:
    explicit LogCache(size_t capacity_fragments) : cap_(capacity_fragments) {}

    bool has_space() const { return fragments_.size() < cap_; }
    size_t resident() const { return fragments_.size(); }
    size_t spilled() const { return spill_.size(); }

    void add_fragment(const core::SliceId& slice, std::vector<core::LogRecord> records);
    void spill(std::vector<RecordRef> refs);
    // Oldest spilled fragment, if the cache has room for it; caller loads
    // the records from disk and re-adds them via add_fragment.
    std::optional<std::vector<RecordRef>> pop_spill_if_space();

    const core::LogRecord* find(const core::SliceId& slice, core::PageId page,
                                core::Lsn lsn) const;
    // Pending (cached, unconsumed) records of one page, ascending by LSN.
    const std::map<core::Lsn, core::LogRecord>* pending(const core::SliceId& slice,
                                                        core::PageId page) const;
    void consume(const core::SliceId& slice, core::PageId page, core::Lsn lsn);

    struct Fragment {
        uint64_t id = 0;
        core::SliceId slice;
        std::vector<std::pair<core::PageId, core::Lsn>> keys;
        size_t live = 0;
    };
    const std::list<Fragment>& fragments() const { return fragments_; }

    void clear();

private:
    using PendKey = std::pair<core::SliceId, core::PageId>;

    void drop_consumed_front();

    size_t cap_;
    uint64_t next_id_ = 1;
    std::list<Fragment> fragments_;  // FIFO by arrival
    std::map<PendKey, std::map<core::Lsn, core::LogRecord>> pending_;
    std::map<std::tuple<core::SliceId, core::PageId, core::Lsn>, std::list<Fragment>::iterator>
        owner_;
    std::list<std::vector<RecordRef>> spill_;
};

}  // namespace taurus::pagestore
