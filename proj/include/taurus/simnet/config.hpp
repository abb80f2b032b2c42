#pragma once

#include "taurus/core/types.hpp"
#include "taurus/simnet/ids.hpp"

namespace taurus::sim {

enum class ConsolidationPolicy : uint8_t { kLogCacheCentric = 0, kLongestChainFirst = 1 };
enum class CachePolicy : uint8_t { kLfu = 0, kLru = 1 };

// Every size and timing constant in one place. Production values follow the
// paper where it gives one; the test profile scales them down so scenarios
// finish in seconds and produce file counts a laptop can inspect.
struct StoreConfig {
    core::PageConfig page;

    // log store
    uint64_t plog_size_limit = 64ULL << 20;           // 64MB production
    uint64_t metadata_plog_size_limit = 1ULL << 20;
    uint64_t fifo_cache_bytes = 1ULL << 20;

    // page store
    size_t buffer_pool_pages = 4096;
    size_t log_cache_fragments = 1024;
    uint64_t dir_entry_high_water = 1u << 20;  // throttle signal threshold
    Time consolidate_interval_ms = 5;
    size_t consolidate_pages_per_step = 32;
    Time flush_interval_ms = 50;
    Time gossip_interval_ms = 30 * 60 * 1000;  // 30 minutes production
    ConsolidationPolicy consolidation = ConsolidationPolicy::kLogCacheCentric;
    CachePolicy cache_policy = CachePolicy::kLfu;
    uint64_t lfu_aging_every = 4096;  // accesses between frequency halvings

    // SAL
    uint64_t slice_buffer_flush_bytes = 64 * 1024;
    Time slice_buffer_timeout_ms = 10;
    Time append_timeout_ms = 500;
    Time flush_retry_ms = 50;
    Time poll_interval_ms = 1000;
    int staleness_polls = 3;
    int checkpoint_every_buffers = 16;
    Time maintenance_interval_ms = 1000;
    Time recycle_interval_ms = 1000;
    Time read_attempt_timeout_ms = 50;
    Time read_retry_ms = 5;
    int read_max_rounds = 40;
    Time throttle_window_ms = 200;
    Time throttle_drain_ms = 10;

    // read replica
    Time pump_interval_ms = 5;
    Time min_tv_report_ms = 500;
    Time resync_retry_ms = 500;

    // cluster manager
    Time heartbeat_ms = 500;
    int heartbeat_miss_down = 3;
    Time long_term_ms = 15 * 60 * 1000;  // 15 minutes production

    static StoreConfig prod_profile() { return StoreConfig{}; }

    static StoreConfig test_profile() {
        StoreConfig c;
        c.page.page_size = 512;
        c.page.pages_per_slice = 16;
        c.plog_size_limit = 64 * 1024;
        c.metadata_plog_size_limit = 4 * 1024;
        c.fifo_cache_bytes = 1ULL << 20;
        c.buffer_pool_pages = 256;
        c.log_cache_fragments = 64;
        c.gossip_interval_ms = 10 * 1000;
        c.long_term_ms = 5 * 1000;
        return c;
    }
};

}  // namespace taurus::sim
