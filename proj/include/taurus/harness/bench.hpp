#pragma once

#include <string>

#include "taurus/simnet/config.hpp"

namespace taurus::harness {

struct BenchParams {
    uint64_t pages = 4096;
    size_t pool_pages = 256;
    uint64_t accesses = 100000;
    double zipf_s = 1.1;  // <= 0: uniform
    uint64_t seed = 1;
};

struct BenchResult {
    double lfu_hit_rate = 0;
    double lru_hit_rate = 0;
    uint64_t accesses = 0;
};

// Runs the identical seeded access/consolidation workload against one Page
// Store under LFU and then LRU, and reports buffer pool hit rates.
BenchResult bench_cache(const BenchParams& p);

std::string render_bench(const BenchResult& r);

}  // namespace taurus::harness
