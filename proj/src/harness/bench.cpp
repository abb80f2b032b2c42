#include "taurus/harness/bench.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "taurus/pagestore/node.hpp"

namespace taurus::harness {

namespace {

// Zipfian sampler over [0, n) via an inverse-CDF table.
class Zipf {
public:
    Zipf(uint64_t n, double s) : cdf_(n) {
        double sum = 0;
        for (uint64_t i = 0; i < n; ++i) {
            sum += 1.0 / std::pow(static_cast<double>(i + 1), s);
            cdf_[i] = sum;
        }
        for (double& v : cdf_) v /= sum;
    }
    uint64_t sample(double u) const {
        size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (cdf_[mid] < u) lo = mid + 1;
            else hi = mid;
        }
        return lo;
    }

private:
    std::vector<double> cdf_;
};

struct NullActor : sim::Actor {
    void on_message(sim::NodeId, msg::Message) override {}
    void on_timer(const sim::Timer&) override {}
};

double run_policy(const BenchParams& p, sim::CachePolicy policy) {
    sim::StoreConfig cfg = sim::StoreConfig::test_profile();
    cfg.cache_policy = policy;
    cfg.buffer_pool_pages = p.pool_pages;
    cfg.page.pages_per_slice = p.pages;  // one slice covers the whole range
    cfg.log_cache_fragments = 4096;

    sim::Simulator sim(p.seed);
    NullActor null_cm;
    sim::NodeId cm = sim.add_node("cm", &null_cm);
    sim::NodeId self = sim.add_node("ps1", nullptr);
    pagestore::PageStoreNode node(sim, self, cm, cfg);
    sim.set_actor(self, &node);
    core::SliceId slice{1, 0};
    node.host_slice(slice, {self, sim::kNoNode, sim::kNoNode});

    sim::Rng rng(p.seed);
    Zipf zipf(p.pages, p.zipf_s > 0 ? p.zipf_s : 1.0);
    core::Lsn lsn = 1;
    uint64_t seq = 1;
    core::Lsn cover_prev = 0;

    for (uint64_t i = 0; i < p.accesses; ++i) {
        uint64_t page = p.zipf_s > 0 ? zipf.sample(rng.unit()) : rng.below(p.pages);
        // One record per access; consolidation pulls the page through the
        // buffer pool, which is what the policies differ on.
        core::LogRecord rec;
        rec.slice = slice;
        rec.page = page;
        rec.lsn = lsn++;
        rec.kind = core::OpKind::kDelta;
        rec.delta_offset = static_cast<uint32_t>(rng.below(cfg.page.page_size - 8));
        rec.payload = core::Bytes(8, static_cast<uint8_t>(i));
        rec.group_end = true;
        msg::PsWriteLogs w;
        w.req_id = i + 1;
        w.frag.slice = slice;
        w.frag.sequence = seq++;
        w.frag.cover_lo = cover_prev + 1;
        w.frag.cover_hi = rec.lsn;
        cover_prev = rec.lsn;
        w.frag.records.push_back(std::move(rec));
        node.on_message(cm, msg::Message{w});
        node.consolidate_step();
        if (i % 64 == 0) node.flush_dirty_pages();
    }
    const auto& m = node.metrics();
    uint64_t total = m.buffer_pool_hits + m.buffer_pool_misses;
    return total == 0 ? 0.0 : static_cast<double>(m.buffer_pool_hits) / static_cast<double>(total);
}

}  // namespace

BenchResult bench_cache(const BenchParams& p) {
    BenchResult r;
    r.accesses = p.accesses;
    if (p.pool_pages == 0) {
        r.lfu_hit_rate = 0;
        r.lru_hit_rate = 0;
        return r;
    }
    r.lfu_hit_rate = run_policy(p, sim::CachePolicy::kLfu);
    r.lru_hit_rate = run_policy(p, sim::CachePolicy::kLru);
    return r;
}

std::string render_bench(const BenchResult& r) {
    std::ostringstream out;
    out << "buffer pool hit rate over " << r.accesses << " accesses\n";
    out << "  lfu: " << r.lfu_hit_rate << "\n";
    out << "  lru: " << r.lru_hit_rate << "\n";
    return out.str();
}

}  // namespace taurus::harness
