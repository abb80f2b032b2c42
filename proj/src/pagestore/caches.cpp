#include "taurus/pagestore/caches.hpp"

#include <cassert>

namespace taurus::pagestore {

void BufferPool::touch(PoolEntry& e) {
    e.last_use = ++tick_;
    ++e.freq;
    if (++accesses_ % aging_every_ == 0) {
        for (auto& [k, v] : entries_) v.freq /= 2;
    }
}

PoolEntry* BufferPool::lookup(const PoolKey& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        ++misses_;
        return nullptr;
    }
    ++hits_;
    touch(it->second);
    return &it->second;
}

PoolEntry* BufferPool::peek(const PoolKey& key) {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

const PoolEntry* BufferPool::peek(const PoolKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void BufferPool::put(const PoolKey& key, core::PageImage image, bool dirty) {
    if (capacity_ == 0) return;
    auto it = entries_.find(key);
    if (it != entries_.end()) {
        it->second.image = std::move(image);
        it->second.dirty = it->second.dirty || dirty;
        touch(it->second);
        return;
    }
    PoolEntry e;
    e.image = std::move(image);
    e.dirty = dirty;
    touch(e);
    entries_.emplace(key, std::move(e));
}

std::optional<PoolKey> BufferPool::pick_victim() const {
    const PoolKey* best = nullptr;
    const PoolEntry* best_e = nullptr;
    for (const auto& [k, e] : entries_) {
        bool better;
        if (!best_e) {
            better = true;
        } else if (policy_ == sim::CachePolicy::kLfu) {
            better = e.freq < best_e->freq ||
                     (e.freq == best_e->freq && e.last_use < best_e->last_use);
        } else {
            better = e.last_use < best_e->last_use;
        }
        if (better) {
            best = &k;
            best_e = &e;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

std::vector<PoolKey> BufferPool::dirty_keys() const {
    std::vector<PoolKey> out;
    for (const auto& [k, e] : entries_)
        if (e.dirty) out.push_back(k);
    return out;
}

void BufferPool::mark_clean(const PoolKey& key) {
    auto it = entries_.find(key);
    if (it != entries_.end()) it->second.dirty = false;
}

void LogCache::add_fragment(const core::SliceId& slice, std::vector<core::LogRecord> records) {
    if (records.empty()) return;
    Fragment f;
    f.id = next_id_++;
    f.slice = slice;
    f.live = records.size();
    for (const auto& r : records) f.keys.emplace_back(r.page, r.lsn);
    fragments_.push_back(std::move(f));
    auto it = std::prev(fragments_.end());
    for (auto& r : records) {
        owner_[{slice, r.page, r.lsn}] = it;
        core::Lsn lsn = r.lsn;
        core::PageId page = r.page;
        pending_[{slice, page}].emplace(lsn, std::move(r));
    }
}

void LogCache::spill(std::vector<RecordRef> refs) {
    if (!refs.empty()) spill_.push_back(std::move(refs));
}

std::optional<std::vector<RecordRef>> LogCache::pop_spill_if_space() {
    if (spill_.empty() || !has_space()) return std::nullopt;
    std::vector<RecordRef> refs = std::move(spill_.front());
    spill_.pop_front();
    return refs;
}

const core::LogRecord* LogCache::find(const core::SliceId& slice, core::PageId page,
                                      core::Lsn lsn) const {
    auto it = pending_.find({slice, page});
    if (it == pending_.end()) return nullptr;
    auto rit = it->second.find(lsn);
    return rit == it->second.end() ? nullptr : &rit->second;
}

const std::map<core::Lsn, core::LogRecord>* LogCache::pending(const core::SliceId& slice,
                                                              core::PageId page) const {
    auto it = pending_.find({slice, page});
    return it == pending_.end() ? nullptr : &it->second;
}

void LogCache::consume(const core::SliceId& slice, core::PageId page, core::Lsn lsn) {
    auto it = pending_.find({slice, page});
    if (it == pending_.end()) return;
    if (it->second.erase(lsn) == 0) return;
    if (it->second.empty()) pending_.erase(it);
    auto oit = owner_.find({slice, page, lsn});
    if (oit != owner_.end()) {
        assert(oit->second->live > 0);
        --oit->second->live;
        owner_.erase(oit);
    }
    drop_consumed_front();
}

void LogCache::drop_consumed_front() {
    while (!fragments_.empty() && fragments_.front().live == 0) fragments_.pop_front();
}

void LogCache::clear() {
    fragments_.clear();
    pending_.clear();
    owner_.clear();
    spill_.clear();
}

}  // namespace taurus::pagestore
