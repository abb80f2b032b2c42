#include "taurus/core/interval_set.hpp"

namespace taurus::core {

void IntervalSet::add(Lsn lo, Lsn hi) {
    if (lo == kNoLsn || hi < lo) return;
    // Find the first interval that could merge with [lo, hi]: anything whose
    // hi >= lo-1 (adjacency merges too).
    auto it = ivals_.lower_bound(lo);
    if (it != ivals_.begin()) {
        auto prev = std::prev(it);
        if (prev->second + 1 >= lo) it = prev;
    }
    while (it != ivals_.end() && (hi == ~0ULL || it->first <= hi + 1)) {
        lo = std::min(lo, it->first);
        hi = std::max(hi, it->second);
        it = ivals_.erase(it);
    }
    ivals_[lo] = hi;
}

bool IntervalSet::contains(Lsn x) const { return contains_range(x, x); }

bool IntervalSet::contains_range(Lsn lo, Lsn hi) const {
    if (lo == kNoLsn || hi < lo) return true;
    auto it = ivals_.upper_bound(lo);
    if (it == ivals_.begin()) return false;
    --it;
    return it->first <= lo && hi <= it->second;
}

Lsn IntervalSet::prefix_end() const {
    if (ivals_.empty()) return kNoLsn;
    auto it = ivals_.begin();
    if (it->first > 1) return kNoLsn;
    return it->second;
}

Lsn IntervalSet::max_covered() const {
    if (ivals_.empty()) return kNoLsn;
    return ivals_.rbegin()->second;
}

std::vector<LsnRange> IntervalSet::holes() const {
    std::vector<LsnRange> out;
    Lsn last_hi = kNoLsn;
    bool first = true;
    for (const auto& [lo, hi] : ivals_) {
        if (first) {
            if (lo > 1) out.push_back({1, lo - 1});
            first = false;
        } else if (lo > last_hi + 1) {
            out.push_back({last_hi + 1, lo - 1});
        }
        last_hi = hi;
    }
    return out;
}

std::vector<LsnRange> IntervalSet::missing_in(Lsn lo, Lsn hi) const {
    std::vector<LsnRange> out;
    if (lo == kNoLsn) lo = 1;
    if (hi < lo) return out;
    Lsn cursor = lo;
    auto it = ivals_.upper_bound(lo);
    if (it != ivals_.begin()) {
        auto prev = std::prev(it);
        if (prev->second >= lo) {
            cursor = prev->second + 1;
        }
    }
    for (; cursor <= hi; ++it) {
        if (it == ivals_.end() || it->first > hi) {
            out.push_back({cursor, hi});
            break;
        }
        if (it->first > cursor) out.push_back({cursor, it->first - 1});
        if (it->second >= hi) break;
        cursor = it->second + 1;
    }
    return out;
}

std::vector<LsnRange> IntervalSet::intervals() const {
    std::vector<LsnRange> out;
    out.reserve(ivals_.size());
    for (const auto& [lo, hi] : ivals_) out.push_back({lo, hi});
    return out;
}

}  // namespace taurus::core
