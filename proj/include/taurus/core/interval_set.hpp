#pragma once

#include <map>
#include <vector>

#include "taurus/core/types.hpp"

namespace taurus::core {

// Set of LSNs kept as disjoint inclusive intervals. Used for per-slice
// coverage tracking (which LSN stretches a replica provably has every
// record of) and for gap computation.
class IntervalSet {
public:
    void add(Lsn lo, Lsn hi);
    void add(const LsnRange& r) { add(r.lo, r.hi); }

    bool contains(Lsn x) const;
    bool contains_range(Lsn lo, Lsn hi) const;
    bool empty() const { return ivals_.empty(); }
    void clear() { ivals_.clear(); }

    // Largest L such that [1, L] is fully covered; 0 if 1 is not covered.
    Lsn prefix_end() const;

    // Largest covered LSN; 0 if empty.
    Lsn max_covered() const;

    // Maximal uncovered inclusive ranges between prefix_end() and
    // max_covered(), ascending. Empty when there are no holes.
    std::vector<LsnRange> holes() const;

    // Uncovered sub-ranges of [lo, hi], ascending.
    std::vector<LsnRange> missing_in(Lsn lo, Lsn hi) const;

    std::vector<LsnRange> intervals() const;

    bool operator==(const IntervalSet&) const = default;

private:
    std::map<Lsn, Lsn> ivals_;  // lo -> hi, disjoint, non-adjacent
};

}  // namespace taurus::core
