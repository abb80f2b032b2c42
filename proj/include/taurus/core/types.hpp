#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "taurus/core/bytes.hpp"

namespace taurus::core {

// Logical sequence number. Assigned densely per database, starting at 1;
// 0 is reserved to mean "none yet".
using Lsn = uint64_t;
constexpr Lsn kNoLsn = 0;

using PageId = uint64_t;

// A slice is a fixed-size, contiguous range of a database's pages.
struct SliceId {
    uint32_t database = 0;
    uint32_t index = 0;

    auto operator<=>(const SliceId&) const = default;
};

std::string to_string(const SliceId& s);

enum class OpKind : uint8_t {
    kFullImage = 1,  // payload replaces the whole page
    kDelta = 2,      // payload overwrites [offset, offset+len)
};

// One page mutation: the unit of durability and replay.
struct LogRecord {
    SliceId slice;
    PageId page = 0;
    Lsn lsn = kNoLsn;
    OpKind kind = OpKind::kFullImage;
    uint32_t delta_offset = 0;  // meaningful for kDelta only
    Bytes payload;
    bool group_end = false;  // last record of a group flush

    bool operator==(const LogRecord&) const = default;
};

// An inclusive LSN range.
struct LsnRange {
    Lsn lo = kNoLsn;
    Lsn hi = kNoLsn;

    auto operator<=>(const LsnRange&) const = default;
    bool empty() const { return lo > hi || hi == kNoLsn; }
};

// Per-slice write buffer shipped from SAL to the Page Stores hosting the
// slice. cover_lo..cover_hi asserts that `records` holds every record of
// the slice in that inclusive LSN range, which is what lets a receiver
// advance its persistent LSN across stretches owned by other slices.
struct LogFragment {
    SliceId slice;
    uint64_t sequence = 0;  // per-slice, increments by 1; 0 for repair fragments
    Lsn cover_lo = kNoLsn;  // first LSN asserted covered
    Lsn cover_hi = kNoLsn;  // last LSN asserted covered (>= max record lsn)
    std::vector<LogRecord> records;
    std::vector<Lsn> group_ends;  // group boundaries contained in this fragment

    Lsn max_record_lsn() const { return records.empty() ? kNoLsn : records.back().lsn; }
};

// Group of records flushed to Log Stores in one append. Always ends at a
// group boundary.
struct DatabaseLogBuffer {
    std::vector<LogRecord> records;
    Lsn last_lsn = kNoLsn;

    bool ends_on_boundary() const { return !records.empty() && records.back().group_end; }
};

// A materialized page version: the result of applying every record with
// lsn <= version for this page.
struct PageImage {
    PageId page = 0;
    Lsn version = kNoLsn;
    Bytes bytes;

    bool operator==(const PageImage&) const = default;
};

struct PageConfig {
    uint32_t page_size = 8192;
    uint64_t pages_per_slice = 1024;
};

// Maps a page to the slice that owns it: floor division over the page id
// space, so slices cover disjoint contiguous ranges.
SliceId page_to_slice(PageId page, const PageConfig& cfg, uint32_t database = 0);

PageImage zero_page(PageId page, const PageConfig& cfg);

}  // namespace taurus::core
