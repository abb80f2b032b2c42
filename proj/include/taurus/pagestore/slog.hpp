#pragma once

#include <array>

#include "taurus/core/codec.hpp"
#include "taurus/core/interval_set.hpp"
#include "taurus/core/types.hpp"
#include "taurus/simnet/ids.hpp"

namespace taurus::pagestore {

// Slice log file: one append-only file per hosted slice replica,
// interleaving typed, length-prefixed, CRC'd blocks (core block framing).
//
//   kBlockAssign    replica set + rebuild source, written at assignment
//   kBlockFragment  received log records plus the coverage interval they
//                   assert; repair/gossip deliveries use seq 0
//   kBlockPage      one consolidated page version
//   kBlockRebuild   state adopted from the rebuild source (coverage,
//                   persistent, recycle); marks the rebuild complete

constexpr uint8_t kBlockAssign = 1;
constexpr uint8_t kBlockFragment = 2;
constexpr uint8_t kBlockPage = 3;
constexpr uint8_t kBlockRebuild = 4;

constexpr size_t kFragmentBodyHeader = 8 + 8 + 8 + 4;  // seq, cover_lo, cover_hi, count

struct AssignBlock {
    core::SliceId slice;
    std::array<sim::NodeId, 3> replicas{};
    sim::NodeId source = sim::kNoNode;
    uint8_t mode = 0;  // 0 normal, 1 rebuilding
};

struct FragmentBlock {
    uint64_t seq = 0;
    core::Lsn cover_lo = core::kNoLsn;
    core::Lsn cover_hi = core::kNoLsn;
    std::vector<core::LogRecord> records;
};

struct PageBlock {
    core::PageId page = 0;
    core::Lsn version = core::kNoLsn;
    core::Bytes bytes;
};

struct RebuildBlock {
    core::Lsn persistent = core::kNoLsn;
    uint64_t last_seq = 0;
    core::Lsn recycle = core::kNoLsn;
    std::vector<core::LsnRange> coverage;
};

core::Bytes encode_assign_block(const AssignBlock& b);
core::Bytes encode_fragment_block(const FragmentBlock& b);
core::Bytes encode_page_block(const PageBlock& b);
core::Bytes encode_rebuild_block(const RebuildBlock& b);

std::optional<AssignBlock> decode_assign_body(core::BytesView body);
std::optional<FragmentBlock> decode_fragment_body(core::BytesView body);
std::optional<PageBlock> decode_page_body(core::BytesView body);
std::optional<RebuildBlock> decode_rebuild_body(core::BytesView body);

}  // namespace taurus::pagestore
