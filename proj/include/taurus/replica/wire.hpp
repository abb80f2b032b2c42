#pragma once

#include <optional>
#include <vector>

#include "taurus/core/codec.hpp"
#include "taurus/logstore/plog.hpp"

namespace taurus::replica {

// Master -> read-replica message schema. Both message kinds are versioned,
// length-prefixed, CRC'd blocks (core block framing).

constexpr uint8_t kBlockMasterUpdate = 0x20;
constexpr uint8_t kBlockMasterSnapshot = 0x21;
constexpr uint8_t kWireVersion = 1;

struct LogExtent {
    logstore::PlogId plog;
    uint64_t off = 0;
    uint64_t len = 0;
};

// Incremental update: where the newest log bytes live, per-slice persistent
// LSNs (best replica), and the latest durable group boundary.
struct MasterUpdate {
    uint64_t seq = 0;
    uint64_t incarnation = 0;
    core::Lsn last_db_lsn = core::kNoLsn;
    core::Lsn last_boundary = core::kNoLsn;
    uint64_t commit_time_ms = 0;
    std::vector<LogExtent> extents;
    std::vector<std::pair<core::SliceId, core::Lsn>> slice_persistents;

    core::Bytes encode() const;
    static std::optional<MasterUpdate> decode(core::BytesView framed);
};

// Full-state answer to a registration / resync request. The replica starts
// reading the log after this point; its buffer pool starts empty.
struct MasterSnapshot {
    uint64_t seq = 0;
    uint64_t incarnation = 0;
    core::Lsn last_db_lsn = core::kNoLsn;
    core::Lsn last_boundary = core::kNoLsn;
    uint64_t commit_time_ms = 0;
    std::vector<std::pair<core::SliceId, core::Lsn>> slice_persistents;

    core::Bytes encode() const;
    static std::optional<MasterSnapshot> decode(core::BytesView framed);
};

}  // namespace taurus::replica
