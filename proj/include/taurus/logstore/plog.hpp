#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "taurus/core/codec.hpp"
#include "taurus/core/types.hpp"
#include "taurus/simnet/ids.hpp"

namespace taurus::logstore {

// Opaque PLog identifier. 16 random bytes here, kept as two words.
struct PlogId {
    uint64_t hi = 0;
    uint64_t lo = 0;

    auto operator<=>(const PlogId&) const = default;
    bool is_null() const { return hi == 0 && lo == 0; }
    std::string hex() const;
    std::string file_name() const { return hex() + ".plog"; }
};

enum class PlogKind : uint8_t { kData = 1, kMetadata = 2 };

// Client-side view of one PLog: where its replicas live, how much of it has
// been acknowledged, and which LSNs it holds.
struct PlogInfo {
    PlogId id;
    PlogKind kind = PlogKind::kData;
    std::vector<sim::NodeId> replicas;  // exactly 3 distinct nodes
    bool sealed = false;
    uint64_t acked_len = 0;       // bytes acknowledged by all three replicas
    core::LsnRange lsn_range{};   // of acknowledged records (data plogs)
};

// Snapshot of database log metadata. Written as one atomic append to the
// metadata PLog; always a full snapshot so recovery only needs the last
// valid record.
struct MetadataRecord {
    uint64_t epoch = 0;  // strictly increases per metadata write
    core::Lsn db_persistent_lsn = core::kNoLsn;
    std::vector<std::pair<PlogId, core::LsnRange>> data_chain;

    core::Bytes encode() const;  // block-framed (length, type, body, crc)
    static std::optional<MetadataRecord> decode_body(core::BytesView body);
};

constexpr uint8_t kBlockMetadata = 0x10;

// Scans a metadata PLog image and returns the last fully-valid record, if
// any. Torn tails are ignored.
std::optional<MetadataRecord> last_valid_metadata(core::BytesView plog_bytes);

void encode_plog_id(core::Bytes& out, const PlogId& id);
PlogId decode_plog_id(core::ByteReader& r);

}  // namespace taurus::logstore
