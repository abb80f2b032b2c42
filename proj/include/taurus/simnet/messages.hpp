#pragma once

#include <array>
#include <variant>
#include <vector>

#include "taurus/core/types.hpp"
#include "taurus/logstore/plog.hpp"
#include "taurus/simnet/ids.hpp"

// Every cross-node message in the system. Requests carry a req_id chosen by
// the sender; responses echo it.

namespace taurus::msg {

using core::Bytes;
using core::LogFragment;
using core::LogRecord;
using core::Lsn;
using core::LsnRange;
using core::PageId;
using core::PageImage;
using core::SliceId;
using logstore::PlogId;
using logstore::PlogKind;
using sim::NodeId;

// ---------------------------------------------------------------- log store

struct LsCreatePlog {
    PlogId id;
    PlogKind kind = PlogKind::kData;
};
struct LsCreatePlogResp {
    PlogId id;
    bool ok = false;
};
struct LsAppend {
    uint64_t req_id = 0;
    PlogId id;
    Bytes data;
};
enum class LsAppendStatus : uint8_t { kOk = 0, kSealed, kUnknownPlog };
struct LsAppendResp {
    uint64_t req_id = 0;
    PlogId id;
    LsAppendStatus status = LsAppendStatus::kOk;
    uint64_t new_len = 0;
};
struct LsSeal {
    PlogId id;
};
struct LsRead {
    uint64_t req_id = 0;
    PlogId id;
    uint64_t off = 0;
    uint64_t len = 0;  // 0 means "to end of file"
};
struct LsReadResp {
    uint64_t req_id = 0;
    PlogId id;
    bool ok = false;
    uint64_t off = 0;
    Bytes data;
    bool from_cache = false;
};
struct LsDelete {
    PlogId id;
};
struct LsDeleteResp {
    PlogId id;
    bool existed = false;
};
// Re-replication after a long-term Log Store failure: cm tells the new host
// to copy a PLog replica from a surviving source.
struct LsCopyPlog {
    PlogId id;
    NodeId source = sim::kNoNode;
    bool sealed = true;
};
struct LsFetchPlog {
    uint64_t req_id = 0;
    PlogId id;
};
struct LsFetchPlogResp {
    uint64_t req_id = 0;
    PlogId id;
    bool ok = false;
    Bytes data;
};
struct LsCopyPlogDone {
    PlogId id;
    NodeId host = sim::kNoNode;
    bool ok = false;
};
// Sent by cm when a node returns from a short failure: plogs deleted or
// sealed while it was away.
struct LsReconcile {
    std::vector<PlogId> deleted;
    std::vector<PlogId> sealed;
};

// --------------------------------------------------------------- page store

enum class PsStatus : uint8_t {
    kOk = 0,
    kNotCaughtUp,
    kUnknownSlice,
    kBelowRecycleLsn,
    kRebuilding,
    kRecycleLsnRegression,
};
enum class ReplicaMode : uint8_t { kNormal = 0, kRebuilding = 1 };

struct PsWriteLogs {
    uint64_t req_id = 0;
    LogFragment frag;
};
struct PsWriteLogsResp {
    uint64_t req_id = 0;
    SliceId slice;
    PsStatus status = PsStatus::kOk;
    Lsn persistent = core::kNoLsn;
    bool throttle = false;
    ReplicaMode mode = ReplicaMode::kNormal;
};
struct PsReadPage {
    uint64_t req_id = 0;
    SliceId slice;
    PageId page = 0;
    Lsn lsn = core::kNoLsn;
};
struct PsReadPageResp {
    uint64_t req_id = 0;
    PsStatus status = PsStatus::kOk;
    PageImage image;
    Lsn persistent = core::kNoLsn;
};
struct PsSetRecycle {
    SliceId slice;
    Lsn lsn = core::kNoLsn;
};
struct PsSetRecycleResp {
    SliceId slice;
    PsStatus status = PsStatus::kOk;
};
// Persistent LSN / gap list query (GetPersistentLSN with optional gap
// detail).
struct PsGetState {
    uint64_t req_id = 0;
    SliceId slice;
    bool want_gaps = false;
};
struct PsGetStateResp {
    uint64_t req_id = 0;
    SliceId slice;
    PsStatus status = PsStatus::kOk;
    Lsn persistent = core::kNoLsn;
    Lsn coverage_end = core::kNoLsn;
    uint64_t last_seq = 0;
    ReplicaMode mode = ReplicaMode::kNormal;
    std::vector<LsnRange> gaps;
};
// Gossip: A sends its coverage; B replies with records A lacks plus B's own
// coverage; A then pushes back what B lacks.
struct RepairChunk {
    LsnRange range;  // every record of the slice in this range is included
    std::vector<LogRecord> records;
};
struct PsGossipPull {
    uint64_t req_id = 0;
    SliceId slice;
    std::vector<LsnRange> coverage;
};
struct PsGossipData {
    uint64_t req_id = 0;  // 0 for the final push leg (no reply expected)
    SliceId slice;
    std::vector<LsnRange> sender_coverage;
    std::vector<RepairChunk> chunks;
};
// SAL-triggered accelerated gossip for one slice.
struct PsGossipNow {
    SliceId slice;
};
// Replica replacement.
struct PsAssignSlice {
    SliceId slice;
    std::array<NodeId, 3> replicas{};
    NodeId source = sim::kNoNode;
};
struct PsFetchSlice {
    uint64_t req_id = 0;
    SliceId slice;
};
struct PsFetchSliceResp {
    uint64_t req_id = 0;
    SliceId slice;
    bool ok = false;
    Lsn persistent = core::kNoLsn;
    Lsn recycle = core::kNoLsn;
    uint64_t last_seq = 0;
    std::vector<LsnRange> coverage;
    std::vector<PageImage> pages;           // latest consolidated versions
    std::vector<LogRecord> pending_records; // records above the page versions
};
struct PsRebuildDone {
    SliceId slice;
    NodeId node = sim::kNoNode;
    bool ok = false;
};

// ----------------------------------------------------------- cluster manager

struct CmHeartbeat {
    uint64_t stored_bytes = 0;
    uint32_t hosted_slices = 0;
};
struct CmChooseLogNodes {
    uint64_t req_id = 0;
    uint32_t count = 3;
};
struct CmChooseLogNodesResp {
    uint64_t req_id = 0;
    bool ok = false;  // false: fewer healthy log nodes than requested
    std::vector<NodeId> nodes;
};
struct CmRegistrySet {
    uint32_t database = 0;
    PlogId metadata_plog;
};
struct CmRegistryGet {
    uint64_t req_id = 0;
    uint32_t database = 0;
};
struct CmRegistryGetResp {
    uint64_t req_id = 0;
    bool ok = false;
    PlogId metadata_plog;
};
struct CmPlogCreated {
    PlogId id;
    PlogKind kind = PlogKind::kData;
    std::vector<NodeId> replicas;
};
struct CmPlogSealed {
    PlogId id;
};
struct CmPlogDeleted {
    PlogId id;
};
struct CmPlogLocate {
    uint64_t req_id = 0;
    PlogId id;
};
struct CmPlogLocateResp {
    uint64_t req_id = 0;
    PlogId id;
    bool ok = false;
    std::vector<NodeId> replicas;
    bool sealed = false;
};
// cm -> master: slice replica set changed (replacement started or finished).
struct CmMembership {
    SliceId slice;
    std::array<NodeId, 3> replicas{};
    NodeId rebuilding = sim::kNoNode;  // kNoNode when all replicas are normal
    NodeId replaced = sim::kNoNode;    // node that left the replica set
};
// cm -> master: a read replica was declared down.
struct CmReplicaDown {
    NodeId replica = sim::kNoNode;
};
// master -> cm after a restart: slice memberships are re-learned from the
// cluster manager.
struct CmListSlices {
    uint64_t req_id = 0;
};
struct CmListSlicesResp {
    uint64_t req_id = 0;
    std::vector<CmMembership> slices;
};

// ------------------------------------------------------------- read replica

// Master -> replica metadata message; payload is the versioned,
// length-prefixed, CRC'd encoding (see replica/wire.hpp).
struct RepMasterMsg {
    Bytes encoded;
};
struct RepMinTv {
    NodeId replica = sim::kNoNode;
    Lsn min_tv = core::kNoLsn;
};
struct RepResync {
    uint64_t req_id = 0;
    NodeId replica = sim::kNoNode;
};
struct RepResyncResp {
    uint64_t req_id = 0;
    Bytes encoded;  // full snapshot, same framing as RepMasterMsg
};

using Body = std::variant<
    LsCreatePlog, LsCreatePlogResp, LsAppend, LsAppendResp, LsSeal, LsRead, LsReadResp, LsDelete,
    LsDeleteResp, LsCopyPlog, LsFetchPlog, LsFetchPlogResp, LsCopyPlogDone, LsReconcile,
    PsWriteLogs, PsWriteLogsResp, PsReadPage, PsReadPageResp, PsSetRecycle, PsSetRecycleResp,
    PsGetState, PsGetStateResp, PsGossipPull, PsGossipData, PsGossipNow, PsAssignSlice,
    PsFetchSlice, PsFetchSliceResp, PsRebuildDone, CmHeartbeat, CmChooseLogNodes,
    CmChooseLogNodesResp, CmRegistrySet, CmRegistryGet, CmRegistryGetResp, CmPlogCreated,
    CmPlogSealed, CmPlogDeleted, CmPlogLocate, CmPlogLocateResp, CmMembership, CmReplicaDown,
    RepMasterMsg, RepMinTv, RepResync, RepResyncResp, CmListSlices, CmListSlicesResp>;

struct Message {
    Body body;
};

const char* kind_name(const Message& m);

// Overload helper for std::visit dispatch.
template <class... Ts>
struct match : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
match(Ts...) -> match<Ts...>;

}  // namespace taurus::msg
