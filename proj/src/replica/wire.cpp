#include "taurus/replica/wire.hpp"

namespace taurus::replica {

using namespace core;

namespace {

void put_persistents(Bytes& body, const std::vector<std::pair<SliceId, Lsn>>& v) {
    put_u32(body, static_cast<uint32_t>(v.size()));
    for (const auto& [slice, lsn] : v) {
        put_u32(body, slice.database);
        put_u32(body, slice.index);
        put_u64(body, lsn);
    }
}

bool get_persistents(ByteReader& r, std::vector<std::pair<SliceId, Lsn>>& out) {
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n && r.ok; ++i) {
        SliceId s;
        s.database = r.u32();
        s.index = r.u32();
        Lsn lsn = r.u64();
        out.emplace_back(s, lsn);
    }
    return r.ok;
}

}  // namespace

Bytes MasterUpdate::encode() const {
    Bytes body;
    put_u8(body, kWireVersion);
    put_u64(body, seq);
    put_u64(body, incarnation);
    put_u64(body, last_db_lsn);
    put_u64(body, last_boundary);
    put_u64(body, commit_time_ms);
    put_u32(body, static_cast<uint32_t>(extents.size()));
    for (const auto& e : extents) {
        logstore::encode_plog_id(body, e.plog);
        put_u64(body, e.off);
        put_u64(body, e.len);
    }
    put_persistents(body, slice_persistents);
    Bytes out;
    encode_block(kBlockMasterUpdate, body, out);
    return out;
}

std::optional<MasterUpdate> MasterUpdate::decode(BytesView framed) {
    auto scan = scan_blocks(framed);
    if (scan.blocks.size() != 1 || scan.blocks[0].type != kBlockMasterUpdate) return std::nullopt;
    ByteReader r(scan.blocks[0].body);
    if (r.u8() != kWireVersion) return std::nullopt;
    MasterUpdate u;
    u.seq = r.u64();
    u.incarnation = r.u64();
    u.last_db_lsn = r.u64();
    u.last_boundary = r.u64();
    u.commit_time_ms = r.u64();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n && r.ok; ++i) {
        LogExtent e;
        e.plog = logstore::decode_plog_id(r);
        e.off = r.u64();
        e.len = r.u64();
        u.extents.push_back(e);
    }
    if (!get_persistents(r, u.slice_persistents)) return std::nullopt;
    return u;
}

Bytes MasterSnapshot::encode() const {
    Bytes body;
    put_u8(body, kWireVersion);
    put_u64(body, seq);
    put_u64(body, incarnation);
    put_u64(body, last_db_lsn);
    put_u64(body, last_boundary);
    put_u64(body, commit_time_ms);
    put_persistents(body, slice_persistents);
    Bytes out;
    encode_block(kBlockMasterSnapshot, body, out);
    return out;
}

std::optional<MasterSnapshot> MasterSnapshot::decode(BytesView framed) {
    auto scan = scan_blocks(framed);
    if (scan.blocks.size() != 1 || scan.blocks[0].type != kBlockMasterSnapshot)
        return std::nullopt;
    ByteReader r(scan.blocks[0].body);
    if (r.u8() != kWireVersion) return std::nullopt;
    MasterSnapshot s;
    s.seq = r.u64();
    s.incarnation = r.u64();
    s.last_db_lsn = r.u64();
    s.last_boundary = r.u64();
    s.commit_time_ms = r.u64();
    if (!get_persistents(r, s.slice_persistents)) return std::nullopt;
    return s;
}

}  // namespace taurus::replica
