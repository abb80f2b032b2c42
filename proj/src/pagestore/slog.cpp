#include "taurus/pagestore/slog.hpp"

namespace taurus::pagestore {

using namespace core;

Bytes encode_assign_block(const AssignBlock& b) {
    Bytes body;
    put_u32(body, b.slice.database);
    put_u32(body, b.slice.index);
    for (auto n : b.replicas) put_u32(body, n);
    put_u32(body, b.source);
    put_u8(body, b.mode);
    Bytes out;
    encode_block(kBlockAssign, body, out);
    return out;
}

std::optional<AssignBlock> decode_assign_body(BytesView body) {
    ByteReader r(body);
    AssignBlock b;
    b.slice.database = r.u32();
    b.slice.index = r.u32();
    for (auto& n : b.replicas) n = r.u32();
    b.source = r.u32();
    b.mode = r.u8();
    if (!r.ok) return std::nullopt;
    return b;
}

Bytes encode_fragment_block(const FragmentBlock& b) {
    Bytes body;
    put_u64(body, b.seq);
    put_u64(body, b.cover_lo);
    put_u64(body, b.cover_hi);
    put_u32(body, static_cast<uint32_t>(b.records.size()));
    for (const auto& rec : b.records) encode_log_record(rec, body);
    Bytes out;
    encode_block(kBlockFragment, body, out);
    return out;
}

std::optional<FragmentBlock> decode_fragment_body(BytesView body) {
    ByteReader r(body);
    FragmentBlock b;
    b.seq = r.u64();
    b.cover_lo = r.u64();
    b.cover_hi = r.u64();
    uint32_t n = r.u32();
    if (!r.ok) return std::nullopt;
    size_t pos = kFragmentBodyHeader;
    for (uint32_t i = 0; i < n; ++i) {
        DecodeResult res = decode_log_record(body.subspan(pos));
        if (res.status != DecodeStatus::kOk) return std::nullopt;
        b.records.push_back(std::move(res.record));
        pos += res.consumed;
    }
    return b;
}

Bytes encode_page_block(const PageBlock& b) {
    Bytes body;
    put_u64(body, b.page);
    put_u64(body, b.version);
    put_bytes(body, b.bytes);
    Bytes out;
    encode_block(kBlockPage, body, out);
    return out;
}

std::optional<PageBlock> decode_page_body(BytesView body) {
    ByteReader r(body);
    PageBlock b;
    b.page = r.u64();
    b.version = r.u64();
    if (!r.ok || body.size() < 16) return std::nullopt;
    b.bytes.assign(body.begin() + 16, body.end());
    return b;
}

Bytes encode_rebuild_block(const RebuildBlock& b) {
    Bytes body;
    put_u64(body, b.persistent);
    put_u64(body, b.last_seq);
    put_u64(body, b.recycle);
    put_u32(body, static_cast<uint32_t>(b.coverage.size()));
    for (const auto& iv : b.coverage) {
        put_u64(body, iv.lo);
        put_u64(body, iv.hi);
    }
    Bytes out;
    encode_block(kBlockRebuild, body, out);
    return out;
}

std::optional<RebuildBlock> decode_rebuild_body(BytesView body) {
    ByteReader r(body);
    RebuildBlock b;
    b.persistent = r.u64();
    b.last_seq = r.u64();
    b.recycle = r.u64();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        LsnRange iv;
        iv.lo = r.u64();
        iv.hi = r.u64();
        b.coverage.push_back(iv);
    }
    if (!r.ok) return std::nullopt;
    return b;
}

}  // namespace taurus::pagestore
