#include "taurus/logstore/plog.hpp"

#include <cstdio>

namespace taurus::logstore {

std::string PlogId::hex() const {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(hi),
                  static_cast<unsigned long long>(lo));
    return buf;
}

void encode_plog_id(core::Bytes& out, const PlogId& id) {
    core::put_u64(out, id.hi);
    core::put_u64(out, id.lo);
}

PlogId decode_plog_id(core::ByteReader& r) {
    PlogId id;
    id.hi = r.u64();
    id.lo = r.u64();
    return id;
}

core::Bytes MetadataRecord::encode() const {
    core::Bytes body;
    core::put_u64(body, epoch);
    core::put_u64(body, db_persistent_lsn);
    core::put_u32(body, static_cast<uint32_t>(data_chain.size()));
    for (const auto& [id, range] : data_chain) {
        encode_plog_id(body, id);
        core::put_u64(body, range.lo);
        core::put_u64(body, range.hi);
    }
    core::Bytes out;
    core::encode_block(kBlockMetadata, body, out);
    return out;
}

std::optional<MetadataRecord> MetadataRecord::decode_body(core::BytesView body) {
    core::ByteReader r(body);
    MetadataRecord rec;
    rec.epoch = r.u64();
    rec.db_persistent_lsn = r.u64();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        PlogId id = decode_plog_id(r);
        core::LsnRange range;
        range.lo = r.u64();
        range.hi = r.u64();
        rec.data_chain.emplace_back(id, range);
    }
    if (!r.ok) return std::nullopt;
    return rec;
}

std::optional<MetadataRecord> last_valid_metadata(core::BytesView plog_bytes) {
    auto scan = core::scan_blocks(plog_bytes);
    for (auto it = scan.blocks.rbegin(); it != scan.blocks.rend(); ++it) {
        if (it->type != kBlockMetadata) continue;
        auto rec = MetadataRecord::decode_body(it->body);
        if (rec) return rec;
    }
    return std::nullopt;
}

}  // namespace taurus::logstore
