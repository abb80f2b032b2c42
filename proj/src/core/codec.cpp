#include "taurus/core/codec.hpp"

#include "taurus/core/crc32.hpp"

namespace taurus::core {

namespace {
constexpr uint8_t kFlagGroupEnd = 0x01;
}

size_t encoded_record_size(const LogRecord& rec) {
    size_t paylen = rec.payload.size() + (rec.kind == OpKind::kDelta ? 4 : 0);
    return kRecordHeaderSize + paylen + 4;
}

void encode_log_record(const LogRecord& rec, Bytes& out) {
    size_t start = out.size();
    put_u32(out, kRecordMagic);
    put_u32(out, rec.slice.database);
    put_u32(out, rec.slice.index);
    put_u64(out, rec.page);
    put_u64(out, rec.lsn);
    put_u8(out, static_cast<uint8_t>(rec.kind));
    put_u8(out, rec.group_end ? kFlagGroupEnd : 0);
    uint32_t paylen = static_cast<uint32_t>(rec.payload.size()) + (rec.kind == OpKind::kDelta ? 4 : 0);
    put_u32(out, paylen);
    if (rec.kind == OpKind::kDelta) put_u32(out, rec.delta_offset);
    put_bytes(out, rec.payload);
    uint32_t crc = crc32(BytesView(out).subspan(start, out.size() - start));
    put_u32(out, crc);
}

Bytes encode_log_record(const LogRecord& rec) {
    Bytes out;
    out.reserve(encoded_record_size(rec));
    encode_log_record(rec, out);
    return out;
}

DecodeResult decode_log_record(BytesView data) {
    DecodeResult res;
    if (data.size() < kRecordHeaderSize) {
        res.status = DecodeStatus::kTruncated;
        return res;
    }
    ByteReader r(data);
    uint32_t magic = r.u32();
    if (magic != kRecordMagic) {
        res.status = DecodeStatus::kBadMagic;
        return res;
    }
    LogRecord rec;
    rec.slice.database = r.u32();
    rec.slice.index = r.u32();
    rec.page = r.u64();
    rec.lsn = r.u64();
    rec.kind = static_cast<OpKind>(r.u8());
    uint8_t flags = r.u8();
    rec.group_end = (flags & kFlagGroupEnd) != 0;
    uint32_t paylen = r.u32();

    size_t total = kRecordHeaderSize + paylen + 4;
    if (data.size() < total) {
        res.status = DecodeStatus::kTruncated;
        return res;
    }
    uint32_t expect = crc32(data.subspan(0, kRecordHeaderSize + paylen));
    ByteReader tail(data.subspan(kRecordHeaderSize + paylen, 4));
    if (tail.u32() != expect) {
        res.status = DecodeStatus::kBadChecksum;
        return res;
    }
    if (rec.kind == OpKind::kDelta) {
        if (paylen < 4) {
            res.status = DecodeStatus::kBadChecksum;
            return res;
        }
        ByteReader body(data.subspan(kRecordHeaderSize, paylen));
        rec.delta_offset = body.u32();
        rec.payload = body.bytes(paylen - 4);
    } else {
        ByteReader body(data.subspan(kRecordHeaderSize, paylen));
        rec.payload = body.bytes(paylen);
    }
    res.status = DecodeStatus::kOk;
    res.record = std::move(rec);
    res.consumed = total;
    return res;
}

LogScan scan_log(BytesView data) {
    LogScan scan;
    size_t pos = 0;
    while (pos < data.size()) {
        DecodeResult r = decode_log_record(data.subspan(pos));
        if (r.status != DecodeStatus::kOk) {
            scan.tail_status = r.status;
            scan.valid_bytes = pos;
            return scan;
        }
        scan.records.push_back(std::move(r.record));
        pos += r.consumed;
    }
    scan.tail_status = DecodeStatus::kTruncated;  // clean end
    scan.valid_bytes = pos;
    return scan;
}

void encode_block(uint8_t type, BytesView body, Bytes& out) {
    put_u32(out, static_cast<uint32_t>(body.size()));
    size_t crc_start = out.size();
    put_u8(out, type);
    put_bytes(out, body);
    put_u32(out, crc32(BytesView(out).subspan(crc_start)));
}

BlockScanResult scan_blocks(BytesView data) {
    BlockScanResult res;
    size_t pos = 0;
    while (pos < data.size()) {
        if (data.size() - pos < 4) break;  // truncated length prefix
        ByteReader r(data.subspan(pos, 4));
        uint32_t len = r.u32();
        size_t total = 4 + 1 + len + 4;
        if (data.size() - pos < total) break;  // truncated body
        uint32_t expect = crc32(data.subspan(pos + 4, 1 + len));
        ByteReader tail(data.subspan(pos + 4 + 1 + len, 4));
        if (tail.u32() != expect) {
            res.clean = false;
            break;
        }
        Block b;
        b.type = data[pos + 4];
        b.body.assign(data.begin() + pos + 5, data.begin() + pos + 5 + len);
        res.blocks.push_back(std::move(b));
        pos += total;
        res.valid_bytes = pos;
    }
    return res;
}

}  // namespace taurus::core
