#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace taurus::core {

using Bytes = std::vector<uint8_t>;
using BytesView = std::span<const uint8_t>;

inline void put_u8(Bytes& out, uint8_t v) { out.push_back(v); }

inline void put_u16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_u64(Bytes& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_bytes(Bytes& out, BytesView v) { out.insert(out.end(), v.begin(), v.end()); }

// Cursor over a byte span. Reads past the end set ok=false and return zeros
// instead of touching out-of-bounds memory; callers check ok once at the end.
struct ByteReader {
    BytesView data;
    size_t pos = 0;
    bool ok = true;

    explicit ByteReader(BytesView d) : data(d) {}

    size_t remaining() const { return ok ? data.size() - pos : 0; }

    uint8_t u8() {
        if (pos + 1 > data.size()) { ok = false; return 0; }
        return data[pos++];
    }
    uint16_t u16() {
        if (pos + 2 > data.size()) { ok = false; return 0; }
        uint16_t v = static_cast<uint16_t>(data[pos]) | static_cast<uint16_t>(data[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    uint32_t u32() {
        if (pos + 4 > data.size()) { ok = false; return 0; }
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        if (pos + 8 > data.size()) { ok = false; return 0; }
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    Bytes bytes(size_t n) {
        if (pos + n > data.size()) { ok = false; return {}; }
        Bytes v(data.begin() + pos, data.begin() + pos + n);
        pos += n;
        return v;
    }
    void skip(size_t n) {
        if (pos + n > data.size()) { ok = false; return; }
        pos += n;
    }
};

}  // namespace taurus::core
