#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include "taurus/core/apply.hpp"
#include "taurus/core/codec.hpp"
#include "taurus/core/crc32.hpp"
#include "taurus/core/interval_set.hpp"
#include "taurus/simnet/rng.hpp"

using namespace taurus;
using core::Bytes;
using core::LogRecord;
using core::Lsn;

namespace {

LogRecord random_record(sim::Rng& rng, const core::PageConfig& cfg) {
    LogRecord rec;
    rec.slice.database = static_cast<uint32_t>(rng.below(4));
    rec.slice.index = static_cast<uint32_t>(rng.below(8));
    rec.page = rng.below(1024);
    rec.lsn = 1 + rng.below(1u << 20);
    rec.group_end = rng.chance(0.3);
    if (rng.chance(0.2)) {
        rec.kind = core::OpKind::kFullImage;
        rec.payload.resize(cfg.page_size);
    } else {
        rec.kind = core::OpKind::kDelta;
        uint64_t len = 1 + rng.below(64);
        rec.delta_offset = static_cast<uint32_t>(rng.below(cfg.page_size - len + 1));
        rec.payload.resize(len);
    }
    for (auto& b : rec.payload) b = static_cast<uint8_t>(rng.next());
    return rec;
}

}  // namespace

TEST_CASE("crc32 matches zlib") {
    sim::Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        Bytes data(rng.below(300));
        for (auto& b : data) b = static_cast<uint8_t>(rng.next());
        uint32_t ours = core::crc32(data);
        uint32_t theirs = static_cast<uint32_t>(
            ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
        CHECK(ours == theirs);
    }
}

TEST_CASE("record encoding round-trips") {
    core::PageConfig cfg;
    cfg.page_size = 512;
    LogRecord rec;
    rec.slice = {1, 0};
    rec.page = 7;
    rec.lsn = 42;
    rec.kind = core::OpKind::kDelta;
    rec.delta_offset = 0;
    rec.payload = {'a', 'b'};
    Bytes enc = core::encode_log_record(rec);
    // fixed header + payload (4-byte delta offset + data) + crc
    CHECK(enc.size() == core::kRecordHeaderSize + 4 + 2 + 4);
    auto dec = core::decode_log_record(enc);
    REQUIRE(dec.status == core::DecodeStatus::kOk);
    CHECK(dec.record == rec);
    CHECK(dec.consumed == enc.size());
    // byte-identical re-encode
    CHECK(core::encode_log_record(dec.record) == enc);

    SUBCASE("wire layout is pinned") {
        // magic "TRLG" little-endian
        CHECK(enc[0] == 0x47);
        CHECK(enc[1] == 0x4C);
        CHECK(enc[2] == 0x52);
        CHECK(enc[3] == 0x54);
    }
}

TEST_CASE("decode distinguishes BadMagic / Truncated / BadChecksum") {
    LogRecord rec;
    rec.slice = {1, 2};
    rec.page = 3;
    rec.lsn = 9;
    rec.kind = core::OpKind::kDelta;
    rec.delta_offset = 1;
    rec.payload = {1, 2, 3};
    Bytes enc = core::encode_log_record(rec);

    Bytes bad_magic = enc;
    bad_magic[0] ^= 0xFF;
    CHECK(core::decode_log_record(bad_magic).status == core::DecodeStatus::kBadMagic);

    Bytes flipped = enc;
    flipped.back() ^= 0x01;
    CHECK(core::decode_log_record(flipped).status == core::DecodeStatus::kBadChecksum);

    for (size_t cut : {size_t(1), core::kRecordHeaderSize - 1, enc.size() - 1}) {
        Bytes truncated(enc.begin(), enc.begin() + cut);
        CHECK(core::decode_log_record(truncated).status == core::DecodeStatus::kTruncated);
    }
}

TEST_CASE("1000 random records round-trip and their CRCs verify") {
    core::PageConfig cfg;
    cfg.page_size = 512;
    sim::Rng rng(42);
    Bytes stream;
    std::vector<LogRecord> originals;
    for (int i = 0; i < 1000; ++i) {
        LogRecord rec = random_record(rng, cfg);
        originals.push_back(rec);
        core::encode_log_record(rec, stream);
    }
    core::LogScan scan = core::scan_log(stream);
    CHECK(scan.valid_bytes == stream.size());
    REQUIRE(scan.records.size() == originals.size());
    for (size_t i = 0; i < originals.size(); ++i) CHECK(scan.records[i] == originals[i]);

    // Corrupting any single byte of the last record must not go unnoticed.
    Bytes torn = stream;
    torn[torn.size() - 5] ^= 0x10;
    core::LogScan scan2 = core::scan_log(torn);
    CHECK(scan2.records.size() == originals.size() - 1);
    CHECK(scan2.tail_status == core::DecodeStatus::kBadChecksum);
}

TEST_CASE("page_to_slice is floor division and partitions the page space") {
    core::PageConfig cfg;
    cfg.pages_per_slice = 1024;
    CHECK(core::page_to_slice(0, cfg).index == 0);
    CHECK(core::page_to_slice(1024, cfg).index == 1);
    CHECK(core::page_to_slice(5000, cfg).index == 4);
    sim::Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        core::PageId p = rng.below(1u << 20);
        auto s = core::page_to_slice(p, cfg);
        CHECK(p / cfg.pages_per_slice == s.index);
        CHECK(p >= s.index * cfg.pages_per_slice);
        CHECK(p < (s.index + 1) * cfg.pages_per_slice);
    }
}

TEST_CASE("apply_record semantics") {
    core::PageConfig cfg;
    cfg.page_size = 64;
    core::PageImage page = core::zero_page(5, cfg);

    LogRecord full;
    full.slice = {0, 0};
    full.page = 5;
    full.lsn = 5;
    full.kind = core::OpKind::kFullImage;
    full.payload.assign(cfg.page_size, 0xAB);
    REQUIRE(core::apply_record_inplace(page, full, cfg) == core::ApplyStatus::kOk);
    CHECK(page.version == 5);
    CHECK(page.bytes == Bytes(cfg.page_size, 0xAB));

    LogRecord delta;
    delta.slice = {0, 0};
    delta.page = 5;
    delta.lsn = 9;
    delta.kind = core::OpKind::kDelta;
    delta.delta_offset = 2;
    delta.payload = {'z', 'z'};
    core::PageImage next;
    REQUIRE(core::apply_record(page, delta, cfg, next) == core::ApplyStatus::kOk);
    CHECK(next.version == 9);
    for (uint32_t i = 0; i < cfg.page_size; ++i) {
        if (i == 2 || i == 3) CHECK(next.bytes[i] == 'z');
        else CHECK(next.bytes[i] == 0xAB);
    }

    SUBCASE("version order and bounds are enforced") {
        LogRecord stale = delta;
        stale.lsn = 9;  // == current version
        CHECK(core::apply_record_inplace(next, stale, cfg) ==
              core::ApplyStatus::kVersionOrderViolation);
        LogRecord oob = delta;
        oob.lsn = 11;
        oob.delta_offset = cfg.page_size - 1;
        CHECK(core::apply_record_inplace(next, oob, cfg) == core::ApplyStatus::kDeltaOutOfBounds);
    }
}

TEST_CASE("apply_record matches a naive byte-array replay oracle") {
    core::PageConfig cfg;
    cfg.page_size = 128;
    sim::Rng rng(11);
    for (int round = 0; round < 20; ++round) {
        // Oracle: plain byte array mutated directly.
        std::vector<uint8_t> oracle(cfg.page_size, 0);
        core::PageImage page = core::zero_page(1, cfg);
        Lsn lsn = 0;
        for (int i = 0; i < 50; ++i) {
            LogRecord rec;
            rec.slice = {0, 0};
            rec.page = 1;
            rec.lsn = ++lsn;
            if (rng.chance(0.15)) {
                rec.kind = core::OpKind::kFullImage;
                rec.payload.resize(cfg.page_size);
                for (auto& b : rec.payload) b = static_cast<uint8_t>(rng.next());
                oracle.assign(rec.payload.begin(), rec.payload.end());
            } else {
                rec.kind = core::OpKind::kDelta;
                uint64_t len = 1 + rng.below(16);
                rec.delta_offset = static_cast<uint32_t>(rng.below(cfg.page_size - len + 1));
                rec.payload.resize(len);
                for (auto& b : rec.payload) b = static_cast<uint8_t>(rng.next());
                std::copy(rec.payload.begin(), rec.payload.end(),
                          oracle.begin() + rec.delta_offset);
            }
            REQUIRE(core::apply_record_inplace(page, rec, cfg) == core::ApplyStatus::kOk);
            REQUIRE(page.bytes == oracle);
        }
        // Determinism: re-applying an identical input stream yields identical
        // bytes (checked implicitly by equality with the oracle each step).
        CHECK(page.version == lsn);
    }
}

TEST_CASE("interval set coverage math") {
    core::IntervalSet s;
    CHECK(s.prefix_end() == 0);
    s.add(1, 40);
    s.add(46, 77);
    CHECK(s.prefix_end() == 40);
    CHECK(s.max_covered() == 77);
    auto holes = s.holes();
    REQUIRE(holes.size() == 1);
    CHECK(holes[0].lo == 41);
    CHECK(holes[0].hi == 45);
    CHECK(!s.contains(41));
    CHECK(s.contains_range(50, 60));
    s.add(41, 45);  // close the hole
    CHECK(s.prefix_end() == 77);
    CHECK(s.holes().empty());
    CHECK(s.intervals().size() == 1);

    SUBCASE("missing_in") {
        core::IntervalSet t;
        t.add(5, 10);
        t.add(20, 30);
        auto miss = t.missing_in(1, 25);
        REQUIRE(miss.size() == 2);
        CHECK(miss[0] == core::LsnRange{1, 4});
        CHECK(miss[1] == core::LsnRange{11, 19});
        CHECK(t.missing_in(6, 9).empty());
        CHECK(t.missing_in(35, 40).size() == 1);
    }
}

TEST_CASE("interval set random equivalence with a bitset oracle") {
    sim::Rng rng(99);
    for (int round = 0; round < 50; ++round) {
        core::IntervalSet s;
        std::vector<bool> bits(200, false);
        for (int i = 0; i < 30; ++i) {
            Lsn lo = 1 + rng.below(180);
            Lsn hi = lo + rng.below(15);
            s.add(lo, hi);
            for (Lsn x = lo; x <= hi && x < 200; ++x) bits[x] = true;
        }
        // prefix
        Lsn prefix = 0;
        for (Lsn x = 1; x < 200 && bits[x]; ++x) prefix = x;
        CHECK(s.prefix_end() == prefix);
        for (Lsn x = 1; x < 200; ++x) CHECK(s.contains(x) == bits[x]);
        // holes oracle
        auto holes = s.holes();
        for (const auto& h : holes)
            for (Lsn x = h.lo; x <= h.hi && x < 200; ++x) CHECK(!bits[x]);
    }
}

TEST_CASE("block framing scans cleanly and stops at torn tails") {
    Bytes out;
    core::encode_block(7, Bytes{1, 2, 3}, out);
    core::encode_block(9, Bytes{}, out);
    size_t full = out.size();
    core::encode_block(7, Bytes{4, 5}, out);
    out.pop_back();  // torn final block
    auto scan = core::scan_blocks(out);
    REQUIRE(scan.blocks.size() == 2);
    CHECK(scan.blocks[0].type == 7);
    CHECK(scan.blocks[0].body == Bytes{1, 2, 3});
    CHECK(scan.blocks[1].type == 9);
    CHECK(scan.valid_bytes == full);
    CHECK(scan.clean);  // truncation, not corruption

    Bytes corrupt;
    core::encode_block(7, Bytes{1, 2, 3}, corrupt);
    corrupt[6] ^= 0xFF;
    auto scan2 = core::scan_blocks(corrupt);
    CHECK(scan2.blocks.empty());
    CHECK(!scan2.clean);
}
