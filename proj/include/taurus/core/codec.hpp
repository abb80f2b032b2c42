#pragma once

#include <optional>

#include "taurus/core/types.hpp"

namespace taurus::core {

// On-disk / wire encoding of a log record (little-endian):
//
//   magic     u32   0x54524C47 ("TRLG")
//   database  u32
//   slice     u32
//   page      u64
//   lsn       u64
//   kind      u8
//   flags     u8    bit 0: group_end
//   paylen    u32   payload length; for kDelta the payload starts with a
//                   u32 page offset followed by the delta bytes
//   payload   paylen bytes
//   crc       u32   CRC-32 over everything above
//
// The format is self-delimiting so PLog files and slice logs can be walked
// record by record.

constexpr uint32_t kRecordMagic = 0x54524C47;  // "TRLG" little-endian
constexpr size_t kRecordHeaderSize = 4 + 4 + 4 + 8 + 8 + 1 + 1 + 4;

enum class DecodeStatus : uint8_t {
    kOk = 0,
    kBadMagic,     // bytes do not start with a record
    kTruncated,    // clean end of log: fewer bytes than the record claims
    kBadChecksum,  // torn or corrupt tail
};

struct DecodeResult {
    DecodeStatus status = DecodeStatus::kOk;
    LogRecord record;
    size_t consumed = 0;  // bytes consumed on kOk
};

void encode_log_record(const LogRecord& rec, Bytes& out);
Bytes encode_log_record(const LogRecord& rec);
size_t encoded_record_size(const LogRecord& rec);

DecodeResult decode_log_record(BytesView data);

// Walks a byte stream of concatenated records. Stops cleanly at a truncated
// tail; surfaces kBadChecksum / kBadMagic as the final status.
struct LogScan {
    std::vector<LogRecord> records;
    DecodeStatus tail_status = DecodeStatus::kTruncated;
    size_t valid_bytes = 0;  // prefix length that parsed cleanly
};

LogScan scan_log(BytesView data);

// Generic length-prefixed CRC'd block, used by slice logs, metadata PLogs
// and master->replica messages:
//
//   len   u32   payload length
//   type  u8
//   body  len bytes
//   crc   u32   CRC-32 over type + body
struct Block {
    uint8_t type = 0;
    Bytes body;
};

void encode_block(uint8_t type, BytesView body, Bytes& out);

struct BlockScanResult {
    std::vector<Block> blocks;
    size_t valid_bytes = 0;
    bool clean = true;  // false if a corrupt (non-truncated) block terminated the scan
};

BlockScanResult scan_blocks(BytesView data);

}  // namespace taurus::core
