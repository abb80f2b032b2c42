#pragma once

#include <cstdint>

#include "taurus/core/bytes.hpp"

namespace taurus::core {

// CRC-32 (IEEE 802.3 polynomial, reflected form 0xEDB88320), the same
// function zlib computes. Used for every on-disk record and block so torn
// writes at a log tail are detectable.
uint32_t crc32(BytesView data, uint32_t seed = 0);

}  // namespace taurus::core
