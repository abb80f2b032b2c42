#pragma once

#include <cstdint>

namespace taurus::sim {

using Time = uint64_t;  // logical milliseconds
using NodeId = uint32_t;

constexpr NodeId kNoNode = 0xFFFFFFFF;
constexpr Time kForever = ~0ULL;

}  // namespace taurus::sim
