#pragma once

#include "taurus/core/types.hpp"

namespace taurus::core {

enum class ApplyStatus : uint8_t {
    kOk = 0,
    kVersionOrderViolation,  // record.lsn <= base.version or page mismatch
    kDeltaOutOfBounds,       // delta range exceeds the page
};

// Applies one record to a base image, producing the next version. Pure and
// deterministic; identical inputs yield byte-identical outputs.
ApplyStatus apply_record(const PageImage& base, const LogRecord& rec, const PageConfig& cfg,
                         PageImage& out);

// In-place variant used on hot paths.
ApplyStatus apply_record_inplace(PageImage& page, const LogRecord& rec, const PageConfig& cfg);

}  // namespace taurus::core
