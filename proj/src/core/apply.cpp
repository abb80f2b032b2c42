#include "taurus/core/apply.hpp"

#include <algorithm>

namespace taurus::core {

std::string to_string(const SliceId& s) {
    return "db" + std::to_string(s.database) + "/s" + std::to_string(s.index);
}

SliceId page_to_slice(PageId page, const PageConfig& cfg, uint32_t database) {
    SliceId s;
    s.database = database;
    s.index = static_cast<uint32_t>(page / cfg.pages_per_slice);
    return s;
}

PageImage zero_page(PageId page, const PageConfig& cfg) {
    PageImage img;
    img.page = page;
    img.version = kNoLsn;
    img.bytes.assign(cfg.page_size, 0);
    return img;
}

ApplyStatus apply_record_inplace(PageImage& page, const LogRecord& rec, const PageConfig& cfg) {
    if (rec.page != page.page || rec.lsn <= page.version) return ApplyStatus::kVersionOrderViolation;
    if (page.bytes.size() != cfg.page_size) page.bytes.resize(cfg.page_size, 0);
    switch (rec.kind) {
        case OpKind::kFullImage: {
            page.bytes.assign(cfg.page_size, 0);
            size_t n = std::min<size_t>(rec.payload.size(), cfg.page_size);
            std::copy_n(rec.payload.begin(), n, page.bytes.begin());
            break;
        }
        case OpKind::kDelta: {
            uint64_t end = static_cast<uint64_t>(rec.delta_offset) + rec.payload.size();
            if (end > cfg.page_size) return ApplyStatus::kDeltaOutOfBounds;
            std::copy(rec.payload.begin(), rec.payload.end(), page.bytes.begin() + rec.delta_offset);
            break;
        }
    }
    page.version = rec.lsn;
    return ApplyStatus::kOk;
}

ApplyStatus apply_record(const PageImage& base, const LogRecord& rec, const PageConfig& cfg,
                         PageImage& out) {
    out = base;
    return apply_record_inplace(out, rec, cfg);
}

}  // namespace taurus::core
