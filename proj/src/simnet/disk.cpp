#include "taurus/simnet/disk.hpp"

#include <cassert>
#include <cstdio>

namespace taurus::sim {

void AppendAudit::on_write(const std::string& file, uint64_t generation, uint64_t offset,
                           uint64_t len, uint64_t watermark) {
    if (offset < watermark && len > 0) {
        ++violations_;
        if (log_.size() < 64) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "overwrite: %s gen=%llu off=%llu len=%llu watermark=%llu",
                          file.c_str(), static_cast<unsigned long long>(generation),
                          static_cast<unsigned long long>(offset), static_cast<unsigned long long>(len),
                          static_cast<unsigned long long>(watermark));
            log_.emplace_back(buf);
        }
    }
}

uint64_t SimFile::append(core::BytesView b) {
    uint64_t off = data_.size();
    write_at(off, b);
    return off;
}

void SimFile::write_at(uint64_t off, core::BytesView b) {
    if (audit_) audit_->on_write(name_, generation_, off, b.size(), data_.size());
    if (off + b.size() > data_.size()) data_.resize(off + b.size());
    std::copy(b.begin(), b.end(), data_.begin() + off);
}

core::Bytes SimFile::read(uint64_t off, uint64_t len) const {
    assert(off + len <= data_.size());
    if (audit_) const_cast<AppendAudit*>(audit_)->on_read(true);
    return core::Bytes(data_.begin() + off, data_.begin() + off + len);
}

SimFile& SimDisk::create(const std::string& name) {
    assert(!exists(name));
    auto [it, inserted] =
        files_.emplace(name, SimFile(node_name_ + "/" + name, next_generation_++, audit_));
    (void)inserted;
    return it->second;
}

SimFile& SimDisk::open(const std::string& name) {
    auto it = files_.find(name);
    assert(it != files_.end());
    return it->second;
}

const SimFile* SimDisk::find(const std::string& name) const {
    auto it = files_.find(name);
    return it == files_.end() ? nullptr : &it->second;
}

SimFile* SimDisk::find(const std::string& name) {
    auto it = files_.find(name);
    return it == files_.end() ? nullptr : &it->second;
}

void SimDisk::remove(const std::string& name) { files_.erase(name); }

std::vector<std::string> SimDisk::list() const {
    std::vector<std::string> out;
    out.reserve(files_.size());
    for (const auto& [k, v] : files_) out.push_back(k);
    return out;
}

}  // namespace taurus::sim
