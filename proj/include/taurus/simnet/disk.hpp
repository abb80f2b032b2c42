#pragma once

#include <map>
#include <string>
#include <vector>

#include "taurus/core/bytes.hpp"

namespace taurus::sim {

// Shadow write checker shared by all simulated disks: records every write
// and flags any byte offset written twice within the same file generation.
// Storage in this system is strictly append-only, so the expected count of
// overwrite violations for any run is zero.
class AppendAudit {
public:
    void on_write(const std::string& file, uint64_t generation, uint64_t offset, uint64_t len,
                  uint64_t watermark);
    void on_read(bool from_disk) { from_disk ? ++disk_reads_ : ++cache_reads_; }

    uint64_t overwrite_violations() const { return violations_; }
    const std::vector<std::string>& violation_log() const { return log_; }
    uint64_t disk_reads() const { return disk_reads_; }

private:
    uint64_t violations_ = 0;
    uint64_t disk_reads_ = 0;
    uint64_t cache_reads_ = 0;
    std::vector<std::string> log_;
};

// An in-memory durable file. Survives node crashes; destroyed only when the
// node is removed from the cluster or the file is deleted.
class SimFile {
public:
    SimFile(std::string name, uint64_t generation, AppendAudit* audit)
        : name_(std::move(name)), generation_(generation), audit_(audit) {}

    uint64_t size() const { return data_.size(); }
    uint64_t append(core::BytesView b);  // returns the offset written at
    core::Bytes read(uint64_t off, uint64_t len) const;
    core::BytesView view() const { return data_; }

private:
    void write_at(uint64_t off, core::BytesView b);

    std::string name_;
    uint64_t generation_;
    AppendAudit* audit_;
    core::Bytes data_;
};

class SimDisk {
public:
    SimDisk() = default;
    SimDisk(std::string node_name, AppendAudit* audit)
        : node_name_(std::move(node_name)), audit_(audit) {}

    bool exists(const std::string& name) const { return files_.count(name) > 0; }
    SimFile& create(const std::string& name);  // creating over an existing file is a bug
    SimFile& open(const std::string& name);
    const SimFile* find(const std::string& name) const;
    SimFile* find(const std::string& name);
    void remove(const std::string& name);
    std::vector<std::string> list() const;
    void wipe() { files_.clear(); }

private:
    std::string node_name_;
    AppendAudit* audit_ = nullptr;
    uint64_t next_generation_ = 1;
    std::map<std::string, SimFile> files_;
};

}  // namespace taurus::sim
