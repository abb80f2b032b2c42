#include "taurus/sal/router.hpp"

#include <algorithm>

namespace taurus::sal {

using sim::NodeId;

std::vector<NodeId> ReadRouter::ordered_candidates(const core::SliceId& slice) {
    std::vector<NodeId> nodes = host_.candidates(slice);
    for (NodeId n : nodes) {
        if (!ewma_ms_.count(n)) {
            ewma_ms_[n] = static_cast<double>(cfg_.read_attempt_timeout_ms) / 4.0;
            tie_break_[n] = rng_.next();
        }
    }
    std::stable_sort(nodes.begin(), nodes.end(), [&](NodeId a, NodeId b) {
        if (ewma_ms_[a] != ewma_ms_[b]) return ewma_ms_[a] < ewma_ms_[b];
        return tie_break_[a] < tie_break_[b];
    });
    return nodes;
}

void ReadRouter::start_read(const core::SliceId& slice, core::PageId page, core::Lsn lsn,
                            Callback cb) {
    PendingRead rd;
    rd.id = next_id_++;
    rd.slice = slice;
    rd.page = page;
    rd.lsn = lsn;
    rd.order = ordered_candidates(slice);
    rd.cb = std::move(cb);
    ++reads_started_;
    uint64_t id = rd.id;
    reads_.emplace(id, std::move(rd));
    next_attempt(reads_.at(id));
}

void ReadRouter::next_attempt(PendingRead& rd) {
    if (rd.next >= rd.order.size()) {
        ++rd.rounds;
        if (host_.on_round_failed) host_.on_round_failed(rd.slice, rd.rounds);
        if (rd.rounds >= cfg_.read_max_rounds) {
            ++failed_;
            msg::PsReadPageResp none;
            auto cb = std::move(rd.cb);
            uint64_t id = rd.id;
            reads_.erase(id);
            cb(msg::PsStatus::kUnknownSlice, none);
            return;
        }
        // Retry a fresh round after a short delay.
        host_.sim->set_timer(host_.self, cfg_.read_retry_ms,
                             sim::Timer{host_.retry_timer_kind, rd.id});
        return;
    }
    NodeId target = rd.order[rd.next++];
    msg::PsReadPage req;
    req.req_id = next_id_++;
    req.slice = rd.slice;
    req.page = rd.page;
    req.lsn = rd.lsn;
    rd.outstanding_req = req.req_id;
    rd.outstanding_node = target;
    rd.sent_at = host_.sim->now();
    by_attempt_[req.req_id] = rd.id;
    ++attempts_;
    host_.sim->send(host_.self, target, msg::Message{req});
    host_.sim->set_timer(host_.self, cfg_.read_attempt_timeout_ms,
                         sim::Timer{host_.timeout_timer_kind, req.req_id});
}

bool ReadRouter::handle_response(NodeId from, const msg::PsReadPageResp& resp) {
    auto ait = by_attempt_.find(resp.req_id);
    if (ait == by_attempt_.end()) return false;
    uint64_t read_id = ait->second;
    by_attempt_.erase(ait);
    auto rit = reads_.find(read_id);
    if (rit == reads_.end()) return true;
    PendingRead& rd = rit->second;
    if (rd.outstanding_req != resp.req_id) return true;  // stale attempt
    rd.outstanding_req = 0;

    double lat = static_cast<double>(host_.sim->now() - rd.sent_at);
    double& e = ewma_ms_[from];
    e = 0.8 * e + 0.2 * lat;

    if (resp.status == msg::PsStatus::kOk) {
        auto cb = std::move(rd.cb);
        reads_.erase(read_id);
        cb(msg::PsStatus::kOk, resp);
        return true;
    }
    next_attempt(rd);
    return true;
}

bool ReadRouter::handle_timeout(uint64_t attempt_req) {
    auto ait = by_attempt_.find(attempt_req);
    if (ait == by_attempt_.end()) return false;
    uint64_t read_id = ait->second;
    by_attempt_.erase(ait);
    auto rit = reads_.find(read_id);
    if (rit == reads_.end()) return true;
    PendingRead& rd = rit->second;
    if (rd.outstanding_req != attempt_req) return true;
    rd.outstanding_req = 0;
    // Penalize the unresponsive replica so routing prefers others.
    ewma_ms_[rd.outstanding_node] =
        std::max(ewma_ms_[rd.outstanding_node], static_cast<double>(cfg_.read_attempt_timeout_ms));
    next_attempt(rd);
    return true;
}

bool ReadRouter::handle_retry(uint64_t read_id) {
    auto rit = reads_.find(read_id);
    if (rit == reads_.end()) return false;
    PendingRead& rd = rit->second;
    rd.order = ordered_candidates(rd.slice);
    rd.next = 0;
    next_attempt(rd);
    return true;
}

void ReadRouter::clear() {
    reads_.clear();
    by_attempt_.clear();
}

}  // namespace taurus::sal
