#include "taurus/harness/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace taurus::harness {

using core::Lsn;
using core::PageId;
using core::SliceId;
using sim::NodeId;
using sim::ScenarioEvent;

namespace {

void fail(std::vector<std::string>& failures, const std::string& msg) {
    failures.push_back(msg);
}

}  // namespace

bool slices_converged(Cluster& c, std::vector<std::string>* failures) {
    bool ok = true;
    for (const SliceId& slice : c.all_slices()) {
        auto live = c.live_replicas(slice);
        if (live.size() < 2) continue;
        const auto* first = live[0]->replica(slice);
        for (size_t i = 1; i < live.size(); ++i) {
            const auto* r = live[i]->replica(slice);
            if (r->persistent != first->persistent) {
                ok = false;
                if (failures)
                    fail(*failures, "convergence: " + core::to_string(slice) +
                                        " persistent differs: " + std::to_string(first->persistent) +
                                        " vs " + std::to_string(r->persistent));
            }
            if (!r->coverage.holes().empty()) {
                ok = false;
                if (failures)
                    fail(*failures, "convergence: " + core::to_string(slice) + " replica on " +
                                        c.sim->name(live[i]->id()) + " has gaps");
            }
        }
        if (!first->coverage.holes().empty()) {
            ok = false;
            if (failures) fail(*failures, "convergence: first replica has gaps");
        }
        // Served pages must be identical across replicas at the common
        // persistent LSN.
        if (ok) {
            std::set<PageId> pages;
            for (auto* node : live)
                for (const auto& [page, pd] : node->replica(slice)->dir) pages.insert(page);
            for (PageId page : pages) {
                msg::PsReadPageResp a = live[0]->read_page_local(slice, page, first->persistent);
                for (size_t i = 1; i < live.size(); ++i) {
                    msg::PsReadPageResp b =
                        live[i]->read_page_local(slice, page, first->persistent);
                    if (a.status != b.status || !(a.image.bytes == b.image.bytes)) {
                        ok = false;
                        if (failures)
                            fail(*failures, "convergence: page " + std::to_string(page) +
                                                " differs across replicas of " +
                                                core::to_string(slice));
                    }
                }
            }
        }
    }
    return ok;
}

bool run_check(const std::string& name, Cluster& c, std::vector<std::string>& failures) {
    size_t before = failures.size();
    if (name == "durability") {
        if (c.auditor->strict_violations() > 0 || c.auditor->data_loss_events() > 0)
            fail(failures, "durability: " + std::to_string(c.auditor->strict_violations()) +
                               " strict violations, " +
                               std::to_string(c.auditor->data_loss_events()) + " losses");
    } else if (name == "convergence") {
        slices_converged(c, &failures);
    } else if (name == "oracle_pages") {
        for (const SliceId& slice : c.all_slices()) {
            for (auto* node : c.live_replicas(slice)) {
                const auto* rep = node->replica(slice);
                for (const auto& [page, pd] : rep->dir) {
                    msg::PsReadPageResp resp = node->read_page_local(slice, page, rep->persistent);
                    if (resp.status != msg::PsStatus::kOk) {
                        fail(failures, "oracle_pages: read refused on " + c.sim->name(node->id()) +
                                           " page " + std::to_string(page));
                        continue;
                    }
                    c.auditor->verify_read(page, rep->persistent, resp.image.bytes,
                                           "check@" + c.sim->name(node->id()));
                }
            }
        }
        if (c.auditor->read_mismatches() > 0)
            fail(failures, "oracle_pages: " + std::to_string(c.auditor->read_mismatches()) +
                               " mismatches");
    } else if (name == "replica_boundaries") {
        for (auto& r : c.replicas) {
            Lsn v = r->visible_lsn();
            if (v != core::kNoLsn && !c.auditor->is_group_boundary(v))
                fail(failures, "replica visible lsn " + std::to_string(v) + " is not a boundary");
        }
    } else if (name == "atomic_pair") {
        if (!c.replicas.empty()) {
            replica::ReplicaNode* r = c.replicas[0].get();
            Auditor* auditor = c.auditor.get();
            auto* fl = &failures;
            r->read_pages_op({0, 1}, [auditor, fl](bool ok, const std::vector<core::PageImage>& imgs,
                                                   Lsn tv) {
                if (!ok) {
                    fail(*fl, "atomic_pair: read failed at tv " + std::to_string(tv));
                    return;
                }
                // Both pages are written exactly once per group, so the
                // number of applied records must match.
                size_t n0 = auditor->records_at_or_below(0, imgs[0].version);
                size_t n1 = auditor->records_at_or_below(1, imgs[1].version);
                if (n0 != n1)
                    fail(*fl, "atomic_pair: torn group at tv " + std::to_string(tv) + " (" +
                                  std::to_string(n0) + " vs " + std::to_string(n1) + ")");
                auditor->verify_read(0, tv, imgs[0].bytes, "atomic_pair");
                auditor->verify_read(1, tv, imgs[1].bytes, "atomic_pair");
            });
        }
    } else if (name == "recycle_safety") {
        for (auto& r : c.replicas) {
            if (r->metrics().below_recycle_errors > 0)
                fail(failures, "recycle_safety: replica hit BelowRecycleLsn");
        }
    } else if (name == "append_only") {
        if (c.sim->disk_audit().overwrite_violations() > 0)
            fail(failures, "append_only: " +
                               std::to_string(c.sim->disk_audit().overwrite_violations()) +
                               " overwrites");
    } else {
        fail(failures, "unknown CHECK: " + name);
    }
    return failures.size() == before;
}

std::optional<int> converge_with_gossip(Cluster& c, int max_rounds,
                                        std::vector<std::string>& failures) {
    for (int round = 1; round <= max_rounds; ++round) {
        for (const SliceId& slice : c.all_slices()) {
            for (auto* node : c.live_replicas(slice)) node->gossip_now(slice);
        }
        c.sim->run(c.sim->now() + 500);
        if (slices_converged(c, nullptr)) return round;
    }
    slices_converged(c, &failures);  // record what is still off
    return std::nullopt;
}

RunResult run_scenario(const RunOptions& opts) {
    RunResult result;
    result.cluster = build_cluster(opts.spec);
    Cluster& c = *result.cluster;
    c.auditor->set_mode(opts.strict_durability ? Auditor::Mode::kStrict : Auditor::Mode::kObserve);
    if (!c.start()) {
        result.failures.push_back("bootstrap: SAL never became ready");
        return result;
    }

    auto read_rng = std::make_shared<sim::Rng>(opts.spec.seed ^ 0xABCDEF);
    // Shared so that CHECK lambdas left in the event queue stay valid if the
    // caller keeps running the cluster after this function returns.
    auto failures_p = std::make_shared<std::vector<std::string>>();
    auto& failures = *failures_p;

    sim::Time base = c.sim->now();  // scripted times are offsets from "ready"
    for (const ScenarioEvent& ev : opts.script.events) {
        sim::Time when = base + ev.at;
        switch (ev.kind) {
            case ScenarioEvent::Kind::kWrite:
                c.sim->at(when, [&c, ev]() { c.master->write_page(ev.page, ev.len); });
                break;
            case ScenarioEvent::Kind::kBeginGroup:
                c.sim->at(when, [&c]() { c.master->begin_group(); });
                break;
            case ScenarioEvent::Kind::kEndGroup:
                c.sim->at(when, [&c]() { c.master->end_group(); });
                break;
            case ScenarioEvent::Kind::kCrash: {
                c.sim->at(when, [&c, ev, failures_p]() {
                    NodeId id = c.sim->find(ev.node_a);
                    if (id == sim::kNoNode || id == c.cm_id) {
                        failures_p->push_back("scenario: bad CRASH target " + ev.node_a);
                        return;
                    }
                    c.sim->crash(id, ev.duration);
                });
                break;
            }
            case ScenarioEvent::Kind::kPartition: {
                c.sim->at(when, [&c, ev, failures_p]() {
                    NodeId a = c.sim->find(ev.node_a);
                    NodeId b = c.sim->find(ev.node_b);
                    if (a == sim::kNoNode || b == sim::kNoNode) {
                        failures_p->push_back("scenario: bad PARTITION target");
                        return;
                    }
                    c.sim->partition(a, b, ev.duration);
                });
                break;
            }
            case ScenarioEvent::Kind::kRead: {
                bool random = opts.random_read_lsn;
                c.sim->at(when, [&c, ev, random, read_rng]() {
                    if (!ev.node_a.empty()) {
                        replica::ReplicaNode* r = c.replica_by_name(ev.node_a);
                        if (!r || !c.sim->is_up(c.sim->find(ev.node_a))) return;
                        Auditor* auditor = c.auditor.get();
                        PageId page = ev.page;
                        r->read_page_op(page, [auditor, page](msg::PsStatus st,
                                                              const core::PageImage& img, Lsn tv,
                                                              Lsn eff) {
                            if (st != msg::PsStatus::kOk) return;
                            // Equal by construction when the replica's
                            // visible-LSN rule holds: no records for the
                            // page between eff and tv.
                            auditor->verify_read(page, eff, img.bytes, "replica-eff");
                            auditor->verify_read(page, tv, img.bytes, "replica-tv");
                        });
                        return;
                    }
                    Lsn lsn = ev.lsn;
                    if (random && lsn == core::kNoLsn) {
                        SliceId slice =
                            core::page_to_slice(ev.page, c.spec.cfg.page, c.spec.database);
                        Lsn lo = std::max<Lsn>(1, c.master->sal().last_recycle_sent(slice));
                        Lsn hi = c.master->sal().flush_lsn(slice);
                        if (hi >= lo) lsn = read_rng->range(lo, hi);
                    }
                    c.master->read_op(ev.page, lsn);
                });
                break;
            }
            case ScenarioEvent::Kind::kCheck: {
                std::string name = ev.check_name;
                result.checks_run++;
                c.sim->at(when, [&c, name, failures_p]() { run_check(name, c, *failures_p); });
                break;
            }
        }
    }

    sim::Time end = base + opts.script.end_time() + opts.drain_ms;
    c.sim->run(end);
    result.end_time = c.sim->now();

    // Global exit audits.
    if (c.sim->disk_audit().overwrite_violations() > 0)
        failures.push_back("append-only: " +
                           std::to_string(c.sim->disk_audit().overwrite_violations()) +
                           " overwritten offsets");
    if (c.auditor->read_mismatches() > 0)
        failures.push_back("oracle: " + std::to_string(c.auditor->read_mismatches()) +
                           " read mismatches");
    if (c.auditor->data_loss_events() > 0)
        failures.push_back("durability: data loss events");
    if (opts.strict_durability && c.auditor->strict_violations() > 0)
        failures.push_back("durability: " + std::to_string(c.auditor->strict_violations()) +
                           " strict violations");
    for (const std::string& f : c.auditor->failures())
        failures.push_back("auditor: " + f);

    result.trace_hash = c.sim->trace_hash();
    result.failures = failures;
    result.ok = result.failures.empty();

    if (!opts.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(opts.out_dir);
        {
            std::ofstream trace(opts.out_dir + "/trace.log");
            for (const auto& line : c.sim->trace_lines()) trace << line << "\n";
        }
        {
            std::ofstream metrics(opts.out_dir + "/metrics.csv");
            metrics << metrics_csv(c);
        }
        {
            std::ofstream report(opts.out_dir + "/audit.txt");
            report << c.auditor->report();
            report << "result: " << (result.ok ? "PASS" : "FAIL") << "\n";
            for (const auto& f : result.failures) report << "  " << f << "\n";
        }
        // Durable node files, inspectable with the documented formats.
        for (size_t i = 0; i < c.sim->node_count(); ++i) {
            NodeId id = static_cast<NodeId>(i);
            if (c.sim->is_removed(id)) continue;
            auto& disk = c.sim->disk(id);
            auto names = disk.list();
            if (names.empty()) continue;
            fs::create_directories(opts.out_dir + "/" + c.sim->name(id));
            for (const std::string& name : names) {
                std::ofstream f(opts.out_dir + "/" + c.sim->name(id) + "/" + name,
                                std::ios::binary);
                auto view = disk.open(name).view();
                f.write(reinterpret_cast<const char*>(view.data()),
                        static_cast<std::streamsize>(view.size()));
            }
        }
    }
    return result;
}

sim::ScenarioScript generate_scenario(const GenParams& p) {
    sim::Rng rng(p.seed);
    sim::ScenarioScript script;
    auto push = [&script](ScenarioEvent ev) { script.events.push_back(std::move(ev)); };

    // Writes in small groups.
    sim::Time t = 10;
    uint64_t writes = 0;
    while (t < p.duration_ms) {
        uint32_t group = 1 + static_cast<uint32_t>(rng.below(p.group_max));
        ScenarioEvent b;
        b.kind = ScenarioEvent::Kind::kBeginGroup;
        b.at = t;
        push(b);
        for (uint32_t i = 0; i < group; ++i) {
            ScenarioEvent w;
            w.kind = ScenarioEvent::Kind::kWrite;
            w.at = t;
            w.page = rng.below(p.pages);
            w.len = 1 + rng.below(48);
            push(w);
            ++writes;
        }
        ScenarioEvent e;
        e.kind = ScenarioEvent::Kind::kEndGroup;
        e.at = t;
        push(e);
        t += p.write_every_ms * group;
    }

    // Reads at random times.
    for (uint64_t i = 0; i < p.reads; ++i) {
        ScenarioEvent r;
        r.kind = ScenarioEvent::Kind::kRead;
        r.at = 100 + rng.below(p.duration_ms);
        r.page = rng.below(p.pages);
        if (p.reads_on_replica && rng.chance(0.3)) r.node_a = "r1";
        push(r);
    }

    // Fault injection: crashes and partitions, short and long mixed.
    if (p.fault_rate_per_s > 0) {
        for (sim::Time sec = 1; sec * 1000 < p.duration_ms; ++sec) {
            if (!rng.chance(p.fault_rate_per_s)) continue;
            ScenarioEvent f;
            f.at = sec * 1000 + rng.below(1000);
            double pick = rng.unit();
            if (pick < 0.55) {
                f.kind = ScenarioEvent::Kind::kCrash;
                f.node_a = "ps" + std::to_string(1 + rng.below(6));
                bool long_term = rng.chance(0.25);
                f.duration = long_term ? 8000 + rng.below(6000) : 500 + rng.below(3000);
            } else if (pick < 0.75) {
                f.kind = ScenarioEvent::Kind::kCrash;
                f.node_a = "ls" + std::to_string(1 + rng.below(6));
                f.duration = 500 + rng.below(2500);  // short-term only
            } else if (pick < 0.85) {
                f.kind = ScenarioEvent::Kind::kCrash;
                f.node_a = "master";
                f.duration = 800 + rng.below(1500);
            } else {
                f.kind = ScenarioEvent::Kind::kPartition;
                f.node_a = "master";
                f.node_b = "ps" + std::to_string(1 + rng.below(6));
                f.duration = 300 + rng.below(1500);
            }
            push(f);
        }
    }

    std::stable_sort(script.events.begin(), script.events.end(),
                     [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.at < b.at; });
    return script;
}

std::string metrics_csv(Cluster& c) {
    std::ostringstream out;
    out << "time_ms,metric,node,value\n";
    sim::Time now = c.sim->now();
    auto row = [&](const std::string& metric, const std::string& node, uint64_t v) {
        out << now << ',' << metric << ',' << node << ',' << v << "\n";
    };
    const sal::SalMetrics& sm = c.master->sal().metrics();
    row("cv_lsn", "master", c.master->sal().cv_lsn());
    row("db_persistent_lsn", "master", c.master->sal().db_persistent_lsn());
    row("buffers_written", "master", sm.buffers_written);
    row("resent_records", "master", sm.resent_records);
    row("truncated_plogs", "master", sm.truncated_plogs);
    row("throttle_delays", "master", sm.throttle_delays);
    row("fragments_sent", "master", sm.fragments_sent);
    row("repair_a", "master", sm.repair_persistent_decrease);
    row("repair_b", "master", sm.repair_stall);
    for (auto& n : c.page_nodes) {
        if (c.sim->is_removed(n->id())) continue;
        const auto& m = n->metrics();
        std::string name = c.sim->name(n->id());
        row("buffer_pool_hits", name, m.buffer_pool_hits);
        row("buffer_pool_misses", name, m.buffer_pool_misses);
        row("log_cache_spills", name, m.log_cache_spills);
        row("disk_record_reads", name, m.disk_record_reads);
        row("gossip_records_exchanged", name, m.gossip_records_exchanged);
        row("pages_consolidated", name, m.pages_consolidated);
        row("pages_flushed", name, m.pages_flushed);
    }
    for (size_t i = 0; i < c.log_nodes.size(); ++i) {
        const auto& m = c.log_nodes[i]->metrics();
        std::string name = "ls" + std::to_string(i + 1);
        row("ls_appends", name, m.appends);
        row("ls_cache_hits", name, m.cache_hits);
        row("ls_disk_reads", name, m.disk_reads);
    }
    for (size_t i = 0; i < c.replicas.size(); ++i) {
        const auto& m = c.replicas[i]->metrics();
        std::string name = "r" + std::to_string(i + 1);
        row("replica_groups_applied", name, m.groups_applied);
        row("replica_lag_samples", name, m.lag_samples);
        row("replica_lag_total_ms", name, m.lag_total_ms);
        row("replica_lag_max_ms", name, m.lag_max_ms);
        row("replica_pool_hits", name, m.pool_hits);
        row("replica_store_reads", name, m.store_reads);
    }
    return out.str();
}

}  // namespace taurus::harness
