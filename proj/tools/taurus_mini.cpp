// Operator entry point: runs scenario scripts or generated workloads through
// the simulated cluster, prints the replication availability table, and
// compares buffer pool policies.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "taurus/availability/availability.hpp"
#include "taurus/harness/bench.hpp"
#include "taurus/harness/runner.hpp"
#include "taurus/harness/scenarios.hpp"

namespace {

uint64_t seed_or_env(uint64_t seed, bool seed_set, bool required, bool* ok) {
    *ok = true;
    if (seed_set) return seed;
    if (const char* env = std::getenv("TAURUS_MINI_SEED")) return std::strtoull(env, nullptr, 10);
    if (required) *ok = false;
    return 1;
}

bool parse_gen_params(const std::vector<std::string>& kvs, taurus::harness::GenParams& p,
                      std::string& err) {
    for (const std::string& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            err = "bad --gen token (expected key=value): " + kv;
            return false;
        }
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        // durations accept a trailing 's' (seconds)
        auto num = [&](bool seconds_ok) -> uint64_t {
            uint64_t mult = 1;
            std::string v = val;
            if (seconds_ok && !v.empty() && v.back() == 's') {
                v.pop_back();
                mult = 1000;
            }
            return std::strtoull(v.c_str(), nullptr, 10) * mult;
        };
        if (key == "pages") p.pages = num(false);
        else if (key == "dur") p.duration_ms = num(true);
        else if (key == "writeEvery") p.write_every_ms = num(true);
        else if (key == "reads") p.reads = num(false);
        else if (key == "groupMax") p.group_max = static_cast<uint32_t>(num(false));
        else if (key == "faultRate") p.fault_rate_per_s = std::strtod(val.c_str(), nullptr);
        else {
            err = "unknown --gen key: " + key;
            return false;
        }
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"taurus-mini: desk-scale log/page store cluster simulator"};
    app.require_subcommand(1);

    // ---- run
    auto* run = app.add_subcommand("run", "run a scenario script or generated workload");
    std::string scenario_path;
    std::vector<std::string> gen_kvs;
    std::string out_dir = "out";
    std::string profile = "test";
    uint64_t seed = 0;
    bool seed_set = false;
    int trace_detail = 0;
    bool observe_durability = false;
    run->add_option("--scenario", scenario_path, "scenario file, or a bundled name");
    run->add_option("--gen", gen_kvs, "generate a workload, key=value pairs")->expected(-1);
    run->add_option("--out", out_dir, "output directory (trace, metrics, audit, node files)");
    run->add_option("--profile", profile, "scale profile: test | prod");
    run->add_option("--seed", seed, "deterministic seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--trace-detail", trace_detail, "0 key events, 1 everything");
    run->add_flag("--observe-durability", observe_durability,
                  "report copy-count dips instead of failing on them");

    // ---- avail
    auto* avail = app.add_subcommand("avail", "replication availability table");
    std::vector<double> xs = {0.15, 0.05, 0.01};
    uint64_t trials = 100000;
    uint64_t avail_seed = 42;
    std::string csv_path;
    int pool_nodes = 100;
    avail->add_option("--x", xs, "node unavailability probabilities")->expected(-1);
    avail->add_option("--trials", trials, "Monte Carlo trials per cell (0 disables)");
    avail->add_option("--seed", avail_seed, "Monte Carlo seed");
    avail->add_option("--csv", csv_path, "also write the grid as CSV");
    avail->add_option("--pool", pool_nodes, "log store pool size for the taurus write model");

    // ---- bench-cache
    auto* bench = app.add_subcommand("bench-cache", "LFU vs LRU buffer pool hit rates");
    std::string policy = "both";
    taurus::harness::BenchParams bp;
    bool uniform = false;
    uint64_t bench_seed = 0;
    bool bench_seed_set = false;
    bench->add_option("--policy", policy, "lfu | lru | both (reported side by side)");
    bench->add_option("--pages", bp.pages, "distinct pages in the workload");
    bench->add_option("--pool-pages", bp.pool_pages, "buffer pool capacity in pages");
    bench->add_option("--accesses", bp.accesses, "number of accesses");
    bench->add_option("--zipf", bp.zipf_s, "zipf exponent");
    bench->add_flag("--uniform", uniform, "uniform access pattern");
    bench->add_option("--seed", bench_seed, "workload seed")->each([&](const std::string&) {
        bench_seed_set = true;
    });

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        bool gen_mode = !gen_kvs.empty();
        bool ok;
        uint64_t s = seed_or_env(seed, seed_set, /*required=*/gen_mode, &ok);
        if (!ok) {
            std::cerr << "error: --gen requires --seed (or TAURUS_MINI_SEED)\n";
            return 2;
        }
        taurus::harness::RunOptions opts;
        opts.spec.seed = s;
        opts.spec.cfg = profile == "prod" ? taurus::sim::StoreConfig::prod_profile()
                                          : taurus::sim::StoreConfig::test_profile();
        opts.spec.sim_cfg.trace_detail = trace_detail;
        opts.out_dir = out_dir;
        if (gen_mode) {
            taurus::harness::GenParams gp;
            gp.seed = s;
            std::string err;
            if (!parse_gen_params(gen_kvs, gp, err)) {
                std::cerr << "error: " << err << "\n";
                return 2;
            }
            gp.reads_on_replica = true;
            opts.script = taurus::harness::generate_scenario(gp);
            opts.random_read_lsn = true;
            opts.strict_durability = false;  // long-term faults + truncation may overlap
        } else {
            std::string text;
            try {
                text = taurus::harness::bundled_scenario(scenario_path);
            } catch (const std::out_of_range&) {
                std::ifstream in(scenario_path);
                if (!in) {
                    std::cerr << "error: cannot open scenario: " << scenario_path << "\n";
                    return 2;
                }
                std::ostringstream ss;
                ss << in.rdbuf();
                text = ss.str();
            }
            taurus::sim::ScenarioParseError perr;
            auto script = taurus::sim::parse_scenario(text, &perr);
            if (!script) {
                std::cerr << "scenario parse error at line " << perr.line << ": " << perr.message
                          << "\n";
                return 2;
            }
            opts.script = std::move(*script);
        }
        if (observe_durability) opts.strict_durability = false;
        taurus::harness::RunResult result = taurus::harness::run_scenario(opts);
        std::cout << "events done at t=" << result.end_time
                  << "ms, checks=" << result.checks_run
                  << ", trace_hash=" << std::hex << result.trace_hash << std::dec << "\n";
        std::cout << result.cluster->auditor->report();
        if (!result.ok) {
            std::cout << "FAIL: " << result.failures.front() << "\n";
            for (const auto& f : result.failures) std::cout << "  " << f << "\n";
            return 1;
        }
        std::cout << "PASS\n";
        return 0;
    }

    if (avail->parsed()) {
        taurus::avail::Table t = taurus::avail::build_table(xs, trials, avail_seed, pool_nodes);
        std::cout << taurus::avail::render_table_text(t);
        if (!csv_path.empty()) {
            std::ofstream f(csv_path);
            f << taurus::avail::render_table_csv(t);
        }
        return 0;
    }

    if (bench->parsed()) {
        if (policy != "lfu" && policy != "lru" && policy != "both") {
            std::cerr << "error: --policy must be lfu, lru or both\n";
            return 2;
        }
        bool ok;
        bp.seed = seed_or_env(bench_seed, bench_seed_set, false, &ok);
        if (uniform) bp.zipf_s = 0;
        taurus::harness::BenchResult r = taurus::harness::bench_cache(bp);
        std::cout << taurus::harness::render_bench(r);
        return 0;
    }
    return 0;
}
