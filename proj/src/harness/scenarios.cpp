#include "taurus/harness/scenarios.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace taurus::harness {

namespace {

std::string make_fig3() {
    std::ostringstream s;
    // Write bursts across all four slices (16 pages per slice in the test
    // profile), small groups, then reads and the full audit set.
    for (int t = 0; t < 2000; t += 20) {
        int base = (t / 20) % 16;
        s << "AT " << t << " BEGIN_GROUP\n";
        s << "AT " << t << " WRITE page=" << base << " len=24\n";
        s << "AT " << t << " WRITE page=" << 16 + base << " len=24\n";
        s << "AT " << t << " WRITE page=" << 32 + base << " len=24\n";
        s << "AT " << t << " END_GROUP\n";
    }
    for (int t = 2200; t < 2600; t += 40) {
        s << "AT " << t << " READ page=" << (t / 40) % 48 << "\n";
    }
    s << "AT 3500 CHECK durability\n";
    s << "AT 3500 CHECK oracle_pages\n";
    s << "AT 3500 CHECK convergence\n";
    s << "AT 3500 CHECK append_only\n";
    return s.str();
}

std::string make_fig5a() {
    std::ostringstream s;
    s << "AT 0 WRITE page=0 len=16\n";           // record 1: all three replicas
    s << "AT 1000 CRASH node=ps3 FOR 2000\n";    // short-term outage
    s << "AT 1500 WRITE page=1 len=16\n";        // record 2: ps1+ps2 only
    // ps3 returns at 3000 and gossips immediately, copying record 2.
    s << "AT 5000 CHECK convergence\n";
    s << "AT 5000 CHECK durability\n";
    s << "AT 5000 CHECK oracle_pages\n";
    s << "AT 5000 CHECK append_only\n";
    return s.str();
}

std::string make_fig5b() {
    std::ostringstream s;
    s << "AT 0 WRITE page=0 len=16\n";          // record 1: everywhere
    s << "AT 1000 CRASH node=ps2 FOR 2500\n";
    s << "AT 1000 CRASH node=ps3 FOR 2500\n";
    s << "AT 1500 WRITE page=1 len=16\n";       // record 2: only ps1 acks
    s << "AT 2000 CRASH node=ps1 FOR 30000\n";  // long-term; replaced
    // Replacement copies from ps2/ps3 (which lack record 2) and reports a
    // lower persistent LSN; SAL rereads the log from the Log Stores and
    // resends record 2 to every replica.
    s << "AT 16000 CHECK convergence\n";
    s << "AT 16000 CHECK durability\n";
    s << "AT 16000 CHECK oracle_pages\n";
    s << "AT 16000 CHECK append_only\n";
    return s.str();
}

std::string make_fig5c() {
    std::ostringstream s;
    s << "AT 0 WRITE page=0 len=16\n";                 // record 1: everywhere
    s << "AT 1000 PARTITION master ps1 FOR 400\n";
    s << "AT 1100 WRITE page=1 len=16\n";              // record 2: ps2+ps3; hole on ps1
    s << "AT 2000 CRASH node=ps2 FOR 3000\n";
    s << "AT 2000 CRASH node=ps3 FOR 3000\n";
    s << "AT 2500 WRITE page=2 len=16\n";              // record 3: only ps1 stores it
    s << "AT 3200 CRASH node=ps1 FOR 30000\n";         // long-term; replaced
    // ps1's persistent LSN never reached 3 (hole at 2), so no replica
    // reports a decrease; the stalled persistent LSN below the flush LSN
    // triggers the gap query and record 3 is reread from the Log Stores.
    s << "AT 18000 CHECK convergence\n";
    s << "AT 18000 CHECK durability\n";
    s << "AT 18000 CHECK oracle_pages\n";
    s << "AT 18000 CHECK append_only\n";
    return s.str();
}

std::string make_truncation_then_crash() {
    std::ostringstream s;
    // Enough bytes to roll PLogs (64KB test limit), so truncation has
    // something to delete once everything is on all three replicas.
    for (int i = 0; i < 300; ++i) {
        int t = 10 + i * 10;
        s << "AT " << t << " WRITE page=" << (i % 64) << " len=200\n";
    }
    s << "AT 6000 CRASH node=master FOR 2000\n";
    for (int i = 0; i < 20; ++i) {
        int t = 9000 + i * 20;
        s << "AT " << t << " WRITE page=" << (i % 64) << " len=32\n";
    }
    for (int t = 10000; t < 10400; t += 40) s << "AT " << t << " READ page=" << (t % 64) << "\n";
    s << "AT 12000 CHECK durability\n";
    s << "AT 12000 CHECK oracle_pages\n";
    s << "AT 12000 CHECK convergence\n";
    s << "AT 12000 CHECK append_only\n";
    return s.str();
}

std::string make_replica_lag() {
    std::ostringstream s;
    // Pages 0 and 1 always change together in one group; a torn view on the
    // replica would be a physical-consistency violation.
    for (int t = 0; t < 20000; t += 20) {
        s << "AT " << t << " BEGIN_GROUP\n";
        s << "AT " << t << " WRITE page=0 len=24\n";
        s << "AT " << t << " WRITE page=1 len=24\n";
        s << "AT " << t << " END_GROUP\n";
        s << "AT " << t + 10 << " CHECK atomic_pair\n";
    }
    for (int t = 1000; t < 20000; t += 500)
        s << "AT " << t << " READ page=" << (t / 500) % 8 << " replica=r1\n";
    s << "AT 21000 CHECK replica_boundaries\n";
    s << "AT 21000 CHECK recycle_safety\n";
    s << "AT 21000 CHECK durability\n";
    s << "AT 21000 CHECK append_only\n";
    return s.str();
}

std::string make_quiescent_convergence() {
    std::ostringstream s;
    for (int i = 0; i < 400; ++i) {
        int t = 10 + i * 20;
        s << "AT " << t << " WRITE page=" << (i % 64) << " len=48\n";
    }
    // Short-term churn while writes continue.
    s << "AT 1000 CRASH node=ps2 FOR 1500\n";
    s << "AT 2000 PARTITION master ps4 FOR 1200\n";
    s << "AT 3500 CRASH node=ps5 FOR 1800\n";
    s << "AT 4500 PARTITION master ps1 FOR 900\n";
    s << "AT 5500 CRASH node=ps3 FOR 1200\n";
    // Quiescence from ~8s; the 10s gossip cadence plus restart gossip
    // converges all replicas well before the checks.
    s << "AT 22000 CHECK convergence\n";
    s << "AT 22000 CHECK oracle_pages\n";
    s << "AT 22000 CHECK durability\n";
    s << "AT 22000 CHECK append_only\n";
    return s.str();
}

std::map<std::string, std::string> make_all() {
    std::map<std::string, std::string> m;
    m["fig3_writepath"] = make_fig3();
    m["fig5a"] = make_fig5a();
    m["fig5b"] = make_fig5b();
    m["fig5c"] = make_fig5c();
    m["truncation_then_crash"] = make_truncation_then_crash();
    m["replica_lag"] = make_replica_lag();
    m["quiescent_convergence"] = make_quiescent_convergence();
    return m;
}

}  // namespace

const std::string& bundled_scenario(const std::string& name) {
    static const std::map<std::string, std::string> all = make_all();
    auto it = all.find(name);
    if (it == all.end()) throw std::out_of_range("unknown scenario: " + name);
    return it->second;
}

std::vector<std::string> bundled_scenario_names() {
    return {"fig3_writepath", "fig5a",       "fig5b",
            "fig5c",          "truncation_then_crash", "replica_lag",
            "quiescent_convergence"};
}

}  // namespace taurus::harness
