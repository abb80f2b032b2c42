#include "taurus/availability/availability.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "taurus/simnet/rng.hpp"

namespace taurus::avail {

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    double r = 1.0;
    for (int i = 0; i < k; ++i) {
        r *= static_cast<double>(n - i);
        r /= static_cast<double>(i + 1);
    }
    return r;
}

namespace {

double tail_prob(int n, int from, double x) {
    // P[#unavailable >= from] for n independent Bernoulli(x) nodes.
    double sum = 0.0;
    for (int i = from; i <= n; ++i)
        sum += binomial(n, i) * std::pow(x, i) * std::pow(1.0 - x, n - i);
    return sum;
}

}  // namespace

double p_write_exact(const QuorumConfig& cfg, double x) {
    return tail_prob(cfg.n, cfg.n - cfg.nw + 1, x);
}

double p_read_exact(const QuorumConfig& cfg, double x) {
    return tail_prob(cfg.n, cfg.n - cfg.nr + 1, x);
}

double p_taurus_write_exact(int pool_nodes, double x) {
    // Fails only when fewer than 3 nodes are healthy, i.e. >= pool-2 down.
    return tail_prob(pool_nodes, pool_nodes - 2, x);
}

double p_taurus_read_exact(double x) { return x * x * x; }

double p_approx_table1(const QuorumConfig& cfg, double x, Scheme scheme) {
    switch (scheme) {
        case Scheme::kQuorumWrite: {
            int i = cfg.n - cfg.nw + 1;
            return binomial(cfg.n, i) * std::pow(x, i);
        }
        case Scheme::kQuorumRead: {
            int i = cfg.n - cfg.nr + 1;
            return binomial(cfg.n, i) * std::pow(x, i);
        }
        case Scheme::kTaurusWrite:
            return 0.0;
        case Scheme::kTaurusRead:
            return x * x * x;
    }
    return 0.0;
}

namespace {

McResult finish(uint64_t failures, uint64_t trials) {
    McResult r;
    r.trials = trials;
    r.failures = failures;
    r.mean = static_cast<double>(failures) / static_cast<double>(trials);
    r.stderr_ = std::sqrt(r.mean * (1.0 - r.mean) / static_cast<double>(trials));
    return r;
}

}  // namespace

McResult monte_carlo_quorum_write(const QuorumConfig& cfg, double x, uint64_t trials,
                                  uint64_t seed) {
    sim::Rng rng(seed);
    uint64_t thr = sim::Rng::threshold_for(x);
    int need_down = cfg.n - cfg.nw + 1;
    uint64_t failures = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        int down = 0;
        for (int i = 0; i < cfg.n; ++i) down += rng.chance_u64(thr) ? 1 : 0;
        if (down >= need_down) ++failures;
    }
    return finish(failures, trials);
}

McResult monte_carlo_quorum_read(const QuorumConfig& cfg, double x, uint64_t trials,
                                 uint64_t seed) {
    QuorumConfig c = cfg;
    c.nw = cfg.nr;
    return monte_carlo_quorum_write(c, x, trials, seed);
}

McResult monte_carlo_taurus_write(int pool_nodes, double x, uint64_t trials, uint64_t seed) {
    sim::Rng rng(seed);
    uint64_t thr = sim::Rng::threshold_for(x);
    uint64_t failures = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        int healthy = 0;
        for (int i = 0; i < pool_nodes; ++i)
            if (!rng.chance_u64(thr)) ++healthy;
        if (healthy < 3) ++failures;
    }
    return finish(failures, trials);
}

McResult monte_carlo_taurus_read(double x, uint64_t trials, uint64_t seed) {
    sim::Rng rng(seed);
    uint64_t thr = sim::Rng::threshold_for(x);
    uint64_t failures = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        bool all_down = rng.chance_u64(thr) && rng.chance_u64(thr) && rng.chance_u64(thr);
        if (all_down) ++failures;
    }
    return finish(failures, trials);
}

std::string format_sig1(double v) {
    if (v == 0.0) return "0";
    int e = static_cast<int>(std::floor(std::log10(v)));
    double m = v / std::pow(10.0, e);
    int d = static_cast<int>(std::floor(m + 0.5 + 1e-9));  // round half up
    if (d >= 10) {
        d = 1;
        ++e;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%de%+03d", d, e);
    return buf;
}

Table build_table(const std::vector<double>& xs, uint64_t trials, uint64_t seed,
                  int pool_nodes) {
    Table t;
    t.xs = xs;
    t.rows = {
        {"N=6 NW=4 NR=3", "20x^3", "15x^4", {6, 4, 3}, false},
        {"N=3 NW=2 NR=2", "3x^2", "3x^2", {3, 2, 2}, false},
        {"N=3 NW=3 NR=1", "3x", "x^3", {3, 3, 1}, false},
        {"Taurus", "0", "x^3", {3, 3, 1}, true},
    };
    uint64_t s = seed;
    for (const TableRow& row : t.rows) {
        std::vector<std::pair<TableCell, TableCell>> cells;
        for (double x : xs) {
            TableCell w, r;
            if (row.taurus) {
                w.exact = p_taurus_write_exact(pool_nodes, x);
                w.approx = p_approx_table1(row.cfg, x, Scheme::kTaurusWrite);
                r.exact = p_taurus_read_exact(x);
                r.approx = p_approx_table1(row.cfg, x, Scheme::kTaurusRead);
                if (trials > 0) {
                    w.mc = monte_carlo_taurus_write(pool_nodes, x, trials, s ^ 0x9E37);
                    r.mc = monte_carlo_taurus_read(x, trials, s ^ 0x79B9);
                }
            } else {
                w.exact = p_write_exact(row.cfg, x);
                w.approx = p_approx_table1(row.cfg, x, Scheme::kQuorumWrite);
                r.exact = p_read_exact(row.cfg, x);
                r.approx = p_approx_table1(row.cfg, x, Scheme::kQuorumRead);
                if (trials > 0) {
                    w.mc = monte_carlo_quorum_write(row.cfg, x, trials, s ^ 0xF4A7);
                    r.mc = monte_carlo_quorum_read(row.cfg, x, trials, s ^ 0xC15F);
                }
            }
            ++s;
            cells.emplace_back(w, r);
        }
        t.cells.push_back(std::move(cells));
    }
    return t;
}

std::string render_table_text(const Table& t) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-16s %-8s %-8s", "Replication", "P(write)", "P(read)");
    out << buf;
    for (double x : t.xs) {
        std::snprintf(buf, sizeof(buf), " | x=%-4g W(apx/exact%s) R(apx/exact%s)", x,
                      t.cells[0][0].first.mc.trials ? "/mc" : "",
                      t.cells[0][0].first.mc.trials ? "/mc" : "");
        out << buf;
    }
    out << "\n";
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const TableRow& row = t.rows[i];
        std::snprintf(buf, sizeof(buf), "%-16s %-8s %-8s", row.label.c_str(),
                      row.write_formula.c_str(), row.read_formula.c_str());
        out << buf;
        for (size_t j = 0; j < t.xs.size(); ++j) {
            const auto& [w, r] = t.cells[i][j];
            std::string wmc = w.mc.trials ? "/" + format_sig1(w.mc.mean) : "";
            std::string rmc = r.mc.trials ? "/" + format_sig1(r.mc.mean) : "";
            std::snprintf(buf, sizeof(buf), " | W %s/%s%s R %s/%s%s",
                          format_sig1(w.approx).c_str(), format_sig1(w.exact).c_str(),
                          wmc.c_str(), format_sig1(r.approx).c_str(),
                          format_sig1(r.exact).c_str(), rmc.c_str());
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

std::string render_table_csv(const Table& t) {
    std::ostringstream out;
    out << "scheme,op,x,approx,exact,mc_mean,mc_stderr,mc_trials\n";
    for (size_t i = 0; i < t.rows.size(); ++i) {
        for (size_t j = 0; j < t.xs.size(); ++j) {
            const auto& [w, r] = t.cells[i][j];
            auto emit = [&](const char* op, const TableCell& c) {
                out << t.rows[i].label << ',' << op << ',' << t.xs[j] << ',' << c.approx << ','
                    << c.exact << ',' << c.mc.mean << ',' << c.mc.stderr_ << ',' << c.mc.trials
                    << "\n";
            };
            emit("write", w);
            emit("read", r);
        }
    }
    return out.str();
}

}  // namespace taurus::avail
