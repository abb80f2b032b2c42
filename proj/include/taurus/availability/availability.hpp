#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace taurus::avail {

// Quorum replication: N replicas, writes need N_W replies, reads need N_R.
struct QuorumConfig {
    int n = 3;
    int nw = 2;
    int nr = 2;

    bool strongly_consistent() const { return nr + nw > n; }
};

enum class Scheme : uint8_t { kQuorumWrite, kQuorumRead, kTaurusWrite, kTaurusRead };

// Exact binomial coefficient in double (exact for the sizes used here).
double binomial(int n, int k);

// Probability a write cannot complete: sum over i = N-N_W+1 .. N of
// C(N,i) x^i (1-x)^(N-i).
double p_write_exact(const QuorumConfig& cfg, double x);
// Same for reads with N_R.
double p_read_exact(const QuorumConfig& cfg, double x);

// Lowest-exponent-term approximations used in the paper's comparison table:
// quorum write -> C(N, N-N_W+1) x^(N-N_W+1); quorum read analogous;
// taurus write -> 0 (any 3 healthy nodes of a large pool can take a write);
// taurus read -> x^3 (the 3 fixed replicas of a slice all down).
double p_approx_table1(const QuorumConfig& cfg, double x, Scheme scheme);

// Taurus closed forms.
double p_taurus_write_exact(int pool_nodes, double x);  // fewer than 3 healthy
double p_taurus_read_exact(double x);                   // x^3

struct McResult {
    double mean = 0;
    double stderr_ = 0;
    uint64_t trials = 0;
    uint64_t failures = 0;
};

McResult monte_carlo_quorum_write(const QuorumConfig& cfg, double x, uint64_t trials,
                                  uint64_t seed);
McResult monte_carlo_quorum_read(const QuorumConfig& cfg, double x, uint64_t trials,
                                 uint64_t seed);
// A write retries with any 3 healthy nodes; it fails only when fewer than 3
// of the pool are healthy.
McResult monte_carlo_taurus_write(int pool_nodes, double x, uint64_t trials, uint64_t seed);
// A read needs one of the 3 fixed replicas.
McResult monte_carlo_taurus_read(double x, uint64_t trials, uint64_t seed);

// One-significant-digit scientific notation, round half up: 0.0675 -> 7e-02.
std::string format_sig1(double v);

struct TableRow {
    std::string label;
    std::string write_formula;
    std::string read_formula;
    QuorumConfig cfg;          // quorum rows
    bool taurus = false;
};

struct TableCell {
    double exact = 0;
    double approx = 0;
    McResult mc;
};

struct Table {
    std::vector<double> xs;
    std::vector<TableRow> rows;
    // cells[row][x] -> {write, read}
    std::vector<std::vector<std::pair<TableCell, TableCell>>> cells;
};

// Builds the comparison grid for the given unavailability probabilities.
// trials == 0 skips the Monte Carlo column. pool_nodes sizes the taurus
// write pool.
Table build_table(const std::vector<double>& xs, uint64_t trials, uint64_t seed,
                  int pool_nodes = 100);

std::string render_table_text(const Table& t);
std::string render_table_csv(const Table& t);

}  // namespace taurus::avail
