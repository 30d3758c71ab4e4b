#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flq/measure.hpp"
#include "flq/models.hpp"
#include "flq/numeric.hpp"

namespace flq {

enum class SolveMode { exact, interval, floating };

SolveMode solve_mode_from_string(const std::string& s);
std::string to_string(SolveMode m);

// Minimum of |P(lambda)| over nonzero polynomials of degree <= n with
// coefficients in the given set, by depth-first branch and bound. The tail
// of a partial evaluation is bounded by c_max lambda^{k+1} (1-lambda^{n-k})
// / (1-lambda), which prunes any branch that cannot undercut the incumbent.
struct MinPolyResult {
    double value = 0.0;                   // best |P(lambda)| found
    bool exact_zero = false;              // exact mode proved value == 0
    std::optional<QuadExt> exact_value;   // exact mode minimum
    std::optional<Interval> enclosure;    // interval mode: certified [lo,hi]
    unsigned long long nodes_visited = 0;
    std::vector<double> witness;          // coefficients of a minimizing P, degree 0..n
};

inline constexpr unsigned long long kDefaultNodeBudget = 1000000000ULL;

MinPolyResult min_poly_value(const std::vector<double>& coeff_set, double lambda, int n,
                             SolveMode mode,
                             unsigned long long node_budget = kDefaultNodeBudget,
                             int threads = 1);

// Exact-mode entry point for coefficient sets and lambda in a quadratic
// field (covers rational lambda and surds like the golden ratio).
MinPolyResult min_poly_value_exact(const std::vector<QuadExt>& coeff_set, const QuadExt& lambda,
                                   int n,
                                   unsigned long long node_budget = kDefaultNodeBudget);

// Difference set E - E of a digit set, deduplicated and sorted.
std::vector<double> difference_set(const std::vector<double>& digits);
std::vector<QuadExt> difference_set(const std::vector<QuadExt>& digits);

// Smallest pairwise distance among distinct atom locations, plus the number
// of coincidences merged at construction. Requires at least 2 atoms.
struct GapResult {
    double gap = 0.0;
    long long overlaps = 0;
};
GapResult min_atom_gap(const AtomicMeasure& am);
GapResult min_atom_gap(const ExactAtomicMeasure& am);

// Separation certificate for the stages of a model: per n, the minimum atom
// gap of mu_{x,n} against the threshold lambda^{R n}. A finite scan can only
// certify separation up to the tested horizon, so the verdict distinguishes
// "certified to n_max" from the first failing stage.
struct SeparationProfile {
    struct Row {
        long long n = 0;
        double min_gap = 0.0;
        long long overlap_count = 0;
        double threshold = 0.0;
        bool passes = false;
    };
    std::vector<Row> per_n;
    SolveMode mode = SolveMode::floating;
    long long first_failure = -1; // -1 when all rows pass
    std::string verdict;          // "certified to n=N" or "fails at n=K"

    static std::string csv_header() { return "n,gap,threshold,pass"; }
    std::string to_csv_rows() const;
};

SeparationProfile separation_profile(const Model& model, const ModelState& x, long long n_max,
                                     double R, SolveMode mode,
                                     std::size_t atom_cap = (std::size_t)1 << 24);

// Normalized-log scan of the minimum polynomial value over a lambda grid:
// (lambda, (1/n) log2 min |P(lambda)|). Exact zeros produce -inf entries.
// Diagnostic only; a finite n decides nothing about the limit.
struct ScanPoint {
    double lambda = 0.0;
    double normalized_log = 0.0; // -inf on exact zero
    bool exact_zero = false;
};
std::vector<ScanPoint> superexp_scan(const std::vector<double>& coeff_set,
                                     const std::vector<double>& lambda_grid, int n,
                                     SolveMode mode,
                                     unsigned long long node_budget = kDefaultNodeBudget);

// Three-way minimum over atom-difference types for the two-ratio convolution
// model at state x and stage n: differences with equal second components
// (P1(l1)), equal first components (e^x P2(l2)), and mixed
// (P1(l1) - e^x P2(l2)). Float arithmetic only; the e^x factor has no exact
// representation. Enumerates all coefficient sequences, so n is capped.
struct ConvolutionGaps {
    double min_first = 0.0;  // min |P1(l1)|
    double min_second = 0.0; // min |e^x P2(l2)|
    double min_cross = 0.0;  // min |P1(l1) - e^x P2(l2)|
};
ConvolutionGaps convolution_min_differences(const AtomicMeasure& d1, double l1,
                                            const AtomicMeasure& d2, double l2, double x, int n);

} // namespace flq
