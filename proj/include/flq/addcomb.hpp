#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flq/measure.hpp"

namespace flq {

// Set of grid points at scale 2^-m: sorted distinct indices, reduced mod 2^m
// on the circle, unconstrained on the line.
struct DyadicSet {
    int scale_m = 0;
    Geometry geometry = Geometry::circle;
    std::vector<long long> indices;

    DyadicSet() = default;
    DyadicSet(int scale_m, Geometry geometry, std::vector<long long> indices);

    std::size_t size() const { return indices.size(); }
    bool contains(long long k) const;

    static DyadicSet full_grid(int scale_m, Geometry geometry);

    std::string to_json() const;
    static DyadicSet from_json(const std::string& text);
};

// Indicator measure: unit mass on each point (total |A|, not a probability).
DyadicMeasure indicator_measure(const DyadicSet& a);

// A + B = {a + b}, reduced mod 2^m on the circle.
DyadicSet sumset(const DyadicSet& a, const DyadicSet& b, Geometry geometry);

// Doubling constant |A+A| / |A|, computed on the line.
double doubling(const DyadicSet& a);

// Additive energy: quadruples with a1 + b1 = a2 + b2, as an exact integer.
// Equals sum_s r(s)^2 for the representation function r of A + B.
unsigned long long additive_energy(const DyadicSet& a, const DyadicSet& b,
                                   Geometry geometry = Geometry::line);
// Same quantity through an FFT of the indicator vectors; exact for the
// supported sizes (results are integers well below 2^53).
unsigned long long additive_energy_fft(const DyadicSet& a, const DyadicSet& b,
                                       Geometry geometry = Geometry::line);

// ---------------------------------------------------------------------------
// Regular tree structure over the 2^D-ary decomposition (m = ell * D).
// Level s in [ell] splits each level-s interval into 2^D children.
// ---------------------------------------------------------------------------

struct BranchingProfile {
    int level_bits = 1; // D
    int levels = 0;     // ell

    struct Level {
        bool uniform = true;
        long long offspring = 0;     // R_s when uniform
        long long offspring_min = 0; // diagnostics when not
        long long offspring_max = 0;
        std::vector<std::pair<long long, long long>> histogram; // (count, parents)
    };
    std::vector<Level> per_level;

    bool uniform() const;
    // R_s sequence; requires uniform().
    std::vector<long long> offspring() const;
};

// Offspring counts of the 2^D-ary tree over A. D must divide m.
BranchingProfile branching(const DyadicSet& a, int D);

// Largest-class dyadic pigeonhole pruning, bottom-up: returns a
// (D, ell)-uniform subset of size at least (2D)^-ell |A|. Count classes are
// {1,2} -> 1 and (2^j, 2^{j+1}] -> 2^j; the largest class (by points) wins,
// ties to the smaller class; retained children are the leftmost.
DyadicSet extract_uniform(const DyadicSet& a, int D);

// Collapse branching to R'_s = 1 at the chosen levels by keeping the
// leftmost child of every level-s interval; other levels keep R'_s = R_s.
// Input must be (D, ell)-uniform; the size bound
// |A'| = |A| * prod_{s in levels} 1/R_s holds with equality.
DyadicSet collapse(const DyadicSet& a, int D, const std::set<int>& levels);

// Translation + subset with every surviving point in the middle half of its
// level-s interval for every s: y + x in (1/2) D_{sD}(y + x). Retains at
// least 3^-ell of the points; the shift at level s is one of
// {0, +2^{m-sD-2}, -2^{m-sD-2}} (preferring 0, then +, then -). Both
// guarantees are verified on the output. Requires D >= 2.
struct CenterResult {
    long long translation = 0; // grid units at scale 2^-m
    DyadicSet subset;          // subset of the input (untranslated indices)
};
CenterResult center(const DyadicSet& a, int D);

// ---------------------------------------------------------------------------
// Level sets and the empirical inverse-theorem witness.
// ---------------------------------------------------------------------------

enum class LevelStyle {
    norm_weighted,   // levels relative to ||mu||_q^{q'}
    uniform_weighted // levels relative to 2^-m
};

struct LevelSetResult {
    DyadicSet set;
    long long level_j = 0;
    double captured_fraction = 0.0; // ||mu|_A||_q^q / ||mu||_q^q
    double level_mass_lo = 0.0, level_mass_hi = 0.0;
    bool within_level_budget = false; // j <= 2 epsilon q' m for the given epsilon
};

// Dyadic mass-level decomposition of supp(mu); returns the level capturing
// the largest share of ||mu||_q^q. Masses on the returned set agree within a
// factor of 2.
LevelSetResult level_sets(const DyadicMeasure& mu, double q, double epsilon,
                          LevelStyle style = LevelStyle::norm_weighted);

struct WitnessClause {
    std::string name;
    bool pass = false;
    bool certified_by_construction = false;
    double lhs = 0.0, rhs = 0.0;
    std::string note;
};

// Empirical witness for the structure dichotomy of L^q-norm flattening under
// convolution: runs the constructive pipeline (level set, centering, uniform
// extraction) on mu and nu and evaluates every conclusion clause at the
// supplied delta. The Balog-Szemeredi-Gowers / Bourgain extraction that the
// full theorem uses between these steps is not implemented; clauses derived
// from it are measured, not certified.
struct WitnessReport {
    double q = 2.0;
    int level_bits = 1; // D
    int levels = 0;     // ell
    double delta = 0.0;
    double hypothesis_ratio = 0.0; // ||mu*nu||_q / ||mu||_q
    DyadicSet set_a, set_b;
    long long translation_a = 0, translation_b = 0;
    std::vector<long long> offspring_a, offspring_b; // R'_s, R''_s
    std::vector<int> full_branching_levels;          // S: R'_s >= 2^{(1-delta)D}
    std::vector<WitnessClause> clauses;
    std::string label;

    bool all_pass() const;
    std::string to_json() const;
};

WitnessReport inverse_witness(const DyadicMeasure& mu, const DyadicMeasure& nu, double q, int D,
                              double delta);

// Check |A + H| >= 2^{-m/D} |H| prod_{s : R_s(H) = 1} R'_s(A) for uniform
// sets A, H at a common scale.
struct SumsetBoundReport {
    unsigned long long sumset_size = 0;
    double bound = 0.0;
    bool pass = false;
};
SumsetBoundReport sumset_bound_check(const DyadicSet& a, const DyadicSet& h, int D);

} // namespace flq
