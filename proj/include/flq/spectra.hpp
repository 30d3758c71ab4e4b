#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flq/measure.hpp"
#include "flq/models.hpp"

namespace flq {

// Per-q record of empirical tau estimates across dyadic scales.
// per_scale values are -log2(sum_I mu(I)^q)/m; the regression slope is fitted
// to the raw sums over the top half of the scale range (small-m prefactors
// bias single-scale values).
struct SpectrumReport {
    double q = 2.0;
    std::vector<int> scales;
    std::vector<double> per_scale;      // value at scales[i]
    std::vector<double> raw_neglog;     // -log2 sum at scales[i]
    double regression_tau = 0.0;
    std::optional<double> theoretical_tau;

    double lq_dimension() const { return regression_tau / (q - 1.0); }

    // CSV columns: q, m, tau_single, tau_regression, dimension, theoretical
    static std::string csv_header();
    std::string to_csv_rows() const;
    std::string to_json() const;
};

// Default q grid covering the q -> 1 and large-q regimes.
const std::vector<double>& default_q_grid();

// Empirical L^q spectrum of a fixed grid measure: scale m uses the
// coarsening of dm to m. Requires 4 <= m_min < m_max <= dm.scale_m().
SpectrumReport empirical_tau(const DyadicMeasure& dm, double q, int m_min, int m_max);

// Empirical spectrum of a model-generated measure at state x. Scale m uses
// the stage n = stage_for_scale(lambda, m, stage_margin) so the truncated
// stage sits a couple of contraction steps below the grid scale; atoms are
// affinely renormalized into [0,1) using the model support bounds.
SpectrumReport empirical_tau(const Model& model, const ModelState& x, double q, int m_min,
                             int m_max, int stage_margin = 2,
                             std::size_t atom_cap = (std::size_t)1 << 24);

// Spectrum of a non-homogeneous IFS via its stopping-set stage measures.
SpectrumReport empirical_tau(const NonHomIFS& ifs, double q, int m_min, int m_max,
                             int stage_margin = 2, std::size_t word_cap = (std::size_t)1 << 24);

// tau(q) = (q-1) * min( log ||Delta||_q^q / ((q-1) log lambda), 1 ).
double theoretical_tau_homogeneous(const AtomicMeasure& delta, double lambda, double q);

// Root of sum_i p_i^q lambda_i^{-tau} = 1 (strictly monotone in tau).
struct TauTildeResult {
    double tau_tilde = 0.0;
    double clamped_dimension = 0.0; // min(tau_tilde/(q-1), 1)
    double residual = 0.0;
};
TauTildeResult tau_tilde(const NonHomIFS& ifs, double q);

// Discrete Legendre transform tau*(alpha) = inf_q alpha q - tau(q) over the
// sampled grid. Rejects non-concave samples (tolerance 1e-6). Reports the
// attaining q, whether the infimum sits on the grid boundary, and the
// central-difference derivative grid alpha(q).
struct LegendreResult {
    double value = 0.0;
    double attaining_q = 0.0;
    bool boundary_attained = false;
    std::vector<double> grid_q;
    std::vector<double> grid_alpha;
};
LegendreResult legendre(const std::vector<std::pair<double, double>>& tau_samples, double alpha);

// Frostman exponent estimate: per-scale alpha_hat(m) = -log2(max_I mu(I))/m
// and its regression slope over the top half of scales. When (q, s) is
// supplied, also evaluates the implied ball-mass exponent (1 - 1/q) s.
struct FrostmanReport {
    std::vector<int> scales;
    std::vector<double> per_scale;
    double slope = 0.0;
    std::optional<double> implied_bound;
};
FrostmanReport frostman_exponent(const std::vector<DyadicMeasure>& measures_by_scale,
                                 std::optional<std::pair<double, double>> q_and_s = std::nullopt);

// Sub-multiplicativity diagnostics for phi_n(x) = ||mu_x^{(m(n))}||_q^q,
// m(n) the smallest integer with 2^-m <= lambda^n. phi is evaluated on the
// truncated stage n + stage_margin. defect(n,n') =
// log2 phi_{n+n'}(x) - log2 phi_n(x) - log2 phi_{n'}(T^n x).
struct CocycleReport {
    int n_max = 0;
    std::vector<double> defects;   // row-major (n, n'), n, n' in 1..n_max
    double max_defect = 0.0;
    double slope_max_vs_n = 0.0;   // regression slope of max_{n'} defect(n, .) on n

    double at(int n, int np) const { return defects[(std::size_t)(n - 1) * n_max + (np - 1)]; }
};
CocycleReport cocycle_check(const Model& model, const ModelState& x, double q, int n_max,
                            int stage_margin = 2, std::size_t atom_cap = (std::size_t)1 << 24);

// ||(left * S_scale right)^{(m)}||_q^q with locations renormalized by
// u = (t - lo)/span before flooring, computed by a streaming merge without
// materializing the product measure. Exact same binning as discretize() on
// the convolved atoms.
double streamed_conv_lq_moment(const AtomicMeasure& left, double scale,
                               const AtomicMeasure& right, int m, double q, double lo,
                               double span);

// Least-squares slope of y against x.
double regression_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace flq
