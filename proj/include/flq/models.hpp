#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flq/measure.hpp"

namespace flq {

// A point of the driving system: torus coordinates plus a cyclic phase
// (the phase is only used by skip models; everywhere else it stays 0).
struct ModelState {
    std::vector<double> coords;
    int phase = 0;

    static ModelState trivial() { return ModelState{}; }
    static ModelState point(double x) { return ModelState{{x}, 0}; }
};

enum class ModelKind { selfsimilar, convolution, multiconvolution, projection, skip };
enum class SkipKeep { multiples, non_multiples };

struct PlanarAtom {
    double x, y;
    double mass;
};

// Descriptor of a measure-generating system (X, T, Delta, lambda): a torus
// (or product with a cyclic group) X, a translation T, a symbol map
// x -> Delta(x) into finitely supported measures, and a contraction ratio.
// The stage-n measure is the convolution of S_{lambda^i} Delta(T^i x) over
// i < n. Models are immutable and cheap to copy.
class Model {
public:
    ModelKind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    int cyclic_order() const { return cyclic_order_; }
    const std::vector<double>& periods() const { return periods_; }
    const std::vector<double>& steps() const { return steps_; }

    // T^n x, computed by reduced multiplication rather than iterated addition.
    ModelState orbit(const ModelState& x, long long n) const;

    // Delta(x). States exactly on a piecewise boundary take the
    // right-continuous piece.
    AtomicMeasure symbol(const ModelState& x) const;

    // Number of atoms of Delta at state x (cheap; no measure construction).
    std::size_t symbol_size(const ModelState& x) const;

    // Interval certain to contain supp(mu_{x,n}) for every state and stage.
    void support_bounds(double& lo, double& hi) const;

    // Caller-asserted unique ergodicity, plus a continued-fraction heuristic:
    // true when some step/period ratio is within 1e-12 of a rational with
    // denominator <= 1e4 (so the assertion deserves suspicion).
    bool uniquely_ergodic_asserted() const { return uniquely_ergodic_asserted_; }
    bool rationality_warning() const { return rationality_warning_; }

    bool has_exact() const { return exact_lambda_.has_value(); }
    const QuadExt& exact_lambda() const { return *exact_lambda_; }
    // Exact symbol measure; only selfsimilar and skip models support this.
    ExactAtomicMeasure exact_symbol(const ModelState& x) const;

    // Kind-specific payload accessors.
    const AtomicMeasure& base_symbol() const { return delta_; }           // selfsimilar
    const std::vector<AtomicMeasure>& component_symbols() const { return deltas_; }
    const std::vector<double>& component_lambdas() const { return lambdas_; }
    const std::vector<PlanarAtom>& planar_symbol() const { return planar_; }
    double rotation_alpha() const { return alpha_; }
    const Model& skip_base() const { return *base_; }
    int skip_k() const { return skip_k_; }
    SkipKeep skip_keep() const { return skip_keep_; }

    std::string to_json() const;
    static Model from_json(const std::string& text);

    // Distance from x to the nearest discontinuity of Delta (for Birkhoff
    // sample exclusion). Returns +inf for piecewise-free kinds.
    double boundary_distance(const ModelState& x) const;

private:
    friend Model make_selfsimilar(const AtomicMeasure&, double);
    friend Model make_selfsimilar_exact(const ExactAtomicMeasure&, const QuadExt&);
    friend Model make_convolution(const AtomicMeasure&, double, const AtomicMeasure&, double);
    friend Model make_multi_convolution(const std::vector<AtomicMeasure>&,
                                        const std::vector<double>&);
    friend Model make_projection(const std::vector<PlanarAtom>&, double, double);
    friend Model make_skip(const Model&, int, SkipKeep);

    ModelKind kind_ = ModelKind::selfsimilar;
    double lambda_ = 0.5;
    std::vector<double> periods_;
    std::vector<double> steps_;
    int cyclic_order_ = 1;
    bool uniquely_ergodic_asserted_ = false;
    bool rationality_warning_ = false;

    // selfsimilar / skip base payload
    AtomicMeasure delta_;
    std::optional<ExactAtomicMeasure> exact_delta_;
    std::optional<QuadExt> exact_lambda_;
    // convolution / multiconvolution payload
    std::vector<AtomicMeasure> deltas_;
    std::vector<double> lambdas_;
    // projection payload
    std::vector<PlanarAtom> planar_;
    double alpha_ = 0.0;
    // skip payload
    std::shared_ptr<const Model> base_;
    int skip_k_ = 0;
    SkipKeep skip_keep_ = SkipKeep::non_multiples;
};

// Trivial one-point system generating the homogeneous self-similar measure
// with symbol delta and ratio lambda in (0,1).
Model make_selfsimilar(const AtomicMeasure& delta, double lambda);
Model make_selfsimilar_exact(const ExactAtomicMeasure& delta, const QuadExt& lambda);

// Circle rotation model whose generated measures are eta_1 * S_{e^x} eta_2
// for the self-similar measures eta_i(d_i, l_i). Requires 0 < l2 < l1 < 1.
// X = [0, ln(1/l2)), T = rotation by ln(1/l1), contraction l1, and
// Delta(x) = d1 * S_{e^x} d2 on [0, ln(1/l1)), d1 on the rest.
Model make_convolution(const AtomicMeasure& d1, double l1, const AtomicMeasure& d2, double l2);

// Torus model generating scaled convolutions eta_1 * ... * eta_k, lambdas
// strictly increasing, k >= 2. Coordinate j < k-1 lives on [0, ln(1/l_j))
// and advances by ln(1/l_k); the symbol convolves S_{e^{x_j}} Delta_j over
// coordinates currently below ln(1/l_k), times Delta_k.
Model make_multi_convolution(const std::vector<AtomicMeasure>& deltas,
                             const std::vector<double>& lambdas);

// Rotation model on S^1 generating the projections P_x mu of the planar
// self-similar measure with rotation alpha and ratio lambda:
// Delta(theta) projects the planar symbol onto direction theta.
Model make_projection(const std::vector<PlanarAtom>& planar_delta, double lambda, double alpha);

// Product with a cyclic group of order k >= 2 that keeps only the symbols at
// times i = 0 mod k (multiples) or i != 0 mod k (non_multiples), replacing
// the rest by a point mass at 0. Start states use phase 0.
Model make_skip(const Model& base, int k, SkipKeep keep);

// Stage-n measure: convolution over i < n of S_{lambda^i} Delta(T^i x).
// n = 0 yields a unit point mass at 0. Throws CapacityError when the atom
// count would exceed atom_cap.
AtomicMeasure generate_atoms(const Model& model, const ModelState& x, long long n,
                             std::size_t atom_cap = (std::size_t)1 << 24);
ExactAtomicMeasure generate_atoms_exact(const Model& model, const ModelState& x, long long n,
                                        std::size_t atom_cap = (std::size_t)1 << 24);

// Expected atom count before any merging: product of symbol support sizes.
double atom_count_upper_bound(const Model& model, const ModelState& x, long long n);

// min( integral of log2 ||Delta(x)||_q^q dP / ((q-1) log2 lambda), 1 ).
// Closed forms where available; otherwise a Birkhoff average over
// x_samples orbit points, resampling points within 1e-9 of a symbol
// discontinuity. q <= 1 throws std::domain_error.
double theoretical_dimension(const Model& model, double q, int x_samples = 0);

// ---------------------------------------------------------------------------
// Non-homogeneous IFS with stopping-set stages.
// ---------------------------------------------------------------------------

struct NonHomIFS {
    struct Map {
        double lambda;      // contraction in (0,1)
        double translation;
    };
    std::vector<Map> maps;
    std::vector<double> weights; // positive, sum to 1

    void validate() const;
    // Interval containing the attractor.
    void support_bounds(double& lo, double& hi) const;
};

struct NonHomStage {
    AtomicMeasure measure;               // sum of p_u delta(t_u), u in the stopping set
    std::size_t word_count = 0;          // |Omega_m|
    std::vector<double> ratio_classes;   // Lambda_m: distinct contraction ratios
    std::vector<std::size_t> class_sizes;
};

// Stage measure over the stopping set Omega_m: all words u with
// lambda_u <= 2^-m < lambda_{parent(u)}.
NonHomStage generate_nonhom(const NonHomIFS& ifs, int m,
                            std::size_t word_cap = (std::size_t)1 << 24);

// Smallest n with lambda^n <= 2^-m, plus a safety margin of extra stages.
long long stage_for_scale(double lambda, int m, int margin = 0);

} // namespace flq
