#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "flq/errors.hpp"
#include "flq/numeric.hpp"

namespace flq {

// Grid geometry. On the circle all indices are reduced mod 2^m and sums wrap;
// on the line indices are unconstrained. The two never mix silently: every
// binary operation checks for agreement.
enum class Geometry { circle, line };

std::string to_string(Geometry g);
Geometry geometry_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Finitely supported measures on the real line.
// ---------------------------------------------------------------------------

struct Atom {
    double location;
    double mass;
};

class AtomicMeasure {
public:
    // Atoms closer than this are merged on construction (float mode).
    static double merge_tolerance() { return std::ldexp(1.0, -48); }

    AtomicMeasure() = default;
    explicit AtomicMeasure(std::vector<Atom> atoms);

    static AtomicMeasure delta(double location, double mass = 1.0);
    // Uniform masses on the given locations.
    static AtomicMeasure uniform(const std::vector<double>& locations);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    double total_mass() const { return total_mass_; }
    // Number of atom pairs merged during construction (closer than tolerance).
    long long merge_count() const { return merge_count_; }

    double min_location() const;
    double max_location() const;

    std::string to_json() const;
    static AtomicMeasure from_json(const std::string& text);

private:
    std::vector<Atom> atoms_;
    double total_mass_ = 0.0;
    long long merge_count_ = 0;
};

// Affine push-forward: atom x -> scale*x + offset. scale must be nonzero.
AtomicMeasure affine_image(const AtomicMeasure& src, double scale, double offset);

// Convolution (distribution of sums) on the line. Throws CapacityError when
// the product of supports exceeds atom_cap.
AtomicMeasure convolve(const AtomicMeasure& a, const AtomicMeasure& b,
                       std::size_t atom_cap = (std::size_t)1 << 24);

// Convolution on the circle R/Z: locations of the sum reduced mod 1.
AtomicMeasure convolve_circle(const AtomicMeasure& a, const AtomicMeasure& b,
                              std::size_t atom_cap = (std::size_t)1 << 24);

// ---------------------------------------------------------------------------
// Exact-mode atoms: locations in a real quadratic field, rational masses.
// Exact coincidences are decided exactly and counted.
// ---------------------------------------------------------------------------

struct ExactAtom {
    QuadExt location;
    Rational mass;
};

class ExactAtomicMeasure {
public:
    ExactAtomicMeasure() = default;
    explicit ExactAtomicMeasure(std::vector<ExactAtom> atoms);

    static ExactAtomicMeasure delta(QuadExt location, Rational mass = Rational(1));

    const std::vector<ExactAtom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    // Exact coincidences merged during construction.
    long long overlap_count() const { return overlap_count_; }

    AtomicMeasure to_float() const;

private:
    std::vector<ExactAtom> atoms_;
    long long overlap_count_ = 0;
};

ExactAtomicMeasure convolve(const ExactAtomicMeasure& a, const ExactAtomicMeasure& b,
                            std::size_t atom_cap = (std::size_t)1 << 24);
ExactAtomicMeasure scale_atoms(const ExactAtomicMeasure& src, const QuadExt& factor);

// ---------------------------------------------------------------------------
// Measures on the dyadic grid 2^-m Z.
// ---------------------------------------------------------------------------

class DyadicMeasure {
public:
    static constexpr int kDenseScaleCap = 34;
    static constexpr int kSparseScaleCap = 60;
    // Direct (pairwise) convolution is used below this many products.
    static constexpr std::size_t kDirectConvolutionCap = (std::size_t)1 << 22;

    DyadicMeasure() = default;
    // Entries need not be sorted or unique; duplicates accumulate. On the
    // circle indices are reduced mod 2^m. Masses <= 0 are rejected.
    DyadicMeasure(int scale_m, Geometry geometry,
                  std::vector<std::pair<long long, double>> entries,
                  bool expect_probability = false);

    static DyadicMeasure uniform_full(int scale_m, Geometry geometry);

    int scale_m() const { return m_; }
    Geometry geometry() const { return geom_; }
    std::size_t support_size() const;
    double total_mass() const { return total_mass_; }
    bool is_dense() const { return dense_; }

    double mass_at(long long index) const;
    double max_mass() const;

    // Entries in increasing index order.
    void for_each(const std::function<void(long long, double)>& fn) const;
    std::vector<std::pair<long long, double>> entries() const;

    std::string to_json() const;
    static DyadicMeasure from_json(const std::string& text);

private:
    friend DyadicMeasure convolve(const DyadicMeasure&, const DyadicMeasure&);
    int m_ = 0;
    Geometry geom_ = Geometry::circle;
    bool dense_ = false;
    double total_mass_ = 0.0;
    // sparse representation
    std::vector<long long> idx_;
    std::vector<double> mass_;
    // dense representation: value at base_ + i
    long long base_ = 0;
    std::vector<double> vals_;

    void adopt_sorted(std::vector<long long> idx, std::vector<double> mass);
};

// Discretization at scale 2^-m: grid point j carries the mass of
// [j 2^-m, (j+1) 2^-m). Circle geometry reduces locations mod 1 first; line
// geometry requires locations inside [window_lo, window_hi) and throws
// std::range_error otherwise.
DyadicMeasure discretize(const AtomicMeasure& src, int m, Geometry geometry,
                         double window_lo = 0.0, double window_hi = 1.0);

// Sum_k mass(k)^q for q in (1, inf); max mass for q = +infinity.
// q <= 1 throws std::domain_error.
double lq_norm(const DyadicMeasure& dm, double q);

// Same quantity for a raw mass vector (used by level-set diagnostics).
double lq_norm(const std::vector<double>& masses, double q);

// Convolution at a common scale. Dispatches between direct sparse
// accumulation and FFT depending on the product of support sizes; the FFT
// result is clamped at 1e-14 and rescaled to the exact product of the input
// total masses.
DyadicMeasure convolve(const DyadicMeasure& a, const DyadicMeasure& b);

// Normalized restriction to the dyadic interval [j 2^-s, (j+1) 2^-s), s <= m.
DyadicMeasure restrict_normalize(const DyadicMeasure& dm, int s, long long j);

// Re-bin to a coarser grid: entry j at scale m' accumulates entries k with
// floor(k 2^{m'-m}) = j.
DyadicMeasure coarsen(const DyadicMeasure& dm, int m_coarse);

// floor division for possibly negative line-mode indices
inline long long floor_div(long long a, long long b) {
    long long q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

inline long long mod_reduce(long long a, long long n) {
    long long r = a % n;
    return r < 0 ? r + n : r;
}

} // namespace flq
