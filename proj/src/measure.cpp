#include "flq/measure.hpp"

#include <algorithm>
#include <cmath>

#include "flq/fft.hpp"
#include "json.hpp"

namespace flq {

using nlohmann::json;

std::string to_string(Geometry g) { return g == Geometry::circle ? "circle" : "line"; }

Geometry geometry_from_string(const std::string& s) {
    if (s == "circle") return Geometry::circle;
    if (s == "line") return Geometry::line;
    throw ConfigError("unknown geometry: " + s);
}

// ---------------------------------------------------------------------------
// AtomicMeasure
// ---------------------------------------------------------------------------

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
    for (const auto& a : atoms) {
        if (!(a.mass > 0.0)) throw std::invalid_argument("AtomicMeasure: masses must be positive");
        if (!std::isfinite(a.location)) throw std::invalid_argument("AtomicMeasure: non-finite location");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& x, const Atom& y) { return x.location < y.location; });
    const double tol = merge_tolerance();
    atoms_.reserve(atoms.size());
    for (const auto& a : atoms) {
        if (!atoms_.empty() && a.location - atoms_.back().location < tol) {
            atoms_.back().mass += a.mass;
            ++merge_count_;
        } else {
            atoms_.push_back(a);
        }
    }
    total_mass_ = 0.0;
    for (const auto& a : atoms_) total_mass_ += a.mass;
}

AtomicMeasure AtomicMeasure::delta(double location, double mass) {
    return AtomicMeasure({{location, mass}});
}

AtomicMeasure AtomicMeasure::uniform(const std::vector<double>& locations) {
    if (locations.empty()) throw std::invalid_argument("AtomicMeasure::uniform: empty");
    std::vector<Atom> atoms;
    atoms.reserve(locations.size());
    const double p = 1.0 / (double)locations.size();
    for (double x : locations) atoms.push_back({x, p});
    return AtomicMeasure(std::move(atoms));
}

double AtomicMeasure::min_location() const {
    if (atoms_.empty()) throw std::domain_error("empty measure");
    return atoms_.front().location;
}

double AtomicMeasure::max_location() const {
    if (atoms_.empty()) throw std::domain_error("empty measure");
    return atoms_.back().location;
}

std::string AtomicMeasure::to_json() const {
    json j;
    j["atoms"] = json::array();
    for (const auto& a : atoms_) j["atoms"].push_back({a.location, a.mass});
    return j.dump();
}

AtomicMeasure AtomicMeasure::from_json(const std::string& text) {
    json j = json::parse(text);
    std::vector<Atom> atoms;
    for (const auto& e : j.at("atoms")) atoms.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    return AtomicMeasure(std::move(atoms));
}

AtomicMeasure affine_image(const AtomicMeasure& src, double scale, double offset) {
    if (scale == 0.0) throw std::invalid_argument("affine_image: zero scale");
    std::vector<Atom> atoms;
    atoms.reserve(src.size());
    for (const auto& a : src.atoms()) atoms.push_back({scale * a.location + offset, a.mass});
    return AtomicMeasure(std::move(atoms));
}

namespace {

AtomicMeasure convolve_atomic_impl(const AtomicMeasure& a, const AtomicMeasure& b,
                                   std::size_t atom_cap, bool circle) {
    if (a.size() == 0 || b.size() == 0) throw std::domain_error("convolve: empty measure");
    const std::size_t products = a.size() * b.size();
    if (products > atom_cap)
        throw CapacityError("convolve: atom count " + std::to_string(products) +
                            " exceeds cap " + std::to_string(atom_cap));
    std::vector<Atom> out;
    out.reserve(products);
    for (const auto& x : a.atoms())
        for (const auto& y : b.atoms()) {
            double loc = x.location + y.location;
            if (circle) loc -= std::floor(loc);
            out.push_back({loc, x.mass * y.mass});
        }
    return AtomicMeasure(std::move(out));
}

} // namespace

AtomicMeasure convolve(const AtomicMeasure& a, const AtomicMeasure& b, std::size_t atom_cap) {
    return convolve_atomic_impl(a, b, atom_cap, false);
}

AtomicMeasure convolve_circle(const AtomicMeasure& a, const AtomicMeasure& b, std::size_t atom_cap) {
    return convolve_atomic_impl(a, b, atom_cap, true);
}

// ---------------------------------------------------------------------------
// ExactAtomicMeasure
// ---------------------------------------------------------------------------

ExactAtomicMeasure::ExactAtomicMeasure(std::vector<ExactAtom> atoms) {
    std::sort(atoms.begin(), atoms.end(),
              [](const ExactAtom& x, const ExactAtom& y) { return x.location < y.location; });
    atoms_.reserve(atoms.size());
    for (auto& a : atoms) {
        if (a.mass.sign() <= 0) throw std::invalid_argument("ExactAtomicMeasure: nonpositive mass");
        if (!atoms_.empty() && atoms_.back().location == a.location) {
            atoms_.back().mass = atoms_.back().mass + a.mass;
            ++overlap_count_;
        } else {
            atoms_.push_back(std::move(a));
        }
    }
}

ExactAtomicMeasure ExactAtomicMeasure::delta(QuadExt location, Rational mass) {
    std::vector<ExactAtom> v;
    v.push_back({std::move(location), std::move(mass)});
    return ExactAtomicMeasure(std::move(v));
}

AtomicMeasure ExactAtomicMeasure::to_float() const {
    std::vector<Atom> atoms;
    atoms.reserve(atoms_.size());
    for (const auto& a : atoms_) atoms.push_back({a.location.to_double(), a.mass.to_double()});
    return AtomicMeasure(std::move(atoms));
}

ExactAtomicMeasure convolve(const ExactAtomicMeasure& a, const ExactAtomicMeasure& b,
                            std::size_t atom_cap) {
    if (a.size() == 0 || b.size() == 0) throw std::domain_error("convolve: empty measure");
    const std::size_t products = a.size() * b.size();
    if (products > atom_cap)
        throw CapacityError("convolve: atom count exceeds cap");
    std::vector<ExactAtom> out;
    out.reserve(products);
    for (const auto& x : a.atoms())
        for (const auto& y : b.atoms())
            out.push_back({x.location + y.location, x.mass * y.mass});
    return ExactAtomicMeasure(std::move(out));
}

ExactAtomicMeasure scale_atoms(const ExactAtomicMeasure& src, const QuadExt& factor) {
    std::vector<ExactAtom> out;
    out.reserve(src.size());
    for (const auto& a : src.atoms()) out.push_back({factor * a.location, a.mass});
    return ExactAtomicMeasure(std::move(out));
}

// ---------------------------------------------------------------------------
// DyadicMeasure
// ---------------------------------------------------------------------------

namespace {

void check_scale(int m) {
    if (m < 0 || m > DyadicMeasure::kSparseScaleCap)
        throw ConfigError("scale m=" + std::to_string(m) + " outside [0, 60]");
}

} // namespace

DyadicMeasure::DyadicMeasure(int scale_m, Geometry geometry,
                             std::vector<std::pair<long long, double>> entries,
                             bool expect_probability) {
    check_scale(scale_m);
    m_ = scale_m;
    geom_ = geometry;
    const long long size = (m_ < 63) ? (1LL << m_) : 0;
    for (auto& [k, v] : entries) {
        if (!(v > 0.0)) throw std::invalid_argument("DyadicMeasure: masses must be positive");
        if (geom_ == Geometry::circle) k = mod_reduce(k, size);
    }
    std::sort(entries.begin(), entries.end());
    std::vector<long long> idx;
    std::vector<double> mass;
    idx.reserve(entries.size());
    mass.reserve(entries.size());
    for (const auto& [k, v] : entries) {
        if (!idx.empty() && idx.back() == k)
            mass.back() += v;
        else {
            idx.push_back(k);
            mass.push_back(v);
        }
    }
    adopt_sorted(std::move(idx), std::move(mass));
    if (expect_probability && std::fabs(total_mass_ - 1.0) > 1e-10)
        throw std::invalid_argument("DyadicMeasure: probability mass deviates from 1 by " +
                                    std::to_string(std::fabs(total_mass_ - 1.0)));
}

void DyadicMeasure::adopt_sorted(std::vector<long long> idx, std::vector<double> mass) {
    total_mass_ = 0.0;
    for (double v : mass) total_mass_ += v;
    dense_ = false;
    if (!idx.empty() && m_ <= kDenseScaleCap) {
        const long long span =
            geom_ == Geometry::circle ? (1LL << m_) : (idx.back() - idx.front() + 1);
        if (span <= (1LL << kDenseScaleCap) && (long long)idx.size() > span / 8) {
            dense_ = true;
            base_ = geom_ == Geometry::circle ? 0 : idx.front();
            vals_.assign((std::size_t)span, 0.0);
            for (std::size_t i = 0; i < idx.size(); ++i) vals_[(std::size_t)(idx[i] - base_)] = mass[i];
            return;
        }
    }
    idx_ = std::move(idx);
    mass_ = std::move(mass);
}

DyadicMeasure DyadicMeasure::uniform_full(int scale_m, Geometry geometry) {
    check_scale(scale_m);
    if (scale_m > kDenseScaleCap) throw ConfigError("uniform_full: scale too large for dense mode");
    const long long n = 1LL << scale_m;
    std::vector<std::pair<long long, double>> e;
    e.reserve((std::size_t)n);
    const double p = 1.0 / (double)n;
    for (long long k = 0; k < n; ++k) e.push_back({k, p});
    return DyadicMeasure(scale_m, geometry, std::move(e), true);
}

std::size_t DyadicMeasure::support_size() const {
    if (!dense_) return idx_.size();
    std::size_t n = 0;
    for (double v : vals_)
        if (v > 0.0) ++n;
    return n;
}

double DyadicMeasure::mass_at(long long index) const {
    if (geom_ == Geometry::circle) index = mod_reduce(index, 1LL << m_);
    if (dense_) {
        long long i = index - base_;
        if (i < 0 || i >= (long long)vals_.size()) return 0.0;
        return vals_[(std::size_t)i];
    }
    auto it = std::lower_bound(idx_.begin(), idx_.end(), index);
    if (it == idx_.end() || *it != index) return 0.0;
    return mass_[(std::size_t)(it - idx_.begin())];
}

double DyadicMeasure::max_mass() const {
    double mx = 0.0;
    for_each([&](long long, double v) { mx = std::max(mx, v); });
    return mx;
}

void DyadicMeasure::for_each(const std::function<void(long long, double)>& fn) const {
    if (dense_) {
        for (std::size_t i = 0; i < vals_.size(); ++i)
            if (vals_[i] > 0.0) fn(base_ + (long long)i, vals_[i]);
    } else {
        for (std::size_t i = 0; i < idx_.size(); ++i) fn(idx_[i], mass_[i]);
    }
}

std::vector<std::pair<long long, double>> DyadicMeasure::entries() const {
    std::vector<std::pair<long long, double>> out;
    out.reserve(support_size());
    for_each([&](long long k, double v) { out.push_back({k, v}); });
    return out;
}

std::string DyadicMeasure::to_json() const {
    json j;
    j["geometry"] = to_string(geom_);
    j["scale_m"] = m_;
    j["entries"] = json::array();
    for_each([&](long long k, double v) { j["entries"].push_back({k, v}); });
    return j.dump();
}

DyadicMeasure DyadicMeasure::from_json(const std::string& text) {
    json j = json::parse(text);
    std::vector<std::pair<long long, double>> entries;
    for (const auto& e : j.at("entries"))
        entries.push_back({e.at(0).get<long long>(), e.at(1).get<double>()});
    return DyadicMeasure(j.at("scale_m").get<int>(),
                         geometry_from_string(j.at("geometry").get<std::string>()),
                         std::move(entries));
}

DyadicMeasure discretize(const AtomicMeasure& src, int m, Geometry geometry,
                         double window_lo, double window_hi) {
    check_scale(m);
    if (src.size() == 0) throw std::domain_error("discretize: empty measure");
    const double scale = std::ldexp(1.0, m);
    std::vector<std::pair<long long, double>> entries;
    entries.reserve(src.size());
    for (const auto& a : src.atoms()) {
        double x = a.location;
        if (geometry == Geometry::circle) {
            x -= std::floor(x);
        } else if (x < window_lo || x >= window_hi) {
            throw std::range_error("discretize: location " + std::to_string(x) +
                                   " outside window [" + std::to_string(window_lo) + ", " +
                                   std::to_string(window_hi) + ")");
        }
        entries.push_back({(long long)std::floor(x * scale), a.mass});
    }
    const bool prob = std::fabs(src.total_mass() - 1.0) <= 1e-10;
    return DyadicMeasure(m, geometry, std::move(entries), prob);
}

double lq_norm(const DyadicMeasure& dm, double q) {
    if (std::isinf(q) && q > 0) return dm.max_mass();
    if (!(q > 1.0)) throw std::domain_error("lq_norm: q must exceed 1");
    double s = 0.0;
    if (q == 2.0) {
        dm.for_each([&](long long, double v) { s += v * v; });
    } else {
        dm.for_each([&](long long, double v) { s += std::pow(v, q); });
    }
    return s;
}

double lq_norm(const std::vector<double>& masses, double q) {
    if (std::isinf(q) && q > 0) {
        double mx = 0.0;
        for (double v : masses) mx = std::max(mx, v);
        return mx;
    }
    if (!(q > 1.0)) throw std::domain_error("lq_norm: q must exceed 1");
    double s = 0.0;
    for (double v : masses) s += std::pow(v, q);
    return s;
}

DyadicMeasure convolve(const DyadicMeasure& a, const DyadicMeasure& b) {
    if (a.scale_m() != b.scale_m())
        throw std::invalid_argument("convolve: scale mismatch " + std::to_string(a.scale_m()) +
                                    " vs " + std::to_string(b.scale_m()));
    if (a.geometry() != b.geometry())
        throw std::invalid_argument("convolve: geometry mismatch");
    const int m = a.scale_m();
    const Geometry geom = a.geometry();
    const std::size_t na = a.support_size(), nb = b.support_size();
    if (na == 0 || nb == 0) throw std::domain_error("convolve: empty measure");

    if (na * nb <= DyadicMeasure::kDirectConvolutionCap) {
        const auto ea = a.entries();
        const auto eb = b.entries();
        std::vector<std::pair<long long, double>> out;
        out.reserve(na * nb);
        for (const auto& [ka, va] : ea)
            for (const auto& [kb, vb] : eb) out.push_back({ka + kb, va * vb});
        return DyadicMeasure(m, geom, std::move(out));
    }

    // FFT path
    const double want_total = a.total_mass() * b.total_mass();
    std::vector<double> conv;
    long long out_base = 0;
    if (geom == Geometry::circle) {
        const long long n = 1LL << m;
        if (n > (1LL << 26)) throw CapacityError("convolve: FFT size exceeds 2^26");
        std::vector<double> xa((std::size_t)n, 0.0), xb((std::size_t)n, 0.0);
        a.for_each([&](long long k, double v) { xa[(std::size_t)k] += v; });
        b.for_each([&](long long k, double v) { xb[(std::size_t)k] += v; });
        conv = fft_convolve_circular(xa, xb);
    } else {
        const auto ea = a.entries();
        const auto eb = b.entries();
        const long long base_a = ea.front().first, base_b = eb.front().first;
        const long long span_a = ea.back().first - base_a + 1;
        const long long span_b = eb.back().first - base_b + 1;
        const std::size_t n = next_pow2((std::size_t)(span_a + span_b - 1));
        if (n > ((std::size_t)1 << 26)) throw CapacityError("convolve: FFT size exceeds 2^26");
        std::vector<double> xa(n, 0.0), xb(n, 0.0);
        for (const auto& [k, v] : ea) xa[(std::size_t)(k - base_a)] += v;
        for (const auto& [k, v] : eb) xb[(std::size_t)(k - base_b)] += v;
        conv = fft_convolve_circular(xa, xb);
        out_base = base_a + base_b;
    }
    std::vector<std::pair<long long, double>> entries;
    double got = 0.0;
    for (std::size_t i = 0; i < conv.size(); ++i) {
        if (conv[i] > 1e-14) {
            entries.push_back({out_base + (long long)i, conv[i]});
            got += conv[i];
        }
    }
    if (entries.empty()) throw std::runtime_error("convolve: FFT produced empty result");
    const double fix = want_total / got;
    for (auto& [k, v] : entries) v *= fix;
    return DyadicMeasure(m, geom, std::move(entries));
}

DyadicMeasure restrict_normalize(const DyadicMeasure& dm, int s, long long j) {
    if (s < 0 || s > dm.scale_m())
        throw std::invalid_argument("restrict_normalize: interval scale must satisfy 0 <= s <= m");
    const long long block = 1LL << (dm.scale_m() - s);
    std::vector<std::pair<long long, double>> kept;
    double total = 0.0;
    dm.for_each([&](long long k, double v) {
        if (floor_div(k, block) == j) {
            kept.push_back({k, v});
            total += v;
        }
    });
    if (kept.empty() || total <= 0.0)
        throw std::domain_error("restrict_normalize: interval carries no mass");
    for (auto& [k, v] : kept) v /= total;
    return DyadicMeasure(dm.scale_m(), dm.geometry(), std::move(kept));
}

DyadicMeasure coarsen(const DyadicMeasure& dm, int m_coarse) {
    if (m_coarse < 0 || m_coarse > dm.scale_m())
        throw std::invalid_argument("coarsen: target scale must satisfy 0 <= m' <= m");
    if (m_coarse == dm.scale_m()) return dm;
    const long long block = 1LL << (dm.scale_m() - m_coarse);
    std::vector<std::pair<long long, double>> entries;
    dm.for_each([&](long long k, double v) { entries.push_back({floor_div(k, block), v}); });
    return DyadicMeasure(m_coarse, dm.geometry(), std::move(entries));
}

} // namespace flq
