#include "flq/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace flq {

namespace {

constexpr double kRelTol = 1e-9;

// eps-grid cells [k eps, (k+1) eps) meeting the half-open interval [lo, hi).
// Boundary touches within a relative tolerance do not spill into neighbours.
void mark_range(double lo, double hi, double eps, std::vector<long long>& out) {
    const long long k_lo = (long long)std::floor(lo / eps + kRelTol);
    long long k_hi = (long long)std::ceil(hi / eps - kRelTol) - 1;
    if (k_hi < k_lo) k_hi = k_lo;
    for (long long k = k_lo; k <= k_hi; ++k) out.push_back(k);
}

std::vector<long long> dedupe(std::vector<long long> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

double CantorCells::scale() const { return std::pow((double)base, -(double)depth); }

CantorCells cantor_cells(int p, const std::vector<int>& digits, int n, std::size_t cell_cap) {
    if (p < 2) throw std::invalid_argument("cantor_cells: base must be at least 2");
    if (n < 0) throw std::invalid_argument("cantor_cells: depth must be nonnegative");
    if (digits.empty()) throw std::invalid_argument("cantor_cells: empty digit set");
    for (int d : digits)
        if (d < 0 || d >= p) throw std::invalid_argument("cantor_cells: digit outside [0, p)");
    double count = 1.0;
    for (int i = 0; i < n; ++i) count *= (double)digits.size();
    if (count > (double)cell_cap) throw CapacityError("cantor_cells: cell count exceeds cap");
    std::vector<long long> cells{0};
    for (int i = 0; i < n; ++i) {
        std::vector<long long> next;
        next.reserve(cells.size() * digits.size());
        for (long long c : cells)
            for (int d : digits) next.push_back(c * p + d);
        cells = std::move(next);
    }
    CantorCells out;
    out.base = p;
    out.depth = n;
    out.cells = dedupe(std::move(cells));
    return out;
}

long long intersect_affine(const CantorCells& a, const CantorCells& b, double t, double u,
                           double eps) {
    if (a.scale() > eps * (1.0 + kRelTol) || b.scale() > eps * (1.0 + kRelTol))
        throw std::invalid_argument("intersect_affine: cell scales must not exceed eps");
    std::vector<long long> ka, kb;
    const double sa = a.scale(), sb = b.scale();
    for (long long c : a.cells) mark_range((double)c * sa, (double)(c + 1) * sa, eps, ka);
    for (long long c : b.cells) {
        double lo = t * (double)c * sb + u;
        double hi = t * (double)(c + 1) * sb + u;
        if (lo > hi) std::swap(lo, hi);
        mark_range(lo, hi, eps, kb);
    }
    ka = dedupe(std::move(ka));
    kb = dedupe(std::move(kb));
    std::vector<long long> both;
    std::set_intersection(ka.begin(), ka.end(), kb.begin(), kb.end(), std::back_inserter(both));
    return (long long)both.size();
}

long long intersect_affine_oracle(const CantorCells& a, const CantorCells& b, double t, double u,
                                  double eps) {
    // per-eps-cell membership testing against the raw interval lists
    std::set<long long> ka, kb;
    const double sa = a.scale(), sb = b.scale();
    for (long long c : a.cells) {
        std::vector<long long> tmp;
        mark_range((double)c * sa, (double)(c + 1) * sa, eps, tmp);
        ka.insert(tmp.begin(), tmp.end());
    }
    for (long long c : b.cells) {
        double lo = t * (double)c * sb + u;
        double hi = t * (double)(c + 1) * sb + u;
        if (lo > hi) std::swap(lo, hi);
        std::vector<long long> tmp;
        mark_range(lo, hi, eps, tmp);
        kb.insert(tmp.begin(), tmp.end());
    }
    long long n = 0;
    for (long long k : ka)
        if (kb.count(k)) ++n;
    return n;
}

ExponentFit exponent_fit(const std::vector<std::pair<double, long long>>& counts) {
    if (counts.size() < 3) throw std::invalid_argument("exponent_fit: need at least 3 points");
    for (std::size_t i = 0; i + 1 < counts.size(); ++i)
        if (!(counts[i].first > counts[i + 1].first))
            throw std::invalid_argument("exponent_fit: eps must be strictly decreasing");
    // finest half of the scales
    const std::size_t from = counts.size() / 2;
    std::vector<double> xs, ys;
    for (std::size_t i = from; i < counts.size(); ++i) {
        xs.push_back(std::log(1.0 / counts[i].first));
        ys.push_back(std::log((double)std::max<long long>(counts[i].second, 1)));
    }
    const std::size_t n = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= (double)n;
    my /= (double)n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.unstable = fit.r2 < 0.9;
    return fit;
}

CellSet2D planar_attractor(double lambda, double alpha,
                           const std::vector<std::pair<double, double>>& translations, int n,
                           std::size_t cell_cap) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("planar_attractor: lambda must lie in (0,1)");
    if (translations.empty()) throw std::invalid_argument("planar_attractor: no translations");
    if (n < 0) throw std::invalid_argument("planar_attractor: depth must be nonnegative");
    if (std::pow(lambda, (double)n) < std::ldexp(1.0, -40))
        throw std::invalid_argument("planar_attractor: lambda^n below the 2^-40 resolution floor");
    double words = 1.0;
    for (int i = 0; i < n; ++i) words *= (double)translations.size();
    if (words * 4.0 > (double)cell_cap)
        throw CapacityError("planar_attractor: cell count exceeds cap");

    // attractor bounding box: |y| <= M/(1-lambda) componentwise via rotation-
    // safe radius; for alpha = 0 the componentwise bound is exact
    double lo_x, hi_x, lo_y, hi_y;
    if (alpha == 0.0) {
        double tx_lo = 0, tx_hi = 0, ty_lo = 0, ty_hi = 0;
        for (const auto& [tx, ty] : translations) {
            tx_lo = std::min(tx_lo, tx);
            tx_hi = std::max(tx_hi, tx);
            ty_lo = std::min(ty_lo, ty);
            ty_hi = std::max(ty_hi, ty);
        }
        lo_x = tx_lo / (1.0 - lambda);
        hi_x = tx_hi / (1.0 - lambda);
        lo_y = ty_lo / (1.0 - lambda);
        hi_y = ty_hi / (1.0 - lambda);
    } else {
        double r = 0.0;
        for (const auto& [tx, ty] : translations) r = std::max(r, std::hypot(tx, ty));
        r /= (1.0 - lambda);
        lo_x = lo_y = -r;
        hi_x = hi_y = r;
    }
    const double side = std::max(hi_x - lo_x, hi_y - lo_y);
    CellSet2D out;
    out.scale = std::pow(lambda, (double)n) * side;
    out.origin_x = lo_x;
    out.origin_y = lo_y;
    if (side <= 0.0) { // single-point attractor
        out.scale = std::pow(lambda, (double)n);
        out.cells = {{0, 0}};
        return out;
    }

    const double ca = std::cos(alpha), sa = std::sin(alpha);
    std::vector<std::pair<long long, long long>> cells;
    // DFS over words, carrying the affine image c + lambda^k R^k applied so far
    struct Frame {
        double cx, cy;   // accumulated translation
        double rc, rs;   // cos/sin of accumulated rotation times lambda^k
        int depth;
    };
    std::vector<Frame> stack{{0.0, 0.0, 1.0, 0.0, 0}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.depth == n) {
            // cylinder bounding box: image of the attractor box corners
            double bx_lo = std::numeric_limits<double>::infinity(), bx_hi = -bx_lo;
            double by_lo = bx_lo, by_hi = -bx_lo;
            const double xs[2] = {lo_x, hi_x}, ys[2] = {lo_y, hi_y};
            for (double x : xs)
                for (double y : ys) {
                    const double px = f.cx + f.rc * x - f.rs * y;
                    const double py = f.cy + f.rs * x + f.rc * y;
                    bx_lo = std::min(bx_lo, px);
                    bx_hi = std::max(bx_hi, px);
                    by_lo = std::min(by_lo, py);
                    by_hi = std::max(by_hi, py);
                }
            std::vector<long long> kx, ky;
            mark_range(bx_lo - lo_x, bx_hi - lo_x, out.scale, kx);
            mark_range(by_lo - lo_y, by_hi - lo_y, out.scale, ky);
            for (long long i : kx)
                for (long long j : ky) cells.push_back({i, j});
            continue;
        }
        // push children in reverse so the leftmost translation is explored first
        for (std::size_t i = translations.size(); i-- > 0;) {
            const auto& [tx, ty] = translations[i];
            Frame g;
            g.cx = f.cx + f.rc * tx - f.rs * ty;
            g.cy = f.cy + f.rs * tx + f.rc * ty;
            g.rc = lambda * (f.rc * ca - f.rs * sa);
            g.rs = lambda * (f.rs * ca + f.rc * sa);
            g.depth = f.depth + 1;
            stack.push_back(g);
        }
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    out.cells = std::move(cells);
    return out;
}

CellSet2D product_cells(const CantorCells& a, const CantorCells& b) {
    if (a.base != b.base || a.depth != b.depth)
        throw std::invalid_argument("product_cells: mismatched base or depth");
    CellSet2D out;
    out.scale = a.scale();
    out.origin_x = 0.0;
    out.origin_y = 0.0;
    out.cells.reserve(a.cells.size() * b.cells.size());
    for (long long i : a.cells)
        for (long long j : b.cells) out.cells.push_back({i, j});
    std::sort(out.cells.begin(), out.cells.end());
    return out;
}

namespace {

// distance criterion: the closed box meets the closed eps-neighbourhood of
// the line g(p) = <p, unit> - offset = 0
bool box_meets_line(double x_lo, double x_hi, double y_lo, double y_hi, double ux, double uy,
                    double offset, double eps) {
    double g_min = std::numeric_limits<double>::infinity(), g_max = -g_min;
    const double xs[2] = {x_lo, x_hi}, ys[2] = {y_lo, y_hi};
    for (double x : xs)
        for (double y : ys) {
            const double g = ux * x + uy * y - offset;
            g_min = std::min(g_min, g);
            g_max = std::max(g_max, g);
        }
    if (g_min <= 0.0 && g_max >= 0.0) return true;
    return std::min(std::fabs(g_min), std::fabs(g_max)) <= eps * (1.0 + kRelTol);
}

std::vector<std::pair<long long, long long>> eps_cells_of(const CellSet2D& cells, double eps) {
    std::vector<std::pair<long long, long long>> out;
    for (const auto& [i, j] : cells.cells) {
        std::vector<long long> kx, ky;
        mark_range((double)i * cells.scale, (double)(i + 1) * cells.scale, eps, kx);
        mark_range((double)j * cells.scale, (double)(j + 1) * cells.scale, eps, ky);
        for (long long x : kx)
            for (long long y : ky) out.push_back({x, y});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

long long slice_count(const CellSet2D& cells, double dir_x, double dir_y, double offset,
                      double eps) {
    const double norm = std::hypot(dir_x, dir_y);
    if (norm == 0.0) throw std::invalid_argument("slice_count: zero direction");
    if (eps < cells.scale * (1.0 - kRelTol))
        throw std::invalid_argument("slice_count: eps must be at least the cell scale");
    const double ux = dir_x / norm, uy = dir_y / norm, c = offset / norm;
    long long n = 0;
    for (const auto& [kx, ky] : eps_cells_of(cells, eps)) {
        const double x_lo = cells.origin_x + (double)kx * eps;
        const double y_lo = cells.origin_y + (double)ky * eps;
        // offset is in absolute coordinates; eps cells are anchored at origin
        if (box_meets_line(x_lo, x_lo + eps, y_lo, y_lo + eps, ux, uy, c, eps)) ++n;
    }
    return n;
}

long long slice_count_oracle(const CellSet2D& cells, double dir_x, double dir_y, double offset,
                             double eps) {
    const double norm = std::hypot(dir_x, dir_y);
    if (norm == 0.0) throw std::invalid_argument("slice_count: zero direction");
    const double ux = dir_x / norm, uy = dir_y / norm, c = offset / norm;
    std::set<std::pair<long long, long long>> marked;
    for (const auto& [i, j] : cells.cells) {
        std::vector<long long> kx, ky;
        mark_range((double)i * cells.scale, (double)(i + 1) * cells.scale, eps, kx);
        mark_range((double)j * cells.scale, (double)(j + 1) * cells.scale, eps, ky);
        for (long long x : kx)
            for (long long y : ky) marked.insert({x, y});
    }
    long long n = 0;
    for (const auto& [kx, ky] : marked) {
        const double x_lo = cells.origin_x + (double)kx * eps;
        const double y_lo = cells.origin_y + (double)ky * eps;
        if (box_meets_line(x_lo, x_lo + eps, y_lo, y_lo + eps, ux, uy, c, eps)) ++n;
    }
    return n;
}

AtomicMeasure project_measure(const std::vector<PlanarAtom>& atoms, double dir_x, double dir_y) {
    if (dir_x == 0.0 && dir_y == 0.0)
        throw std::invalid_argument("project_measure: zero direction");
    if (atoms.empty()) throw std::invalid_argument("project_measure: no atoms");
    std::vector<Atom> out;
    out.reserve(atoms.size());
    for (const auto& p : atoms) out.push_back({dir_x * p.x + dir_y * p.y, p.mass});
    return AtomicMeasure(std::move(out));
}

SumsetDimension sumset_dimension(const CantorCells& a, const CantorCells& b,
                                 const std::vector<double>& eps_grid) {
    SumsetDimension out;
    const double sa = a.scale(), sb = b.scale();
    for (double eps : eps_grid) {
        std::vector<long long> marks;
        for (long long ca : a.cells)
            for (long long cb : b.cells)
                mark_range((double)ca * sa + (double)cb * sb,
                           (double)(ca + 1) * sa + (double)(cb + 1) * sb, eps, marks);
        marks = dedupe(std::move(marks));
        out.counts.push_back({eps, (long long)marks.size()});
    }
    out.fit = exponent_fit(out.counts);
    return out;
}

} // namespace flq
