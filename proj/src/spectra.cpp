#include "flq/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace flq {

using nlohmann::json;

namespace {

int regression_start(int m_min, int m_max) { return m_min + (m_max - m_min + 1) / 2; }

void check_scale_range(int m_min, int m_max) {
    if (!(4 <= m_min && m_min < m_max && m_max <= DyadicMeasure::kSparseScaleCap))
        throw std::invalid_argument("scale range must satisfy 4 <= m_min < m_max <= 60");
}

double fit_regression_tau(const std::vector<int>& scales, const std::vector<double>& raw,
                          int m_min, int m_max) {
    const int from = regression_start(m_min, m_max);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (scales[i] >= from) {
            xs.push_back((double)scales[i]);
            ys.push_back(raw[i]);
        }
    }
    return regression_slope(xs, ys);
}

} // namespace

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("regression_slope: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= (double)x.size();
    my /= (double)x.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    if (den == 0.0) throw std::invalid_argument("regression_slope: degenerate abscissae");
    return num / den;
}

const std::vector<double>& default_q_grid() {
    static const std::vector<double> grid = {1.01, 1.1, 1.5, 2, 3, 4, 6, 8, 12, 20};
    return grid;
}

std::string SpectrumReport::csv_header() {
    return "q,m,tau_single,tau_regression,dimension,theoretical";
}

std::string SpectrumReport::to_csv_rows() const {
    std::ostringstream os;
    os.precision(12);
    for (std::size_t i = 0; i < scales.size(); ++i) {
        os << q << ',' << scales[i] << ',' << per_scale[i] << ',' << regression_tau << ','
           << lq_dimension() << ',';
        if (theoretical_tau)
            os << *theoretical_tau;
        else
            os << "nan";
        os << '\n';
    }
    return os.str();
}

std::string SpectrumReport::to_json() const {
    json j;
    j["q"] = q;
    j["per_scale"] = json::array();
    for (std::size_t i = 0; i < scales.size(); ++i)
        j["per_scale"].push_back({{"m", scales[i]},
                                  {"value", per_scale[i]},
                                  {"raw_neglog", raw_neglog[i]}});
    j["regression_tau"] = regression_tau;
    j["lq_dimension"] = lq_dimension();
    if (theoretical_tau) j["theoretical_tau"] = *theoretical_tau;
    return j.dump();
}

SpectrumReport empirical_tau(const DyadicMeasure& dm, double q, int m_min, int m_max) {
    check_scale_range(m_min, m_max);
    if (!(q > 1.0)) throw std::domain_error("empirical_tau: q must exceed 1");
    if (m_max > dm.scale_m())
        throw std::invalid_argument("empirical_tau: m_max exceeds the measure scale");
    SpectrumReport rep;
    rep.q = q;
    for (int m = m_min; m <= m_max; ++m) {
        const double s = lq_norm(coarsen(dm, m), q);
        rep.scales.push_back(m);
        rep.raw_neglog.push_back(-std::log2(s));
        rep.per_scale.push_back(-std::log2(s) / (double)m);
    }
    rep.regression_tau = fit_regression_tau(rep.scales, rep.raw_neglog, m_min, m_max);
    return rep;
}

namespace {

// Map atoms into [0,1) by the affine renormalization fixed by the model
// support bounds, then discretize on the line.
DyadicMeasure discretize_renormalized(const AtomicMeasure& atoms, int m, double lo, double hi) {
    const double span = (hi - lo) * (1.0 + 1e-12);
    std::vector<Atom> mapped;
    mapped.reserve(atoms.size());
    for (const auto& a : atoms.atoms()) mapped.push_back({(a.location - lo) / span, a.mass});
    return discretize(AtomicMeasure(std::move(mapped)), m, Geometry::line);
}

} // namespace

SpectrumReport empirical_tau(const Model& model, const ModelState& x, double q, int m_min,
                             int m_max, int stage_margin, std::size_t atom_cap) {
    check_scale_range(m_min, m_max);
    if (!(q > 1.0)) throw std::domain_error("empirical_tau: q must exceed 1");
    double lo, hi;
    model.support_bounds(lo, hi);
    SpectrumReport rep;
    rep.q = q;
    for (int m = m_min; m <= m_max; ++m) {
        const long long n = stage_for_scale(model.lambda(), m, stage_margin);
        const AtomicMeasure atoms = generate_atoms(model, x, n, atom_cap);
        const double s = lq_norm(discretize_renormalized(atoms, m, lo, hi), q);
        rep.scales.push_back(m);
        rep.raw_neglog.push_back(-std::log2(s));
        rep.per_scale.push_back(-std::log2(s) / (double)m);
    }
    rep.regression_tau = fit_regression_tau(rep.scales, rep.raw_neglog, m_min, m_max);
    try {
        rep.theoretical_tau = (q - 1.0) * theoretical_dimension(model, q);
    } catch (const std::exception&) {
        rep.theoretical_tau = std::nullopt;
    }
    return rep;
}

SpectrumReport empirical_tau(const NonHomIFS& ifs, double q, int m_min, int m_max,
                             int stage_margin, std::size_t word_cap) {
    check_scale_range(m_min, m_max);
    if (!(q > 1.0)) throw std::domain_error("empirical_tau: q must exceed 1");
    double lo, hi;
    ifs.support_bounds(lo, hi);
    SpectrumReport rep;
    rep.q = q;
    for (int m = m_min; m <= m_max; ++m) {
        const NonHomStage stage = generate_nonhom(ifs, m + stage_margin, word_cap);
        const double s = lq_norm(discretize_renormalized(stage.measure, m, lo, hi), q);
        rep.scales.push_back(m);
        rep.raw_neglog.push_back(-std::log2(s));
        rep.per_scale.push_back(-std::log2(s) / (double)m);
    }
    rep.regression_tau = fit_regression_tau(rep.scales, rep.raw_neglog, m_min, m_max);
    rep.theoretical_tau = tau_tilde(ifs, q).clamped_dimension * (q - 1.0);
    return rep;
}

double theoretical_tau_homogeneous(const AtomicMeasure& delta, double lambda, double q) {
    if (!(q > 1.0)) throw std::domain_error("theoretical_tau_homogeneous: q must exceed 1");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("theoretical_tau_homogeneous: lambda in (0,1)");
    double s = 0.0;
    for (const auto& a : delta.atoms()) s += std::pow(a.mass, q);
    const double dim = std::log2(s) / ((q - 1.0) * std::log2(lambda));
    return (q - 1.0) * std::min(dim, 1.0);
}

TauTildeResult tau_tilde(const NonHomIFS& ifs, double q) {
    ifs.validate();
    if (!(q > 1.0)) throw std::domain_error("tau_tilde: q must exceed 1");
    auto g = [&](double tau) {
        double s = 0.0;
        for (std::size_t i = 0; i < ifs.maps.size(); ++i)
            s += std::pow(ifs.weights[i], q) * std::pow(ifs.maps[i].lambda, -tau);
        return s;
    };
    // g is strictly increasing with g(0) = sum p^q <= 1; expand the bracket
    double lo = 0.0, hi = 1.0;
    while (g(hi) < 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("tau_tilde: failed to bracket the root");
    }
    // bisection with Newton refinement
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 1.0 ? lo : hi) = mid;
    }
    double tau = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        double gp = 0.0;
        for (std::size_t i = 0; i < ifs.maps.size(); ++i)
            gp += std::pow(ifs.weights[i], q) * std::pow(ifs.maps[i].lambda, -tau) *
                  std::log(1.0 / ifs.maps[i].lambda);
        const double step = (g(tau) - 1.0) / gp;
        tau -= step;
        if (std::fabs(step) < 1e-16) break;
    }
    TauTildeResult out;
    out.tau_tilde = tau;
    out.clamped_dimension = std::min(tau / (q - 1.0), 1.0);
    out.residual = std::fabs(g(tau) - 1.0);
    return out;
}

LegendreResult legendre(const std::vector<std::pair<double, double>>& tau_samples, double alpha) {
    if (tau_samples.size() < 8)
        throw std::invalid_argument("legendre: need at least 8 sample points");
    auto samples = tau_samples;
    std::sort(samples.begin(), samples.end());
    // concavity: chord slopes must be non-increasing up to tolerance
    std::vector<double> slopes;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const double dq = samples[i + 1].first - samples[i].first;
        if (!(dq > 0)) throw std::invalid_argument("legendre: duplicate q values");
        slopes.push_back((samples[i + 1].second - samples[i].second) / dq);
    }
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i)
        if (slopes[i + 1] > slopes[i] + 1e-6)
            throw std::invalid_argument("legendre: samples are not concave");

    LegendreResult out;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = alpha * samples[i].first - samples[i].second;
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    out.value = best;
    out.attaining_q = samples[best_i].first;
    out.boundary_attained = best_i == 0 || best_i + 1 == samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out.grid_q.push_back(samples[i].first);
        std::size_t a = i == 0 ? 0 : i - 1;
        std::size_t b = i + 1 == samples.size() ? i : i + 1;
        out.grid_alpha.push_back((samples[b].second - samples[a].second) /
                                 (samples[b].first - samples[a].first));
    }
    return out;
}

FrostmanReport frostman_exponent(const std::vector<DyadicMeasure>& measures_by_scale,
                                 std::optional<std::pair<double, double>> q_and_s) {
    if (measures_by_scale.size() < 2)
        throw std::invalid_argument("frostman_exponent: need at least two scales");
    FrostmanReport rep;
    std::vector<double> xs, ys;
    for (const auto& dm : measures_by_scale) {
        const int m = dm.scale_m();
        const double a = -std::log2(dm.max_mass()) / (double)m;
        rep.scales.push_back(m);
        rep.per_scale.push_back(a);
    }
    const int m_min = *std::min_element(rep.scales.begin(), rep.scales.end());
    const int m_max = *std::max_element(rep.scales.begin(), rep.scales.end());
    const int from = regression_start(m_min, m_max);
    for (std::size_t i = 0; i < rep.scales.size(); ++i) {
        if (rep.scales[i] >= from) {
            xs.push_back((double)rep.scales[i]);
            ys.push_back(-std::log2(measures_by_scale[i].max_mass()));
        }
    }
    rep.slope = xs.size() >= 2 ? regression_slope(xs, ys) : rep.per_scale.back();
    if (q_and_s) rep.implied_bound = (1.0 - 1.0 / q_and_s->first) * q_and_s->second;
    return rep;
}

double streamed_conv_lq_moment(const AtomicMeasure& left, double scale,
                               const AtomicMeasure& right, int m, double q, double lo,
                               double span) {
    if (!(scale > 0.0)) throw std::invalid_argument("streamed_conv_lq_moment: scale must be positive");
    const auto& la = left.atoms();
    const auto& ra = right.atoms();
    const double grid = std::ldexp(1.0, m);
    auto cell_of = [&](double a, double b) {
        return (long long)std::floor(((a + scale * b) - lo) / span * grid);
    };
    struct Head {
        double value;
        std::uint32_t li, rj;
    };
    auto cmp = [](const Head& a, const Head& b) { return a.value > b.value; };
    std::priority_queue<Head, std::vector<Head>, decltype(cmp)> heap(cmp);
    for (std::uint32_t i = 0; i < la.size(); ++i)
        heap.push({la[i].location + scale * ra[0].location, i, 0});
    double total = 0.0, cell_mass = 0.0;
    long long cur_cell = std::numeric_limits<long long>::min();
    while (!heap.empty()) {
        Head h = heap.top();
        heap.pop();
        const long long c = cell_of(la[h.li].location, ra[h.rj].location);
        if (c != cur_cell) {
            if (cell_mass > 0.0) total += std::pow(cell_mass, q);
            cur_cell = c;
            cell_mass = 0.0;
        }
        cell_mass += la[h.li].mass * ra[h.rj].mass;
        if (h.rj + 1 < ra.size())
            heap.push({la[h.li].location + scale * ra[h.rj + 1].location, h.li, h.rj + 1});
    }
    if (cell_mass > 0.0) total += std::pow(cell_mass, q);
    return total;
}

namespace {

// phi_n at state x: q-th moment of the discretization of mu_{x, n+margin}
// at scale m(n), renormalized into [0,1).
double phi_value(const Model& model, const ModelState& x, double q, long long n, int margin,
                 std::size_t atom_cap, double lo, double hi) {
    const int m = (int)std::ceil((double)n * std::log2(1.0 / model.lambda()) - 1e-9);
    const long long N = n + margin;
    const double span = (hi - lo) * (1.0 + 1e-12);
    const double bound = atom_count_upper_bound(model, x, N);
    if (bound <= (double)DyadicMeasure::kDirectConvolutionCap) {
        const AtomicMeasure atoms = generate_atoms(model, x, N, atom_cap);
        return lq_norm(discretize_renormalized(atoms, m, lo, hi), q);
    }
    // split by self-similarity and stream the product
    const long long n1 = N / 2, n2 = N - n1;
    const AtomicMeasure a = generate_atoms(model, x, n1, atom_cap);
    const AtomicMeasure b = generate_atoms(model, model.orbit(x, n1), n2, atom_cap);
    if (a.size() * b.size() > ((std::size_t)1 << 31))
        throw CapacityError("cocycle: streamed product too large");
    return streamed_conv_lq_moment(a, std::pow(model.lambda(), (double)n1), b, m, q, lo, span);
}

} // namespace

CocycleReport cocycle_check(const Model& model, const ModelState& x, double q, int n_max,
                            int stage_margin, std::size_t atom_cap) {
    if (n_max < 2) throw std::invalid_argument("cocycle_check: n_max must be at least 2");
    if (!(q > 1.0)) throw std::domain_error("cocycle_check: q must exceed 1");
    double lo, hi;
    model.support_bounds(lo, hi);
    const bool trivial_orbit = model.periods().empty() && model.cyclic_order() == 1;

    // phi at base state for totals up to 2 n_max, and at shifted states for
    // the second factor.
    std::vector<double> log_phi_base(2 * n_max + 1, 0.0);
    for (int n = 1; n <= 2 * n_max; ++n)
        log_phi_base[n] = std::log2(phi_value(model, x, q, n, stage_margin, atom_cap, lo, hi));

    CocycleReport rep;
    rep.n_max = n_max;
    rep.defects.assign((std::size_t)n_max * n_max, 0.0);
    rep.max_defect = -std::numeric_limits<double>::infinity();
    std::vector<double> per_n_max((std::size_t)n_max, -std::numeric_limits<double>::infinity());
    for (int n = 1; n <= n_max; ++n) {
        std::vector<double> log_phi_shift(n_max + 1, 0.0);
        if (trivial_orbit) {
            for (int np = 1; np <= n_max; ++np) log_phi_shift[np] = log_phi_base[np];
        } else {
            const ModelState sx = model.orbit(x, n);
            for (int np = 1; np <= n_max; ++np)
                log_phi_shift[np] =
                    std::log2(phi_value(model, sx, q, np, stage_margin, atom_cap, lo, hi));
        }
        for (int np = 1; np <= n_max; ++np) {
            const double d = log_phi_base[n + np] - log_phi_base[n] - log_phi_shift[np];
            rep.defects[(std::size_t)(n - 1) * n_max + (np - 1)] = d;
            rep.max_defect = std::max(rep.max_defect, d);
            per_n_max[(std::size_t)n - 1] = std::max(per_n_max[(std::size_t)n - 1], d);
        }
    }
    std::vector<double> xs, ys;
    for (int n = 1; n <= n_max; ++n) {
        xs.push_back((double)n);
        ys.push_back(per_n_max[(std::size_t)n - 1]);
    }
    rep.slope_max_vs_n = regression_slope(xs, ys);
    return rep;
}

} // namespace flq
