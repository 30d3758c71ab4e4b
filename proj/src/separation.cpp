#include "flq/separation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace flq {

SolveMode solve_mode_from_string(const std::string& s) {
    if (s == "exact") return SolveMode::exact;
    if (s == "interval") return SolveMode::interval;
    if (s == "float") return SolveMode::floating;
    throw ConfigError("unknown mode: " + s + " (want exact|interval|float)");
}

std::string to_string(SolveMode m) {
    switch (m) {
        case SolveMode::exact: return "exact";
        case SolveMode::interval: return "interval";
        case SolveMode::floating: return "float";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_poly_args(std::size_t n_coeffs, int n) {
    if (n_coeffs < 2) throw std::invalid_argument("min_poly_value: need at least two coefficients");
    if (n < 0) throw std::invalid_argument("min_poly_value: degree must be nonnegative");
}

// Shared search state: incumbent bound, witness, node accounting.
struct SearchShared {
    std::mutex mu;
    double best = kInf;
    std::vector<int> witness;
    std::atomic<unsigned long long> nodes{0};
    unsigned long long budget = kDefaultNodeBudget;

    bool charge_node() { return nodes.fetch_add(1, std::memory_order_relaxed) + 1 <= budget; }
};

// ---------------- float mode ----------------

struct FloatDfs {
    const std::vector<double>* coeffs;
    std::vector<double> powers;  // lambda^0 .. lambda^n
    std::vector<double> tails;   // tails[k] = cmax * sum_{i>=k} lambda^i
    int n = 0;
    SearchShared* shared;
    std::vector<int> choice;

    // Children ordered by |partial + c lambda^k| ascending, ties by
    // coefficient value ascending: the near-cancellation corridor is explored
    // first so the incumbent drops fast and the tail bound prunes the rest.
    void run(int k, double partial, bool nonzero) {
        if (!shared->charge_node())
            throw BudgetError("min_poly_value: node budget exceeded", shared->best,
                              shared->nodes.load());
        if (nonzero && std::fabs(partial) - tails[(std::size_t)k] >= shared->best) return;
        if (k > n) {
            if (!nonzero) return;
            const double v = std::fabs(partial);
            std::lock_guard<std::mutex> lk(shared->mu);
            if (v < shared->best) {
                shared->best = v;
                shared->witness = choice;
            }
            return;
        }
        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(coeffs->size());
        for (std::size_t ci = 0; ci < coeffs->size(); ++ci)
            order.push_back({std::fabs(partial + (*coeffs)[ci] * powers[(std::size_t)k]), ci});
        std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return (*coeffs)[a.second] < (*coeffs)[b.second];
        });
        for (const auto& [key, ci] : order) {
            (void)key;
            const double c = (*coeffs)[ci];
            choice[(std::size_t)k] = (int)ci;
            run(k + 1, partial + c * powers[(std::size_t)k], nonzero || c != 0.0);
        }
        choice[(std::size_t)k] = -1;
    }
};

MinPolyResult min_poly_float(const std::vector<double>& coeff_set, double lambda, int n,
                             unsigned long long budget, int threads) {
    std::vector<double> coeffs = coeff_set;
    std::sort(coeffs.begin(), coeffs.end());
    coeffs.erase(std::unique(coeffs.begin(), coeffs.end()), coeffs.end());
    check_poly_args(coeffs.size(), n);

    SearchShared shared;
    shared.budget = budget;
    double cmax = 0.0;
    for (double c : coeffs) cmax = std::max(cmax, std::fabs(c));
    std::vector<double> powers((std::size_t)n + 1);
    for (int i = 0; i <= n; ++i) powers[(std::size_t)i] = std::pow(lambda, (double)i);
    std::vector<double> tails((std::size_t)n + 2, 0.0);
    for (int k = n; k >= 0; --k)
        tails[(std::size_t)k] = tails[(std::size_t)k + 1] + cmax * powers[(std::size_t)k];

    auto run_branch = [&](std::size_t ci) {
        FloatDfs dfs;
        dfs.coeffs = &coeffs;
        dfs.powers = powers;
        dfs.tails = tails;
        dfs.n = n;
        dfs.shared = &shared;
        dfs.choice.assign((std::size_t)n + 1, -1);
        dfs.choice[0] = (int)ci;
        dfs.run(1, coeffs[ci] * powers[0], coeffs[ci] != 0.0);
    };

    // order top-level branches like interior ones
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t ci = 0; ci < coeffs.size(); ++ci)
        order.push_back({std::fabs(coeffs[ci] * powers[0]), ci});
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return coeffs[a.second] < coeffs[b.second];
    });

    std::exception_ptr err;
    if (threads <= 1 || coeffs.size() < 2) {
        for (const auto& [key, ci] : order) {
            (void)key;
            run_branch(ci);
        }
    } else {
        std::mutex err_mu;
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const int nthreads = std::min<int>(threads, (int)order.size());
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= order.size()) return;
                    try {
                        run_branch(order[i].second);
                    } catch (...) {
                        std::lock_guard<std::mutex> lk(err_mu);
                        if (!err) err = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);

    MinPolyResult out;
    out.value = shared.best;
    out.nodes_visited = shared.nodes.load();
    for (int i = 0; i <= n && !shared.witness.empty(); ++i)
        out.witness.push_back(coeffs[(std::size_t)shared.witness[(std::size_t)i]]);
    return out;
}

// ---------------- exact mode ----------------

struct ExactDfs {
    const std::vector<QuadExt>* coeffs;
    std::vector<QuadExt> powers;
    std::vector<QuadExt> tails;
    int n = 0;
    unsigned long long budget = kDefaultNodeBudget;
    unsigned long long nodes = 0;
    QuadExt best;
    bool have_best = false;
    std::vector<int> choice, witness;

    void run(int k, const QuadExt& partial, bool nonzero) {
        if (++nodes > budget)
            throw BudgetError("min_poly_value: node budget exceeded",
                              have_best ? best.to_double() : kInf, nodes);
        if (nonzero && have_best) {
            const QuadExt slack = partial.abs() - tails[(std::size_t)k];
            if (slack >= best) return;
        }
        if (k > n) {
            if (!nonzero) return;
            const QuadExt v = partial.abs();
            if (!have_best || v < best) {
                best = v;
                have_best = true;
                witness = choice;
            }
            return;
        }
        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(coeffs->size());
        std::vector<QuadExt> nexts;
        nexts.reserve(coeffs->size());
        for (std::size_t ci = 0; ci < coeffs->size(); ++ci) {
            nexts.push_back(partial + (*coeffs)[ci] * powers[(std::size_t)k]);
            order.push_back({std::fabs(nexts.back().to_double()), ci});
        }
        std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return (*coeffs)[a.second].to_double() < (*coeffs)[b.second].to_double();
        });
        for (const auto& [key, ci] : order) {
            (void)key;
            choice[(std::size_t)k] = (int)ci;
            run(k + 1, nexts[ci], nonzero || !(*coeffs)[ci].is_zero());
        }
        choice[(std::size_t)k] = -1;
    }
};

} // namespace

MinPolyResult min_poly_value_exact(const std::vector<QuadExt>& coeff_set, const QuadExt& lambda,
                                   int n, unsigned long long node_budget) {
    std::vector<QuadExt> coeffs = coeff_set;
    std::sort(coeffs.begin(), coeffs.end());
    coeffs.erase(std::unique(coeffs.begin(), coeffs.end()), coeffs.end());
    check_poly_args(coeffs.size(), n);
    if (!(lambda.sign() > 0) || !(lambda < QuadExt(Rational(1))))
        throw std::invalid_argument("min_poly_value: lambda must lie in (0,1)");

    ExactDfs dfs;
    dfs.coeffs = &coeffs;
    dfs.budget = node_budget;
    dfs.n = n;
    dfs.powers.assign((std::size_t)n + 1, QuadExt(Rational(1)));
    for (int i = 1; i <= n; ++i) dfs.powers[(std::size_t)i] = dfs.powers[(std::size_t)i - 1] * lambda;
    QuadExt cmax(Rational(0));
    for (const auto& c : coeffs) cmax = std::max(cmax, c.abs(), [](const QuadExt& a, const QuadExt& b) { return a < b; });
    dfs.tails.assign((std::size_t)n + 2, QuadExt(Rational(0)));
    for (int k = n; k >= 0; --k)
        dfs.tails[(std::size_t)k] = dfs.tails[(std::size_t)k + 1] + cmax * dfs.powers[(std::size_t)k];
    dfs.choice.assign((std::size_t)n + 1, -1);
    dfs.run(0, QuadExt(Rational(0)), false);

    MinPolyResult out;
    out.exact_value = dfs.best;
    out.exact_zero = dfs.best.is_zero();
    out.value = dfs.best.to_double();
    out.nodes_visited = dfs.nodes;
    for (int i = 0; i <= n && !dfs.witness.empty(); ++i)
        out.witness.push_back(coeffs[(std::size_t)dfs.witness[(std::size_t)i]].to_double());
    return out;
}

namespace {

// ---------------- interval mode ----------------

// Horner evaluation in __float128 with a rigorous forward error bound,
// used to refine enclosures that straddle zero at 64 bits.
Interval eval_poly_wide(const std::vector<double>& coeffs, double lambda) {
    const __float128 eps = (__float128)1.93e-34; // 2^-112
    __float128 lam = lambda;
    __float128 v = 0.0;
    __float128 err = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) {
        __float128 prod = v * lam;
        err = err * lam + eps * (prod < 0 ? -prod : prod);
        v = prod + (__float128)coeffs[i];
        err += eps * (v < 0 ? -v : v);
    }
    const double lo = (double)(v - err), hi = (double)(v + err);
    return Interval(std::nextafter(lo, -kInf), std::nextafter(hi, kInf));
}

struct IntervalDfs {
    const std::vector<double>* coeffs;
    std::vector<Interval> powers;
    std::vector<double> tails_hi;
    int n = 0;
    unsigned long long budget = kDefaultNodeBudget;
    unsigned long long nodes = 0;
    double best_hi = kInf;   // certified upper bound on the minimum
    double min_lo = kInf;    // lower bound over explored leaves
    double lambda = 0.5;
    std::vector<int> choice, witness;

    void refine_leaf(Interval& mag) {
        // re-evaluate the current polynomial with 113-bit significands
        std::vector<double> poly((std::size_t)n + 1);
        for (int i = 0; i <= n; ++i) poly[(std::size_t)i] = (*coeffs)[(std::size_t)choice[(std::size_t)i]];
        mag = eval_poly_wide(poly, lambda).magnitude();
    }

    void run(int k, const Interval& partial, bool nonzero) {
        if (++nodes > budget)
            throw BudgetError("min_poly_value: node budget exceeded", best_hi, nodes);
        if (nonzero && partial.magnitude().lo - tails_hi[(std::size_t)k] >= best_hi) return;
        if (k > n) {
            if (!nonzero) return;
            Interval mag = partial.magnitude();
            if (mag.lo <= 0.0 && (mag.hi < best_hi || mag.lo < min_lo)) refine_leaf(mag);
            if (mag.hi < best_hi) {
                best_hi = mag.hi;
                witness = choice;
            }
            min_lo = std::min(min_lo, mag.lo);
            return;
        }
        std::vector<std::pair<double, std::size_t>> order;
        std::vector<Interval> nexts;
        order.reserve(coeffs->size());
        nexts.reserve(coeffs->size());
        for (std::size_t ci = 0; ci < coeffs->size(); ++ci) {
            nexts.push_back(partial + Interval::exact((*coeffs)[ci]) * powers[(std::size_t)k]);
            const double mid = 0.5 * (nexts.back().lo + nexts.back().hi);
            order.push_back({std::fabs(mid), ci});
        }
        std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return (*coeffs)[a.second] < (*coeffs)[b.second];
        });
        for (const auto& [key, ci] : order) {
            (void)key;
            choice[(std::size_t)k] = (int)ci;
            run(k + 1, nexts[ci], nonzero || (*coeffs)[ci] != 0.0);
        }
        choice[(std::size_t)k] = -1;
    }
};

MinPolyResult min_poly_interval(const std::vector<double>& coeff_set, double lambda, int n,
                                unsigned long long budget) {
    std::vector<double> coeffs = coeff_set;
    std::sort(coeffs.begin(), coeffs.end());
    coeffs.erase(std::unique(coeffs.begin(), coeffs.end()), coeffs.end());
    check_poly_args(coeffs.size(), n);

    IntervalDfs dfs;
    dfs.coeffs = &coeffs;
    dfs.budget = budget;
    dfs.n = n;
    dfs.lambda = lambda;
    dfs.powers.assign((std::size_t)n + 1, Interval::exact(1.0));
    for (int i = 1; i <= n; ++i)
        dfs.powers[(std::size_t)i] = dfs.powers[(std::size_t)i - 1] * Interval::exact(lambda);
    double cmax = 0.0;
    for (double c : coeffs) cmax = std::max(cmax, std::fabs(c));
    dfs.tails_hi.assign((std::size_t)n + 2, 0.0);
    for (int k = n; k >= 0; --k)
        dfs.tails_hi[(std::size_t)k] =
            std::nextafter(dfs.tails_hi[(std::size_t)k + 1] + cmax * dfs.powers[(std::size_t)k].hi, kInf);
    dfs.choice.assign((std::size_t)n + 1, -1);
    dfs.run(0, Interval::exact(0.0), false);

    MinPolyResult out;
    out.value = dfs.best_hi;
    out.enclosure = Interval(std::min(dfs.min_lo, dfs.best_hi), dfs.best_hi);
    out.nodes_visited = dfs.nodes;
    for (int i = 0; i <= n && !dfs.witness.empty(); ++i)
        out.witness.push_back(coeffs[(std::size_t)dfs.witness[(std::size_t)i]]);
    return out;
}

} // namespace

MinPolyResult min_poly_value(const std::vector<double>& coeff_set, double lambda, int n,
                             SolveMode mode, unsigned long long node_budget, int threads) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("min_poly_value: lambda must lie in (0,1)");
    switch (mode) {
        case SolveMode::floating:
            return min_poly_float(coeff_set, lambda, n, node_budget, threads);
        case SolveMode::interval:
            return min_poly_interval(coeff_set, lambda, n, node_budget);
        case SolveMode::exact: {
            std::vector<QuadExt> coeffs;
            coeffs.reserve(coeff_set.size());
            for (double c : coeff_set) coeffs.push_back(QuadExt(Rational::from_double(c)));
            return min_poly_value_exact(coeffs, QuadExt(Rational::from_double(lambda)), n,
                                        node_budget);
        }
    }
    throw std::logic_error("unreachable");
}

std::vector<double> difference_set(const std::vector<double>& digits) {
    std::vector<double> out;
    out.reserve(digits.size() * digits.size());
    for (double a : digits)
        for (double b : digits) out.push_back(a - b);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) { return std::fabs(a - b) <= 1e-14; }),
              out.end());
    return out;
}

std::vector<QuadExt> difference_set(const std::vector<QuadExt>& digits) {
    std::vector<QuadExt> out;
    for (const auto& a : digits)
        for (const auto& b : digits) out.push_back(a - b);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

GapResult min_atom_gap(const AtomicMeasure& am) {
    if (am.size() < 2) throw std::domain_error("min_atom_gap: need at least two atoms");
    double gap = kInf;
    const auto& a = am.atoms();
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
        gap = std::min(gap, a[i + 1].location - a[i].location);
    return {gap, am.merge_count()};
}

GapResult min_atom_gap(const ExactAtomicMeasure& am) {
    if (am.size() < 2) throw std::domain_error("min_atom_gap: need at least two atoms");
    const auto& a = am.atoms();
    QuadExt gap = a[1].location - a[0].location;
    for (std::size_t i = 1; i + 1 < a.size(); ++i)
        gap = std::min(gap, a[i + 1].location - a[i].location,
                       [](const QuadExt& x, const QuadExt& y) { return x < y; });
    return {gap.to_double(), am.overlap_count()};
}

std::string SeparationProfile::to_csv_rows() const {
    std::ostringstream os;
    os.precision(12);
    for (const auto& r : per_n)
        os << r.n << ',' << r.min_gap << ',' << r.threshold << ',' << (r.passes ? 1 : 0) << '\n';
    return os.str();
}

SeparationProfile separation_profile(const Model& model, const ModelState& x, long long n_max,
                                     double R, SolveMode mode, std::size_t atom_cap) {
    if (n_max < 1) throw std::invalid_argument("separation_profile: n_max must be positive");
    SeparationProfile prof;
    prof.mode = mode;
    for (long long n = 1; n <= n_max; ++n) {
        SeparationProfile::Row row;
        row.n = n;
        row.threshold = std::pow(model.lambda(), R * (double)n);
        if (mode == SolveMode::exact) {
            const ExactAtomicMeasure atoms = generate_atoms_exact(model, x, n, atom_cap);
            if (atoms.size() < 2) {
                row.min_gap = 0.0;
                row.overlap_count = atoms.overlap_count();
                row.passes = false;
            } else {
                const GapResult g = min_atom_gap(atoms);
                row.min_gap = g.gap;
                row.overlap_count = g.overlaps;
                row.passes = g.overlaps == 0 && g.gap >= row.threshold * (1.0 - 1e-12);
            }
        } else if (mode == SolveMode::floating) {
            const AtomicMeasure atoms = generate_atoms(model, x, n, atom_cap);
            if (atoms.size() < 2) {
                row.min_gap = 0.0;
                row.overlap_count = atoms.merge_count();
                row.passes = false;
            } else {
                const GapResult g = min_atom_gap(atoms);
                row.min_gap = g.gap;
                row.overlap_count = g.overlaps; // gap-below-tolerance merges
                row.passes = g.overlaps == 0 && g.gap >= row.threshold * (1.0 - 1e-12);
            }
        } else {
            // certified bound through the polynomial route; homogeneous only
            if (model.kind() != ModelKind::selfsimilar)
                throw std::invalid_argument(
                    "separation_profile: interval mode requires a selfsimilar model");
            std::vector<double> digits;
            for (const auto& a : model.base_symbol().atoms()) digits.push_back(a.location);
            if (n == 1 && digits.size() < 2) {
                row.min_gap = 0.0;
                row.passes = false;
            } else {
                const MinPolyResult r = min_poly_value(difference_set(digits), model.lambda(),
                                                       (int)n - 1, SolveMode::interval);
                row.min_gap = r.enclosure->lo;
                row.overlap_count = 0;
                row.passes = r.enclosure->lo >= row.threshold;
            }
        }
        if (!row.passes && prof.first_failure < 0) prof.first_failure = n;
        prof.per_n.push_back(row);
    }
    prof.verdict = prof.first_failure < 0 ? "certified to n=" + std::to_string(n_max)
                                          : "fails at n=" + std::to_string(prof.first_failure);
    return prof;
}

std::vector<ScanPoint> superexp_scan(const std::vector<double>& coeff_set,
                                     const std::vector<double>& lambda_grid, int n,
                                     SolveMode mode, unsigned long long node_budget) {
    std::vector<ScanPoint> out;
    out.reserve(lambda_grid.size());
    for (double lam : lambda_grid) {
        const MinPolyResult r = min_poly_value(coeff_set, lam, n, mode, node_budget);
        ScanPoint p;
        p.lambda = lam;
        p.exact_zero = r.exact_zero || (mode != SolveMode::exact && r.value == 0.0);
        p.normalized_log = p.exact_zero ? -kInf : std::log2(r.value) / (double)n;
        out.push_back(p);
    }
    return out;
}

namespace {

// Values of degree-<=n polynomials with coefficients in the given set and at
// least one nonzero coefficient. The all-zero prefix is tracked implicitly:
// it can only turn nonzero by picking c != 0 at the current position.
std::vector<double> poly_value_set(const std::vector<double>& coeffs,
                                   const std::vector<double>& powers, int n) {
    std::vector<double> vals; // values of nonzero sequences so far
    for (int k = 0; k <= n; ++k) {
        if ((vals.size() + 1) * coeffs.size() > ((std::size_t)1 << 23))
            throw CapacityError("convolution_min_differences: value set exceeds 2^23");
        std::vector<double> next;
        next.reserve((vals.size() + 1) * coeffs.size());
        for (double c : coeffs) {
            const double w = c * powers[(std::size_t)k];
            for (double v : vals) next.push_back(v + w);
            if (c != 0.0) next.push_back(w);
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        vals = std::move(next);
    }
    return vals;
}

} // namespace

ConvolutionGaps convolution_min_differences(const AtomicMeasure& d1, double l1,
                                            const AtomicMeasure& d2, double l2, double x, int n) {
    if (n < 0) throw std::invalid_argument("convolution_min_differences: n must be nonnegative");
    std::vector<double> dig1, dig2;
    for (const auto& a : d1.atoms()) dig1.push_back(a.location);
    for (const auto& a : d2.atoms()) dig2.push_back(a.location);
    std::vector<double> pow1((std::size_t)n + 1), pow2((std::size_t)n + 1);
    for (int i = 0; i <= n; ++i) {
        pow1[(std::size_t)i] = std::pow(l1, (double)i);
        pow2[(std::size_t)i] = std::pow(l2, (double)i);
    }
    const std::vector<double> v1 = poly_value_set(difference_set(dig1), pow1, n);
    const std::vector<double> v2 = poly_value_set(difference_set(dig2), pow2, n);
    const double ex = std::exp(x);

    ConvolutionGaps out;
    out.min_first = kInf;
    out.min_second = kInf;
    out.min_cross = kInf;
    for (double v : v1) out.min_first = std::min(out.min_first, std::fabs(v));
    for (double v : v2) out.min_second = std::min(out.min_second, std::fabs(ex * v));
    // v1, v2 sorted: nearest-pair scan for |a - ex*b|
    for (double a : v1) {
        const double target = a / ex;
        auto it = std::lower_bound(v2.begin(), v2.end(), target);
        if (it != v2.end()) out.min_cross = std::min(out.min_cross, std::fabs(a - ex * *it));
        if (it != v2.begin()) out.min_cross = std::min(out.min_cross, std::fabs(a - ex * *(it - 1)));
    }
    return out;
}

} // namespace flq
