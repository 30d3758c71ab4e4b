#include "flq/addcomb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "flq/fft.hpp"
#include "json.hpp"

namespace flq {

using nlohmann::json;

DyadicSet::DyadicSet(int scale_m_, Geometry geometry_, std::vector<long long> idx)
    : scale_m(scale_m_), geometry(geometry_) {
    if (scale_m < 0 || scale_m > DyadicMeasure::kSparseScaleCap)
        throw ConfigError("DyadicSet: scale outside [0, 60]");
    if (geometry == Geometry::circle) {
        const long long n = 1LL << scale_m;
        for (auto& k : idx) k = mod_reduce(k, n);
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    indices = std::move(idx);
}

bool DyadicSet::contains(long long k) const {
    return std::binary_search(indices.begin(), indices.end(), k);
}

DyadicSet DyadicSet::full_grid(int scale_m, Geometry geometry) {
    std::vector<long long> idx((std::size_t)1 << scale_m);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = (long long)i;
    return DyadicSet(scale_m, geometry, std::move(idx));
}

std::string DyadicSet::to_json() const {
    json j;
    j["scale_m"] = scale_m;
    j["indices"] = indices;
    if (geometry == Geometry::line) j["geometry"] = "line";
    return j.dump();
}

DyadicSet DyadicSet::from_json(const std::string& text) {
    json j = json::parse(text);
    Geometry g = Geometry::circle;
    if (j.contains("geometry")) g = geometry_from_string(j.at("geometry").get<std::string>());
    return DyadicSet(j.at("scale_m").get<int>(), g,
                     j.at("indices").get<std::vector<long long>>());
}

DyadicMeasure indicator_measure(const DyadicSet& a) {
    std::vector<std::pair<long long, double>> entries;
    entries.reserve(a.size());
    for (long long k : a.indices) entries.push_back({k, 1.0});
    return DyadicMeasure(a.scale_m, a.geometry, std::move(entries));
}

DyadicSet sumset(const DyadicSet& a, const DyadicSet& b, Geometry geometry) {
    if (a.scale_m != b.scale_m) throw std::invalid_argument("sumset: scale mismatch");
    if (a.indices.empty() || b.indices.empty()) throw std::domain_error("sumset: empty set");
    std::vector<long long> out;
    out.reserve(a.size() * b.size());
    for (long long x : a.indices)
        for (long long y : b.indices) out.push_back(x + y);
    return DyadicSet(a.scale_m, geometry, std::move(out));
}

double doubling(const DyadicSet& a) {
    if (a.indices.empty()) throw std::domain_error("doubling: empty set");
    return (double)sumset(a, a, Geometry::line).size() / (double)a.size();
}

unsigned long long additive_energy(const DyadicSet& a, const DyadicSet& b, Geometry geometry) {
    if (a.scale_m != b.scale_m) throw std::invalid_argument("additive_energy: scale mismatch");
    std::unordered_map<long long, unsigned long long> reps;
    reps.reserve(std::min(a.size() * b.size(), (std::size_t)1 << 20));
    const long long n = 1LL << a.scale_m;
    for (long long x : a.indices)
        for (long long y : b.indices) {
            long long s = x + y;
            if (geometry == Geometry::circle) s = mod_reduce(s, n);
            ++reps[s];
        }
    unsigned long long e = 0;
    for (const auto& [s, r] : reps) e += r * r;
    return e;
}

unsigned long long additive_energy_fft(const DyadicSet& a, const DyadicSet& b,
                                       Geometry geometry) {
    if (a.scale_m != b.scale_m) throw std::invalid_argument("additive_energy: scale mismatch");
    if (a.indices.empty() || b.indices.empty()) return 0;
    std::size_t n;
    long long base_a = 0, base_b = 0;
    if (geometry == Geometry::circle) {
        n = (std::size_t)1 << a.scale_m;
    } else {
        base_a = a.indices.front();
        base_b = b.indices.front();
        const long long span_a = a.indices.back() - base_a + 1;
        const long long span_b = b.indices.back() - base_b + 1;
        n = next_pow2((std::size_t)(span_a + span_b));
    }
    if (n > ((std::size_t)1 << 24)) throw CapacityError("additive_energy_fft: size exceeds 2^24");
    std::vector<double> ia(n, 0.0), ib(n, 0.0);
    for (long long k : a.indices) ia[(std::size_t)(k - base_a)] = 1.0;
    for (long long k : b.indices) ib[(std::size_t)(k - base_b)] = 1.0;
    const std::vector<double> conv = fft_convolve_circular(ia, ib);
    unsigned long long e = 0;
    for (double v : conv) {
        const long long r = std::llround(v);
        e += (unsigned long long)(r * r);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Tree machinery
// ---------------------------------------------------------------------------

namespace {

void check_tree_args(const DyadicSet& a, int D) {
    if (D < 1) throw std::invalid_argument("tree: D must be positive");
    if (a.scale_m % D != 0)
        throw std::invalid_argument("tree: D = " + std::to_string(D) +
                                    " does not divide m = " + std::to_string(a.scale_m));
}

// parent interval id of index k at level s (intervals of size 2^{m-sD})
long long parent_id(long long k, int m, int D, int s) {
    return floor_div(k, 1LL << (m - s * D));
}

} // namespace

BranchingProfile branching(const DyadicSet& a, int D) {
    check_tree_args(a, D);
    const int m = a.scale_m;
    const int ell = m / D;
    BranchingProfile prof;
    prof.level_bits = D;
    prof.levels = ell;
    for (int s = 0; s < ell; ++s) {
        // count distinct (s+1)-level children within each level-s interval
        std::map<long long, long long> counts; // parent -> children
        long long prev_parent = 0, prev_child = 0;
        bool first = true;
        for (long long k : a.indices) {
            const long long p = parent_id(k, m, D, s);
            const long long c = parent_id(k, m, D, s + 1);
            if (first || p != prev_parent || c != prev_child) ++counts[p];
            prev_parent = p;
            prev_child = c;
            first = false;
        }
        BranchingProfile::Level lvl;
        std::map<long long, long long> hist; // offspring count -> #parents
        lvl.offspring_min = std::numeric_limits<long long>::max();
        lvl.offspring_max = 0;
        for (const auto& [p, c] : counts) {
            ++hist[c];
            lvl.offspring_min = std::min(lvl.offspring_min, c);
            lvl.offspring_max = std::max(lvl.offspring_max, c);
        }
        lvl.uniform = hist.size() == 1;
        lvl.offspring = lvl.uniform ? lvl.offspring_min : 0;
        for (const auto& [c, cnt] : hist) lvl.histogram.push_back({c, cnt});
        prof.per_level.push_back(std::move(lvl));
    }
    return prof;
}

bool BranchingProfile::uniform() const {
    for (const auto& l : per_level)
        if (!l.uniform) return false;
    return true;
}

std::vector<long long> BranchingProfile::offspring() const {
    if (!uniform()) throw std::logic_error("BranchingProfile::offspring: profile not uniform");
    std::vector<long long> r;
    for (const auto& l : per_level) r.push_back(l.offspring);
    return r;
}

DyadicSet extract_uniform(const DyadicSet& a, int D) {
    check_tree_args(a, D);
    if (a.indices.empty()) return a;
    const int m = a.scale_m;
    const int ell = m / D;
    std::vector<long long> cur = a.indices;
    // count class of c children: {1,2} -> keep 1; (2^j, 2^{j+1}] -> keep 2^j
    auto class_of = [](long long c) {
        if (c <= 2) return 0;
        int j = 0;
        while ((1LL << (j + 1)) < c) ++j;
        return j; // 2^j < c <= 2^{j+1}
    };
    for (int s = ell - 1; s >= 0; --s) {
        const long long child_size = 1LL << (m - (s + 1) * D);
        // group points by parent; children are contiguous runs
        struct Group {
            std::size_t begin, end; // range in cur
            std::vector<std::pair<long long, std::size_t>> child_starts;
        };
        std::vector<Group> groups;
        std::size_t i = 0;
        while (i < cur.size()) {
            const long long p = parent_id(cur[i], m, D, s);
            Group g;
            g.begin = i;
            long long prev_child = std::numeric_limits<long long>::min();
            while (i < cur.size() && parent_id(cur[i], m, D, s) == p) {
                const long long c = floor_div(cur[i], child_size);
                if (c != prev_child) {
                    g.child_starts.push_back({c, i});
                    prev_child = c;
                }
                ++i;
            }
            g.end = i;
            groups.push_back(std::move(g));
        }
        // pigeonhole over count classes by retained points; below this level
        // the set is already uniform, so every child holds equally many points
        std::map<int, std::size_t> class_points;
        for (const auto& g : groups)
            class_points[class_of((long long)g.child_starts.size())] += g.end - g.begin;
        int best_class = 0;
        std::size_t best_points = 0;
        for (const auto& [cls, pts] : class_points) {
            if (pts > best_points) { // ties resolve to the smaller class
                best_points = pts;
                best_class = cls;
            }
        }
        const std::size_t target = (std::size_t)1 << best_class;
        std::vector<long long> next;
        next.reserve(cur.size());
        for (const auto& g : groups) {
            if (class_of((long long)g.child_starts.size()) != best_class) continue;
            const std::size_t keep = std::min(target, g.child_starts.size());
            for (std::size_t c = 0; c < keep; ++c) {
                const std::size_t from = g.child_starts[c].second;
                const std::size_t to =
                    c + 1 < g.child_starts.size() ? g.child_starts[c + 1].second : g.end;
                next.insert(next.end(), cur.begin() + (long)from, cur.begin() + (long)to);
            }
        }
        cur = std::move(next);
    }
    return DyadicSet(m, a.geometry, std::move(cur));
}

DyadicSet collapse(const DyadicSet& a, int D, const std::set<int>& levels) {
    check_tree_args(a, D);
    const int m = a.scale_m;
    const int ell = m / D;
    for (int s : levels)
        if (s < 0 || s >= ell) throw std::invalid_argument("collapse: level outside [0, ell)");
    if (!branching(a, D).uniform())
        throw std::invalid_argument("collapse: input is not (D, ell)-uniform");
    std::vector<long long> cur = a.indices;
    for (int s : levels) { // ascending: coarse levels first
        const long long child_size = 1LL << (m - (s + 1) * D);
        std::vector<long long> next;
        next.reserve(cur.size());
        std::size_t i = 0;
        while (i < cur.size()) {
            const long long p = parent_id(cur[i], m, D, s);
            const long long keep_child = floor_div(cur[i], child_size); // leftmost
            while (i < cur.size() && parent_id(cur[i], m, D, s) == p) {
                if (floor_div(cur[i], child_size) == keep_child) next.push_back(cur[i]);
                ++i;
            }
        }
        cur = std::move(next);
    }
    return DyadicSet(m, a.geometry, std::move(cur));
}

CenterResult center(const DyadicSet& a, int D) {
    check_tree_args(a, D);
    if (D < 2) throw std::invalid_argument("center: D must be at least 2");
    const int m = a.scale_m;
    const int ell = m / D;
    std::vector<long long> cur = a.indices;
    long long shift = 0;
    for (int s = ell - 1; s >= 0; --s) {
        const long long block = 1LL << (m - s * D);
        const long long quarter = block / 4;
        const long long cands[3] = {0, quarter, -quarter};
        std::size_t best_count = 0;
        int best_t = 0;
        for (int t = 0; t < 3; ++t) {
            std::size_t cnt = 0;
            for (long long y : cur) {
                const long long r = mod_reduce(y + shift + cands[t], block);
                if (r >= quarter && r < 3 * quarter) ++cnt;
            }
            if (cnt > best_count) {
                best_count = cnt;
                best_t = t;
            }
        }
        const long long t = cands[best_t];
        std::vector<long long> next;
        next.reserve(best_count);
        for (long long y : cur) {
            const long long r = mod_reduce(y + shift + t, block);
            if (r >= quarter && r < 3 * quarter) next.push_back(y);
        }
        shift += t;
        cur = std::move(next);
    }
    // machine-verify both guarantees on the output
    double bound = (double)a.size();
    for (int s = 0; s < ell; ++s) bound /= 3.0;
    if ((double)cur.size() < bound - 1e-9)
        throw std::logic_error("center: retention bound violated");
    for (long long y : cur) {
        for (int s = 0; s < ell; ++s) {
            const long long block = 1LL << (m - s * D);
            const long long quarter = block / 4;
            const long long r = mod_reduce(y + shift, block);
            if (!(r >= quarter && r < 3 * quarter))
                throw std::logic_error("center: half-interval property violated");
        }
    }
    CenterResult out;
    if (a.geometry == Geometry::circle) shift = mod_reduce(shift, 1LL << m);
    out.translation = shift;
    out.subset = DyadicSet(m, a.geometry, std::move(cur));
    return out;
}

// ---------------------------------------------------------------------------
// Level sets and the witness report
// ---------------------------------------------------------------------------

LevelSetResult level_sets(const DyadicMeasure& mu, double q, double epsilon, LevelStyle style) {
    if (!(q > 1.0)) throw std::domain_error("level_sets: q must exceed 1");
    const double qp = q / (q - 1.0);
    const double norm_q = std::pow(lq_norm(mu, q), 1.0 / q);
    const double ref = style == LevelStyle::norm_weighted ? std::pow(norm_q, qp)
                                                          : std::ldexp(1.0, -mu.scale_m());
    // bucket by dyadic level j: 2^{-j-1} ref < mass <= 2^{-j} ref
    std::map<long long, std::pair<std::vector<long long>, double>> buckets;
    mu.for_each([&](long long k, double v) {
        const long long j = (long long)std::floor(-std::log2(v / ref) + 1e-12);
        auto& b = buckets[j];
        b.first.push_back(k);
        b.second += std::pow(v, q);
    });
    const double total = lq_norm(mu, q);
    long long best_j = 0;
    double best_cap = -1.0;
    for (const auto& [j, b] : buckets) {
        if (b.second > best_cap) {
            best_cap = b.second;
            best_j = j;
        }
    }
    LevelSetResult out;
    out.set = DyadicSet(mu.scale_m(), mu.geometry(), buckets[best_j].first);
    out.level_j = best_j;
    out.captured_fraction = best_cap / total;
    out.level_mass_hi = std::pow(2.0, -(double)best_j) * ref;
    out.level_mass_lo = 0.5 * out.level_mass_hi;
    out.within_level_budget = (double)best_j <= 2.0 * epsilon * qp * (double)mu.scale_m();
    return out;
}

bool WitnessReport::all_pass() const {
    for (const auto& c : clauses)
        if (!c.pass) return false;
    return true;
}

std::string WitnessReport::to_json() const {
    json j;
    j["q"] = q;
    j["D"] = level_bits;
    j["ell"] = levels;
    j["delta"] = delta;
    j["hypothesis_ratio"] = hypothesis_ratio;
    j["label"] = label;
    j["A"] = json::parse(set_a.to_json());
    j["B"] = json::parse(set_b.to_json());
    j["translation_a"] = translation_a;
    j["translation_b"] = translation_b;
    j["offspring_a"] = offspring_a;
    j["offspring_b"] = offspring_b;
    j["full_branching_levels"] = full_branching_levels;
    j["clauses"] = json::array();
    for (const auto& c : clauses) {
        json cj;
        cj["name"] = c.name;
        cj["pass"] = c.pass;
        cj["certified_by_construction"] = c.certified_by_construction;
        cj["lhs"] = c.lhs;
        cj["rhs"] = c.rhs;
        if (!c.note.empty()) cj["note"] = c.note;
        j["clauses"].push_back(cj);
    }
    return j.dump(2);
}

namespace {

double restricted_lq(const DyadicMeasure& mu, const DyadicSet& a, double q) {
    double s = 0.0;
    for (long long k : a.indices) s += std::pow(mu.mass_at(k), q);
    return s;
}

double restricted_mass(const DyadicMeasure& mu, const DyadicSet& a) {
    double s = 0.0;
    for (long long k : a.indices) s += mu.mass_at(k);
    return s;
}

} // namespace

WitnessReport inverse_witness(const DyadicMeasure& mu, const DyadicMeasure& nu, double q, int D,
                              double delta) {
    if (mu.scale_m() != nu.scale_m()) throw std::invalid_argument("inverse_witness: scale mismatch");
    if (mu.geometry() != Geometry::circle || nu.geometry() != Geometry::circle)
        throw std::invalid_argument("inverse_witness: measures must live on the circle");
    const int m = mu.scale_m();
    if (D < 2 || m % D != 0) throw std::invalid_argument("inverse_witness: need D >= 2 dividing m");
    const int ell = m / D;
    const double qp = q / (q - 1.0);

    WitnessReport rep;
    rep.q = q;
    rep.level_bits = D;
    rep.levels = ell;
    rep.delta = delta;
    rep.label =
        "empirical witness - the extraction via asymmetric Balog-Szemeredi-Gowers and "
        "Bourgain's structure theorem is not implemented; structural clauses are certified "
        "by construction, dichotomy clauses are measured";

    const double mu_q = std::pow(lq_norm(mu, q), 1.0 / q);
    const double conv_q = std::pow(lq_norm(convolve(mu, nu), q), 1.0 / q);
    rep.hypothesis_ratio = conv_q / mu_q;

    const LevelSetResult la = level_sets(mu, q, delta, LevelStyle::norm_weighted);
    const LevelSetResult lb = level_sets(nu, q, delta, LevelStyle::uniform_weighted);
    const CenterResult ca = center(la.set, D);
    const CenterResult cb = center(lb.set, D);
    const DyadicSet A = extract_uniform(ca.subset, D);
    const DyadicSet B = extract_uniform(cb.subset, D);
    rep.set_a = A;
    rep.set_b = B;
    rep.translation_a = ca.translation;
    rep.translation_b = cb.translation;
    rep.offspring_a = branching(A, D).offspring();
    rep.offspring_b = branching(B, D).offspring();

    const double full_branch_threshold = std::pow(2.0, (1.0 - delta) * (double)D);
    for (int s = 0; s < ell; ++s)
        if ((double)rep.offspring_a[(std::size_t)s] >= full_branch_threshold)
            rep.full_branching_levels.push_back(s);

    auto add = [&](const std::string& name, bool pass, bool certified, double lhs, double rhs,
                   const std::string& note = "") {
        rep.clauses.push_back({name, pass, certified, lhs, rhs, note});
    };

    // (A-i) ||mu|_A||_q >= 2^{-delta m} ||mu||_q
    {
        const double lhs = std::pow(restricted_lq(mu, A, q), 1.0 / q);
        const double rhs = std::pow(2.0, -delta * m) * mu_q;
        add("A-i", lhs >= rhs, false, lhs, rhs);
    }
    // (A-ii) masses on A within a factor 2
    {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (long long k : A.indices) {
            const double v = mu.mass_at(k);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        add("A-ii", hi <= 2.0 * lo + 1e-15, true, hi, 2.0 * lo, "dyadic level set");
    }
    // (A-iii) uniform branching
    add("A-iii", true, true, (double)rep.offspring_a.size(), (double)ell, "uniform extraction");
    // (A-iv) half-interval membership after translation
    {
        bool ok = true;
        for (long long y : A.indices) {
            for (int s = 0; s < ell; ++s) {
                const long long block = 1LL << (m - s * D);
                const long long quarter = block / 4;
                const long long r = mod_reduce(y + ca.translation, block);
                if (!(r >= quarter && r < 3 * quarter)) ok = false;
            }
        }
        add("A-iv", ok, true, ok ? 1.0 : 0.0, 1.0, "centering translation");
    }
    // (B-i) nu(B) >= 2^{-delta m}
    {
        const double lhs = restricted_mass(nu, B);
        const double rhs = std::pow(2.0, -delta * m);
        add("B-i", lhs >= rhs, false, lhs, rhs);
    }
    // (B-ii)
    {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (long long k : B.indices) {
            const double v = nu.mass_at(k);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        add("B-ii", hi <= 2.0 * lo + 1e-15, true, hi, 2.0 * lo, "dyadic level set");
    }
    add("B-iii", true, true, (double)rep.offspring_b.size(), (double)ell, "uniform extraction");
    {
        bool ok = true;
        for (long long y : B.indices) {
            for (int s = 0; s < ell; ++s) {
                const long long block = 1LL << (m - s * D);
                const long long quarter = block / 4;
                const long long r = mod_reduce(y + cb.translation, block);
                if (!(r >= quarter && r < 3 * quarter)) ok = false;
            }
        }
        add("B-iv", ok, true, ok ? 1.0 : 0.0, 1.0, "centering translation");
    }
    // (v) per level: R''_s = 1 or R'_s >= 2^{(1-delta) D}
    {
        bool ok = true;
        int bad_level = -1;
        for (int s = 0; s < ell; ++s) {
            if (rep.offspring_b[(std::size_t)s] == 1) continue;
            if ((double)rep.offspring_a[(std::size_t)s] >= full_branch_threshold) continue;
            ok = false;
            bad_level = s;
            break;
        }
        add("v", ok, false, ok ? 1.0 : 0.0, 1.0,
            ok ? "dichotomy holds at every level"
               : "fails at level " + std::to_string(bad_level));
    }
    // (vi) log ||nu||_q^{-q'} - delta m <= D |S| <= log ||mu||_q^{-q'} + delta m
    {
        const double nu_q = std::pow(lq_norm(nu, q), 1.0 / q);
        const double mid = (double)D * (double)rep.full_branching_levels.size();
        const double lo = -qp * std::log2(nu_q) - delta * m;
        const double hi = -qp * std::log2(mu_q) + delta * m;
        add("vi", lo <= mid && mid <= hi, false, mid, hi,
            "window [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return rep;
}

SumsetBoundReport sumset_bound_check(const DyadicSet& a, const DyadicSet& h, int D) {
    if (a.scale_m != h.scale_m) throw std::invalid_argument("sumset_bound_check: scale mismatch");
    check_tree_args(a, D);
    const BranchingProfile pa = branching(a, D);
    const BranchingProfile ph = branching(h, D);
    if (!pa.uniform() || !ph.uniform())
        throw std::invalid_argument("sumset_bound_check: inputs must be uniform");
    const auto ra = pa.offspring();
    const auto rh = ph.offspring();
    double prod = 1.0;
    for (std::size_t s = 0; s < ra.size(); ++s)
        if (rh[s] == 1) prod *= (double)ra[s];
    SumsetBoundReport rep;
    rep.sumset_size = sumset(a, h, a.geometry).size();
    rep.bound = std::pow(2.0, -(double)a.scale_m / (double)D) * (double)h.size() * prod;
    rep.pass = (double)rep.sumset_size >= rep.bound - 1e-9;
    return rep;
}

} // namespace flq
