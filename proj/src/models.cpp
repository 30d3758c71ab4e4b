#include "flq/models.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace flq {

using nlohmann::json;

namespace {

constexpr double kBoundaryExclusion = 1e-9;

double reduce(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0) r += period;
    return r;
}

// x + n*step mod period without iterating, using long double for the product.
double orbit_coord(double x, double step, long long n, double period) {
    long double v = std::fmod((long double)n * (long double)step, (long double)period);
    v += (long double)x;
    v = std::fmod(v, (long double)period);
    if (v < 0) v += (long double)period;
    return (double)v;
}

bool ratio_rational_warning(const std::vector<double>& steps, const std::vector<double>& periods) {
    for (std::size_t i = 0; i < steps.size(); ++i)
        if (looks_rational(steps[i] / periods[i])) return true;
    return false;
}

} // namespace

ModelState Model::orbit(const ModelState& x, long long n) const {
    ModelState out = x;
    for (std::size_t i = 0; i < periods_.size(); ++i)
        out.coords[i] = orbit_coord(x.coords[i], steps_[i], n, periods_[i]);
    if (cyclic_order_ > 1) out.phase = (int)(((x.phase + n) % cyclic_order_ + cyclic_order_) % cyclic_order_);
    return out;
}

AtomicMeasure Model::symbol(const ModelState& x) const {
    switch (kind_) {
        case ModelKind::selfsimilar:
            return delta_;
        case ModelKind::convolution: {
            const double a1 = steps_[0];
            if (x.coords.at(0) < a1)
                return convolve(deltas_[0], affine_image(deltas_[1], std::exp(x.coords[0]), 0.0));
            return deltas_[0];
        }
        case ModelKind::multiconvolution: {
            const double ak = steps_[0];
            AtomicMeasure acc = deltas_.back();
            for (std::size_t j = 0; j + 1 < deltas_.size(); ++j) {
                if (x.coords.at(j) < ak)
                    acc = convolve(acc, affine_image(deltas_[j], std::exp(x.coords[j]), 0.0));
            }
            return acc;
        }
        case ModelKind::projection: {
            const double cx = std::cos(x.coords.at(0)), sx = std::sin(x.coords.at(0));
            std::vector<Atom> atoms;
            atoms.reserve(planar_.size());
            for (const auto& p : planar_) atoms.push_back({cx * p.x + sx * p.y, p.mass});
            return AtomicMeasure(std::move(atoms));
        }
        case ModelKind::skip: {
            const bool active = (skip_keep_ == SkipKeep::multiples) == (x.phase == 0);
            if (!active) return AtomicMeasure::delta(0.0);
            ModelState base_state{x.coords, 0};
            return base_->symbol(base_state);
        }
    }
    throw std::logic_error("unreachable");
}

std::size_t Model::symbol_size(const ModelState& x) const {
    switch (kind_) {
        case ModelKind::selfsimilar:
            return delta_.size();
        case ModelKind::convolution:
            return x.coords.at(0) < steps_[0] ? deltas_[0].size() * deltas_[1].size()
                                              : deltas_[0].size();
        case ModelKind::multiconvolution: {
            std::size_t n = deltas_.back().size();
            for (std::size_t j = 0; j + 1 < deltas_.size(); ++j)
                if (x.coords.at(j) < steps_[0]) n *= deltas_[j].size();
            return n;
        }
        case ModelKind::projection:
            return planar_.size();
        case ModelKind::skip: {
            const bool active = (skip_keep_ == SkipKeep::multiples) == (x.phase == 0);
            if (!active) return 1;
            return base_->symbol_size(ModelState{x.coords, 0});
        }
    }
    throw std::logic_error("unreachable");
}

void Model::support_bounds(double& lo, double& hi) const {
    double slo = 0.0, shi = 0.0; // bounds of symbol supports over all states
    switch (kind_) {
        case ModelKind::selfsimilar:
            slo = delta_.min_location();
            shi = delta_.max_location();
            break;
        case ModelKind::convolution: {
            const double m2lo = deltas_[1].min_location(), m2hi = deltas_[1].max_location();
            const double emax = 1.0 / lambdas_[1];
            slo = deltas_[0].min_location() + std::min({0.0, m2lo, m2lo * emax});
            shi = deltas_[0].max_location() + std::max({0.0, m2hi, m2hi * emax});
            break;
        }
        case ModelKind::multiconvolution: {
            slo = deltas_.back().min_location();
            shi = deltas_.back().max_location();
            for (std::size_t j = 0; j + 1 < deltas_.size(); ++j) {
                const double emax = 1.0 / lambdas_[j];
                slo += std::min({0.0, deltas_[j].min_location(), deltas_[j].min_location() * emax});
                shi += std::max({0.0, deltas_[j].max_location(), deltas_[j].max_location() * emax});
            }
            break;
        }
        case ModelKind::projection: {
            double r = 0.0;
            for (const auto& p : planar_) r = std::max(r, std::hypot(p.x, p.y));
            slo = -r;
            shi = r;
            break;
        }
        case ModelKind::skip: {
            base_->support_bounds(lo, hi);
            lo = std::min(lo, 0.0);
            hi = std::max(hi, 0.0);
            return;
        }
    }
    lo = std::min(0.0, slo / (1.0 - lambda_));
    hi = std::max(0.0, shi / (1.0 - lambda_));
}

ExactAtomicMeasure Model::exact_symbol(const ModelState& x) const {
    if (kind_ == ModelKind::selfsimilar) {
        if (!exact_delta_) throw std::logic_error("model carries no exact symbol data");
        return *exact_delta_;
    }
    if (kind_ == ModelKind::skip) {
        const bool active = (skip_keep_ == SkipKeep::multiples) == (x.phase == 0);
        if (!active) return ExactAtomicMeasure::delta(QuadExt(Rational(0)));
        return base_->exact_symbol(ModelState{x.coords, 0});
    }
    throw std::logic_error("exact mode supports selfsimilar and skip models only");
}

double Model::boundary_distance(const ModelState& x) const {
    switch (kind_) {
        case ModelKind::convolution: {
            const double v = x.coords.at(0);
            return std::min({std::fabs(v), std::fabs(v - steps_[0]), std::fabs(v - periods_[0])});
        }
        case ModelKind::multiconvolution: {
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j + 1 < deltas_.size(); ++j) {
                const double v = x.coords.at(j);
                d = std::min({d, std::fabs(v), std::fabs(v - steps_[0]), std::fabs(v - periods_[j])});
            }
            return d;
        }
        case ModelKind::projection: {
            // near-collision of projected atoms behaves like a boundary
            AtomicMeasure s = symbol(x);
            double d = std::numeric_limits<double>::infinity();
            const auto& a = s.atoms();
            for (std::size_t i = 0; i + 1 < a.size(); ++i)
                d = std::min(d, a[i + 1].location - a[i].location);
            if (s.merge_count() > 0) d = 0.0;
            return d;
        }
        default:
            return std::numeric_limits<double>::infinity();
    }
}

Model make_selfsimilar(const AtomicMeasure& delta, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("make_selfsimilar: lambda must lie in (0,1)");
    if (delta.size() == 0) throw std::invalid_argument("make_selfsimilar: empty symbol");
    Model m;
    m.kind_ = ModelKind::selfsimilar;
    m.lambda_ = lambda;
    m.delta_ = delta;
    m.uniquely_ergodic_asserted_ = true; // one-point system
    return m;
}

Model make_selfsimilar_exact(const ExactAtomicMeasure& delta, const QuadExt& lambda) {
    if (!(lambda.sign() > 0) || !(lambda < QuadExt(Rational(1))))
        throw std::invalid_argument("make_selfsimilar_exact: lambda must lie in (0,1)");
    Model m = make_selfsimilar(delta.to_float(), lambda.to_double());
    m.exact_delta_ = delta;
    m.exact_lambda_ = lambda;
    return m;
}

Model make_convolution(const AtomicMeasure& d1, double l1, const AtomicMeasure& d2, double l2) {
    if (!(0.0 < l2 && l2 < l1 && l1 < 1.0))
        throw std::invalid_argument("make_convolution: need 0 < l2 < l1 < 1");
    Model m;
    m.kind_ = ModelKind::convolution;
    m.lambda_ = l1;
    m.deltas_ = {d1, d2};
    m.lambdas_ = {l1, l2};
    m.periods_ = {std::log(1.0 / l2)};
    m.steps_ = {std::log(1.0 / l1)};
    m.uniquely_ergodic_asserted_ = true;
    m.rationality_warning_ = ratio_rational_warning(m.steps_, m.periods_);
    return m;
}

Model make_multi_convolution(const std::vector<AtomicMeasure>& deltas,
                             const std::vector<double>& lambdas) {
    if (deltas.size() < 2 || deltas.size() != lambdas.size())
        throw std::invalid_argument("make_multi_convolution: need k >= 2 matched symbols/ratios");
    for (std::size_t j = 0; j + 1 < lambdas.size(); ++j)
        if (!(lambdas[j] < lambdas[j + 1]))
            throw std::invalid_argument("make_multi_convolution: lambdas must be strictly increasing");
    if (!(lambdas.front() > 0.0 && lambdas.back() < 1.0))
        throw std::invalid_argument("make_multi_convolution: lambdas must lie in (0,1)");
    Model m;
    m.kind_ = ModelKind::multiconvolution;
    m.lambda_ = lambdas.back();
    m.deltas_ = deltas;
    m.lambdas_ = lambdas;
    const double ak = std::log(1.0 / lambdas.back());
    const std::size_t k = deltas.size();
    m.periods_.resize(k - 1);
    m.steps_.assign(k - 1, ak);
    for (std::size_t j = 0; j + 1 < k; ++j) m.periods_[j] = std::log(1.0 / lambdas[j]);
    m.uniquely_ergodic_asserted_ = true;
    m.rationality_warning_ = ratio_rational_warning(m.steps_, m.periods_);
    return m;
}

Model make_projection(const std::vector<PlanarAtom>& planar_delta, double lambda, double alpha) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("make_projection: lambda must lie in (0,1)");
    if (planar_delta.empty()) throw std::invalid_argument("make_projection: empty symbol");
    Model m;
    m.kind_ = ModelKind::projection;
    m.lambda_ = lambda;
    m.planar_ = planar_delta;
    m.alpha_ = alpha;
    const double two_pi = 2.0 * 3.14159265358979323846;
    m.periods_ = {two_pi};
    m.steps_ = {reduce(-alpha, two_pi)};
    m.uniquely_ergodic_asserted_ = !looks_rational(alpha / two_pi);
    m.rationality_warning_ = looks_rational(alpha / two_pi);
    return m;
}

Model make_skip(const Model& base, int k, SkipKeep keep) {
    if (k < 2) throw std::invalid_argument("make_skip: k must be at least 2");
    if (base.kind() == ModelKind::skip)
        throw std::invalid_argument("make_skip: nested skip models are not supported");
    Model m;
    m.kind_ = ModelKind::skip;
    m.lambda_ = base.lambda();
    m.periods_ = base.periods();
    m.steps_ = base.steps();
    m.cyclic_order_ = k;
    m.base_ = std::make_shared<Model>(base);
    m.skip_k_ = k;
    m.skip_keep_ = keep;
    // Unique ergodicity of the product needs no T-periodic points of period
    // dividing k; recorded, not proven.
    m.uniquely_ergodic_asserted_ = base.uniquely_ergodic_asserted() && !base.periods().empty();
    if (base.kind() == ModelKind::selfsimilar) m.uniquely_ergodic_asserted_ = true;
    m.rationality_warning_ = base.rationality_warning();
    if (base.has_exact()) {
        m.exact_lambda_ = base.exact_lambda();
    }
    return m;
}

AtomicMeasure generate_atoms(const Model& model, const ModelState& x, long long n,
                             std::size_t atom_cap) {
    if (n < 0) throw std::invalid_argument("generate_atoms: n must be nonnegative");
    double count = atom_count_upper_bound(model, x, n);
    if (count > (double)atom_cap)
        throw CapacityError("generate_atoms: atom bound " + std::to_string(count) +
                            " exceeds cap " + std::to_string(atom_cap));
    AtomicMeasure acc = AtomicMeasure::delta(0.0);
    for (long long i = 0; i < n; ++i) {
        const ModelState s = model.orbit(x, i);
        const double scale = std::pow(model.lambda(), (double)i);
        acc = convolve(acc, affine_image(model.symbol(s), scale, 0.0), atom_cap);
    }
    return acc;
}

ExactAtomicMeasure generate_atoms_exact(const Model& model, const ModelState& x, long long n,
                                        std::size_t atom_cap) {
    if (n < 0) throw std::invalid_argument("generate_atoms_exact: n must be nonnegative");
    if (!model.has_exact()) throw std::logic_error("generate_atoms_exact: model lacks exact data");
    ExactAtomicMeasure acc = ExactAtomicMeasure::delta(QuadExt(Rational(0)));
    QuadExt power(Rational(1));
    for (long long i = 0; i < n; ++i) {
        const ModelState s = model.orbit(x, i);
        acc = convolve(acc, scale_atoms(model.exact_symbol(s), power), atom_cap);
        power = power * model.exact_lambda();
    }
    return acc;
}

double atom_count_upper_bound(const Model& model, const ModelState& x, long long n) {
    double c = 1.0;
    for (long long i = 0; i < n; ++i) {
        c *= (double)model.symbol_size(model.orbit(x, i));
        if (c > 1e18) return c;
    }
    return c;
}

namespace {

double log2_symbol_norm_q(const AtomicMeasure& delta, double q) {
    double s = 0.0;
    for (const auto& a : delta.atoms()) s += std::pow(a.mass, q);
    return std::log2(s);
}

} // namespace

namespace {

// Integral of log2 ||Delta(x)||_q^q over the invariant measure, in closed
// form where the symbol structure permits it.
std::optional<double> closed_form_integral(const Model& model, double q) {
    switch (model.kind()) {
        case ModelKind::selfsimilar:
            return log2_symbol_norm_q(model.base_symbol(), q);
        case ModelKind::convolution: {
            // ||d1 * S_{e^x} d2||_q^q = ||d1||_q^q ||d2||_q^q off a finite set
            const auto& d = model.component_symbols();
            const auto& l = model.component_lambdas();
            return log2_symbol_norm_q(d[0], q) +
                   (std::log(l[0]) / std::log(l[1])) * log2_symbol_norm_q(d[1], q);
        }
        case ModelKind::multiconvolution: {
            const auto& d = model.component_symbols();
            const auto& l = model.component_lambdas();
            double s = log2_symbol_norm_q(d.back(), q);
            for (std::size_t j = 0; j + 1 < d.size(); ++j)
                s += (std::log(l.back()) / std::log(l[j])) * log2_symbol_norm_q(d[j], q);
            return s;
        }
        case ModelKind::projection: {
            // P_x is injective on the symbol off a finite set of directions
            double s = 0.0;
            for (const auto& p : model.planar_symbol()) s += std::pow(p.mass, q);
            return std::log2(s);
        }
        case ModelKind::skip: {
            auto base = closed_form_integral(model.skip_base(), q);
            if (!base) return std::nullopt;
            const double frac = model.skip_keep() == SkipKeep::multiples
                                    ? 1.0 / (double)model.skip_k()
                                    : (double)(model.skip_k() - 1) / (double)model.skip_k();
            return frac * *base;
        }
    }
    return std::nullopt;
}

} // namespace

double theoretical_dimension(const Model& model, double q, int x_samples) {
    if (!(q > 1.0)) throw std::domain_error("theoretical_dimension: q must exceed 1");
    const double denom = (q - 1.0) * std::log2(model.lambda());
    if (auto integral = closed_form_integral(model, q))
        return std::min(*integral / denom, 1.0);

    // Birkhoff average over an orbit, skipping points too close to a symbol
    // discontinuity.
    if (x_samples <= 0) throw std::invalid_argument("theoretical_dimension: x_samples required");
    double sum = 0.0;
    ModelState s0 = ModelState::trivial();
    s0.coords.assign(model.periods().size(), 0.0);
    for (int i = 0; i < x_samples; ++i) {
        ModelState s = model.orbit(s0, i + 1);
        int guard = 0;
        while (model.boundary_distance(s) < kBoundaryExclusion && guard++ < 64)
            s = model.orbit(s, 1);
        sum += log2_symbol_norm_q(model.symbol(s), q);
    }
    return std::min((sum / (double)x_samples) / denom, 1.0);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string Model::to_json() const {
    json j;
    switch (kind_) {
        case ModelKind::selfsimilar:
            j["type"] = "selfsimilar";
            j["delta"] = json::parse(delta_.to_json());
            j["lambda"] = lambda_;
            break;
        case ModelKind::convolution:
            j["type"] = "convolution";
            j["delta1"] = json::parse(deltas_[0].to_json());
            j["lambda1"] = lambdas_[0];
            j["delta2"] = json::parse(deltas_[1].to_json());
            j["lambda2"] = lambdas_[1];
            break;
        case ModelKind::multiconvolution: {
            j["type"] = "multiconvolution";
            j["deltas"] = json::array();
            for (const auto& d : deltas_) j["deltas"].push_back(json::parse(d.to_json()));
            j["lambdas"] = lambdas_;
            break;
        }
        case ModelKind::projection: {
            j["type"] = "projection";
            j["planar_delta"] = json::array();
            for (const auto& p : planar_) j["planar_delta"].push_back({p.x, p.y, p.mass});
            j["lambda"] = lambda_;
            j["alpha"] = alpha_;
            break;
        }
        case ModelKind::skip:
            j["type"] = "skip";
            j["base"] = json::parse(base_->to_json());
            j["k"] = skip_k_;
            j["keep"] = skip_keep_ == SkipKeep::multiples ? "multiples" : "non_multiples";
            break;
    }
    j["uniquely_ergodic_asserted"] = uniquely_ergodic_asserted_;
    j["rationality_warning"] = rationality_warning_;
    return j.dump();
}

Model Model::from_json(const std::string& text) {
    json j = json::parse(text);
    const std::string type = j.at("type").get<std::string>();
    if (type == "selfsimilar")
        return make_selfsimilar(AtomicMeasure::from_json(j.at("delta").dump()),
                                j.at("lambda").get<double>());
    if (type == "convolution")
        return make_convolution(AtomicMeasure::from_json(j.at("delta1").dump()),
                                j.at("lambda1").get<double>(),
                                AtomicMeasure::from_json(j.at("delta2").dump()),
                                j.at("lambda2").get<double>());
    if (type == "multiconvolution") {
        std::vector<AtomicMeasure> deltas;
        for (const auto& d : j.at("deltas")) deltas.push_back(AtomicMeasure::from_json(d.dump()));
        return make_multi_convolution(deltas, j.at("lambdas").get<std::vector<double>>());
    }
    if (type == "projection") {
        std::vector<PlanarAtom> planar;
        for (const auto& p : j.at("planar_delta"))
            planar.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
        return make_projection(planar, j.at("lambda").get<double>(), j.at("alpha").get<double>());
    }
    if (type == "skip") {
        Model base = from_json(j.at("base").dump());
        const std::string keep = j.at("keep").get<std::string>();
        if (keep != "multiples" && keep != "non_multiples")
            throw ConfigError("skip model: keep must be multiples or non_multiples");
        return make_skip(base, j.at("k").get<int>(),
                         keep == "multiples" ? SkipKeep::multiples : SkipKeep::non_multiples);
    }
    throw ConfigError("unknown model type: " + type);
}

// ---------------------------------------------------------------------------
// Non-homogeneous IFS
// ---------------------------------------------------------------------------

void NonHomIFS::validate() const {
    if (maps.empty() || maps.size() != weights.size())
        throw std::invalid_argument("NonHomIFS: maps and weights must be nonempty and matched");
    double s = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("NonHomIFS: weights must be positive");
        s += w;
    }
    if (std::fabs(s - 1.0) > 1e-10)
        throw std::invalid_argument("NonHomIFS: weights must sum to 1");
    for (const auto& f : maps)
        if (!(f.lambda > 0.0 && f.lambda < 1.0))
            throw std::invalid_argument("NonHomIFS: contractions must lie in (0,1)");
}

void NonHomIFS::support_bounds(double& lo, double& hi) const {
    lo = 0.0;
    hi = 0.0;
    for (int it = 0; it < 256; ++it) {
        double nlo = std::numeric_limits<double>::infinity();
        double nhi = -nlo;
        for (const auto& f : maps) {
            nlo = std::min(nlo, f.lambda * lo + f.translation);
            nhi = std::max(nhi, f.lambda * hi + f.translation);
        }
        nlo = std::min(nlo, lo);
        nhi = std::max(nhi, hi);
        if (nlo == lo && nhi == hi) break;
        lo = nlo;
        hi = nhi;
    }
}

namespace {

void nonhom_dfs(const NonHomIFS& ifs, double threshold, double lam_u, double t_u, double p_u,
                std::vector<Atom>& atoms, std::vector<double>& ratios, std::size_t cap) {
    if (lam_u <= threshold) {
        if (atoms.size() >= cap) throw CapacityError("generate_nonhom: stopping set exceeds cap");
        atoms.push_back({t_u, p_u});
        ratios.push_back(lam_u);
        return;
    }
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
        const auto& f = ifs.maps[i];
        // f_u o f_i: lambda_u*lambda_i, t_u + lambda_u*t_i
        nonhom_dfs(ifs, threshold, lam_u * f.lambda, t_u + lam_u * f.translation,
                   p_u * ifs.weights[i], atoms, ratios, cap);
    }
}

} // namespace

NonHomStage generate_nonhom(const NonHomIFS& ifs, int m, std::size_t word_cap) {
    ifs.validate();
    if (m < 0) throw std::invalid_argument("generate_nonhom: m must be nonnegative");
    const double threshold = std::ldexp(1.0, -m);
    std::vector<Atom> atoms;
    std::vector<double> ratios;
    nonhom_dfs(ifs, threshold, 1.0, 0.0, 1.0, atoms, ratios, word_cap);

    NonHomStage out;
    out.word_count = atoms.size();
    out.measure = AtomicMeasure(atoms);
    // contraction-ratio classes, clustered at relative tolerance 1e-12
    std::sort(ratios.begin(), ratios.end());
    for (double r : ratios) {
        if (out.ratio_classes.empty() ||
            r - out.ratio_classes.back() > 1e-12 * out.ratio_classes.back()) {
            out.ratio_classes.push_back(r);
            out.class_sizes.push_back(1);
        } else {
            ++out.class_sizes.back();
        }
    }
    return out;
}

long long stage_for_scale(double lambda, int m, int margin) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("stage_for_scale: bad lambda");
    const double n = (double)m * std::log(2.0) / std::log(1.0 / lambda);
    return (long long)std::ceil(n - 1e-9) + margin;
}

} // namespace flq
