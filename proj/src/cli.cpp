#include "flq/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "flq/addcomb.hpp"
#include "flq/errors.hpp"
#include "flq/geometry.hpp"
#include "flq/measure.hpp"
#include "flq/models.hpp"
#include "flq/separation.hpp"
#include "flq/spectra.hpp"

namespace flq {

using nlohmann::json;
namespace fs = std::filesystem;

void atomic_write(const std::string& path, const std::string& content) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
        if (!os.flush()) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

namespace {

constexpr int kOutputVersion = 1;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 1;
    std::size_t atom_cap = (std::size_t)1 << 24;
};

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

const json& need(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
    return j.at(key);
}

// Numeric parameter that may name an irrational from the documented list.
double parse_real(const json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "sqrt2") return std::sqrt(2.0);
        if (s == "sqrt5") return std::sqrt(5.0);
        if (s == "golden") return (1.0 + std::sqrt(5.0)) / 2.0;
        if (s == "golden_inverse") return (std::sqrt(5.0) - 1.0) / 2.0;
        // "p/q" rationals
        const auto slash = s.find('/');
        if (slash != std::string::npos) {
            try {
                const long long p = std::stoll(s.substr(0, slash));
                const long long q = std::stoll(s.substr(slash + 1));
                if (q != 0) return (double)p / (double)q;
            } catch (const std::exception&) {
            }
        }
    }
    throw ConfigError(where + ": expected a number, \"p/q\", or one of "
                              "sqrt2|sqrt5|golden|golden_inverse");
}

QuadExt parse_exact_real(const json& v, const std::string& where) {
    if (v.is_number()) return QuadExt(Rational::from_double(v.get<double>()));
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "golden_inverse") return QuadExt(Rational(-1, 2), Rational(1, 2), 5);
        if (s == "golden") return QuadExt(Rational(1, 2), Rational(1, 2), 5);
        const auto slash = s.find('/');
        if (slash != std::string::npos) {
            const long long p = std::stoll(s.substr(0, slash));
            const long long q = std::stoll(s.substr(slash + 1));
            return QuadExt(Rational(p, q));
        }
    }
    throw ConfigError(where + ": expected a number, \"p/q\", golden, or golden_inverse");
}

json load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) throw ConfigError("missing --config PATH");
    std::ifstream is(g.config_path);
    if (!is) throw ConfigError("cannot open config: " + g.config_path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return j;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

ModelState parse_state(const json& j, const Model& model, const std::string& where) {
    ModelState s;
    s.coords.assign(model.periods().size(), 0.0);
    if (j.is_array()) {
        if (j.size() != model.periods().size())
            throw ConfigError(where + ": state has " + std::to_string(j.size()) +
                              " coordinates, model needs " +
                              std::to_string(model.periods().size()));
        for (std::size_t i = 0; i < j.size(); ++i) s.coords[i] = parse_real(j[i], where);
    } else if (!j.is_null()) {
        throw ConfigError(where + ": state must be an array of coordinates");
    }
    return s;
}

void parallel_for(int threads, std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(threads, (int)count); ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

int cmd_spectrum(const GlobalOpts& g) {
    const json cfg = load_config(g);
    check_keys(cfg, "spectrum",
               {"model", "nonhom", "measure", "q_grid", "m_min", "m_max", "states",
                "stage_margin", "output_prefix"});
    const int m_min = need(cfg, "spectrum", "m_min").get<int>();
    const int m_max = need(cfg, "spectrum", "m_max").get<int>();
    const int margin = cfg.value("stage_margin", 2);
    std::vector<double> q_grid = default_q_grid();
    if (cfg.contains("q_grid")) {
        q_grid.clear();
        for (const auto& v : cfg.at("q_grid")) q_grid.push_back(parse_real(v, "q_grid"));
    }
    const std::string prefix = cfg.value("output_prefix", std::string("spectrum"));

    std::vector<SpectrumReport> reports(q_grid.size());
    if (cfg.contains("model")) {
        const Model model = Model::from_json(cfg.at("model").dump());
        const ModelState state =
            parse_state(cfg.contains("states") ? cfg.at("states").at(0) : json(), model,
                        "spectrum.states");
        parallel_for(g.threads, q_grid.size(), [&](std::size_t i) {
            reports[i] = empirical_tau(model, state, q_grid[i], m_min, m_max, margin, g.atom_cap);
        });
    } else if (cfg.contains("nonhom")) {
        const json& nj = cfg.at("nonhom");
        check_keys(nj, "nonhom", {"maps", "weights"});
        NonHomIFS ifs;
        for (const auto& m : need(nj, "nonhom", "maps"))
            ifs.maps.push_back({parse_real(m.at(0), "nonhom.maps"), parse_real(m.at(1), "nonhom.maps")});
        for (const auto& w : need(nj, "nonhom", "weights"))
            ifs.weights.push_back(parse_real(w, "nonhom.weights"));
        parallel_for(g.threads, q_grid.size(), [&](std::size_t i) {
            reports[i] = empirical_tau(ifs, q_grid[i], m_min, m_max, margin, g.atom_cap);
        });
    } else if (cfg.contains("measure")) {
        const DyadicMeasure dm = DyadicMeasure::from_json(cfg.at("measure").dump());
        parallel_for(g.threads, q_grid.size(), [&](std::size_t i) {
            reports[i] = empirical_tau(dm, q_grid[i], m_min, m_max);
        });
    } else {
        throw ConfigError("spectrum: need one of model | nonhom | measure");
    }

    std::ostringstream csv;
    csv << "# version," << kOutputVersion << "\n" << SpectrumReport::csv_header() << "\n";
    for (const auto& r : reports) csv << r.to_csv_rows();
    json out;
    out["version"] = kOutputVersion;
    out["reports"] = json::array();
    for (const auto& r : reports) out["reports"].push_back(json::parse(r.to_json()));
    atomic_write(out_path(g, prefix + ".csv"), csv.str());
    atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");

    std::printf("%8s %14s %14s\n", "q", "dimension", "theoretical");
    for (const auto& r : reports)
        std::printf("%8.4g %14.6f %14s\n", r.q, r.lq_dimension(),
                    r.theoretical_tau ? std::to_string(*r.theoretical_tau / (r.q - 1)).c_str()
                                      : "-");
    return 0;
}

// ---------------------------------------------------------------------------
// separation
// ---------------------------------------------------------------------------

Model parse_exact_model(const json& mj) {
    const std::string type = mj.value("type", std::string());
    if (type == "selfsimilar") {
        std::vector<ExactAtom> atoms;
        for (const auto& a : mj.at("delta").at("atoms"))
            atoms.push_back({parse_exact_real(a.at(0), "delta"),
                             Rational::from_double(a.at(1).get<double>())});
        return make_selfsimilar_exact(ExactAtomicMeasure(std::move(atoms)),
                                      parse_exact_real(mj.at("lambda"), "lambda"));
    }
    if (type == "skip") {
        Model base = parse_exact_model(mj.at("base"));
        const std::string keep = mj.at("keep").get<std::string>();
        return make_skip(base, mj.at("k").get<int>(),
                         keep == "multiples" ? SkipKeep::multiples : SkipKeep::non_multiples);
    }
    throw ConfigError("exact mode supports selfsimilar and skip models only");
}

int cmd_separation(const GlobalOpts& g, const std::string& flag_coeffs,
                   const std::string& flag_lambda, int flag_n, const std::string& flag_mode) {
    json cfg;
    if (!g.config_path.empty()) {
        cfg = load_config(g);
    } else {
        // build a minpoly task from the direct flags
        if (flag_coeffs.empty() || flag_lambda.empty() || flag_n < 0)
            throw ConfigError("separation: need --config or --coeffs/--lambda/--n");
        cfg["task"] = "minpoly";
        json coeffs = json::array();
        std::istringstream is(flag_coeffs);
        std::string tok;
        while (std::getline(is, tok, ',')) coeffs.push_back(std::stod(tok));
        cfg["coeffs"] = coeffs;
        cfg["lambda"] = flag_lambda;
        cfg["n"] = flag_n;
        cfg["mode"] = flag_mode;
    }
    check_keys(cfg, "separation",
               {"task", "coeffs", "lambda", "lambda_grid", "n", "mode", "budget", "model",
                "state", "n_max", "R", "output_prefix"});
    const std::string task = cfg.value("task", std::string("minpoly"));
    const std::string prefix = cfg.value("output_prefix", std::string("separation"));
    const SolveMode mode = solve_mode_from_string(cfg.value("mode", std::string("float")));
    const unsigned long long budget = cfg.value("budget", (unsigned long long)kDefaultNodeBudget);

    json out;
    out["version"] = kOutputVersion;
    std::ostringstream csv;
    csv << "# version," << kOutputVersion << "\n";
    try {
        if (task == "minpoly") {
            std::vector<double> coeffs;
            for (const auto& c : need(cfg, "separation", "coeffs"))
                coeffs.push_back(parse_real(c, "coeffs"));
            const int n = need(cfg, "separation", "n").get<int>();
            MinPolyResult r;
            if (mode == SolveMode::exact) {
                std::vector<QuadExt> ex;
                for (const auto& c : cfg.at("coeffs")) ex.push_back(parse_exact_real(c, "coeffs"));
                r = min_poly_value_exact(ex, parse_exact_real(cfg.at("lambda"), "lambda"), n,
                                         budget);
            } else {
                r = min_poly_value(coeffs, parse_real(cfg.at("lambda"), "lambda"), n, mode, budget,
                                   g.threads);
            }
            out["task"] = "minpoly";
            out["value"] = r.value;
            out["exact_zero"] = r.exact_zero;
            if (r.exact_value) out["exact_value"] = r.exact_value->to_string();
            if (r.enclosure) out["enclosure"] = {r.enclosure->lo, r.enclosure->hi};
            out["nodes_visited"] = r.nodes_visited;
            out["witness"] = r.witness;
            csv << "n,value\n" << n << ',' << std::setprecision(17) << r.value << "\n";
            std::printf("min |P(lambda)| over degree <= %d: %.17g%s\n", n, r.value,
                        r.exact_zero ? " (exact zero)" : "");
        } else if (task == "profile") {
            Model model = mode == SolveMode::exact
                              ? parse_exact_model(need(cfg, "separation", "model"))
                              : Model::from_json(need(cfg, "separation", "model").dump());
            const ModelState state = parse_state(cfg.contains("state") ? cfg.at("state") : json(),
                                                 model, "separation.state");
            const SeparationProfile prof = separation_profile(
                model, state, need(cfg, "separation", "n_max").get<long long>(),
                cfg.value("R", 1.0), mode, g.atom_cap);
            out["task"] = "profile";
            out["mode"] = to_string(prof.mode);
            out["verdict"] = prof.verdict;
            out["first_failure"] = prof.first_failure;
            out["rows"] = json::array();
            for (const auto& r : prof.per_n)
                out["rows"].push_back({{"n", r.n},
                                       {"gap", r.min_gap},
                                       {"overlaps", r.overlap_count},
                                       {"threshold", r.threshold},
                                       {"pass", r.passes}});
            csv << SeparationProfile::csv_header() << "\n" << prof.to_csv_rows();
            std::printf("%s\n", prof.verdict.c_str());
        } else if (task == "scan") {
            std::vector<double> coeffs, grid;
            for (const auto& c : need(cfg, "separation", "coeffs"))
                coeffs.push_back(parse_real(c, "coeffs"));
            for (const auto& l : need(cfg, "separation", "lambda_grid"))
                grid.push_back(parse_real(l, "lambda_grid"));
            const int n = need(cfg, "separation", "n").get<int>();
            const auto points = superexp_scan(coeffs, grid, n, mode, budget);
            out["task"] = "scan";
            out["points"] = json::array();
            csv << "lambda,normalized_log\n";
            for (const auto& p : points) {
                out["points"].push_back({{"lambda", p.lambda},
                                         {"normalized_log", p.exact_zero ? json() : json(p.normalized_log)},
                                         {"exact_zero", p.exact_zero}});
                csv << std::setprecision(17) << p.lambda << ','
                    << (p.exact_zero ? std::string("-inf") : std::to_string(p.normalized_log))
                    << "\n";
            }
            std::printf("scanned %zu lambda values at n=%d\n", points.size(), n);
        } else {
            throw ConfigError("separation: unknown task " + task);
        }
    } catch (const BudgetError& e) {
        out["status"] = "budget_exceeded";
        out["best_upper_bound"] = e.best_upper_bound;
        out["nodes_visited"] = e.nodes_visited;
        atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");
        std::cerr << "budget exceeded: best-so-far " << e.best_upper_bound << "\n";
        return 4;
    }
    out["status"] = "ok";
    atomic_write(out_path(g, prefix + ".csv"), csv.str());
    atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// intersect / slice / sumset / witness / project
// ---------------------------------------------------------------------------

std::vector<int> parse_digits(const json& j, const std::string& where) {
    std::vector<int> out;
    for (const auto& d : j) out.push_back(d.get<int>());
    if (out.empty()) throw ConfigError(where + ": empty digit set");
    return out;
}

int cmd_intersect(const GlobalOpts& g) {
    const json cfg = load_config(g);
    check_keys(cfg, "intersect",
               {"base", "digits_a", "digits_b", "t", "u", "depths", "output_prefix"});
    const int p = need(cfg, "intersect", "base").get<int>();
    const auto da = parse_digits(need(cfg, "intersect", "digits_a"), "digits_a");
    const auto db = parse_digits(need(cfg, "intersect", "digits_b"), "digits_b");
    const double t = parse_real(need(cfg, "intersect", "t"), "t");
    const double u = cfg.contains("u") ? parse_real(cfg.at("u"), "u") : 0.0;
    const std::string prefix = cfg.value("output_prefix", std::string("intersect"));

    std::vector<std::pair<double, long long>> counts;
    std::vector<double> per_depth_exponent;
    for (const auto& dj : need(cfg, "intersect", "depths")) {
        const int depth = dj.get<int>();
        const CantorCells A = cantor_cells(p, da, depth, g.atom_cap);
        const CantorCells B = cantor_cells(p, db, depth, g.atom_cap);
        const double eps = A.scale();
        const long long n = intersect_affine(A, B, t, u, eps);
        counts.push_back({eps, n});
        per_depth_exponent.push_back(n > 0 ? std::log((double)n) / std::log(1.0 / eps) : 0.0);
    }
    const ExponentFit fit = exponent_fit(counts);
    const double dim_a = std::log((double)da.size()) / std::log((double)p);
    const double dim_b = std::log((double)db.size()) / std::log((double)p);
    const double bound = std::max(dim_a + dim_b - 1.0, 0.0);

    std::ostringstream csv;
    csv << "# version," << kOutputVersion << "\neps,count\n" << std::setprecision(17);
    for (const auto& [e, n] : counts) csv << e << ',' << n << "\n";
    json out;
    out["version"] = kOutputVersion;
    out["exponent"] = fit.slope;
    out["r2"] = fit.r2;
    out["unstable"] = fit.unstable;
    out["per_depth_exponent"] = per_depth_exponent;
    out["theoretical_upper_bound"] = bound;
    out["note"] = "finite-depth exponents overshoot the asymptotic bound; the bound is "
                  "reported, not asserted";
    atomic_write(out_path(g, prefix + ".csv"), csv.str());
    atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");
    std::printf("intersection exponent %.4f (bound %.4f)\n", fit.slope, bound);
    return 0;
}

int cmd_slice(const GlobalOpts& g) {
    const json cfg = load_config(g);
    check_keys(cfg, "slice",
               {"lambda", "alpha", "translations", "depth", "normal", "offset", "eps_grid",
                "output_prefix"});
    std::vector<std::pair<double, double>> tr;
    for (const auto& v : need(cfg, "slice", "translations"))
        tr.push_back({parse_real(v.at(0), "translations"), parse_real(v.at(1), "translations")});
    const CellSet2D cells =
        planar_attractor(parse_real(need(cfg, "slice", "lambda"), "lambda"),
                         cfg.contains("alpha") ? parse_real(cfg.at("alpha"), "alpha") : 0.0, tr,
                         need(cfg, "slice", "depth").get<int>(), g.atom_cap);
    const json& nrm = need(cfg, "slice", "normal");
    const double nx = parse_real(nrm.at(0), "normal");
    const double ny = parse_real(nrm.at(1), "normal");
    const double offset = cfg.contains("offset") ? parse_real(cfg.at("offset"), "offset") : 0.0;
    const std::string prefix = cfg.value("output_prefix", std::string("slice"));

    std::vector<std::pair<double, long long>> counts;
    for (const auto& ej : need(cfg, "slice", "eps_grid")) {
        const double eps = parse_real(ej, "eps_grid");
        counts.push_back({eps, slice_count(cells, nx, ny, offset, eps)});
    }
    const ExponentFit fit = exponent_fit(counts);

    std::ostringstream csv;
    csv << "# version," << kOutputVersion << "\neps,count\n" << std::setprecision(17);
    for (const auto& [e, n] : counts) csv << e << ',' << n << "\n";
    json out;
    out["version"] = kOutputVersion;
    out["exponent"] = fit.slope;
    out["r2"] = fit.r2;
    out["unstable"] = fit.unstable;
    atomic_write(out_path(g, prefix + ".csv"), csv.str());
    atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");
    std::printf("slice exponent %.4f (r2 %.3f)\n", fit.slope, fit.r2);
    return 0;
}

int cmd_sumset(const GlobalOpts& g) {
    const json cfg = load_config(g);
    check_keys(cfg, "sumset",
               {"base_a", "digits_a", "depth_a", "base_b", "digits_b", "depth_b", "eps_grid",
                "output_prefix"});
    const CantorCells A =
        cantor_cells(need(cfg, "sumset", "base_a").get<int>(),
                     parse_digits(need(cfg, "sumset", "digits_a"), "digits_a"),
                     need(cfg, "sumset", "depth_a").get<int>(), g.atom_cap);
    const CantorCells B =
        cantor_cells(need(cfg, "sumset", "base_b").get<int>(),
                     parse_digits(need(cfg, "sumset", "digits_b"), "digits_b"),
                     need(cfg, "sumset", "depth_b").get<int>(), g.atom_cap);
    std::vector<double> eps_grid;
    for (const auto& e : need(cfg, "sumset", "eps_grid")) eps_grid.push_back(parse_real(e, "eps_grid"));
    const std::string prefix = cfg.value("output_prefix", std::string("sumset"));

    const SumsetDimension sd = sumset_dimension(A, B, eps_grid);
    std::ostringstream csv;
    csv << "# version," << kOutputVersion << "\neps,count\n" << std::setprecision(17);
    for (const auto& [e, n] : sd.counts) csv << e << ',' << n << "\n";
    json out;
    out["version"] = kOutputVersion;
    out["exponent"] = sd.fit.slope;
    out["r2"] = sd.fit.r2;
    out["unstable"] = sd.fit.unstable;
    atomic_write(out_path(g, prefix + ".csv"), csv.str());
    atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");
    std::printf("sumset exponent %.4f (r2 %.3f)\n", sd.fit.slope, sd.fit.r2);
    return 0;
}

int cmd_witness(const GlobalOpts& g) {
    const json cfg = load_config(g);
    check_keys(cfg, "witness", {"mu", "nu", "q", "D", "delta", "output_prefix"});
    const DyadicMeasure mu = DyadicMeasure::from_json(need(cfg, "witness", "mu").dump());
    const DyadicMeasure nu = DyadicMeasure::from_json(need(cfg, "witness", "nu").dump());
    const double q = parse_real(need(cfg, "witness", "q"), "q");
    const int D = need(cfg, "witness", "D").get<int>();
    const double delta = parse_real(need(cfg, "witness", "delta"), "delta");
    const std::string prefix = cfg.value("output_prefix", std::string("witness"));

    const WitnessReport rep = inverse_witness(mu, nu, q, D, delta);
    std::ostringstream csv;
    csv << "# version," << kOutputVersion << "\ns,offspring_a\n";
    for (std::size_t s = 0; s < rep.offspring_a.size(); ++s)
        csv << s << ',' << rep.offspring_a[s] << "\n";
    json out = json::parse(rep.to_json());
    out["version"] = kOutputVersion;
    atomic_write(out_path(g, prefix + ".csv"), csv.str());
    atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");
    std::printf("witness: %zu clauses, %s\n", rep.clauses.size(),
                rep.all_pass() ? "all pass" : "some fail");
    return 0;
}

int cmd_project(const GlobalOpts& g) {
    const json cfg = load_config(g);
    check_keys(cfg, "project", {"atoms", "direction", "output_prefix"});
    std::vector<PlanarAtom> atoms;
    for (const auto& a : need(cfg, "project", "atoms"))
        atoms.push_back({parse_real(a.at(0), "atoms"), parse_real(a.at(1), "atoms"),
                         parse_real(a.at(2), "atoms")});
    const json& dir = need(cfg, "project", "direction");
    const AtomicMeasure proj =
        project_measure(atoms, parse_real(dir.at(0), "direction"), parse_real(dir.at(1), "direction"));
    const std::string prefix = cfg.value("output_prefix", std::string("projected"));

    std::ostringstream csv;
    csv << "# version," << kOutputVersion << "\nlocation,mass\n" << std::setprecision(17);
    for (const auto& a : proj.atoms()) csv << a.location << ',' << a.mass << "\n";
    json out;
    out["version"] = kOutputVersion;
    out["measure"] = json::parse(proj.to_json());
    atomic_write(out_path(g, prefix + ".csv"), csv.str());
    atomic_write(out_path(g, prefix + ".json"), out.dump(2) + "\n");
    std::printf("projected %zu planar atoms onto %zu line atoms\n", atoms.size(), proj.size());
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"L^q spectra, separation certificates, and box-counting experiments for "
                 "self-similar and dynamically driven self-similar measures"};
    app.require_subcommand(1);

    GlobalOpts g;
    if (const char* cap = std::getenv("FRACTAL_LQ_CAPACITY")) {
        try {
            g.atom_cap = (std::size_t)std::stoull(cap);
        } catch (const std::exception&) {
            std::cerr << "ignoring malformed FRACTAL_LQ_CAPACITY\n";
        }
    }
    app.add_option("--config", g.config_path, "JSON config path")->expected(1);
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--threads", g.threads, "worker threads");

    auto* spectrum = app.add_subcommand("spectrum", "empirical and theoretical L^q spectra");
    auto* separation = app.add_subcommand("separation", "separation certificates and scans");
    auto* intersect = app.add_subcommand("intersect", "Cantor-set intersection counts");
    auto* slice = app.add_subcommand("slice", "planar attractor slice counts");
    auto* sumset = app.add_subcommand("sumset", "sumset covering counts");
    auto* witness = app.add_subcommand("witness", "inverse-theorem witness report");
    auto* project = app.add_subcommand("project", "project planar atoms onto a line");

    std::string flag_coeffs, flag_lambda, flag_mode = "float";
    int flag_n = -1;
    separation->add_option("--coeffs", flag_coeffs, "comma-separated coefficient set");
    separation->add_option("--lambda", flag_lambda, "contraction ratio (number or p/q)");
    separation->add_option("--n", flag_n, "polynomial degree bound");
    separation->add_option("--mode", flag_mode, "exact|interval|float");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(g);
        if (separation->parsed())
            return cmd_separation(g, flag_coeffs, flag_lambda, flag_n, flag_mode);
        if (intersect->parsed()) return cmd_intersect(g);
        if (slice->parsed()) return cmd_slice(g);
        if (sumset->parsed()) return cmd_sumset(g);
        if (witness->parsed()) return cmd_witness(g);
        if (project->parsed()) return cmd_project(g);
        throw ConfigError("no command given");
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << " (best-so-far " << e.best_upper_bound << ")\n";
        return 4;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::range_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace flq
