#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>

#include "flq/measure.hpp"

using namespace flq;

namespace {

DyadicMeasure random_probability(std::mt19937_64& rng, int m, Geometry geom, int max_support) {
    std::uniform_int_distribution<long long> pick(0, (1LL << m) - 1);
    std::uniform_real_distribution<double> mass(0.05, 1.0);
    const int n = 1 + (int)(rng() % (std::uint64_t)max_support);
    std::map<long long, double> acc;
    for (int i = 0; i < n; ++i) acc[pick(rng)] += mass(rng);
    double total = 0.0;
    for (auto& [k, v] : acc) total += v;
    std::vector<std::pair<long long, double>> entries;
    for (auto& [k, v] : acc) entries.push_back({k, v / total});
    return DyadicMeasure(m, geom, std::move(entries));
}

AtomicMeasure random_atomic(std::mt19937_64& rng, int max_atoms) {
    std::uniform_real_distribution<double> loc(0.0, 1.0);
    std::uniform_real_distribution<double> mass(0.05, 1.0);
    const int n = 1 + (int)(rng() % (std::uint64_t)max_atoms);
    std::vector<Atom> atoms;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        atoms.push_back({loc(rng), mass(rng)});
        total += atoms.back().mass;
    }
    for (auto& a : atoms) a.mass /= total;
    return AtomicMeasure(std::move(atoms));
}

} // namespace

TEST_CASE("discretize: point mass at zero") {
    const DyadicMeasure dm = discretize(AtomicMeasure::delta(0.0), 5, Geometry::line);
    const auto e = dm.entries();
    REQUIRE(e.size() == 1);
    CHECK(e[0].first == 0);
    CHECK(e[0].second == doctest::Approx(1.0));
}

TEST_CASE("discretize: grid-aligned atoms") {
    const AtomicMeasure am({{0.0, 0.5}, {0.5, 0.5}});
    const auto e = discretize(am, 1, Geometry::line).entries();
    REQUIRE(e.size() == 2);
    CHECK(e[0] == std::pair<long long, double>{0, 0.5});
    CHECK(e[1] == std::pair<long long, double>{1, 0.5});
}

TEST_CASE("discretize: nearby atoms collapse into one cell") {
    const AtomicMeasure am({{0.3, 0.25}, {0.31, 0.75}});
    const auto e = discretize(am, 3, Geometry::line).entries();
    REQUIRE(e.size() == 1);
    CHECK(e[0].first == 2); // floor(0.3*8) == floor(0.31*8) == 2
    CHECK(e[0].second == doctest::Approx(1.0));
}

TEST_CASE("discretize: line window violation") {
    CHECK_THROWS_AS(discretize(AtomicMeasure::delta(1.5), 4, Geometry::line), std::range_error);
    CHECK_NOTHROW(discretize(AtomicMeasure::delta(1.5), 4, Geometry::line, 0.0, 2.0));
    // circle reduces mod 1 instead
    const auto e = discretize(AtomicMeasure::delta(1.25), 2, Geometry::circle).entries();
    CHECK(e[0].first == 1);
}

TEST_CASE("lq_norm: uniform, point mass, arithmetic") {
    for (double q : {1.5, 2.0, 4.0})
        CHECK(lq_norm(DyadicMeasure::uniform_full(8, Geometry::circle), q) ==
              doctest::Approx(std::pow(2.0, 8.0 * (1.0 - q))));
    const DyadicMeasure atom(10, Geometry::circle, {{37, 1.0}});
    for (double q : {1.01, 2.0, 20.0}) CHECK(lq_norm(atom, q) == doctest::Approx(1.0));
    const DyadicMeasure three(2, Geometry::circle, {{0, 0.5}, {1, 0.25}, {2, 0.25}});
    CHECK(lq_norm(three, 2.0) == doctest::Approx(0.375));
    CHECK(lq_norm(three, std::numeric_limits<double>::infinity()) == doctest::Approx(0.5));
    CHECK_THROWS_AS(lq_norm(three, 1.0), std::domain_error);
    CHECK_THROWS_AS(lq_norm(three, 0.5), std::domain_error);
}

TEST_CASE("convolve: point mass at 0 is the identity") {
    std::mt19937_64 rng(7);
    const DyadicMeasure mu = random_probability(rng, 8, Geometry::circle, 40);
    const DyadicMeasure delta(8, Geometry::circle, {{0, 1.0}});
    const DyadicMeasure conv = convolve(mu, delta);
    const auto a = mu.entries(), b = conv.entries();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(a[i].second == doctest::Approx(b[i].second));
    }
}

TEST_CASE("convolve: two-point self-convolutions on circle and line") {
    const DyadicMeasure u(1, Geometry::circle, {{0, 0.5}, {1, 0.5}});
    // oracle: enumerate the four index sums mod 2
    std::map<long long, double> expect;
    for (long long i : {0, 1})
        for (long long j : {0, 1}) expect[(i + j) % 2] += 0.25;
    const auto got = convolve(u, u).entries();
    REQUIRE(got.size() == expect.size());
    for (const auto& [k, v] : got) CHECK(v == doctest::Approx(expect[k]));

    const DyadicMeasure ul(1, Geometry::line, {{0, 0.5}, {1, 0.5}});
    const auto gl = convolve(ul, ul).entries();
    REQUIRE(gl.size() == 3);
    CHECK(gl[0].second == doctest::Approx(0.25));
    CHECK(gl[1].second == doctest::Approx(0.5));
    CHECK(gl[2].second == doctest::Approx(0.25));
}

TEST_CASE("convolve: scale and geometry mismatches are errors") {
    const DyadicMeasure a(3, Geometry::circle, {{0, 1.0}});
    const DyadicMeasure b(4, Geometry::circle, {{0, 1.0}});
    const DyadicMeasure c(3, Geometry::line, {{0, 1.0}});
    CHECK_THROWS_AS(convolve(a, b), std::invalid_argument);
    CHECK_THROWS_AS(convolve(a, c), std::invalid_argument);
}

TEST_CASE("affine_image examples") {
    std::mt19937_64 rng(11);
    const AtomicMeasure mu = random_atomic(rng, 12);
    const AtomicMeasure same = affine_image(mu, 1.0, 0.0);
    REQUIRE(same.size() == mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        CHECK(same.atoms()[i].location == doctest::Approx(mu.atoms()[i].location));

    const AtomicMeasure scaled = affine_image(AtomicMeasure::delta(1.0), 1.0 / 3.0, 0.0);
    CHECK(scaled.atoms()[0].location == doctest::Approx(1.0 / 3.0));

    const AtomicMeasure sym({{0.0, 0.5}, {1.0, 0.5}});
    const AtomicMeasure flipped = affine_image(sym, -1.0, 1.0);
    REQUIRE(flipped.size() == 2);
    CHECK(flipped.atoms()[0].location == doctest::Approx(0.0));
    CHECK(flipped.atoms()[1].location == doctest::Approx(1.0));

    CHECK_THROWS_AS(affine_image(sym, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("restrict_normalize examples") {
    const DyadicMeasure u = DyadicMeasure::uniform_full(2, Geometry::circle);
    const auto full = restrict_normalize(u, 0, 0).entries();
    CHECK(full.size() == 4);

    const auto half = restrict_normalize(u, 1, 0).entries();
    REQUIRE(half.size() == 2);
    CHECK(half[0] == std::pair<long long, double>{0, 0.5});
    CHECK(half[1] == std::pair<long long, double>{1, 0.5});

    const DyadicMeasure two(2, Geometry::circle, {{0, 0.1}, {2, 0.9}});
    const auto upper = restrict_normalize(two, 1, 1).entries();
    REQUIRE(upper.size() == 1);
    CHECK(upper[0] == std::pair<long long, double>{2, 1.0});

    CHECK_THROWS_AS(restrict_normalize(two, 2, 1), std::domain_error);
}

TEST_CASE("coarsen examples") {
    const DyadicMeasure u = DyadicMeasure::uniform_full(2, Geometry::circle);
    CHECK(coarsen(u, 2).entries() == u.entries());
    const auto half = coarsen(u, 1).entries();
    REQUIRE(half.size() == 2);
    CHECK(half[0].second == doctest::Approx(0.5));

    const DyadicMeasure two(1, Geometry::circle, {{0, 0.25}, {1, 0.75}});
    const auto root = coarsen(two, 0).entries();
    REQUIRE(root.size() == 1);
    CHECK(root[0] == std::pair<long long, double>{0, 1.0});

    CHECK_THROWS_AS(coarsen(two, 2), std::invalid_argument);
}

TEST_CASE("scale caps are configuration errors") {
    CHECK_THROWS_AS(DyadicMeasure(61, Geometry::line, {{0, 1.0}}), ConfigError);
    CHECK_NOTHROW(DyadicMeasure(60, Geometry::line, {{0, 1.0}}));
}

TEST_CASE("property: Young's inequality and mass conservation") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 4 + (int)(rng() % 8);
        const DyadicMeasure a = random_probability(rng, m, Geometry::circle, 64);
        const DyadicMeasure b = random_probability(rng, m, Geometry::circle, 64);
        const DyadicMeasure c = convolve(a, b);
        CHECK(std::fabs(c.total_mass() - a.total_mass() * b.total_mass()) < 1e-10);
        for (double q : {1.5, 2.0, 4.0})
            CHECK(lq_norm(c, q) <= lq_norm(a, q) + 1e-10);
    }
}

TEST_CASE("property: coarsening monotonicity") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 6 + (int)(rng() % 6);
        const DyadicMeasure mu = random_probability(rng, m, Geometry::circle, 200);
        for (double q : {1.5, 2.0, 4.0}) {
            double prev = lq_norm(mu, q);
            for (int mc = m - 1; mc >= 0; --mc) {
                const double cur = lq_norm(coarsen(mu, mc), q);
                CHECK(cur >= prev - 1e-12);
                prev = cur;
            }
        }
    }
}

TEST_CASE("property: discretized convolution comparable within 3^q") {
    std::mt19937_64 rng(5150);
    for (int trial = 0; trial < 100; ++trial) {
        const AtomicMeasure mu = random_atomic(rng, 20);
        const AtomicMeasure nu = random_atomic(rng, 20);
        const int m = 6 + (int)(rng() % 6);
        for (double q : {1.5, 2.0, 3.0}) {
            const double direct =
                lq_norm(discretize(convolve_circle(mu, nu), m, Geometry::circle), q);
            const double grid = lq_norm(
                convolve(discretize(mu, m, Geometry::circle), discretize(nu, m, Geometry::circle)),
                q);
            const double factor = std::pow(3.0, q);
            CHECK(direct <= grid * factor * (1 + 1e-9));
            CHECK(grid <= direct * factor * (1 + 1e-9));
        }
    }
}

TEST_CASE("FFT convolution path agrees with dense hand convolution") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 10; ++trial) {
        const int m = 12;
        const DyadicMeasure a = random_probability(rng, m, Geometry::circle, 3000);
        const DyadicMeasure b = random_probability(rng, m, Geometry::circle, 3000);
        const DyadicMeasure direct = convolve(a, b); // small support product: direct path
        std::vector<double> dense(1 << m, 0.0);
        a.for_each([&](long long k, double va) {
            b.for_each([&](long long j, double vb) {
                dense[(std::size_t)((k + j) & ((1 << m) - 1))] += va * vb;
            });
        });
        direct.for_each([&](long long k, double v) {
            CHECK(v == doctest::Approx(dense[(std::size_t)k]).epsilon(1e-9));
        });
    }
    // large instance through the FFT path: uniform * anything stays uniform
    std::vector<std::pair<long long, double>> ea, eb;
    const int m = 12;
    for (long long k = 0; k < (1 << m); ++k) {
        ea.push_back({k, 1.0 / (1 << m)});
        if (k % 3 == 0) eb.push_back({k, 1.0});
    }
    double tb = 0;
    for (auto& [k, v] : eb) tb += v;
    for (auto& [k, v] : eb) v /= tb;
    const DyadicMeasure a(m, Geometry::circle, ea), b(m, Geometry::circle, eb);
    REQUIRE(a.support_size() * b.support_size() > DyadicMeasure::kDirectConvolutionCap);
    const DyadicMeasure fft = convolve(a, b);
    fft.for_each([&](long long, double v) {
        CHECK(v == doctest::Approx(1.0 / (1 << m)).epsilon(1e-9));
    });
}

TEST_CASE("json round trips") {
    std::mt19937_64 rng(4);
    const AtomicMeasure am = random_atomic(rng, 10);
    const AtomicMeasure am2 = AtomicMeasure::from_json(am.to_json());
    REQUIRE(am2.size() == am.size());
    for (std::size_t i = 0; i < am.size(); ++i) {
        CHECK(am2.atoms()[i].location == am.atoms()[i].location);
        CHECK(am2.atoms()[i].mass == am.atoms()[i].mass);
    }
    const DyadicMeasure dm = random_probability(rng, 9, Geometry::line, 50);
    const DyadicMeasure dm2 = DyadicMeasure::from_json(dm.to_json());
    CHECK(dm2.scale_m() == dm.scale_m());
    CHECK(dm2.geometry() == dm.geometry());
    CHECK(dm2.entries() == dm.entries());
}

TEST_CASE("exact atoms merge and count coincidences") {
    std::vector<ExactAtom> atoms;
    atoms.push_back({QuadExt(Rational(1, 3)), Rational(1, 4)});
    atoms.push_back({QuadExt(Rational(2, 6)), Rational(1, 4)});
    atoms.push_back({QuadExt(Rational(1, 2)), Rational(1, 2)});
    const ExactAtomicMeasure em(std::move(atoms));
    CHECK(em.size() == 2);
    CHECK(em.overlap_count() == 1);
    CHECK(em.atoms()[0].mass == Rational(1, 2));
}
