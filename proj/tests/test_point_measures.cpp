#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "pointfield/csv.hpp"
#include "pointfield/point_measures.hpp"
#include "pointfield/rng.hpp"

using namespace pointfield;

TEST_CASE("window geometry") {
    const Window w{2, 1.5};
    CHECK(w.volume() == Catch::Approx(9.0));
    const std::array<double, 2> in{1.5, -1.5}, out{1.6, 0.0};
    CHECK(w.contains(in));
    CHECK_FALSE(w.contains(out));
    CHECK(w.lo() == std::vector<double>{-1.5, -1.5});
    CHECK(w.hi() == std::vector<double>{1.5, 1.5});
}

TEST_CASE("constant intensity has closed-form masses") {
    const auto sigma = IntensityMeasure::constant(Window{2, 1.0}, 2.0);
    CHECK(sigma.is_constant());
    CHECK(sigma.total_mass() == Catch::Approx(8.0).epsilon(1e-14));
    const std::array<double, 2> x{0.3, -0.9};
    CHECK(sigma.rho(x) == 2.0);

    // Clipping to the window.
    const std::array<double, 2> lo{0.5, -3.0}, hi{3.0, 0.0};
    CHECK(sigma.mass_over(lo, hi) ==
          Catch::Approx(2.0 * 0.5 * 1.0).epsilon(1e-14));
    const std::array<double, 2> lo2{2.0, 2.0}, hi2{3.0, 3.0};
    CHECK(sigma.mass_over(lo2, hi2) == 0.0);
}

TEST_CASE("gaussian bump intensity mass") {
    const auto sigma = IntensityMeasure::gaussian_bump(Window{2, 2.0});
    CHECK_FALSE(sigma.is_constant());
    CHECK(sigma.rho_max() == 1.5);
    // 0.5 * 16 + (sqrt(pi) erf(2))^2
    CHECK(sigma.total_mass() ==
          Catch::Approx(11.112270319717473).epsilon(1e-7));
    CHECK_THROWS_AS(IntensityMeasure::gaussian_bump(Window{1, 1.0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("mixing distribution validation and moments") {
    CHECK_THROWS_AS(MixingDistribution({}), std::invalid_argument);
    CHECK_THROWS_AS(MixingDistribution({{-0.5, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(MixingDistribution({{1.0, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(MixingDistribution({{1.0, 0.4}, {2.0, 0.4}}),
                    std::invalid_argument);

    const MixingDistribution lam({{0.5, 0.5}, {2.0, 0.5}});
    CHECK(lam.mean() == Catch::Approx(1.25).epsilon(1e-14));
    CHECK(lam.second_moment() == Catch::Approx(2.125).epsilon(1e-14));

    const auto unit = MixingDistribution::point_mass(1.0);
    REQUIRE(unit.atoms().size() == 1);
    CHECK(unit.atoms()[0].z == 1.0);
    CHECK(unit.atoms()[0].p == 1.0);

    RandomStream rng(3, 9);
    int low = 0;
    const int n = 40000;
    for (int k = 0; k < n; ++k)
        if (lam.sample(rng) == 0.5) ++low;
    const double p = static_cast<double>(low) / n;
    CHECK(std::abs(p - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("poisson sampler count law and simplicity") {
    const auto sigma = IntensityMeasure::constant(Window{2, 1.0});  // mass 4
    RandomStream rng(17, 5);

    CHECK(sample_poisson(sigma, 0.0, rng).empty());

    const int n = 20000;
    const double z = 1.5;
    double s1 = 0, s2 = 0;
    bool any_duplicate = false, all_inside = true;
    for (int k = 0; k < n; ++k) {
        const auto gamma = sample_poisson(sigma, z, rng);
        const double c = static_cast<double>(gamma.size());
        s1 += c;
        s2 += c * c;
        any_duplicate = any_duplicate || has_duplicate_within(gamma, 1.0);
        for (std::size_t p = 0; p < gamma.size(); ++p)
            all_inside = all_inside && sigma.window().contains(gamma.point(p));
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    const double want = z * sigma.total_mass();
    CHECK(std::abs(mean - want) < 3.0 * std::sqrt(want / n));
    CHECK(var == Catch::Approx(want).epsilon(0.05));
    CHECK_FALSE(any_duplicate);
    CHECK(all_inside);
    CHECK_THROWS_AS(sample_poisson(sigma, -0.1, rng), std::invalid_argument);
}

TEST_CASE("rejection sampler reproduces a non-constant density") {
    // Count points falling in the central quarter of a 1d window and
    // compare with the exact conditional mass.
    const auto sigma = IntensityMeasure::gaussian_bump(Window{1, 2.0});
    RandomStream rng(23, 1);
    const int n = 30000;
    const std::array<double, 1> lo{-0.5}, hi{0.5};
    const double inner = sigma.mass_over(lo, hi);
    double total = 0, within = 0;
    for (int k = 0; k < n; ++k) {
        const auto gamma = sample_poisson(sigma, 1.0, rng);
        total += static_cast<double>(gamma.size());
        for (std::size_t p = 0; p < gamma.size(); ++p)
            if (std::abs(gamma.point(p)[0]) <= 0.5) within += 1;
    }
    CHECK(std::abs(total / n - sigma.total_mass()) <
          3.0 * std::sqrt(sigma.total_mass() / n));
    CHECK(std::abs(within / n - inner) < 3.0 * std::sqrt(inner / n));
}

TEST_CASE("declared density bound is enforced") {
    const Window w{1, 1.0};
    IntensityMeasure lying(
        w, [](std::span<const double>) { return 2.0; }, 1.0);
    RandomStream rng(29, 1);
    CHECK_THROWS_AS(sample_poisson(lying, 1.0, rng), DensityBoundError);
}

TEST_CASE("mixed sampler follows the two-stage law") {
    const auto sigma = IntensityMeasure::constant(Window{1, 1.0});  // mass 2
    const MixingDistribution lam({{0.5, 0.5}, {2.0, 0.5}});
    RandomStream rng(31, 7);
    const int n = 40000;
    double s1 = 0;
    int empties = 0;
    for (int k = 0; k < n; ++k) {
        const auto draw = sample_mixed_poisson(sigma, lam, rng);
        REQUIRE((draw.z == 0.5 || draw.z == 2.0));
        s1 += static_cast<double>(draw.gamma.size());
        if (draw.gamma.empty()) ++empties;
    }
    const double m = sigma.total_mass();
    const double want_mean = lam.mean() * m;
    // Var N = E z m + Var z * m^2.
    const double var =
        want_mean + (lam.second_moment() - lam.mean() * lam.mean()) * m * m;
    CHECK(std::abs(s1 / n - want_mean) < 3.0 * std::sqrt(var / n));

    double want_empty = 0.0;
    for (const auto& a : lam.atoms()) want_empty += a.p * std::exp(-a.z * m);
    const double se =
        std::sqrt(want_empty * (1.0 - want_empty) / n);
    CHECK(std::abs(static_cast<double>(empties) / n - want_empty) < 3.0 * se);
}

TEST_CASE("void probabilities match the mixed-Poisson formula") {
    const auto sigma = IntensityMeasure::constant(Window{2, 1.0});
    const MixingDistribution lam({{0.5, 0.5}, {2.0, 0.5}});
    RandomStream rng(37, 2);
    const int n = 20000;

    const std::array<std::array<double, 4>, 3> boxes = {{
        {-1.0, -1.0, 0.0, 0.0},    // lower-left quadrant
        {-0.25, -0.25, 0.25, 0.25},
        {-1.0, -1.0, 1.0, 1.0},    // whole window
    }};
    std::array<int, 3> void_count{};
    for (int k = 0; k < n; ++k) {
        const auto draw = sample_mixed_poisson(sigma, lam, rng);
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            bool hit = false;
            for (std::size_t p = 0; p < draw.gamma.size() && !hit; ++p) {
                const auto x = draw.gamma.point(p);
                hit = x[0] >= boxes[b][0] && x[1] >= boxes[b][1] &&
                      x[0] <= boxes[b][2] && x[1] <= boxes[b][3];
            }
            if (!hit) ++void_count[b];
        }
    }
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        const std::array<double, 2> lo{boxes[b][0], boxes[b][1]};
        const std::array<double, 2> hi{boxes[b][2], boxes[b][3]};
        const double mass = sigma.mass_over(lo, hi);
        double want = 0.0;
        for (const auto& a : lam.atoms()) want += a.p * std::exp(-a.z * mass);
        const double got = static_cast<double>(void_count[b]) / n;
        const double se = std::sqrt(want * (1.0 - want) / n);
        INFO("box " << b);
        CHECK(std::abs(got - want) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("exact laplace functional") {
    const auto sigma = IntensityMeasure::constant(Window{1, 0.5});  // mass 1
    const auto unit = MixingDistribution::point_mass(1.0);

    CHECK(laplace_exact([](std::span<const double>) { return 0.0; }, sigma,
                        unit) == 1.0);

    const double log2 = std::log(2.0);
    CHECK(laplace_exact([&](std::span<const double>) { return log2; }, sigma,
                        unit) ==
          Catch::Approx(2.718281828459045).epsilon(1e-10));

    // Nonpositive f gives a value in (0, 1]; mixing weights act affinely.
    const MixingDistribution lam({{0.5, 0.5}, {2.0, 0.5}});
    const auto f = [](std::span<const double> x) {
        return -0.3 * std::exp(-x[0] * x[0]);
    };
    const double v = laplace_exact(f, sigma, lam);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    const double v1 = laplace_exact(f, sigma, MixingDistribution::point_mass(0.5));
    const double v2 = laplace_exact(f, sigma, MixingDistribution::point_mass(2.0));
    CHECK(v == Catch::Approx(0.5 * v1 + 0.5 * v2).epsilon(1e-12));
}

TEST_CASE("pair potential integrability oracles") {
    // Hard core: integral of |e^{-phi} - 1| is the volume of the core ball.
    CHECK(PairPotential::hard_core(0.5, 1.0, 1).integrability_estimate() ==
          Catch::Approx(1.0).epsilon(1e-12));
    CHECK(PairPotential::hard_core(0.5, 1.0, 2).integrability_estimate() ==
          Catch::Approx(0.7853981633974483).epsilon(1e-12));
    CHECK(PairPotential::hard_core(0.5, 1.0, 3).integrability_estimate() ==
          Catch::Approx(0.5235987755982988).epsilon(1e-12));

    // Gaussian repulsion, independently integrated radial profiles.
    CHECK(PairPotential::gaussian_soft_core(2.0, 0.4, 1.0, 1)
              .integrability_estimate() ==
          Catch::Approx(0.7890754664990649).epsilon(2e-3));
    CHECK(PairPotential::gaussian_soft_core(2.0, 0.4, 1.0, 2)
              .integrability_estimate() ==
          Catch::Approx(0.6631340908619127).epsilon(2e-3));
    CHECK(PairPotential::gaussian_soft_core(2.0, 0.4, 1.0, 3)
              .integrability_estimate() ==
          Catch::Approx(0.5292490078857417).epsilon(2e-3));

    const std::array<double, 2> at{0.1, 0.0};
    CHECK(PairPotential::hard_core(0.5, 1.0, 2).value(at) ==
          std::numeric_limits<double>::infinity());
    const std::array<double, 2> far{0.6, 0.0};
    CHECK(PairPotential::hard_core(0.5, 1.0, 2).value(far) == 0.0);

    CHECK_THROWS_AS(PairPotential::hard_core(-1.0, 1.0, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(PairPotential::gaussian_soft_core(2.0, 0.4, 0.0, 2),
                    std::invalid_argument);
    CHECK(std::isnan(PairPotential([](std::span<const double>) { return 0.0; },
                                   1.0)
                         .integrability_estimate()));
}

TEST_CASE("birth and death acceptances satisfy detailed balance") {
    const auto sigma = IntensityMeasure::constant(Window{2, 1.0});
    const auto pot = PairPotential::gaussian_soft_core(2.0, 0.4, 0.8, 2);
    RandomStream rng(41, 3);

    for (int trial = 0; trial < 200; ++trial) {
        Configuration gamma(2);
        const int pts = static_cast<int>(rng.uniform() * 6);
        for (int p = 0; p < pts; ++p)
            gamma.add({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
        const std::array<double, 2> x{rng.uniform(-1.0, 1.0),
                                      rng.uniform(-1.0, 1.0)};

        std::vector<double> diff(2);
        double delta = 0.0;
        for (std::size_t p = 0; p < gamma.size(); ++p) {
            const auto y = gamma.point(p);
            diff[0] = x[0] - y[0];
            diff[1] = x[1] - y[1];
            delta += pot.value(diff);
        }
        const double ratio = pot.activity() * sigma.total_mass() *
                             std::exp(-delta) /
                             static_cast<double>(gamma.size() + 1);

        const double birth = gibbs_birth_acceptance(pot, sigma, gamma, x);
        REQUIRE(birth == Catch::Approx(std::min(1.0, ratio)).epsilon(1e-12));

        Configuration grown = gamma;
        grown.add(x);
        const double death =
            gibbs_death_acceptance(pot, sigma, grown, grown.size() - 1);
        REQUIRE(death ==
                Catch::Approx(std::min(1.0, 1.0 / ratio)).epsilon(1e-12));
    }
}

TEST_CASE("infinite interaction gives exactly zero acceptance") {
    const auto sigma = IntensityMeasure::constant(Window{2, 1.0});
    const auto pot = PairPotential::hard_core(0.4, 1.0, 2);
    Configuration gamma(2);
    gamma.add({0.0, 0.0});
    const std::array<double, 2> close{0.1, 0.1};
    CHECK(gibbs_birth_acceptance(pot, sigma, gamma, close) == 0.0);
}

TEST_CASE("gibbs chain with zero interaction matches the poisson law") {
    // With phi = 0 the chain's stationary law is Poisson(activity * mass);
    // bin the terminal counts and apply a chi-square test with frozen
    // Poisson(2.8) bin probabilities, critical value chi2(0.999, 8 dof).
    const auto sigma = IntensityMeasure::constant(Window{1, 2.0});  // mass 4
    const PairPotential zero([](std::span<const double>) { return 0.0; }, 0.7);
    const int chains = 2000;
    const int sweeps = 2000;

    const double probs[9] = {
        0.06081006262521797, 0.1702681753506103,  0.23837544549085443,
        0.22248374912479746, 0.15573862438735822, 0.08721362965692059,
        0.04069969383989627, 0.01627987753595851, 0.008130741988386259};
    int observed[9] = {};
    for (int c = 0; c < chains; ++c) {
        RandomStream rng(2026, make_stream_id(900, static_cast<std::uint32_t>(c)));
        const auto gamma = sample_gibbs(zero, sigma, sweeps, rng);
        const std::size_t n = gamma.size();
        ++observed[n >= 8 ? 8 : n];
    }
    double chi2 = 0.0;
    for (int b = 0; b < 9; ++b) {
        const double expect = probs[b] * chains;
        const double diff = observed[b] - expect;
        chi2 += diff * diff / expect;
    }
    INFO("chi2 = " << chi2);
    CHECK(chi2 < 26.124481558375997);
}

TEST_CASE("hard-core chain never leaves the allowed set") {
    const auto sigma = IntensityMeasure::constant(Window{2, 1.5});
    const auto pot = PairPotential::hard_core(0.3, 1.0, 2);
    double min_dist = std::numeric_limits<double>::infinity();
    std::size_t total_points = 0;
    for (int c = 0; c < 50; ++c) {
        RandomStream rng(7, make_stream_id(901, static_cast<std::uint32_t>(c)));
        const auto gamma = sample_gibbs(pot, sigma, 3000, rng);
        total_points += gamma.size();
        for (std::size_t i = 0; i < gamma.size(); ++i)
            for (std::size_t j = i + 1; j < gamma.size(); ++j) {
                const auto a = gamma.point(i), b = gamma.point(j);
                const double dx = a[0] - b[0], dy = a[1] - b[1];
                min_dist = std::min(min_dist, std::sqrt(dx * dx + dy * dy));
            }
    }
    CHECK(total_points > 100);  // the chain does move
    CHECK(min_dist >= 0.3);
}

TEST_CASE("empirical density bound tracks the true intensity") {
    const auto sigma = IntensityMeasure::constant(Window{1, 1.0});
    RandomStream rng(53, 4);
    std::vector<Configuration> samples;
    const double z = 2.0;
    for (int k = 0; k < 2000; ++k)
        samples.push_back(sample_poisson(sigma, z, rng));
    const double bound = empirical_density_bound(samples, sigma.window(), 2);
    CHECK(bound >= 0.95 * z);
    CHECK(bound <= 1.2 * z);

    samples.erase(samples.begin() + 99, samples.end());
    CHECK_THROWS_AS(empirical_density_bound(samples, sigma.window(), 2),
                    std::invalid_argument);
}

TEST_CASE("configuration csv golden bytes") {
    std::vector<Configuration> samples;
    Configuration a(2);
    a.add({0.25, -0.5});
    a.add({1.0, 2.0});
    Configuration b(2);
    b.add({-0.125, 3.0});
    samples.push_back(a);
    samples.push_back(b);

    const std::string path = "test_configurations_golden.csv";
    write_configurations_csv(path, samples);
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() ==
          "replica_id,x_1,x_2\n"
          "0,0.25,-0.5\n"
          "0,1,2\n"
          "1,-0.125,3\n");
    std::remove(path.c_str());
}
