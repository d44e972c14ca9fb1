#pragma once

// Experiment engines shared by the command-line tool and the acceptance
// battery. Each engine runs one named check end to end: Monte Carlo
// against its exact oracle, CSV rows in a pinned column order, and
// pass/fail lines against thresholds baked in here.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pointfield/bump.hpp"
#include "pointfield/configuration.hpp"
#include "pointfield/csv.hpp"
#include "pointfield/diffusion.hpp"
#include "pointfield/dirichlet.hpp"
#include "pointfield/exceptionality.hpp"
#include "pointfield/parallel.hpp"
#include "pointfield/point_measures.hpp"
#include "pointfield/rng.hpp"

namespace pointfield {

/// Disjoint stream-context blocks per experiment family; a (context,
/// replica) pair names one random stream, so no two estimators share
/// randomness.
namespace stream_context {
inline constexpr std::uint32_t laplace_base = 0x0100;     // + pair index
inline constexpr std::uint32_t exceedance = 0x0200;
inline constexpr std::uint32_t scaling_base = 0x0300;     // + 16*d + n index
inline constexpr std::uint32_t gibbs_sample = 0x0400;
inline constexpr std::uint32_t collision_base = 0x0500;   // + 16*d + row index
inline constexpr std::uint32_t hit_rate = 0x0600;
inline constexpr std::uint32_t diffusion_paths = 0x0700;
}  // namespace stream_context

using RealField = std::function<double(std::span<const double>)>;

struct CheckLine {
    std::string label;
    bool passed = false;
    std::string detail;
};

struct ExperimentReport {
    std::string experiment;
    bool passed = true;
    std::vector<CheckLine> checks;
    std::vector<std::string> files;

    void add(std::string label, bool ok, std::string detail = "") {
        checks.push_back({std::move(label), ok, std::move(detail)});
        passed = passed && ok;
    }
};

/// Built-in density selector used by the front end: "const" is level 1,
/// "bump" the strictly positive Gaussian bump. The window carries the
/// one-cell partition margin beyond the box of half side a.
inline IntensityMeasure make_density(const std::string& rho, int d, int a) {
    const Window window{d, static_cast<double>(a) + 1.0};
    if (rho == "const") return IntensityMeasure::constant(window, 1.0);
    if (rho == "bump") return IntensityMeasure::gaussian_bump(window);
    throw std::invalid_argument("unknown density selector: " + rho);
}

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

}  // namespace detail

// --------------------------------------------------------------------------
// Laplace functional check
// --------------------------------------------------------------------------

/// Fixed suite of bounded test exponents, scaled to the window half side.
/// The zero function is included as an exactness sanity row; the other
/// five exercise constant, radial, separable, compactly supported, and
/// odd shapes with |f| <= 0.3 to keep the exp<f,.> variance tame.
inline std::vector<std::pair<std::string, RealField>> laplace_suite(double L) {
    std::vector<std::pair<std::string, RealField>> suite;
    suite.emplace_back("zero", [](std::span<const double>) { return 0.0; });
    suite.emplace_back("const_neg",
                       [](std::span<const double>) { return -0.2; });
    suite.emplace_back("gauss", [](std::span<const double> x) {
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        return 0.25 * std::exp(-r2);
    });
    suite.emplace_back("cosine", [L](std::span<const double> x) {
        double v = -0.3;
        for (double c : x) v *= std::cos(0.5 * M_PI * c / L);
        return v;
    });
    suite.emplace_back("bump", [](std::span<const double> x) {
        double v = 0.2;
        for (double c : x) v *= cell_bump(c);
        return v;
    });
    suite.emplace_back("odd_sine", [L](std::span<const double> x) {
        return 0.15 * std::sin(M_PI * x[0] / L);
    });
    return suite;
}

struct LaplacePair {
    std::string label;
    IntensityMeasure sigma;
    MixingDistribution lambda;
};

/// The three (density, mixing law) combinations used by the acceptance
/// battery: constant and bump densities, degenerate and spread mixing.
inline std::vector<LaplacePair> default_laplace_pairs() {
    std::vector<LaplacePair> pairs;
    pairs.push_back({"d1_const_unit", make_density("const", 1, 1),
                     MixingDistribution::point_mass(1.0)});
    pairs.push_back({"d2_const_mixed", make_density("const", 2, 1),
                     MixingDistribution({{0.5, 0.5}, {1.0, 0.2}, {2.0, 0.3}})});
    pairs.push_back({"d2_bump_mixed", make_density("bump", 2, 1),
                     MixingDistribution({{1.0, 0.6}, {3.0, 0.4}})});
    return pairs;
}

/// Monte Carlo means of exp<f, gamma> against the exact mixed-Poisson
/// Laplace functional, for every (pair, test function) combination.
/// Pass requires agreement within 3 standard errors everywhere.
inline ExperimentReport run_laplace_check(const std::vector<LaplacePair>& pairs,
                                          std::size_t replicas,
                                          std::uint64_t seed, int workers,
                                          const std::string& out_dir) {
    ExperimentReport report;
    report.experiment = "laplace-check";
    detail::ensure_dir(out_dir);

    CsvWriter csv({"pair", "f", "replicas", "exact", "mc_mean", "mc_stderr",
                   "abs_error", "pass"});
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
        const auto& pair = pairs[pi];
        const auto suite = laplace_suite(pair.sigma.window().half_side);
        const std::size_t nf = suite.size();
        std::vector<double> slots(replicas * nf);
        const auto ctx =
            stream_context::laplace_base + static_cast<std::uint32_t>(pi);
        parallel_for(replicas, workers, [&](std::size_t r) {
            RandomStream rng(
                seed, make_stream_id(ctx, static_cast<std::uint32_t>(r)));
            const auto draw = sample_mixed_poisson(pair.sigma, pair.lambda, rng);
            for (std::size_t j = 0; j < nf; ++j)
                slots[r * nf + j] =
                    std::exp(pair_sum(suite[j].second, draw.gamma));
        });
        for (std::size_t j = 0; j < nf; ++j) {
            double mean = 0.0;
            for (std::size_t r = 0; r < replicas; ++r)
                mean += slots[r * nf + j];
            mean /= static_cast<double>(replicas);
            double ss = 0.0;
            for (std::size_t r = 0; r < replicas; ++r) {
                const double dev = slots[r * nf + j] - mean;
                ss += dev * dev;
            }
            const double se = std::sqrt(ss / static_cast<double>(replicas - 1) /
                                        static_cast<double>(replicas));
            const double exact =
                laplace_exact(suite[j].second, pair.sigma, pair.lambda);
            const double err = std::abs(mean - exact);
            const bool ok = err <= 3.0 * se || err == 0.0;
            report.add("laplace " + pair.label + " f=" + suite[j].first, ok,
                       "exact " + format_double(exact) + " mc " +
                           format_double(mean) + " +- " + format_double(se));
            csv.field(pair.label);
            csv.field(suite[j].first);
            csv.field(replicas);
            csv.field(exact);
            csv.field(mean);
            csv.field(se);
            csv.field(err);
            csv.field(ok ? "1" : "0");
            csv.end_row();
        }
    }
    if (!out_dir.empty()) {
        const auto path = detail::join_path(out_dir, "laplace_check.csv");
        csv.write(path);
        report.files.push_back(path);
    }
    return report;
}

// --------------------------------------------------------------------------
// Exceedance identity check
// --------------------------------------------------------------------------

/// Independent brute-force series for E[N * 1{N >= 2}] with N mixed
/// Poisson of mean z*m: sum over atoms of p * sum_{j>=2} j e^{-zm} (zm)^j / j!.
inline double exceedance_series(double m, const MixingDistribution& lambda) {
    double total = 0.0;
    for (const auto& atom : lambda.atoms()) {
        const double mu = atom.z * m;
        if (mu == 0.0) continue;
        double term = std::exp(-mu) * mu * mu / 2.0;  // j = 2 probability
        double s = 0.0;
        for (int j = 2; j < 10000; ++j) {
            s += j * term;
            if (term * j < 1e-18 * (1.0 + s) && j > mu) break;
            term *= mu / (j + 1);
        }
        total += atom.p * s;
    }
    return total;
}

/// Checks the closed-form exceedance expectation against the series
/// oracle at fixed masses, and against a Monte Carlo occupation count of
/// two family cells (center and corner) under the mixed-Poisson sampler.
inline ExperimentReport run_exceedance_check(const IntensityMeasure& sigma,
                                             const MixingDistribution& lambda,
                                             int n, int a,
                                             std::size_t replicas,
                                             std::uint64_t seed, int workers,
                                             const std::string& out_dir) {
    ExperimentReport report;
    report.experiment = "exceedance-check";
    detail::ensure_dir(out_dir);
    const int d = sigma.window().dim;

    CsvWriter csv({"kind", "m", "exact", "estimate", "std_error", "tolerance",
                   "pass"});
    for (const double m : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        const double exact = exact_exceedance(m, lambda);
        const double series = exceedance_series(m, lambda);
        const double diff = std::abs(exact - series);
        const bool ok = diff <= 1e-12;
        report.add("series identity m=" + format_double(m), ok,
                   "closed form " + format_double(exact) + " series " +
                       format_double(series));
        csv.field("series");
        csv.field(m);
        csv.field(exact);
        csv.field(series);
        csv.field(0.0);
        csv.field(1e-12);
        csv.field(ok ? "1" : "0");
        csv.end_row();
    }

    const BumpFamily family(n, a, d);
    std::vector<std::vector<int>> cells;
    cells.push_back(std::vector<int>(d, 0));
    cells.push_back(std::vector<int>(d, family.index_bound()));
    std::vector<double> masses;
    for (const auto& cell : cells)
        masses.push_back(cell_mass(cell, family, sigma));

    std::vector<double> slots(replicas * cells.size());
    parallel_for(replicas, workers, [&](std::size_t r) {
        RandomStream rng(seed, make_stream_id(stream_context::exceedance,
                                              static_cast<std::uint32_t>(r)));
        const auto draw = sample_mixed_poisson(sigma, lambda, rng);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::uint64_t count = 0;
            for (std::size_t p = 0; p < draw.gamma.size(); ++p)
                if (cell_indicator(cells[c], n, draw.gamma.point(p))) ++count;
            slots[r * cells.size() + c] =
                count >= 2 ? static_cast<double>(count) : 0.0;
        }
    });
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < replicas; ++r)
            mean += slots[r * cells.size() + c];
        mean /= static_cast<double>(replicas);
        double ss = 0.0;
        for (std::size_t r = 0; r < replicas; ++r) {
            const double dev = slots[r * cells.size() + c] - mean;
            ss += dev * dev;
        }
        const double se = std::sqrt(ss / static_cast<double>(replicas - 1) /
                                    static_cast<double>(replicas));
        const double exact = exact_exceedance(masses[c], lambda);
        const bool ok = std::abs(mean - exact) <= 3.0 * se;
        report.add(std::string("mc occupation ") +
                       (c == 0 ? "center cell" : "corner cell"),
                   ok, "exact " + format_double(exact) + " mc " +
                           format_double(mean) + " +- " + format_double(se));
        csv.field("mc");
        csv.field(masses[c]);
        csv.field(exact);
        csv.field(mean);
        csv.field(se);
        csv.field(3.0 * se);
        csv.field(ok ? "1" : "0");
        csv.end_row();
    }
    if (!out_dir.empty()) {
        const auto path = detail::join_path(out_dir, "exceedance_check.csv");
        csv.write(path);
        report.files.push_back(path);
    }
    return report;
}

// --------------------------------------------------------------------------
// Refinement scaling of the detector energy
// --------------------------------------------------------------------------

/// Runs the refinement-scaling experiment for one dimension and reports
/// against the baked thresholds: every mean below the tight bound plus
/// 3 standard errors and no chain violations in every dimension; slope
/// at most -0.5 in d=3 (over the unsaturated refinements); means below
/// the (n-independent) crude bound in d=2; slope at least -0.1 in d=1.
inline ExperimentReport run_scaling(int d, const std::vector<int>& ns, int a,
                                    const IntensityMeasure& sigma,
                                    const MixingDistribution& lambda,
                                    std::size_t replicas, std::uint64_t seed,
                                    int workers, const std::string& out_dir) {
    ExperimentReport report;
    report.experiment = "scaling";
    detail::ensure_dir(out_dir);

    const auto ctx_base = static_cast<std::uint32_t>(
        stream_context::scaling_base + 16 * d);
    const ScalingResult result = scaling_experiment(
        ns, d, a, sigma, lambda, replicas, seed, ctx_base, workers);

    CsvWriter csv({"d", "n", "a", "replicas", "mc_mean", "mc_stderr",
                   "bound_tight", "bound_crude"});
    CsvWriter plot({"log_n", "log_mc_mean", "log_bound"});
    bool all_below_tight = true;
    bool all_below_crude = true;
    std::uint64_t violations = 0;
    std::size_t zero_entries = 0;
    for (const auto& e : result.entries) {
        csv.field(d);
        csv.field(e.refinement);
        csv.field(a);
        csv.field(e.energy.replicas);
        csv.field(e.energy.mean);
        csv.field(e.energy.std_error);
        csv.field(e.bounds.tight);
        csv.field(e.bounds.crude);
        csv.end_row();
        if (!e.zero_mean) {
            plot.field(std::log(static_cast<double>(e.refinement)));
            plot.field(std::log(e.energy.mean));
            plot.field(std::log(e.bounds.tight));
            plot.end_row();
        } else {
            ++zero_entries;
        }
        all_below_tight = all_below_tight &&
                          e.energy.mean <=
                              e.bounds.tight + 3.0 * e.energy.std_error;
        all_below_crude = all_below_crude && e.energy.mean <= e.bounds.crude;
        violations += e.chain_violations;
    }

    report.add("scaling d=" + std::to_string(d) + " means below tight bound",
               all_below_tight,
               zero_entries
                   ? std::to_string(zero_entries) + " zero-mean entries flagged"
                   : "");
    report.add("scaling d=" + std::to_string(d) + " chain inequality",
               violations == 0, std::to_string(violations) + " violations");
    if (d == 3) {
        // The decay exponent is a small-cell statement; grids with a cell
        // mass of 1 or more saturate the count threshold and sit outside
        // it, so the gate fits over the unsaturated refinements only. The
        // full fit is still reported alongside for comparison.
        const bool ok = result.asymptotic_points >= 2 &&
                        result.asymptotic_slope <= -0.5;
        report.add("scaling d=3 slope <= -0.5 (unsaturated refinements)", ok,
                   "slope " + format_double(result.asymptotic_slope) +
                       " over " + std::to_string(result.asymptotic_points) +
                       " points (all-refinement fit " +
                       format_double(result.fitted_slope) + " over " +
                       std::to_string(result.points_used) + ")");
    } else if (d == 2) {
        report.add("scaling d=2 means below crude bound", all_below_crude);
    } else if (d == 1) {
        const bool ok = result.points_used >= 2 && result.fitted_slope >= -0.1;
        report.add("scaling d=1 slope >= -0.1 (non-decay)", ok,
                   "slope " + format_double(result.fitted_slope) + " over " +
                       std::to_string(result.points_used) + " points");
    }

    if (!out_dir.empty()) {
        const auto path = detail::join_path(
            out_dir, "scaling_d" + std::to_string(d) + ".csv");
        csv.write(path);
        report.files.push_back(path);
        const auto plot_path = detail::join_path(
            out_dir, "scaling_d" + std::to_string(d) + "_plot.csv");
        plot.write(plot_path);
        report.files.push_back(plot_path);
    }
    return report;
}

// --------------------------------------------------------------------------
// Gibbs transfer
// --------------------------------------------------------------------------

struct GibbsParams {
    double activity = 0.8;
    double amplitude = 2.0;  // soft-core repulsion strength
    double range = 0.4;      // soft-core length scale
    long sweeps = 10000;     // burn-in per independent chain
};

/// Re-runs the detector-energy experiment under the soft-core Gibbs
/// sampler. The Poisson-based crude bound transfers through the squared
/// empirical density ratio (a second-factorial-moment argument), so the
/// baked checks are: means below that scaled bound plus 3 standard
/// errors, the pointwise chain inequality on every sample, simple
/// samples throughout, and an empirical density at most 25% above the
/// activity.
inline ExperimentReport run_gibbs_scaling(int d, const std::vector<int>& ns,
                                          int a, const GibbsParams& params,
                                          std::size_t replicas,
                                          std::uint64_t seed, int workers,
                                          const std::string& out_dir) {
    ExperimentReport report;
    report.experiment = "gibbs-scaling";
    detail::ensure_dir(out_dir);

    const IntensityMeasure sigma = make_density("const", d, a);
    const PairPotential potential = PairPotential::gaussian_soft_core(
        params.amplitude, params.range, params.activity, d);

    std::vector<Configuration> samples(replicas, Configuration(d));
    parallel_for(replicas, workers, [&](std::size_t r) {
        RandomStream rng(seed, make_stream_id(stream_context::gibbs_sample,
                                              static_cast<std::uint32_t>(r)));
        samples[r] = sample_gibbs(potential, sigma, params.sweeps, rng);
    });

    std::size_t duplicated = 0;
    for (const auto& gamma : samples)
        if (has_duplicate_within(gamma, sigma.window().half_side)) ++duplicated;
    report.add("gibbs samples simple", duplicated == 0,
               std::to_string(duplicated) + " duplicated-point samples");

    const int cells_per_axis = 2 * (a + 1);  // unit-volume histogram cells
    const double density_bound =
        empirical_density_bound(samples, sigma.window(), cells_per_axis);
    report.add("gibbs empirical density within activity slack",
               density_bound <= 1.25 * params.activity,
               "density bound " + format_double(density_bound) + " activity " +
                   format_double(params.activity));

    const MixingDistribution transfer =
        MixingDistribution::point_mass(density_bound);

    CsvWriter csv({"d", "n", "a", "replicas", "mc_mean", "mc_stderr",
                   "bound_scaled", "density_bound"});
    bool all_below = true;
    std::uint64_t violations = 0;
    std::vector<double> values(replicas);
    for (const int n : ns) {
        const BumpFamily family(n, a, d);
        const SupBumpDetector detector(family);
        std::vector<std::uint8_t> violated(replicas, 0);
        parallel_for(replicas, workers, [&](std::size_t r) {
            const double g = detector.square_field(samples[r]);
            values[r] = g;
            if (g > chain_bound(family, samples[r])) violated[r] = 1;
        });
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(replicas);
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / static_cast<double>(replicas - 1) /
                                    static_cast<double>(replicas));
        const double bound_scaled =
            explicit_energy_bounds(family, sigma, transfer).crude;
        all_below = all_below && mean <= bound_scaled + 3.0 * se;
        for (auto flag : violated) violations += flag;

        csv.field(d);
        csv.field(n);
        csv.field(a);
        csv.field(replicas);
        csv.field(mean);
        csv.field(se);
        csv.field(bound_scaled);
        csv.field(density_bound);
        csv.end_row();
    }
    report.add("gibbs means below density-scaled bound", all_below);
    report.add("gibbs chain inequality", violations == 0,
               std::to_string(violations) + " violations");

    if (!out_dir.empty()) {
        const auto path = detail::join_path(out_dir, "gibbs_scaling.csv");
        csv.write(path);
        report.files.push_back(path);
    }
    return report;
}

// --------------------------------------------------------------------------
// Collision dichotomy
// --------------------------------------------------------------------------

struct CollisionParams {
    double r0 = 0.5;
    double R = 4.0;
    double main_eps = 0.01;
    double main_step = 2e-5;
    std::uint64_t main_trials = 10000;
    std::vector<double> trend_eps = {0.08, 0.04, 0.02, 0.01};
    double trend_step = 2e-4;
    std::uint64_t trend_trials = 4000;
};

/// Annulus hitting probabilities against the closed-form oracles, plus
/// the inner-radius halving trend: the d=1 estimate plateaus at a
/// positive level while d >= 2 estimates strictly decrease.
inline ExperimentReport run_collision(const std::vector<int>& dims,
                                      const CollisionParams& params,
                                      std::uint64_t seed, int workers,
                                      const std::string& out_dir) {
    ExperimentReport report;
    report.experiment = "collision";
    detail::ensure_dir(out_dir);

    CsvWriter csv({"d", "r0", "eps", "R", "step", "trials", "mc_estimate",
                   "std_error", "exact"});
    auto emit = [&](int d, double eps, double step, const HitStats& stats,
                    double exact) {
        csv.field(d);
        csv.field(params.r0);
        csv.field(eps);
        csv.field(params.R);
        csv.field(step);
        csv.field(stats.trials);
        csv.field(stats.estimate);
        csv.field(stats.std_error);
        csv.field(exact);
        csv.end_row();
    };

    std::uint64_t capped = 0;
    for (const int d : dims) {
        const auto ctx_base = static_cast<std::uint32_t>(
            stream_context::collision_base + 16 * d);
        const double exact_main =
            annulus_hit_exact(d, params.r0, params.main_eps, params.R);
        const HitStats main =
            annulus_hit_mc(d, params.r0, params.main_eps, params.R,
                           params.main_trials, params.main_step, seed,
                           ctx_base, workers);
        capped += main.capped;
        emit(d, params.main_eps, params.main_step, main, exact_main);
        const double err = std::abs(main.estimate - exact_main);
        const double tol = std::max(3.0 * main.std_error, 0.02);
        report.add("collision d=" + std::to_string(d) + " oracle agreement",
                   err <= tol,
                   "exact " + format_double(exact_main) + " mc " +
                       format_double(main.estimate) + " +- " +
                       format_double(main.std_error));

        std::vector<double> trend;
        for (std::size_t k = 0; k < params.trend_eps.size(); ++k) {
            const double eps = params.trend_eps[k];
            const double exact =
                annulus_hit_exact(d, params.r0, eps, params.R);
            const HitStats stats = annulus_hit_mc(
                d, params.r0, eps, params.R, params.trend_trials,
                params.trend_step, seed,
                ctx_base + 1 + static_cast<std::uint32_t>(k), workers);
            capped += stats.capped;
            emit(d, eps, params.trend_step, stats, exact);
            trend.push_back(stats.estimate);
        }
        if (d == 1) {
            double lo = trend[0], hi = trend[0];
            for (double v : trend) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            report.add("collision d=1 plateau", lo >= 0.5 && hi - lo <= 0.05,
                       "range [" + format_double(lo) + ", " +
                           format_double(hi) + "]");
        } else {
            bool decreasing = true;
            for (std::size_t k = 1; k < trend.size(); ++k)
                decreasing = decreasing && trend[k] < trend[k - 1];
            report.add("collision d=" + std::to_string(d) +
                           " estimates decrease with eps",
                       decreasing);
        }
    }
    report.add("collision no step-capped trials", capped == 0,
               std::to_string(capped) + " capped");

    if (!out_dir.empty()) {
        const auto path = detail::join_path(out_dir, "collision.csv");
        csv.write(path);
        report.files.push_back(path);
    }
    return report;
}

}  // namespace pointfield
