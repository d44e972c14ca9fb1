#pragma once

// Finite-particle Euler-Maruyama simulation of drifted Brownian motion,
// plus the two-particle collision probe: the probability that the
// relative motion hits a small ball before a large sphere, with the
// classical closed-form exit probabilities as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pointfield/configuration.hpp"
#include "pointfield/parallel.hpp"
#include "pointfield/rng.hpp"

namespace pointfield {

/// Drift field written into `out`; both spans have the spatial dimension.
using DriftFn =
    std::function<void(std::span<const double>, std::span<double>)>;

inline DriftFn zero_drift() {
    return [](std::span<const double>, std::span<double> out) {
        for (auto& c : out) c = 0.0;
    };
}

/// grad log rho for the built-in density floor + amp * exp(-|x|^2/width^2);
/// bounded because floor > 0.
inline DriftFn gradient_log_bump_drift(double floor, double amp,
                                       double width) {
    if (floor <= 0.0 || width <= 0.0)
        throw std::invalid_argument("gradient_log_bump_drift: bad parameters");
    return [floor, amp, width](std::span<const double> x,
                               std::span<double> out) {
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        const double e = amp * std::exp(-r2 / (width * width));
        const double coef = -2.0 * e / ((floor + e) * width * width);
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = coef * x[k];
    };
}

struct SDEConfig {
    int dim = 1;
    double step = 1e-3;    // time step
    double horizon = 1.0;  // total simulated time
    DriftFn drift;         // empty means zero drift
    int particle_count = 1;
};

struct PathSummary {
    /// Running minimum over time (including the initial state) of all
    /// pairwise distances; +infinity for fewer than two particles.
    double min_pair_distance = std::numeric_limits<double>::infinity();
    Configuration endpoint{1};
};

/// Independent Euler-Maruyama updates per particle:
///   x <- x + drift(x) * step + sqrt(step) * standard normal vector.
/// Throws if the drift ever evaluates non-finite.
inline PathSummary simulate_paths(const SDEConfig& cfg,
                                  const Configuration& initial,
                                  RandomStream& rng) {
    if (cfg.step <= 0.0 || cfg.horizon < cfg.step)
        throw std::invalid_argument("simulate_paths: need 0 < step <= horizon");
    if (cfg.dim != initial.dim())
        throw std::invalid_argument("simulate_paths: dimension mismatch");
    if (static_cast<std::size_t>(cfg.particle_count) != initial.size())
        throw std::invalid_argument(
            "simulate_paths: initial configuration size != particle_count");

    const int d = cfg.dim;
    const std::size_t count = initial.size();
    std::vector<double> state(initial.raw().begin(), initial.raw().end());
    std::vector<double> drift_buf(d);
    const auto steps =
        static_cast<std::uint64_t>(std::llround(cfg.horizon / cfg.step));

    PathSummary summary;
    auto update_min = [&] {
        for (std::size_t p = 0; p + 1 < count; ++p)
            for (std::size_t q = p + 1; q < count; ++q) {
                double r2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double diff = state[p * d + k] - state[q * d + k];
                    r2 += diff * diff;
                }
                const double r = std::sqrt(r2);
                if (r < summary.min_pair_distance)
                    summary.min_pair_distance = r;
            }
    };
    update_min();

    const double root_step = std::sqrt(cfg.step);
    for (std::uint64_t s = 0; s < steps; ++s) {
        for (std::size_t p = 0; p < count; ++p) {
            const std::span<double> x(state.data() + p * d,
                                      static_cast<std::size_t>(d));
            if (cfg.drift) {
                cfg.drift(x, drift_buf);
                for (int k = 0; k < d; ++k) {
                    if (!std::isfinite(drift_buf[k]))
                        throw std::runtime_error(
                            "simulate_paths: drift evaluated non-finite");
                    x[k] += drift_buf[k] * cfg.step;
                }
            }
            for (int k = 0; k < d; ++k) x[k] += root_step * rng.normal();
        }
        update_min();
    }

    Configuration endpoint(d);
    for (std::size_t p = 0; p < count; ++p)
        endpoint.add(std::span<const double>(state.data() + p * d,
                                             static_cast<std::size_t>(d)));
    summary.endpoint = std::move(endpoint);
    return summary;
}

struct HitStats {
    std::uint64_t trials = 0;
    std::uint64_t hits = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t capped = 0;  // trials stopped by the step cap (counted as
                               // outer exits); expected to stay 0
};

/// Exact probability that Brownian motion started at radius r0 hits the
/// ball of radius eps before the sphere of radius R, for d in {1,2,3}.
inline double annulus_hit_exact(int d, double r0, double eps, double R) {
    if (!(0.0 < eps && eps <= r0 && r0 <= R) || eps >= R)
        throw std::invalid_argument(
            "annulus_hit_exact: need 0 < eps <= r0 <= R with eps < R");
    switch (d) {
        case 1:
            return (R - r0) / (R - eps);
        case 2:
            return std::log(R / r0) / std::log(R / eps);
        case 3:
            return (1.0 / r0 - 1.0 / R) / (1.0 / eps - 1.0 / R);
        default:
            throw std::invalid_argument("annulus_hit_exact: d must be 1, 2, 3");
    }
}

/// Monte Carlo estimate of the same probability for the relative motion
/// of two Brownian particles: a single walk with per-step increments
/// sqrt(2 * step) * standard normal, started at radius r0, checked
/// against both radii after every step. Trial t uses the stream
/// (stream_context, t), so the result is worker-count independent.
inline HitStats annulus_hit_mc(int d, double r0, double eps, double R,
                               std::uint64_t trials, double step,
                               std::uint64_t seed,
                               std::uint32_t stream_context,
                               int workers = 1) {
    annulus_hit_exact(d, r0, eps, R);  // validate the geometry
    if (trials < 1) throw std::invalid_argument("annulus_hit_mc: no trials");
    if (step <= 0.0) throw std::invalid_argument("annulus_hit_mc: step <= 0");

    // Gaussian increments are exact for Brownian motion at any step size, so
    // the only discretization error is a boundary crossing that both starts
    // and ends outside the ball. `step` is the far-field step; inside a thin
    // shell around the inner ball the step shrinks quadratically with the
    // remaining gap (floored at sigma/64), which makes an unseen crossing
    // astronomically unlikely instead of an O(sqrt(step)) bias.
    const double root_base = std::sqrt(2.0 * step);
    const double root_floor = root_base / 64.0;
    const double shell = eps + 4.0 * root_base;
    const double shell2 = shell * shell;
    const double eps2 = eps * eps;
    const double R2 = R * R;
    const std::uint64_t max_steps = 1'000'000'000;

    std::vector<std::uint8_t> outcome(trials, 0);  // 1 = hit, 2 = capped
    parallel_for(trials, workers, [&](std::size_t t) {
        RandomStream rng(
            seed, make_stream_id(stream_context, static_cast<std::uint32_t>(t)));
        double x[3] = {r0, 0.0, 0.0};
        if (r0 <= eps) {  // started on or inside the inner boundary
            outcome[t] = 1;
            return;
        }
        if (r0 >= R) return;
        double r2 = r0 * r0;
        for (std::uint64_t s = 0; s < max_steps; ++s) {
            double root = root_base;
            if (r2 < shell2) {
                const double gap = std::sqrt(r2) - eps;
                root = std::clamp(0.25 * gap, root_floor, root_base);
            }
            r2 = 0.0;
            for (int k = 0; k < d; ++k) {
                x[k] += root * rng.normal();
                r2 += x[k] * x[k];
            }
            if (r2 <= eps2) {
                outcome[t] = 1;
                return;
            }
            if (r2 >= R2) return;
        }
        outcome[t] = 2;
    });

    HitStats stats;
    stats.trials = trials;
    for (auto o : outcome) {
        if (o == 1) ++stats.hits;
        if (o == 2) ++stats.capped;
    }
    stats.estimate =
        static_cast<double>(stats.hits) / static_cast<double>(trials);
    stats.std_error = std::sqrt(stats.estimate * (1.0 - stats.estimate) /
                                static_cast<double>(trials));
    return stats;
}

}  // namespace pointfield
