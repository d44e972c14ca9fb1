#pragma once

// Intensity measures on bounded boxes and samplers for Poisson, mixed
// Poisson, and pairwise-interacting Gibbs point processes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pointfield/configuration.hpp"
#include "pointfield/quadrature.hpp"
#include "pointfield/rng.hpp"

namespace pointfield {

struct Window {
    int dim;
    double half_side;  // the box [-half_side, half_side]^dim

    double volume() const { return std::pow(2.0 * half_side, dim); }

    bool contains(std::span<const double> x) const {
        for (double c : x)
            if (c < -half_side || c > half_side) return false;
        return true;
    }

    std::vector<double> lo() const {
        return std::vector<double>(dim, -half_side);
    }
    std::vector<double> hi() const {
        return std::vector<double>(dim, half_side);
    }
};

class DensityBoundError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A measure rho(x) dx restricted to a window, with a declared sup bound
/// used for rejection sampling. Total mass is cached at construction and
/// cross-checked against a factor-2 quadrature refinement.
class IntensityMeasure {
  public:
    using DensityFn = std::function<double(std::span<const double>)>;

    IntensityMeasure(Window window, DensityFn rho, double rho_max,
                     double rel_tol = 1e-8)
        : window_(window),
          rho_(std::move(rho)),
          rho_max_(rho_max),
          rel_tol_(rel_tol) {
        if (rho_max_ <= 0.0)
            throw std::invalid_argument("IntensityMeasure: rho_max <= 0");
        total_mass_ = mass_over(window_.lo(), window_.hi());
        if (!(total_mass_ > 0.0) || !std::isfinite(total_mass_))
            throw std::invalid_argument(
                "IntensityMeasure: total mass must be positive and finite");
    }

    /// Constant density `level`; box masses are computed in closed form.
    static IntensityMeasure constant(Window window, double level = 1.0) {
        IntensityMeasure m(
            window, [level](std::span<const double>) { return level; }, level);
        m.const_level_ = level;
        m.total_mass_ = level * window.volume();
        return m;
    }

    /// Strictly positive smooth density: floor + amp * exp(-|x|^2/width^2).
    static IntensityMeasure gaussian_bump(Window window, double floor = 0.5,
                                          double amp = 1.0,
                                          double width = 1.0) {
        if (floor <= 0.0)
            throw std::invalid_argument("gaussian_bump: floor must be > 0");
        auto rho = [floor, amp, width](std::span<const double> x) {
            double r2 = 0.0;
            for (double c : x) r2 += c * c;
            return floor + amp * std::exp(-r2 / (width * width));
        };
        return IntensityMeasure(window, rho, floor + amp);
    }

    double rho(std::span<const double> x) const { return rho_(x); }
    double rho_max() const { return rho_max_; }
    double total_mass() const { return total_mass_; }
    const Window& window() const { return window_; }
    bool is_constant() const { return const_level_.has_value(); }

    /// Mass of the box [lo,hi] clipped to the window.
    double mass_over(std::span<const double> lo,
                     std::span<const double> hi) const {
        std::vector<double> clo(window_.dim), chi(window_.dim);
        for (int k = 0; k < window_.dim; ++k) {
            clo[k] = std::max(lo[k], -window_.half_side);
            chi[k] = std::min(hi[k], window_.half_side);
            if (clo[k] >= chi[k]) return 0.0;
        }
        if (const_level_) {
            double v = *const_level_;
            for (int k = 0; k < window_.dim; ++k) v *= chi[k] - clo[k];
            return v;
        }
        return integrate_box(rho_, clo, chi, rel_tol_);
    }

  private:
    Window window_;
    DensityFn rho_;
    double rho_max_;
    double rel_tol_;
    double total_mass_ = 0.0;
    std::optional<double> const_level_;
};

/// Finite atomic mixing law for the random intensity multiplier z.
class MixingDistribution {
  public:
    struct Atom {
        double z;
        double p;
    };

    explicit MixingDistribution(std::vector<Atom> atoms)
        : atoms_(std::move(atoms)) {
        if (atoms_.empty())
            throw std::invalid_argument("MixingDistribution: no atoms");
        double total = 0.0;
        for (const auto& a : atoms_) {
            if (a.z < 0.0 || a.p <= 0.0)
                throw std::invalid_argument(
                    "MixingDistribution: need z >= 0 and p > 0");
            total += a.p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument(
                "MixingDistribution: probabilities must sum to 1");
        for (auto& a : atoms_) a.p /= total;
    }

    static MixingDistribution point_mass(double z) {
        return MixingDistribution({{z, 1.0}});
    }

    const std::vector<Atom>& atoms() const { return atoms_; }

    double mean() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.p * a.z;
        return s;
    }

    double second_moment() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.p * a.z * a.z;
        return s;
    }

    double sample(RandomStream& rng) const {
        const double u = rng.uniform();
        double acc = 0.0;
        for (const auto& a : atoms_) {
            acc += a.p;
            if (u < acc) return a.z;
        }
        return atoms_.back().z;
    }

  private:
    std::vector<Atom> atoms_;
};

/// <f, gamma>: sum of f over the points of gamma with multiplicity.
template <class F>
double pair_sum(F&& f, const Configuration& gamma) {
    double s = 0.0;
    for (std::size_t p = 0; p < gamma.size(); ++p) s += f(gamma.point(p));
    return s;
}

namespace detail {

template <class RhoLike>
inline void append_density_point(const RhoLike& sigma, RandomStream& rng,
                                 Configuration& gamma) {
    const Window& w = sigma.window();
    std::vector<double> x(w.dim);
    for (long attempt = 0; attempt < 1'000'000; ++attempt) {
        for (int k = 0; k < w.dim; ++k)
            x[k] = rng.uniform(-w.half_side, w.half_side);
        const double r = sigma.rho(x);
        if (r > sigma.rho_max() * (1.0 + 1e-12))
            throw DensityBoundError(
                "density exceeds declared rho_max during rejection sampling");
        if (rng.uniform() * sigma.rho_max() < r) {
            gamma.add(std::span<const double>(x));
            return;
        }
    }
    throw std::runtime_error(
        "rejection sampling failed to accept after 1e6 proposals");
}

}  // namespace detail

/// Draws a Poisson configuration with intensity z * sigma: the cardinality
/// is Poisson(z * total_mass) and points are i.i.d. with density
/// rho / total_mass via rejection under rho_max.
inline Configuration sample_poisson(const IntensityMeasure& sigma, double z,
                                    RandomStream& rng) {
    if (z < 0.0) throw std::invalid_argument("sample_poisson: z < 0");
    Configuration gamma(sigma.window().dim);
    if (z == 0.0) return gamma;
    const std::uint64_t n = rng.poisson(z * sigma.total_mass());
    for (std::uint64_t p = 0; p < n; ++p)
        detail::append_density_point(sigma, rng, gamma);
    return gamma;
}

struct MixedPoissonSample {
    double z;
    Configuration gamma;
};

/// Draws z from the mixing law, then a Poisson configuration at intensity
/// z * sigma; returns both so estimators can stratify by z.
inline MixedPoissonSample sample_mixed_poisson(const IntensityMeasure& sigma,
                                               const MixingDistribution& lambda,
                                               RandomStream& rng) {
    const double z = lambda.sample(rng);
    return {z, sample_poisson(sigma, z, rng)};
}

/// Exact mixed-Poisson expectation of exp<f, gamma>:
///   sum_k p_k exp(z_k * integral over the window of (e^f - 1) rho dx).
/// f must be bounded on the window and is treated as zero outside it.
template <class F>
double laplace_exact(F&& f, const IntensityMeasure& sigma,
                     const MixingDistribution& lambda, double rel_tol = 1e-8) {
    const auto lo = sigma.window().lo();
    const auto hi = sigma.window().hi();
    auto integrand = [&](std::span<const double> x) {
        return (std::exp(f(x)) - 1.0) * sigma.rho(x);
    };
    const double inner = integrate_box(integrand, lo, hi, rel_tol);
    double s = 0.0;
    for (const auto& a : lambda.atoms()) s += a.p * std::exp(a.z * inner);
    return s;
}

/// Nonnegative pair interaction (value may be +infinity) with an activity.
class PairPotential {
  public:
    using PotentialFn = std::function<double(std::span<const double>)>;

    PairPotential(PotentialFn phi, double activity)
        : phi_(std::move(phi)), activity_(activity) {
        if (activity_ <= 0.0)
            throw std::invalid_argument("PairPotential: activity <= 0");
    }

    /// Soft repulsion amplitude * exp(-|x|^2 / range^2); nonnegative, so
    /// superstable and lower regular, and integrably close to zero.
    static PairPotential gaussian_soft_core(double amplitude, double range,
                                            double activity, int dim) {
        if (amplitude < 0.0 || range <= 0.0)
            throw std::invalid_argument("gaussian_soft_core: bad parameters");
        auto phi = [amplitude, range](std::span<const double> x) {
            double r2 = 0.0;
            for (double c : x) r2 += c * c;
            return amplitude * std::exp(-r2 / (range * range));
        };
        PairPotential pot(phi, activity);
        auto radial = [amplitude, range](double t) {
            return amplitude * std::exp(-t * t / (range * range));
        };
        pot.integrability_ =
            radial_integrability(radial, dim, 0.0, 10.0 * range);
        return pot;
    }

    /// Hard exclusion: +infinity inside `radius`, zero outside.
    static PairPotential hard_core(double radius, double activity, int dim) {
        if (radius <= 0.0)
            throw std::invalid_argument("hard_core: radius <= 0");
        auto phi = [radius](std::span<const double> x) {
            double r2 = 0.0;
            for (double c : x) r2 += c * c;
            return r2 < radius * radius
                       ? std::numeric_limits<double>::infinity()
                       : 0.0;
        };
        PairPotential pot(phi, activity);
        // |e^{-phi} - 1| is 1 inside the core and 0 outside; integrate the
        // two smooth pieces separately.
        auto radial = [radius](double t) {
            return t < radius ? std::numeric_limits<double>::infinity() : 0.0;
        };
        pot.integrability_ = radial_integrability(radial, dim, 0.0, radius);
        return pot;
    }

    double value(std::span<const double> displacement) const {
        return phi_(displacement);
    }
    double activity() const { return activity_; }

    /// Numeric value of the integral of |e^{-phi} - 1| over R^d for the
    /// built-in potentials; NaN when the potential was user supplied.
    double integrability_estimate() const { return integrability_; }

  private:
    template <class Radial>
    static double radial_integrability(Radial&& radial, int dim, double lo,
                                       double hi) {
        // surface area of the unit sphere in R^dim
        const double surface =
            2.0 * std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim);
        auto g = [&](std::span<const double> t) {
            const double v = radial(t[0]);
            const double core = std::isinf(v) ? 1.0 : std::abs(std::expm1(-v));
            return surface * core * std::pow(t[0], dim - 1);
        };
        const double a[1] = {lo}, b[1] = {hi};
        const double val = integrate_box(g, a, b, 1e-3);
        if (!std::isfinite(val))
            throw std::invalid_argument(
                "pair potential fails the integrability check");
        return val;
    }

    PotentialFn phi_;
    double activity_;
    double integrability_ = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double interaction_energy(const PairPotential& pot,
                                 const Configuration& gamma,
                                 std::span<const double> x,
                                 std::size_t skip = SIZE_MAX) {
    const int d = gamma.dim();
    std::vector<double> diff(d);
    double e = 0.0;
    for (std::size_t p = 0; p < gamma.size(); ++p) {
        if (p == skip) continue;
        const auto y = gamma.point(p);
        for (int k = 0; k < d; ++k) diff[k] = x[k] - y[k];
        e += pot.value(diff);
        if (std::isinf(e)) return e;
    }
    return e;
}

}  // namespace detail

/// Metropolis-Hastings acceptance probability for inserting x into gamma,
/// with births proposed from sigma / total_mass and deaths uniform over
/// points. Infinite interaction energies give exactly zero.
inline double gibbs_birth_acceptance(const PairPotential& pot,
                                     const IntensityMeasure& sigma,
                                     const Configuration& gamma,
                                     std::span<const double> x) {
    const double delta = detail::interaction_energy(pot, gamma, x);
    if (std::isinf(delta)) return 0.0;
    const double ratio = pot.activity() * sigma.total_mass() *
                         std::exp(-delta) /
                         static_cast<double>(gamma.size() + 1);
    return std::min(1.0, ratio);
}

/// Acceptance probability for deleting point `idx` from gamma.
inline double gibbs_death_acceptance(const PairPotential& pot,
                                     const IntensityMeasure& sigma,
                                     const Configuration& gamma,
                                     std::size_t idx) {
    const double released =
        detail::interaction_energy(pot, gamma, gamma.point(idx), idx);
    const double ratio = static_cast<double>(gamma.size()) *
                         std::exp(released) /
                         (pot.activity() * sigma.total_mass());
    return std::min(1.0, ratio);
}

/// Grand-canonical birth-death chain targeting, relative to the Poisson
/// measure of sigma, the density proportional to
///   activity^{|gamma|} * exp(-sum of pair interactions).
/// Each sweep proposes a birth or a death with probability 1/2; the chain
/// starts empty and the state after `sweeps` proposals is returned.
inline Configuration sample_gibbs(const PairPotential& pot,
                                  const IntensityMeasure& sigma, long sweeps,
                                  RandomStream& rng) {
    if (sweeps < 1) throw std::invalid_argument("sample_gibbs: sweeps < 1");
    Configuration gamma(sigma.window().dim);
    Configuration proposal(sigma.window().dim);
    for (long s = 0; s < sweeps; ++s) {
        if (rng.uniform() < 0.5) {
            proposal.clear();
            detail::append_density_point(sigma, rng, proposal);
            const auto x = proposal.point(0);
            const double acc = gibbs_birth_acceptance(pot, sigma, gamma, x);
            if (rng.uniform() < acc) gamma.add(x);
        } else {
            if (gamma.empty()) continue;
            auto idx = static_cast<std::size_t>(rng.uniform() * gamma.size());
            if (idx >= gamma.size()) idx = gamma.size() - 1;
            const double acc = gibbs_death_acceptance(pot, sigma, gamma, idx);
            if (rng.uniform() < acc) gamma.remove(idx);
        }
    }
    return gamma;
}

/// Histogram estimate of the sup of the one-point density: the window is
/// cut into cells_per_axis^d congruent boxes and the maximal
/// count / (cell volume * sample count) is returned.
inline double empirical_density_bound(const std::vector<Configuration>& samples,
                                      const Window& window,
                                      int cells_per_axis) {
    if (samples.size() < 100)
        throw std::invalid_argument(
            "empirical_density_bound: need at least 100 samples");
    if (cells_per_axis < 1)
        throw std::invalid_argument("empirical_density_bound: bad cell count");
    const int d = window.dim;
    std::size_t total_cells = 1;
    for (int k = 0; k < d; ++k) total_cells *= cells_per_axis;
    std::vector<std::uint64_t> counts(total_cells, 0);
    const double side = 2.0 * window.half_side / cells_per_axis;
    for (const auto& gamma : samples) {
        for (std::size_t p = 0; p < gamma.size(); ++p) {
            const auto x = gamma.point(p);
            std::size_t flat = 0;
            for (int k = 0; k < d; ++k) {
                int c = static_cast<int>((x[k] + window.half_side) / side);
                c = std::clamp(c, 0, cells_per_axis - 1);
                flat = flat * cells_per_axis + static_cast<std::size_t>(c);
            }
            ++counts[flat];
        }
    }
    const double cell_volume = std::pow(side, d);
    std::uint64_t max_count = 0;
    for (auto c : counts) max_count = std::max(max_count, c);
    return static_cast<double>(max_count) /
           (cell_volume * static_cast<double>(samples.size()));
}

}  // namespace pointfield
