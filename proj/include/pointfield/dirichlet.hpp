#pragma once

// Cylinder functions of point configurations, their gradient along moving
// individual points, the square field operator, and a Monte Carlo
// estimator for the associated energy form.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pointfield/bump.hpp"
#include "pointfield/configuration.hpp"
#include "pointfield/parallel.hpp"
#include "pointfield/rng.hpp"

namespace pointfield {

/// Inner test function with an exact gradient callable. Callers promise
/// compact support; it is not machine-enforced.
struct SmoothField {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
};

/// Outer smooth function g together with its exact partial derivatives,
/// written into the output span (one entry per argument).
struct OuterFunction {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> partials;
};

/// u(gamma) = g(<f_1,gamma>, ..., <f_m,gamma>).
class CylinderFunction {
  public:
    CylinderFunction(std::vector<SmoothField> inner, OuterFunction outer)
        : inner_(std::move(inner)), outer_(std::move(outer)) {
        if (inner_.empty())
            throw std::invalid_argument("CylinderFunction: no inner fields");
    }

    std::size_t arity() const { return inner_.size(); }
    const SmoothField& field(std::size_t j) const { return inner_[j]; }

    /// The pairing vector (<f_1,gamma>, ..., <f_m,gamma>).
    std::vector<double> pairings(const Configuration& gamma) const {
        std::vector<double> s(inner_.size(), 0.0);
        for (std::size_t p = 0; p < gamma.size(); ++p) {
            const auto x = gamma.point(p);
            for (std::size_t j = 0; j < inner_.size(); ++j)
                s[j] += inner_[j].value(x);
        }
        return s;
    }

    double operator()(const Configuration& gamma) const {
        const auto s = pairings(gamma);
        return outer_.value(s);
    }

    /// dg/ds_j at the given pairing vector.
    std::vector<double> outer_partials(std::span<const double> s) const {
        std::vector<double> c(inner_.size());
        outer_.partials(s, c);
        return c;
    }

  private:
    std::vector<SmoothField> inner_;
    OuterFunction outer_;
};

/// Gradient of u along moving each point of gamma separately:
/// entry block p (of gamma.dim() components, in point order) equals
/// sum_j dg/ds_j(pairings) * grad f_j(x_p).
inline std::vector<double> intrinsic_gradient(const CylinderFunction& u,
                                              const Configuration& gamma) {
    const int d = gamma.dim();
    std::vector<double> out(gamma.size() * static_cast<std::size_t>(d), 0.0);
    if (gamma.empty()) return out;
    const auto c = u.outer_partials(u.pairings(gamma));
    std::vector<double> g(d);
    for (std::size_t p = 0; p < gamma.size(); ++p) {
        const auto x = gamma.point(p);
        for (std::size_t j = 0; j < u.arity(); ++j) {
            u.field(j).gradient(x, g);
            for (int k = 0; k < d; ++k)
                out[p * static_cast<std::size_t>(d) + k] += c[j] * g[k];
        }
    }
    return out;
}

/// Square field Gamma(u, v)(gamma): inner product of the two intrinsic
/// gradients, summed over the points of gamma with multiplicity.
inline double square_field(const CylinderFunction& u,
                           const CylinderFunction& v,
                           const Configuration& gamma) {
    if (gamma.empty()) return 0.0;
    const auto gu = intrinsic_gradient(u, gamma);
    const auto gv = intrinsic_gradient(v, gamma);
    double s = 0.0;
    for (std::size_t k = 0; k < gu.size(); ++k) s += gu[k] * gv[k];
    return s;
}

inline double square_field(const CylinderFunction& u,
                           const Configuration& gamma) {
    if (gamma.empty()) return 0.0;
    double s = 0.0;
    for (double c : intrinsic_gradient(u, gamma)) s += c * c;
    return s;
}

/// The thresholded sup statistic psi(sup_i <phi_i, gamma>): close to 1
/// once some family member's bump mass reaches 2, i.e. two points share
/// a cell. A sup of finitely many cylinder functions rather than a
/// cylinder function itself, so its square field differentiates through
/// the (tie-broken) argmax member only.
class SupBumpDetector {
  public:
    explicit SupBumpDetector(const BumpFamily& family) : family_(family) {}

    const BumpFamily& family() const { return family_; }

    double value(const Configuration& gamma) const {
        return count_threshold(family_.sup_bump(gamma).value);
    }

    /// (psi'(sup))^2 times the summed squared gradient norm of the argmax
    /// member over the points of gamma.
    double square_field(const Configuration& gamma) const {
        const auto sup = family_.sup_bump(gamma);
        const double slope = count_threshold_deriv(sup.value);
        if (slope == 0.0) return 0.0;
        double acc = 0.0;
        for (std::size_t p = 0; p < gamma.size(); ++p)
            acc += cell_bump_grad_norm2(sup.argmax, family_.refinement(),
                                        gamma.point(p));
        return slope * slope * acc;
    }

  private:
    BumpFamily family_;
};

struct EnergyEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t replicas = 0;
};

/// Monte Carlo estimate of the energy form: mean and standard error of
/// form(draw(stream)) over independent replicas. Replica r always uses
/// the stream (stream_context, r), and the reduction runs serially in
/// replica order, so the result is bit-identical for any worker count.
template <class GammaForm, class Sampler>
EnergyEstimate energy_mc(GammaForm&& form, Sampler&& draw,
                         std::size_t replicas, std::uint64_t seed,
                         std::uint32_t stream_context, int workers = 1) {
    if (replicas < 2) throw std::invalid_argument("energy_mc: replicas < 2");
    std::vector<double> values(replicas);
    parallel_for(replicas, workers, [&](std::size_t r) {
        RandomStream rng(seed, make_stream_id(stream_context,
                                              static_cast<std::uint32_t>(r)));
        values[r] = form(draw(rng));
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(replicas);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    EnergyEstimate est;
    est.mean = mean;
    est.std_error = std::sqrt(ss / static_cast<double>(replicas - 1) /
                              static_cast<double>(replicas));
    est.replicas = replicas;
    return est;
}

}  // namespace pointfield
