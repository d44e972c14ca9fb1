#pragma once

// Tensor-product Gauss-Legendre quadrature over axis-aligned boxes with
// panel-doubling error control: the box is split into m panels per axis,
// integrated with an 8-point rule per panel, and m is doubled until two
// successive refinements agree to the requested relative tolerance.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointfield {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;  // |refined - coarse| at the last doubling
    bool converged = false;
    int panels_per_axis = 0;
};

class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(double achieved_rel, double requested_rel)
        : std::runtime_error("quadrature did not converge: achieved relative "
                             "error " +
                             std::to_string(achieved_rel) + ", requested " +
                             std::to_string(requested_rel)),
          achieved(achieved_rel),
          requested(requested_rel) {}
    double achieved;
    double requested;
};

namespace detail {

inline constexpr std::array<double, 4> kGl8Nodes = {
    0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
    0.9602898564975363};
inline constexpr std::array<double, 4> kGl8Weights = {
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
    0.1012285362903763};

template <class F>
double tensor_gl8(F&& f, std::span<const double> lo, std::span<const double> hi,
                  int panels) {
    const int d = static_cast<int>(lo.size());
    // Composite grid per axis: panels x 8 nodes with matching weights.
    std::vector<std::vector<double>> pos(d), wts(d);
    for (int k = 0; k < d; ++k) {
        const double h = (hi[k] - lo[k]) / panels;
        pos[k].reserve(panels * 8);
        wts[k].reserve(panels * 8);
        for (int p = 0; p < panels; ++p) {
            const double mid = lo[k] + (p + 0.5) * h;
            for (int j = 0; j < 4; ++j) {
                pos[k].push_back(mid - 0.5 * h * kGl8Nodes[j]);
                wts[k].push_back(0.5 * h * kGl8Weights[j]);
                pos[k].push_back(mid + 0.5 * h * kGl8Nodes[j]);
                wts[k].push_back(0.5 * h * kGl8Weights[j]);
            }
        }
    }
    const std::size_t n = pos[0].size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    double sum = 0.0;
    while (true) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            x[k] = pos[k][idx[k]];
            w *= wts[k][idx[k]];
        }
        sum += w * f(std::span<const double>(x));
        int k = 0;
        for (; k < d; ++k) {
            if (++idx[k] < n) break;
            idx[k] = 0;
        }
        if (k == d) break;
    }
    return sum;
}

}  // namespace detail

/// Integrates f over the box [lo, hi]; never throws, reports convergence.
template <class F>
QuadratureResult integrate_box_estimate(F&& f, std::span<const double> lo,
                                        std::span<const double> hi,
                                        double rel_tol,
                                        std::size_t max_evals = 20'000'000) {
    const int d = static_cast<int>(lo.size());
    QuadratureResult res;
    double coarse = detail::tensor_gl8(f, lo, hi, 1);
    int panels = 1;
    while (true) {
        const int next = panels * 2;
        const double evals = std::pow(8.0 * next, d);
        if (evals > static_cast<double>(max_evals)) break;
        const double refined = detail::tensor_gl8(f, lo, hi, next);
        res.error_estimate = std::abs(refined - coarse);
        res.value = refined;
        res.panels_per_axis = next;
        if (res.error_estimate <= rel_tol * std::abs(refined)) {
            res.converged = true;
            return res;
        }
        coarse = refined;
        panels = next;
    }
    if (res.panels_per_axis == 0) {  // never even refined once
        res.value = coarse;
        res.error_estimate = std::abs(coarse);
        res.panels_per_axis = panels;
    }
    return res;
}

/// Integrates f over the box [lo, hi] to the given relative tolerance;
/// throws QuadratureError with the achieved tolerance on failure.
template <class F>
double integrate_box(F&& f, std::span<const double> lo,
                     std::span<const double> hi, double rel_tol = 1e-8) {
    const QuadratureResult res = integrate_box_estimate(f, lo, hi, rel_tol);
    if (!res.converged) {
        const double denom = std::abs(res.value);
        throw QuadratureError(
            denom > 0.0 ? res.error_estimate / denom : res.error_estimate,
            rel_tol);
    }
    return res.value;
}

}  // namespace pointfield
