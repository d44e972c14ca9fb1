#pragma once

// Smooth cutoff functions on a lattice of overlapping cells, plus the
// bookkeeping for sup/count statistics of a point configuration over the
// cell family. The scalar profiles are piecewise cubic smoothsteps chosen
// so that the derivative bounds |cutoff'| <= 3 and |threshold'| <= 2 hold
// with exact saturation at the ramp midpoints.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace pointfield {

namespace detail {
// Cubic smoothstep on [0,1]: s(0)=0, s(1)=1, s'(0)=s'(1)=0, max s'=1.5.
inline double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
inline double smoothstep_deriv(double u) { return 6.0 * u * (1.0 - u); }
}  // namespace detail

/// C^1 plateau: 1 on [0,1], ramps over [-1/2,0] and [1,3/2], 0 outside.
/// Exactly 0 at t = -1/2 and t = 3/2.
inline double cell_bump(double t) {
    if (t <= -0.5 || t >= 1.5) return 0.0;
    if (t < 0.0) return detail::smoothstep(2.0 * t + 1.0);
    if (t <= 1.0) return 1.0;
    return detail::smoothstep(3.0 - 2.0 * t);
}

/// Exact derivative of cell_bump; |cell_bump_deriv| <= 3 with equality at
/// the ramp midpoints t = -1/4 and t = 5/4.
inline double cell_bump_deriv(double t) {
    if (t <= -0.5 || t >= 1.5) return 0.0;
    if (t < 0.0) return 2.0 * detail::smoothstep_deriv(2.0 * t + 1.0);
    if (t <= 1.0) return 0.0;
    return -2.0 * detail::smoothstep_deriv(3.0 - 2.0 * t);
}

/// C^1 switch: 0 on (-inf,1], 1 on [2,inf), smoothstep in between;
/// |count_threshold_deriv| <= 1.5 <= 2.
inline double count_threshold(double t) {
    if (t <= 1.0) return 0.0;
    if (t >= 2.0) return 1.0;
    return detail::smoothstep(t - 1.0);
}

inline double count_threshold_deriv(double t) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    return detail::smoothstep_deriv(t - 1.0);
}

/// Half-open scalar cell indicator 1_{[-1/2, 3/2)}.
inline bool in_cell_support(double t) { return t >= -0.5 && t < 1.5; }

/// Product bump for lattice index i at grid refinement n.
inline double cell_bump_at(std::span<const int> i, int n,
                           std::span<const double> x) {
    double v = 1.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        v *= cell_bump(n * x[k] - i[k]);
        if (v == 0.0) return 0.0;
    }
    return v;
}

/// Exact gradient of cell_bump_at, written into grad (length d).
inline void cell_bump_grad(std::span<const int> i, int n,
                           std::span<const double> x, std::span<double> grad) {
    const std::size_t d = x.size();
    for (std::size_t j = 0; j < d; ++j) {
        double g = n * cell_bump_deriv(n * x[j] - i[j]);
        if (g != 0.0)
            for (std::size_t k = 0; k < d; ++k)
                if (k != j) g *= cell_bump(n * x[k] - i[k]);
        grad[j] = g;
    }
}

inline double cell_bump_grad_norm2(std::span<const int> i, int n,
                                   std::span<const double> x) {
    const std::size_t d = x.size();
    double s = 0.0;
    std::vector<double> g(d);
    cell_bump_grad(i, n, x, g);
    for (double c : g) s += c * c;
    return s;
}

/// Product indicator: 1 iff n*x_k - i_k is in [-1/2, 3/2) for every k.
inline bool cell_indicator(std::span<const int> i, int n,
                           std::span<const double> x) {
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!in_cell_support(n * x[k] - i[k])) return false;
    return true;
}

/// The lattice family: indices A = Z^d intersect [-n*a, n*a]^d at grid
/// refinement n over the box of half side a. Each point of R^d lies in
/// the support of at most 2^d members.
class BumpFamily {
  public:
    BumpFamily(int n, int a, int d) : n_(n), a_(a), d_(d) {
        if (n < 1 || a < 1 || d < 1)
            throw std::invalid_argument("BumpFamily: n, a, d must be >= 1");
        side_ = 2 * n * a + 1;
        count_ = 1;
        for (int k = 0; k < d; ++k) count_ *= static_cast<std::uint64_t>(side_);
    }

    int refinement() const { return n_; }
    int half_side() const { return a_; }
    int dim() const { return d_; }
    int index_bound() const { return n_ * a_; }  // per-axis |i_k| bound
    std::uint64_t index_count() const { return count_; }

    /// Flat rank of a multi-index; axis 0 is most significant, so flat
    /// order coincides with lexicographic order on (i_1, ..., i_d).
    std::uint64_t flatten(std::span<const int> i) const {
        std::uint64_t f = 0;
        for (int k = 0; k < d_; ++k)
            f = f * side_ + static_cast<std::uint64_t>(i[k] + n_ * a_);
        return f;
    }

    std::vector<int> unflatten(std::uint64_t f) const {
        std::vector<int> i(d_);
        for (int k = d_ - 1; k >= 0; --k) {
            i[k] = static_cast<int>(f % side_) - n_ * a_;
            f /= side_;
        }
        return i;
    }

    bool contains_index(std::span<const int> i) const {
        for (int k = 0; k < d_; ++k)
            if (i[k] < -n_ * a_ || i[k] > n_ * a_) return false;
        return true;
    }

    template <class Fn>
    void for_each_index(Fn&& fn) const {
        std::vector<int> i(d_, -n_ * a_);
        while (true) {
            fn(std::span<const int>(i));
            int k = d_ - 1;
            for (; k >= 0; --k) {
                if (++i[k] <= n_ * a_) break;
                i[k] = -n_ * a_;
            }
            if (k < 0) break;
        }
    }

    /// Members of A whose support contains x; at most 2^d of them.
    void cells_containing(std::span<const double> x,
                          std::vector<std::vector<int>>& out) const {
        out.clear();
        // Per axis the admissible integers lie in (n x - 3/2, n x + 1/2],
        // an interval of length two; enumerate a safe window and filter
        // with the exact half-open condition.
        std::vector<std::vector<int>> axis(d_);
        for (int k = 0; k < d_; ++k) {
            const double y = n_ * x[k];
            const int base = static_cast<int>(std::floor(y - 1.5));
            for (int c = base; c <= base + 3; ++c) {
                if (c < -n_ * a_ || c > n_ * a_) continue;
                const double t = y - c;
                if (t >= -0.5 && t < 1.5) axis[k].push_back(c);
            }
            if (axis[k].empty()) return;  // x outside every member's support
        }
        std::vector<std::size_t> pick(d_, 0);
        std::vector<int> idx(d_);
        while (true) {
            for (int k = 0; k < d_; ++k) idx[k] = axis[k][pick[k]];
            out.push_back(idx);
            int k = d_ - 1;
            for (; k >= 0; --k) {
                if (++pick[k] < axis[k].size()) break;
                pick[k] = 0;
            }
            if (k < 0) break;
        }
    }

    /// Bump-weighted occupation sums <phi_i, gamma> for every member whose
    /// support meets gamma, keyed by flat rank (ascending = lexicographic).
    template <class PointRange>
    std::map<std::uint64_t, double> bump_sums(const PointRange& gamma) const {
        std::map<std::uint64_t, double> sums;
        std::vector<std::vector<int>> cells;
        for (std::size_t p = 0; p < gamma.size(); ++p) {
            const auto x = gamma.point(p);
            cells_containing(x, cells);
            for (const auto& i : cells)
                sums[flatten(i)] += cell_bump_at(i, n_, x);
        }
        return sums;
    }

    /// Occupation counts <I_i, gamma> (integer) for occupied members.
    template <class PointRange>
    std::map<std::uint64_t, std::uint64_t> cell_counts(
        const PointRange& gamma) const {
        std::map<std::uint64_t, std::uint64_t> counts;
        std::vector<std::vector<int>> cells;
        for (std::size_t p = 0; p < gamma.size(); ++p) {
            const auto x = gamma.point(p);
            cells_containing(x, cells);
            for (const auto& i : cells) ++counts[flatten(i)];
        }
        return counts;
    }

    struct SupResult {
        double value = 0.0;          // sup over A of <phi_i, gamma>, >= 0
        std::vector<int> argmax;     // lexicographically smallest maximizer
    };

    /// Sup of the bump-weighted sums over the whole family. Unoccupied
    /// members contribute 0; ties resolve to the lexicographically
    /// smallest index so evaluation is total and deterministic.
    template <class PointRange>
    SupResult sup_bump(const PointRange& gamma) const {
        SupResult res;
        res.argmax.assign(d_, -n_ * a_);
        const auto sums = bump_sums(gamma);
        for (const auto& [flat, v] : sums) {
            if (v > res.value) {
                res.value = v;
                res.argmax = unflatten(flat);
            }
        }
        return res;
    }

    /// Sum of occupation counts over members holding at least two points:
    /// the combinatorial weight of near-multiplicity events.
    template <class PointRange>
    std::uint64_t exceedance_weight(const PointRange& gamma) const {
        std::uint64_t w = 0;
        for (const auto& [flat, c] : cell_counts(gamma))
            if (c >= 2) w += c;
        return w;
    }

  private:
    int n_, a_, d_;
    int side_;
    std::uint64_t count_;
};

}  // namespace pointfield
