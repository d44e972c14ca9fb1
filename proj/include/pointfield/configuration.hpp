#pragma once

// Finite point configurations in R^d. A configuration is an unordered
// finite multiset of points; duplicates are legal and carry multiplicity.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace pointfield {

class Configuration {
  public:
    explicit Configuration(int dim) : dim_(dim) {
        if (dim < 1) throw std::invalid_argument("Configuration: dim < 1");
    }

    int dim() const { return dim_; }
    std::size_t size() const { return coords_.size() / dim_; }
    bool empty() const { return coords_.empty(); }

    std::span<const double> point(std::size_t k) const {
        return {coords_.data() + k * dim_, static_cast<std::size_t>(dim_)};
    }

    void add(std::span<const double> x) {
        if (x.size() != static_cast<std::size_t>(dim_))
            throw std::invalid_argument("Configuration::add: wrong dimension");
        coords_.insert(coords_.end(), x.begin(), x.end());
    }

    void add(std::initializer_list<double> x) {
        add(std::span<const double>(x.begin(), x.size()));
    }

    void remove(std::size_t k) {
        const auto first = coords_.begin() + k * dim_;
        coords_.erase(first, first + dim_);
    }

    void clear() { coords_.clear(); }

    std::span<const double> raw() const { return coords_; }

  private:
    int dim_;
    std::vector<double> coords_;
};

/// Largest point multiplicity among points whose coordinates all lie in
/// [-half_side, half_side]. Multiplicity means exact coordinate equality.
inline std::size_t max_multiplicity_within(const Configuration& gamma,
                                           double half_side) {
    const std::size_t m = gamma.size();
    std::size_t best = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto xi = gamma.point(i);
        bool inside = true;
        for (double c : xi)
            if (c < -half_side || c > half_side) {
                inside = false;
                break;
            }
        if (!inside) continue;
        std::size_t count = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const auto xj = gamma.point(j);
            bool equal = true;
            for (int k = 0; k < gamma.dim(); ++k)
                if (xi[k] != xj[k]) {
                    equal = false;
                    break;
                }
            if (equal) ++count;
        }
        if (count > best) best = count;
    }
    return best;
}

/// True when some point inside [-half_side, half_side]^d occurs at least
/// twice (the configuration fails to be simple there).
inline bool has_duplicate_within(const Configuration& gamma, double half_side) {
    return max_multiplicity_within(gamma, half_side) >= 2;
}

}  // namespace pointfield
