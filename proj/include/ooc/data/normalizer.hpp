#pragma once

#include <cmath>
#include <vector>

#include "ooc/util/errors.hpp"

namespace ooc::data {

// Per-feature min/max map onto [-1, 1]. Arithmetic is done in double so the
// round trip denormalize(normalize(x)) stays well inside 1e-6 of x. Features
// that are constant in the fitting data map to 0 and back to that constant.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(std::vector<double> mins, std::vector<double> maxs)
        : min_(std::move(mins)), max_(std::move(maxs)) {
        if (min_.size() != max_.size()) throw ContractError("normalizer: min/max size mismatch");
    }

    // values laid out as count consecutive feature vectors of dimension dim().
    static Normalizer fit(const float* values, size_t count, int dim) {
        std::vector<double> mins(dim, std::numeric_limits<double>::infinity());
        std::vector<double> maxs(dim, -std::numeric_limits<double>::infinity());
        for (size_t i = 0; i < count; ++i)
            for (int f = 0; f < dim; ++f) {
                double v = values[i * dim + f];
                mins[f] = std::min(mins[f], v);
                maxs[f] = std::max(maxs[f], v);
            }
        if (count == 0) throw ContractError("normalizer: no data to fit");
        return Normalizer(std::move(mins), std::move(maxs));
    }

    int dim() const { return static_cast<int>(min_.size()); }

    double normalize(int f, double x) const {
        double span = max_[f] - min_[f];
        if (span < kDegenerate) return 0.0;
        return 2.0 * (x - min_[f]) / span - 1.0;
    }

    double denormalize(int f, double z) const {
        double span = max_[f] - min_[f];
        if (span < kDegenerate) return min_[f];
        return (z + 1.0) * 0.5 * span + min_[f];
    }

    const std::vector<double>& mins() const { return min_; }
    const std::vector<double>& maxs() const { return max_; }

private:
    static constexpr double kDegenerate = 1e-12;
    std::vector<double> min_, max_;
};

}  // namespace ooc::data
