#pragma once

#include <cstdint>
#include <vector>

namespace ooc::theory {

// Subspace M of R^d spanned by m orthonormal basis rows, with the projector
// pair W_M (onto M) and W_perp = I - W_M. All arithmetic in double.
class LinearManifold {
public:
    LinearManifold(int d, std::vector<double> basis_rows);  // m x d, orthonormalized copy

    // Orthonormalized random Gaussian rows, reproducible by seed.
    static LinearManifold random(int d, int m, uint64_t seed);
    // span(e_1 .. e_m)
    static LinearManifold axis_aligned(int d, int m);

    int d() const { return d_; }
    int m() const { return m_; }
    const std::vector<double>& basis() const { return basis_; }
    const std::vector<double>& proj_m() const { return pm_; }
    const std::vector<double>& proj_perp() const { return pp_; }

    void project_m(const double* x, double* out) const;
    void project_perp(const double* x, double* out) const;
    // x = on + off with on in M, off orthogonal to it
    void decompose(const double* x, double* on, double* off) const;
    double norm_m(const double* x) const;
    double norm_perp(const double* x) const;

private:
    int d_ = 0, m_ = 0;
    std::vector<double> basis_;  // m x d row-major
    std::vector<double> pm_, pp_;  // d x d
};

}  // namespace ooc::theory
