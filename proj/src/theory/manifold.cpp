#include "ooc/theory/manifold.hpp"

#include <cmath>

#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::theory {

namespace {

// modified Gram-Schmidt with one re-orthogonalization pass
void orthonormalize(std::vector<double>& rows, int m, int d) {
    for (int i = 0; i < m; ++i) {
        double* ri = rows.data() + static_cast<size_t>(i) * d;
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < i; ++j) {
                const double* rj = rows.data() + static_cast<size_t>(j) * d;
                double dot = 0;
                for (int k = 0; k < d; ++k) dot += ri[k] * rj[k];
                for (int k = 0; k < d; ++k) ri[k] -= dot * rj[k];
            }
        double nrm = 0;
        for (int k = 0; k < d; ++k) nrm += ri[k] * ri[k];
        nrm = std::sqrt(nrm);
        if (nrm < 1e-10) throw ContractError("manifold: basis rows are rank deficient");
        for (int k = 0; k < d; ++k) ri[k] /= nrm;
    }
}

}  // namespace

LinearManifold::LinearManifold(int d, std::vector<double> basis_rows) : d_(d) {
    if (d <= 0 || basis_rows.empty() || basis_rows.size() % static_cast<size_t>(d) != 0)
        throw ContractError("manifold: basis must be a nonempty m x d matrix");
    m_ = static_cast<int>(basis_rows.size() / static_cast<size_t>(d));
    if (m_ > d) throw ContractError("manifold: m exceeds ambient dimension");
    basis_ = std::move(basis_rows);
    orthonormalize(basis_, m_, d_);

    pm_.assign(static_cast<size_t>(d_) * d_, 0.0);
    pp_.assign(static_cast<size_t>(d_) * d_, 0.0);
    for (int k = 0; k < m_; ++k) {
        const double* r = basis_.data() + static_cast<size_t>(k) * d_;
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) pm_[static_cast<size_t>(i) * d_ + j] += r[i] * r[j];
    }
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            pp_[static_cast<size_t>(i) * d_ + j] =
                (i == j ? 1.0 : 0.0) - pm_[static_cast<size_t>(i) * d_ + j];
}

LinearManifold LinearManifold::random(int d, int m, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> rows(static_cast<size_t>(m) * d);
    rng.fill_normal(rows.data(), rows.size());
    return LinearManifold(d, std::move(rows));
}

LinearManifold LinearManifold::axis_aligned(int d, int m) {
    std::vector<double> rows(static_cast<size_t>(m) * d, 0.0);
    for (int i = 0; i < m; ++i) rows[static_cast<size_t>(i) * d + i] = 1.0;
    return LinearManifold(d, std::move(rows));
}

void LinearManifold::project_m(const double* x, double* out) const {
    // out = B^T (B x): coordinates via the basis keeps it O(m d) and exactly
    // idempotent up to one rounding
    std::vector<double> coef(m_);
    for (int k = 0; k < m_; ++k) {
        const double* r = basis_.data() + static_cast<size_t>(k) * d_;
        double s = 0;
        for (int i = 0; i < d_; ++i) s += r[i] * x[i];
        coef[k] = s;
    }
    for (int i = 0; i < d_; ++i) out[i] = 0.0;
    for (int k = 0; k < m_; ++k) {
        const double* r = basis_.data() + static_cast<size_t>(k) * d_;
        for (int i = 0; i < d_; ++i) out[i] += coef[k] * r[i];
    }
}

void LinearManifold::project_perp(const double* x, double* out) const {
    std::vector<double> on(d_);
    project_m(x, on.data());
    for (int i = 0; i < d_; ++i) out[i] = x[i] - on[i];
}

void LinearManifold::decompose(const double* x, double* on, double* off) const {
    project_m(x, on);
    for (int i = 0; i < d_; ++i) off[i] = x[i] - on[i];
}

double LinearManifold::norm_m(const double* x) const {
    // ||W_M x|| = ||B x|| since the basis rows are orthonormal
    double s = 0;
    for (int k = 0; k < m_; ++k) {
        const double* r = basis_.data() + static_cast<size_t>(k) * d_;
        double c = 0;
        for (int i = 0; i < d_; ++i) c += r[i] * x[i];
        s += c * c;
    }
    return std::sqrt(s);
}

double LinearManifold::norm_perp(const double* x) const {
    std::vector<double> off(d_);
    project_perp(x, off.data());
    double s = 0;
    for (int i = 0; i < d_; ++i) s += off[i] * off[i];
    return std::sqrt(s);
}

}  // namespace ooc::theory
