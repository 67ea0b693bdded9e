// Dense symmetric linear algebra and random-ensemble sampling: exactly
// symmetric storage, eigendecomposition, Wishart sampling and Porter-Thomas
// goodness of fit for eigenvector components.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "speckin/errors.hpp"
#include "speckin/rng.hpp"
#include "speckin/stats.hpp"

namespace speckin {

// Dense symmetric matrix, row-major, with entries(i,j) == entries(j,i)
// guaranteed bitwise by construction.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(std::size_t dim) : n_(dim), a_(dim * dim, 0.0) {
        if (dim < 2) throw std::invalid_argument("SymmetricMatrix: dim must be >= 2");
    }

    // Validates exact symmetry of a full row-major buffer.
    static SymmetricMatrix from_dense(std::size_t dim, std::span<const double> entries) {
        if (entries.size() != dim * dim)
            throw std::invalid_argument("SymmetricMatrix: size mismatch");
        SymmetricMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (entries[i * dim + j] != entries[j * dim + i])
                    throw std::invalid_argument(
                        "SymmetricMatrix: entries (" + std::to_string(i) + "," +
                        std::to_string(j) + ") not exactly symmetric");
        std::copy(entries.begin(), entries.end(), m.a_.begin());
        return m;
    }

    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    // Writes both (i,j) and (j,i).
    void set(std::size_t i, std::size_t j, double v) {
        a_[i * n_ + j] = v;
        a_[j * n_ + i] = v;
    }

    std::size_t dim() const { return n_; }
    const std::vector<double>& data() const { return a_; }
    std::vector<double>& mutable_data() { return a_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t n_;
    std::vector<double> a_;
};

// Eigensystem of a SymmetricMatrix: eigenvalues sorted descending, eigenvector
// mu stored as row mu of `eigenvectors` (so index 0 is the top of the
// spectrum, matching the mode-numbering convention used project-wide).
struct SpectralDecomposition {
    std::size_t dim = 0;
    std::vector<double> eigenvalues;
    std::vector<double> eigenvectors;  // row-major, dim x dim

    std::span<const double> eigenvector(std::size_t mu) const {
        return {eigenvectors.data() + mu * dim, dim};
    }
};

struct EighError : ComputeError {
    EighError(const std::string& what, double residual)
        : ComputeError(what), offdiag_residual(residual) {}
    double offdiag_residual = 0.0;
};

inline SpectralDecomposition eigh(const SymmetricMatrix& m) {
    const std::size_t n = m.dim();
    for (double v : m.data())
        if (!std::isfinite(v))
            throw std::invalid_argument("eigh: non-finite entry");

    Eigen::Map<const Eigen::MatrixXd> a(m.data().data(),
                                        static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) {
        // Residual of the failed tridiagonal iteration, for the diagnostic.
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) res += m(i, j) * m(i, j);
        throw EighError("eigh: eigensolver did not converge", std::sqrt(res));
    }

    SpectralDecomposition d;
    d.dim = n;
    d.eigenvalues.resize(n);
    d.eigenvectors.resize(n * n);
    // Eigen returns ascending order; flip to descending.
    for (std::size_t mu = 0; mu < n; ++mu) {
        const std::size_t src = n - 1 - mu;
        d.eigenvalues[mu] = solver.eigenvalues()(static_cast<Eigen::Index>(src));
        for (std::size_t i = 0; i < n; ++i)
            d.eigenvectors[mu * n + i] =
                solver.eigenvectors()(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(src));
    }
    return d;
}

// Reconstructs sum_mu x_mu u u^T; test hook for the decomposition invariant.
inline SymmetricMatrix reconstruct(const SpectralDecomposition& d) {
    const std::size_t n = d.dim;
    Eigen::MatrixXd v(n, n);
    for (std::size_t mu = 0; mu < n; ++mu)
        for (std::size_t i = 0; i < n; ++i)
            v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(mu)) =
                d.eigenvectors[mu * n + i];
    Eigen::VectorXd w(n);
    for (std::size_t mu = 0; mu < n; ++mu) w(static_cast<Eigen::Index>(mu)) = d.eigenvalues[mu];
    Eigen::MatrixXd c = v * w.asDiagonal() * v.transpose();
    SymmetricMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.set(i, i, c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        for (std::size_t j = 0; j < i; ++j)
            m.set(i, j, c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    return m;
}

// Z = X^T X / p for a p x n data matrix X with i.i.d. N(0, sigma^2) entries.
// The aspect ratio q used by the Marchenko-Pastur formulas in this project is
// q = n/p (variables over observations); callers working in the observations-
// over-variables convention must pass the reciprocal themselves.
inline SymmetricMatrix sample_wishart(std::size_t n, std::size_t p, double sigma,
                                      std::uint64_t seed) {
    if (n < 2 || p < 2) throw std::invalid_argument("sample_wishart: n, p must be >= 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("sample_wishart: sigma must be > 0");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
    NormalStream g(seed, rng_purpose::stream(rng_purpose::kWishart));
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < n; ++c)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = sigma * g.next();

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    z.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(p));

    SymmetricMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.set(i, i, z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        for (std::size_t j = 0; j < i; ++j)
            m.set(i, j, z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    return m;
}

// Kolmogorov-Smirnov distance between eigenvector components and the
// Porter-Thomas law, i.e. the zero-mean Gaussian with variance 1/n.
inline double porter_thomas_gof(std::span<const double> components, std::size_t n) {
    if (components.empty())
        throw std::invalid_argument("porter_thomas_gof: empty component list");
    if (n < 2) throw std::invalid_argument("porter_thomas_gof: n must be >= 2");
    const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> sorted(components.begin(), components.end());
    std::sort(sorted.begin(), sorted.end());
    return ks_distance_sorted(sorted,
                              [sigma](double x) { return gaussian_cdf(x, 0.0, sigma); });
}

} // namespace speckin
