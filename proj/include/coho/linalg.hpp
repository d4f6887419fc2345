// Small dense linear-algebra helpers: operator norms, the GL metric,
// and scaled products for long matrix pipelines.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "coho/errors.hpp"

namespace coho {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Operator (spectral) norm via singular values.
inline double op_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return a.jacobiSvd().singularValues()(0);
}

/// Conorm m(A) = ||A^{-1}||^{-1}, the smallest singular value.
inline double conorm(const Matrix& a) {
    auto sv = a.jacobiSvd().singularValues();
    return sv(sv.size() - 1);
}

inline double condition_number(const Matrix& a) {
    auto sv = a.jacobiSvd().singularValues();
    double smin = sv(sv.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

/// d(A,B) = ||A-B|| + ||A^{-1}-B^{-1}|| in the operator norm.
inline double gl_distance(const Matrix& a, const Matrix& b) {
    Eigen::FullPivLU<Matrix> la(a), lb(b);
    if (!la.isInvertible() || !lb.isInvertible())
        throw Singular("gl_distance: singular argument");
    return op_norm(a - b) + op_norm(la.inverse() - lb.inverse());
}

/// Product with the scale factor carried separately, for products long
/// enough to overflow double.
struct ScaledMatrix {
    Matrix m;          // normalized so that ||m|| is O(1)
    double log_scale;  // actual matrix = exp(log_scale) * m

    static ScaledMatrix identity(int d) { return {Matrix::Identity(d, d), 0.0}; }

    void absorb(const Matrix& factor) {
        m = factor * m;
        renormalize();
    }
    void renormalize() {
        double n = m.cwiseAbs().maxCoeff();
        if (n > 0 && (n > 1e100 || n < 1e-100)) {
            m /= n;
            log_scale += std::log(n);
        }
    }
    Matrix value() const { return std::exp(log_scale) * m; }
    double log_op_norm() const { return log_scale + std::log(op_norm(m)); }
    double log_conorm() const { return log_scale + std::log(conorm(m)); }
};

/// Least-squares line through (x_i, y_i); returns {slope, intercept}.
inline std::pair<double, double> fit_line(const std::vector<double>& xs,
                                          const std::vector<double>& ys) {
    const size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double denom = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    return {slope, intercept};
}

} // namespace coho
