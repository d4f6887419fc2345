#include "coho/spectrum.hpp"

#include <algorithm>
#include <cmath>

namespace coho {

namespace {

bool points_equal(const SymbolicPoint& a, const SymbolicPoint& b) { return a == b; }
bool points_equal(const Vector& a, const Vector& b) { return (a - b).norm() < 1e-12; }

// deterministic sign convention: largest-|entry| component positive
void fix_column_signs(Matrix& m) {
    for (int j = 0; j < m.cols(); ++j) {
        int arg_max = 0;
        for (int i = 1; i < m.rows(); ++i)
            if (std::abs(m(i, j)) > std::abs(m(arg_max, j))) arg_max = i;
        if (m(arg_max, j) < 0) m.col(j) = -m.col(j);
    }
}

} // namespace

template <class Cocycle>
LyapunovSpectrum lyapunov_exponents(const Cocycle& a,
                                    const typename Cocycle::Point& x, int n,
                                    double grouping_tol) {
    if (n < 1) throw Error("lyapunov_exponents: n must be >= 1");
    const int d = a.dimension();
    Matrix q = Matrix::Identity(d, d);
    std::vector<double> sums(size_t(d), 0.0);
    double logdet = 0.0;
    typename Cocycle::Point p = x;
    for (int j = 0; j < n; ++j) {
        Matrix g = a.generator(p);
        Matrix m = g * q;
        Eigen::HouseholderQR<Matrix> qr(m);
        Matrix r = qr.matrixQR().template triangularView<Eigen::Upper>();
        q = qr.householderQ() * Matrix::Identity(d, d);
        for (int i = 0; i < d; ++i) {
            double rii = r(i, i);
            if (rii < 0) {
                q.col(i) = -q.col(i);
                rii = -rii;
            }
            sums[size_t(i)] += std::log(rii);
        }
        logdet += std::log(std::abs(g.determinant()));
        p = a.step(p);
    }
    LyapunovSpectrum spec;
    spec.grouping_tol = grouping_tol;
    spec.log_det_rate = logdet / n;
    for (double s : sums) spec.exponents.push_back(s / n);
    std::sort(spec.exponents.rbegin(), spec.exponents.rend());
    // group into distinct values, ascending
    std::vector<double> asc = spec.exponents;
    std::sort(asc.begin(), asc.end());
    size_t i = 0;
    while (i < asc.size()) {
        size_t j = i;
        double acc = 0.0;
        while (j < asc.size() && asc[j] - asc[i] < grouping_tol) acc += asc[j++];
        spec.distinct.push_back(acc / double(j - i));
        spec.multiplicities.push_back(int(j - i));
        i = j;
    }
    for (double s : spec.distinct) spec.moduli.push_back(std::exp(s));
    return spec;
}

std::vector<double> periodic_exponents(const PeriodicDatum& datum) {
    std::vector<double> out;
    for (const auto& ev : datum.eigenvalues)
        out.push_back(std::log(std::abs(ev)) / double(datum.period));
    std::sort(out.rbegin(), out.rend());
    return out;
}

template <class Cocycle>
SplittingFieldT<typename Cocycle::Point> dominated_splitting(
    const Cocycle& a, int index_k, const std::vector<typename Cocycle::Point>& samples,
    int horizon, double invariance_tol) {
    using Point = typename Cocycle::Point;
    const int d = a.dimension();
    if (index_k < 1 || index_k >= d) throw Error("dominated_splitting: bad index");
    if (samples.empty()) throw Error("dominated_splitting: no samples");

    auto fast_frame = [&](const Point& x) {
        // top-k left singular vectors of A^n over the backward window
        ScaledMatrix pw = a.iterate_scaled(a.step(x, -horizon), horizon);
        Eigen::JacobiSVD<Matrix> svd(pw.m, Eigen::ComputeFullU);
        Matrix u = svd.matrixU().leftCols(index_k);
        fix_column_signs(u);
        return u;
    };
    auto slow_frame = [&](const Point& x) {
        // smallest right singular vectors of the forward window product
        ScaledMatrix pw = a.iterate_scaled(x, horizon);
        Eigen::JacobiSVD<Matrix> svd(pw.m, Eigen::ComputeFullV);
        Matrix v = svd.matrixV().rightCols(d - index_k);
        fix_column_signs(v);
        return v;
    };

    SplittingFieldT<Point> field;
    field.index_k = index_k;
    field.horizon = horizon;
    field.points = samples;
    for (const auto& x : samples) {
        field.fast.push_back(fast_frame(x));
        field.slow.push_back(slow_frame(x));
    }

    // invariance residual against the frames recomputed at f(x)
    double worst_inv = 0.0;
    for (const auto& x : samples) {
        Matrix g = a.generator(x);
        Point fx = a.step(x);
        {
            Matrix img = g * fast_frame(x);
            Matrix pf = fast_frame(fx);
            Matrix off = img - pf * (pf.transpose() * img);
            worst_inv = std::max(worst_inv, op_norm(off) / std::max(1e-300, op_norm(img)));
        }
        {
            Matrix img = g * slow_frame(x);
            Matrix pf = slow_frame(fx);
            Matrix off = img - pf * (pf.transpose() * img);
            worst_inv = std::max(worst_inv, op_norm(off) / std::max(1e-300, op_norm(img)));
        }
    }
    field.invariance_residual = worst_inv;

    // measured domination ||A^n|F|| < K tau^n m(A^n|G)
    std::vector<double> ns, logratio;
    for (int n = 1; n <= horizon; ++n) {
        double worst = -std::numeric_limits<double>::infinity();
        for (size_t si = 0; si < samples.size(); ++si) {
            ScaledMatrix pw = a.iterate_scaled(samples[si], n);
            double log_slow = pw.log_scale + std::log(op_norm(pw.m * field.slow[si]));
            double log_fast_conorm = pw.log_scale + std::log(conorm(pw.m * field.fast[si]));
            worst = std::max(worst, log_slow - log_fast_conorm);
        }
        ns.push_back(double(n));
        logratio.push_back(worst);
    }
    auto [slope, intercept] = fit_line(ns, logratio);
    (void)intercept;
    field.tau = std::exp(slope);
    double lmax = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < ns.size(); ++i)
        lmax = std::max(lmax, logratio[i] - slope * ns[i]);
    field.k_const = std::exp(lmax);

    if (!(field.tau < 1.0))
        throw NoDomination("dominated_splitting: no exponent gap at this index");
    if (worst_inv > invariance_tol)
        throw NoDomination("dominated_splitting: invariance residual above tolerance");
    field.certified = true;
    return field;
}

template <class Cocycle>
Matrix restrict_step(const Cocycle& a, const SplittingFieldT<typename Cocycle::Point>& s,
                     int block, size_t i_from, size_t i_to, double consistency_tol) {
    if (i_from >= s.points.size() || i_to >= s.points.size())
        throw FrameMismatch("restrict_step: sample index out of range");
    if (!points_equal(a.step(s.points[i_from]), s.points[i_to]))
        throw FrameMismatch("restrict_step: samples are not consecutive");
    const Matrix& ffrom = (block == 0) ? s.fast[i_from] : s.slow[i_from];
    const Matrix& fto = (block == 0) ? s.fast[i_to] : s.slow[i_to];
    Matrix g = a.generator(s.points[i_from]);
    Matrix blockm = fto.transpose() * g * ffrom;
    double resid = op_norm(g * ffrom - fto * blockm) / std::max(1e-300, op_norm(g * ffrom));
    if (resid > consistency_tol)
        throw FrameMismatch("restrict_step: frame consistency residual above tolerance");
    return blockm;
}

template <class Cocycle>
Matrix restrict_return_matrix(const Cocycle& a,
                              const SplittingFieldT<typename Cocycle::Point>& s, int block,
                              size_t sample, int period, double consistency_tol) {
    if (sample >= s.points.size())
        throw FrameMismatch("restrict_return_matrix: sample index out of range");
    const Matrix& f = (block == 0) ? s.fast[sample] : s.slow[sample];
    Matrix an = a.iterate(s.points[sample], period);
    Matrix blockm = f.transpose() * an * f;
    double resid = op_norm(an * f - f * blockm) / std::max(1e-300, op_norm(an * f));
    if (resid > consistency_tol)
        throw FrameMismatch("restrict_return_matrix: subspace not preserved");
    return blockm;
}

PeriodicApproxReport periodic_approximation_check(const SymbolicCocycle& a,
                                                  const SymbolicPoint& x, int n,
                                                  const std::vector<PeriodicOrbit>& orbits,
                                                  double tol) {
    PeriodicApproxReport rep;
    rep.tol = tol;
    rep.generic_exponents = lyapunov_exponents(a, x, n).exponents;
    for (const auto& o : orbits)
        rep.per_orbit_exponents.push_back(periodic_exponents(periodic_data(a, o)));
    rep.gap = 0.0;
    for (size_t i = 0; i < rep.generic_exponents.size(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& pe : rep.per_orbit_exponents)
            nearest = std::min(nearest, std::abs(pe[i] - rep.generic_exponents[i]));
        rep.gap = std::max(rep.gap, nearest);
    }
    rep.within_tol = rep.gap <= tol;
    return rep;
}

// explicit instantiations
template LyapunovSpectrum lyapunov_exponents<SymbolicCocycle>(const SymbolicCocycle&,
                                                              const SymbolicPoint&, int,
                                                              double);
template LyapunovSpectrum lyapunov_exponents<TorusDerivativeCocycle>(
    const TorusDerivativeCocycle&, const Vector&, int, double);

template SymbolicSplittingField dominated_splitting<SymbolicCocycle>(
    const SymbolicCocycle&, int, const std::vector<SymbolicPoint>&, int, double);
template TorusSplittingField dominated_splitting<TorusDerivativeCocycle>(
    const TorusDerivativeCocycle&, int, const std::vector<Vector>&, int, double);

template Matrix restrict_step<SymbolicCocycle>(const SymbolicCocycle&,
                                               const SymbolicSplittingField&, int, size_t,
                                               size_t, double);
template Matrix restrict_step<TorusDerivativeCocycle>(const TorusDerivativeCocycle&,
                                                      const TorusSplittingField&, int,
                                                      size_t, size_t, double);

template Matrix restrict_return_matrix<SymbolicCocycle>(const SymbolicCocycle&,
                                                        const SymbolicSplittingField&, int,
                                                        size_t, int, double);
template Matrix restrict_return_matrix<TorusDerivativeCocycle>(
    const TorusDerivativeCocycle&, const TorusSplittingField&, int, size_t, int, double);

} // namespace coho
