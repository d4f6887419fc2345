#include "coho/cocycle.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coho {

namespace {

// eigenvalues sorted by (modulus descending, argument ascending)
std::vector<std::complex<double>> sorted_eigenvalues(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m);
    std::vector<std::complex<double>> ev(size_t(m.rows()));
    for (int i = 0; i < m.rows(); ++i) ev[size_t(i)] = es.eigenvalues()(i);
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        double ma = std::abs(a), mb = std::abs(b);
        if (std::abs(ma - mb) > 1e-14 * std::max(1.0, std::max(ma, mb))) return ma > mb;
        return std::arg(a) < std::arg(b);
    });
    return ev;
}

// Jordan block-size profile at each distinct eigenvalue cluster
std::vector<std::vector<int>> jordan_profile(const Matrix& m,
                                             const std::vector<std::complex<double>>& evs,
                                             double tol) {
    const int d = int(m.rows());
    Eigen::MatrixXcd mc = m.cast<std::complex<double>>();
    std::vector<std::vector<int>> profile;
    std::vector<bool> used(evs.size(), false);
    for (size_t i = 0; i < evs.size(); ++i) {
        if (used[i]) continue;
        std::complex<double> lam = evs[i];
        int mult = 0;
        for (size_t j = 0; j < evs.size(); ++j) {
            if (!used[j] && std::abs(evs[j] - lam) <= tol * std::max(1.0, std::abs(lam))) {
                used[j] = true;
                ++mult;
            }
        }
        Eigen::MatrixXcd shifted = mc - lam * Eigen::MatrixXcd::Identity(d, d);
        double scale = std::max(1.0, shifted.norm());
        std::vector<int> ranks{d};
        Eigen::MatrixXcd pw = Eigen::MatrixXcd::Identity(d, d);
        for (int j = 1; j <= mult; ++j) {
            pw = (pw * (shifted / scale)).eval();
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pw);
            auto sv = svd.singularValues();
            double thresh = 1e-9 * std::max(1.0, sv.size() ? sv(0) : 0.0);
            int r = 0;
            for (int s = 0; s < sv.size(); ++s)
                if (sv(s) > thresh) ++r;
            ranks.push_back(r);
        }
        std::vector<int> blocks;  // blocks of size >= j: ranks[j-1] - ranks[j]
        for (size_t j = 1; j < ranks.size(); ++j) blocks.push_back(ranks[j - 1] - ranks[j]);
        profile.push_back(blocks);
    }
    return profile;
}

struct RealEigenBasis {
    Matrix basis;               // columns: real eigvecs and (Re v, Im v) pairs
    std::vector<int> block_dim; // 1 for a real eigenvalue, 2 for a complex pair
};

// Canonical real eigenbasis in the canonical eigenvalue order; requires all
// eigenvalues distinct.  Columns are unit with deterministic sign/phase.
RealEigenBasis real_eigenbasis(const Matrix& m) {
    const int d = int(m.rows());
    Eigen::EigenSolver<Matrix> es(m);
    struct Item {
        std::complex<double> lam;
        Eigen::VectorXcd vec;
    };
    std::vector<Item> items;
    for (int i = 0; i < d; ++i)
        items.push_back({es.eigenvalues()(i), es.eigenvectors().col(i)});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        double ma = std::abs(a.lam), mb = std::abs(b.lam);
        if (std::abs(ma - mb) > 1e-14 * std::max(1.0, std::max(ma, mb))) return ma > mb;
        return std::arg(a.lam) < std::arg(b.lam);
    });
    RealEigenBasis out;
    out.basis.resize(d, d);
    int col = 0;
    for (const auto& it : items) {
        if (std::abs(it.lam.imag()) < 1e-12 * std::max(1.0, std::abs(it.lam))) {
            Vector v = it.vec.real();
            v.normalize();
            for (int j = 0; j < d; ++j) {
                if (std::abs(v(j)) > 1e-12) {
                    if (v(j) < 0) v = -v;
                    break;
                }
            }
            out.basis.col(col++) = v;
            out.block_dim.push_back(1);
        } else if (it.lam.imag() > 0) {
            // canonical phase: largest-|entry| component made real positive
            Eigen::VectorXcd v = it.vec;
            int arg_max = 0;
            for (int j = 1; j < d; ++j)
                if (std::abs(v(j)) > std::abs(v(arg_max))) arg_max = j;
            v *= std::conj(v(arg_max)) / std::abs(v(arg_max));
            v.normalize();
            out.basis.col(col++) = v.real();
            out.basis.col(col++) = v.imag();
            out.block_dim.push_back(2);
        }
    }
    if (col != d) throw Error("real_eigenbasis: defective matrix");
    return out;
}

// block-diagonal commutant element in the matched eigenbasis
Matrix commutant_scaling(const std::vector<int>& block_dim,
                         const std::vector<double>& params) {
    int d = 0;
    for (int b : block_dim) d += b;
    Matrix out = Matrix::Zero(d, d);
    int col = 0;
    size_t pi = 0;
    for (int b : block_dim) {
        if (b == 1) {
            out(col, col) = std::exp(params[pi]);
            pi += 1;
            col += 1;
        } else {
            double t = std::exp(params[pi]), phi = params[pi + 1];
            out(col, col) = t * std::cos(phi);
            out(col, col + 1) = t * std::sin(phi);
            out(col + 1, col) = -t * std::sin(phi);
            out(col + 1, col + 1) = t * std::cos(phi);
            pi += 2;
            col += 2;
        }
    }
    return out;
}

// deterministic coarse grid scan over the box
template <class Objective>
std::vector<double> grid_scan(const Objective& f,
                              const std::vector<std::pair<double, double>>& box) {
    const size_t np = box.size();
    int per_dim = np <= 2 ? 33 : (np == 3 ? 15 : (np == 4 ? 9 : 5));
    std::vector<int> idx(np, 0);
    std::vector<double> best(np), p(np);
    double fbest = std::numeric_limits<double>::infinity();
    while (true) {
        for (size_t i = 0; i < np; ++i) {
            double t = (per_dim == 1) ? 0.5 : double(idx[i]) / (per_dim - 1);
            p[i] = box[i].first + t * (box[i].second - box[i].first);
        }
        double v = f(p);
        if (v < fbest) {
            fbest = v;
            best = p;
        }
        size_t pos = 0;
        while (pos < np) {
            if (++idx[pos] < per_dim) break;
            idx[pos] = 0;
            ++pos;
        }
        if (pos == np) break;
    }
    return best;
}

// deterministic cyclic golden-section descent
template <class Objective>
std::vector<double> minimize_cyclic(const Objective& f, std::vector<double> p,
                                    const std::vector<std::pair<double, double>>& box,
                                    int sweeps = 24) {
    const double gr = 0.6180339887498949;
    double best = f(p);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        bool improved = false;
        for (size_t i = 0; i < p.size(); ++i) {
            double a = box[i].first, b = box[i].second;
            auto eval_at = [&](double v) {
                std::vector<double> q = p;
                q[i] = v;
                return f(q);
            };
            double c = b - gr * (b - a), d = a + gr * (b - a);
            double fc = eval_at(c), fd = eval_at(d);
            for (int it = 0; it < 48; ++it) {
                if (fc < fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = eval_at(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = eval_at(d);
                }
            }
            double cand = 0.5 * (a + b), fcand = eval_at(cand);
            if (fcand < best - 1e-15) {
                best = fcand;
                p[i] = cand;
                improved = true;
            }
        }
        if (!improved) break;
    }
    return p;
}

} // namespace

// ---------------------------------------------------------------------------
// SymbolicCocycle

SymbolicCocycle::SymbolicCocycle(SftBase base, int lo, int hi, std::vector<Matrix> table,
                                 double hoelder)
    : base_(std::move(base)), win_lo_(lo), win_hi_(hi), table_(std::move(table)),
      hoelder_(hoelder) {
    if (table_.empty()) throw Error("SymbolicCocycle: empty table");
    dim_ = int(table_[0].rows());
    for (const auto& m : table_) {
        if (m.rows() != dim_ || m.cols() != dim_)
            throw Error("SymbolicCocycle: inconsistent matrix dimensions");
        if (std::abs(m.determinant()) < 1e-300 || condition_number(m) > 1e12)
            throw Error("SymbolicCocycle: generator value not invertible");
    }
}

SymbolicCocycle SymbolicCocycle::constant(SftBase base, Matrix value,
                                          double hoelder_exponent) {
    return SymbolicCocycle(std::move(base), 0, -1, {std::move(value)}, hoelder_exponent);
}

SymbolicCocycle SymbolicCocycle::locally_constant(SftBase base, int win_lo, int win_hi,
                                                  std::vector<Matrix> table,
                                                  double hoelder_exponent) {
    if (win_hi < win_lo) throw Error("SymbolicCocycle: bad window");
    const int k = base.alphabet_size();
    size_t expect = 1;
    for (int i = win_lo; i <= win_hi; ++i) expect *= size_t(k);
    if (table.size() != expect)
        throw Error("SymbolicCocycle: table does not cover all windows");
    return SymbolicCocycle(std::move(base), win_lo, win_hi, std::move(table),
                           hoelder_exponent);
}

SymbolicCocycle SymbolicCocycle::from_window_fn(
    SftBase base, int win_lo, int win_hi, int dimension,
    const std::function<Matrix(const std::vector<int>&)>& fn, double hoelder_exponent) {
    const int k = base.alphabet_size();
    const int len = win_hi - win_lo + 1;
    size_t total = 1;
    for (int i = 0; i < len; ++i) total *= size_t(k);
    std::vector<Matrix> table(total);
    std::vector<int> word(size_t(len), 0);
    for (size_t idx = 0; idx < total; ++idx) {
        size_t rem = idx;
        for (int i = 0; i < len; ++i) {
            word[size_t(i)] = int(rem % size_t(k));
            rem /= size_t(k);
        }
        table[idx] = fn(word);
        if (table[idx].rows() != dimension || table[idx].cols() != dimension)
            throw Error("from_window_fn: wrong matrix dimension");
    }
    return locally_constant(std::move(base), win_lo, win_hi, std::move(table),
                            hoelder_exponent);
}

size_t SymbolicCocycle::table_index(const std::vector<int>& word) const {
    const size_t k = size_t(base_.alphabet_size());
    size_t idx = 0, mul = 1;
    for (int s : word) {
        idx += size_t(s) * mul;
        mul *= k;
    }
    return idx;
}

Matrix SymbolicCocycle::generator(const SymbolicPoint& x) const {
    if (is_constant()) return table_[0];
    return table_[table_index(x.window(win_lo_, win_hi_))];
}

Matrix SymbolicCocycle::iterate(const SymbolicPoint& x, long n, double cond_cap) const {
    if (n == 0) return Matrix::Identity(dim_, dim_);
    if (n < 0) {
        Matrix fwd = iterate(x.shifted(n), -n, cond_cap);
        return fwd.fullPivLu().inverse();
    }
    Matrix acc = Matrix::Identity(dim_, dim_);
    if (is_constant()) {
        for (long j = 0; j < n; ++j) acc = table_[0] * acc;
    } else {
        std::vector<int> strip = x.window(win_lo_, n - 1 + win_hi_);
        const int len = win_hi_ - win_lo_ + 1;
        std::vector<int> word(size_t(len), 0);
        for (long j = 0; j < n; ++j) {
            std::copy(strip.begin() + j, strip.begin() + j + len, word.begin());
            acc = table_[table_index(word)] * acc;
            if ((j & 31) == 31 && condition_number(acc) > cond_cap)
                throw IllConditioned("iterate: condition estimate above cap");
        }
    }
    if (condition_number(acc) > cond_cap)
        throw IllConditioned("iterate: condition estimate above cap");
    return acc;
}

ScaledMatrix SymbolicCocycle::iterate_scaled(const SymbolicPoint& x, long n) const {
    ScaledMatrix acc = ScaledMatrix::identity(dim_);
    if (n >= 0) {
        if (is_constant()) {
            for (long j = 0; j < n; ++j) acc.absorb(table_[0]);
            return acc;
        }
        std::vector<int> strip = x.window(win_lo_, n - 1 + win_hi_);
        const int len = win_hi_ - win_lo_ + 1;
        std::vector<int> word(size_t(len), 0);
        for (long j = 0; j < n; ++j) {
            std::copy(strip.begin() + j, strip.begin() + j + len, word.begin());
            acc.absorb(table_[table_index(word)]);
        }
        return acc;
    }
    if (is_constant()) {
        Matrix inv = table_[0].fullPivLu().inverse();
        for (long j = 0; j < -n; ++j) acc.absorb(inv);
        return acc;
    }
    // factors at f^{-j}x read the strip of letters once
    std::vector<int> strip = x.window(n + win_lo_, -1 + win_hi_);
    const int len = win_hi_ - win_lo_ + 1;
    std::vector<int> word(size_t(len), 0);
    for (long j = 1; j <= -n; ++j) {
        long off = -n - j;  // window of f^{-j}x starts at strip offset
        std::copy(strip.begin() + off, strip.begin() + off + len, word.begin());
        acc.absorb(table_[table_index(word)].fullPivLu().inverse());
    }
    return acc;
}

SymbolicCocycle SymbolicCocycle::conjugated_by(const Matrix& c) const {
    Matrix cinv = c.fullPivLu().inverse();
    std::vector<Matrix> table;
    table.reserve(table_.size());
    for (const auto& m : table_) table.push_back(cinv * m * c);
    SymbolicCocycle out = *this;
    out.table_ = std::move(table);
    return out;
}

// ---------------------------------------------------------------------------
// TorusDerivativeCocycle

Matrix TorusDerivativeCocycle::iterate(const Vector& x, long n, double cond_cap) const {
    const int d = dimension();
    if (n == 0) return Matrix::Identity(d, d);
    if (n < 0) {
        Matrix fwd = iterate(f_->iterate(x, int(n)), -n, cond_cap);
        return fwd.fullPivLu().inverse();
    }
    Matrix acc = Matrix::Identity(d, d);
    Vector p = x;
    for (long j = 0; j < n; ++j) {
        acc = f_->derivative(p) * acc;
        p = f_->apply(p);
        if ((j & 31) == 31 && condition_number(acc) > cond_cap)
            throw IllConditioned("iterate: condition estimate above cap");
    }
    return acc;
}

ScaledMatrix TorusDerivativeCocycle::iterate_scaled(const Vector& x, long n) const {
    ScaledMatrix acc = ScaledMatrix::identity(dimension());
    Vector p = x;
    if (n >= 0) {
        for (long j = 0; j < n; ++j) {
            acc.absorb(f_->derivative(p));
            p = f_->apply(p);
        }
    } else {
        for (long j = 0; j < -n; ++j) {
            p = f_->apply_inverse(p);
            acc.absorb(f_->derivative(p).fullPivLu().inverse());
        }
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Periodic data

namespace {

PeriodicDatum make_datum(const std::vector<Matrix>& factors, int d) {
    const int period = int(factors.size());
    Matrix fwd = Matrix::Identity(d, d);
    for (int j = 0; j < period; ++j) fwd = factors[size_t(j)] * fwd;
    // reverse association as an independent float path for the residual
    Matrix bwd = Matrix::Identity(d, d);
    for (int j = period - 1; j >= 0; --j) bwd = bwd * factors[size_t(j)];
    PeriodicDatum out;
    out.return_matrix = fwd;
    out.period = period;
    out.recompute_residual = op_norm(fwd - bwd) / std::max(1e-300, op_norm(fwd));
    out.eigenvalues = sorted_eigenvalues(fwd);
    return out;
}

} // namespace

PeriodicDatum periodic_data(const SymbolicCocycle& a, const PeriodicOrbit& orbit) {
    std::vector<Matrix> factors;
    SymbolicPoint p = orbit.point;
    for (int j = 0; j < orbit.period; ++j) {
        factors.push_back(a.generator(p));
        p = p.shifted();
    }
    return make_datum(factors, a.dimension());
}

PeriodicDatum periodic_data(const TorusDerivativeCocycle& a, const Vector& point,
                            int period) {
    std::vector<Matrix> factors;
    Vector p = point;
    for (int j = 0; j < period; ++j) {
        factors.push_back(a.generator(p));
        p = a.map().apply(p);
    }
    return make_datum(factors, a.dimension());
}

// ---------------------------------------------------------------------------
// Conjugator matching

std::optional<PeriodicConjugator> match_periodic_conjugator(const PeriodicDatum& da,
                                                            const PeriodicDatum& db,
                                                            double tol) {
    const Matrix& a = da.return_matrix;
    const Matrix& b = db.return_matrix;
    if (a.rows() != b.rows()) return std::nullopt;
    const int d = int(a.rows());

    for (int i = 0; i < d; ++i) {
        std::complex<double> la = da.eigenvalues[size_t(i)], lb = db.eigenvalues[size_t(i)];
        if (std::abs(la - lb) > tol * std::max(1.0, std::abs(la))) return std::nullopt;
    }
    auto pa = jordan_profile(a, da.eigenvalues, tol);
    auto pb = jordan_profile(b, db.eigenvalues, tol);
    if (pa != pb) return std::nullopt;

    double scale = std::max(1.0, std::abs(da.eigenvalues[0]));
    double min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            min_gap = std::min(
                min_gap, std::abs(da.eigenvalues[size_t(i)] - da.eigenvalues[size_t(j)]));

    Matrix c;
    if (min_gap > 1e-7 * scale) {
        // distinct spectrum: canonical eigenvector matching, then balancing
        // over the commutant (signed scalings for real eigenvalues, scaled
        // rotations for complex pairs; first block gauge-fixed)
        RealEigenBasis va = real_eigenbasis(a), vb = real_eigenbasis(b);
        Matrix vbi = vb.basis.fullPivLu().inverse();
        const size_t nblocks = va.block_dim.size();
        int nreal = 0;
        for (int bd : va.block_dim)
            if (bd == 1) ++nreal;

        // continuous params: per block a log-scale (block 0 fixed to 0), plus
        // an angle per complex pair
        std::vector<std::pair<double, double>> box;
        for (size_t bi = 0; bi < nblocks; ++bi) {
            if (bi > 0) box.emplace_back(-6.0, 6.0);
            if (va.block_dim[bi] == 2) box.emplace_back(-3.2, 3.2);
        }
        const int sign_patterns = nreal > 0 ? (1 << (nreal - 1)) : 1;

        auto build = [&](const std::vector<double>& p, int signs) {
            std::vector<double> full;
            size_t pi = 0;
            int real_seen = 0;
            for (size_t bi = 0; bi < nblocks; ++bi) {
                double logt = (bi == 0) ? 0.0 : p[pi++];
                if (va.block_dim[bi] == 1) {
                    // first real block positive; remaining signs enumerated
                    double sgn = 1.0;
                    if (real_seen > 0 && ((signs >> (real_seen - 1)) & 1)) sgn = -1.0;
                    ++real_seen;
                    full.push_back(logt);
                    full.push_back(sgn);
                } else {
                    full.push_back(logt);
                    full.push_back(p[pi++]);
                }
            }
            // assemble: real block = sgn * e^logt; pair = e^logt * R(phi)
            int dtot = 0;
            for (int bdim : va.block_dim) dtot += bdim;
            Matrix dmat = Matrix::Zero(dtot, dtot);
            int col = 0;
            size_t fi = 0;
            for (int bdim : va.block_dim) {
                if (bdim == 1) {
                    double logt = full[fi], sgn = full[fi + 1];
                    dmat(col, col) = sgn * std::exp(logt);
                    fi += 2;
                    col += 1;
                } else {
                    double t = std::exp(full[fi]), phi = full[fi + 1];
                    dmat(col, col) = t * std::cos(phi);
                    dmat(col, col + 1) = t * std::sin(phi);
                    dmat(col + 1, col) = -t * std::sin(phi);
                    dmat(col + 1, col + 1) = t * std::cos(phi);
                    fi += 2;
                    col += 2;
                }
            }
            return (va.basis * dmat * vbi).eval();
        };

        double best = std::numeric_limits<double>::infinity();
        for (int signs = 0; signs < sign_patterns; ++signs) {
            auto objective = [&](const std::vector<double>& p) {
                return condition_number(build(p, signs));
            };
            std::vector<double> popt;
            if (box.empty()) {
                popt = {};
            } else {
                std::vector<double> pg = grid_scan(objective, box);
                popt = minimize_cyclic(objective, pg, box);
                std::vector<std::pair<double, double>> tight;
                for (double v : popt) tight.emplace_back(v - 0.5, v + 0.5);
                popt = minimize_cyclic(objective, popt, tight);
            }
            std::vector<double> zero(box.size(), 0.0);
            if (!box.empty() && objective(zero) < objective(popt)) popt = zero;
            double v = objective(popt);
            if (v < best) {
                best = v;
                c = build(popt, signs);
            }
        }
    } else {
        // repeated spectrum: solve A K = K B and search the solution space
        Matrix sys = Eigen::kroneckerProduct(Matrix::Identity(d, d), a / scale).eval() -
                     Eigen::kroneckerProduct(b.transpose() / scale,
                                             Matrix::Identity(d, d)).eval();
        Eigen::JacobiSVD<Matrix> svd(sys, Eigen::ComputeFullV);
        auto sv = svd.singularValues();
        double thresh = 1e-9 * std::max(1.0, sv(0));
        std::vector<Matrix> basis;
        for (int i = 0; i < d * d; ++i) {
            if (i < sv.size() && sv(i) > thresh) continue;
            Vector v = svd.matrixV().col(i);
            Matrix k(d, d);
            for (int col = 0; col < d; ++col) k.col(col) = v.segment(col * d, d);
            basis.push_back(k);
        }
        if (basis.empty()) return std::nullopt;
        auto objective = [&](const std::vector<double>& p) {
            Matrix k = Matrix::Zero(d, d);
            double norm2 = 0.0;
            for (size_t i = 0; i < basis.size(); ++i) {
                k += p[i] * basis[i];
                norm2 += p[i] * p[i];
            }
            if (norm2 < 1e-12) return 1e30;
            double cn = condition_number(k);
            return std::isfinite(cn) ? cn : 1e30;
        };
        std::vector<std::pair<double, double>> box(basis.size(), {-1.0, 1.0});
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> bestp;
        {
            auto pg = grid_scan(objective, box);
            auto q = minimize_cyclic(objective, pg, box);
            best = objective(q);
            bestp = q;
        }
        for (size_t s = 0; s < basis.size(); ++s) {
            std::vector<double> p(basis.size(), 0.0);
            p[s] = 1.0;
            auto q = minimize_cyclic(objective, p, box);
            double v = objective(q);
            if (v < best) {
                best = v;
                bestp = q;
            }
        }
        if (!std::isfinite(best) || best > 1e12) return std::nullopt;
        c = Matrix::Zero(d, d);
        for (size_t i = 0; i < basis.size(); ++i) c += bestp[i] * basis[i];
        c /= op_norm(c);
        for (int i = 0; i < d * d; ++i) {
            double v = c(i % d, i / d);
            if (std::abs(v) > 1e-12) {
                if (v < 0) c = -c;
                break;
            }
        }
    }

    PeriodicConjugator out;
    out.c = c;
    out.condition_number = condition_number(c);
    Matrix cinv = c.fullPivLu().inverse();
    out.residual = op_norm(a - c * b * cinv) / std::max(1e-300, op_norm(a));
    return out;
}

// ---------------------------------------------------------------------------

DeltaNarrowReport delta_narrow_radius(const SymbolicCocycle& a,
                                      const std::vector<PeriodicOrbit>& orbits,
                                      const std::vector<double>& centers) {
    if (orbits.empty()) throw Error("delta_narrow_radius: no orbits supplied");
    std::vector<double> sorted_centers = centers;
    std::sort(sorted_centers.rbegin(), sorted_centers.rend());
    DeltaNarrowReport rep;
    for (size_t oi = 0; oi < orbits.size(); ++oi) {
        PeriodicDatum dat = periodic_data(a, orbits[oi]);
        std::vector<double> exps;
        for (const auto& ev : dat.eigenvalues)
            exps.push_back(std::log(std::abs(ev)) / double(dat.period));
        std::sort(exps.rbegin(), exps.rend());
        double delta = 0.0;
        for (size_t i = 0; i < exps.size(); ++i)
            delta = std::max(delta, std::abs(exps[i] - sorted_centers[i]));
        rep.per_orbit_delta.push_back(delta);
        if (delta > rep.delta) {
            rep.delta = delta;
            rep.witness_orbit = oi;
        }
    }
    return rep;
}

BunchingCertificate bunching_margin(const SymbolicCocycle& a, double beta, int horizon,
                                    const std::vector<SymbolicPoint>& samples) {
    if (samples.empty()) throw Error("bunching_margin: no samples");
    const double log_nu = std::log(a.base().nu());
    std::vector<double> ns, logq;
    for (int n = 1; n <= horizon; ++n) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& x : samples) {
            ScaledMatrix fwd = a.iterate_scaled(x, n);
            ScaledMatrix bwd = a.iterate_scaled(x, -n);
            double qf = fwd.log_op_norm() - fwd.log_conorm() + beta * n * log_nu;
            double qb = bwd.log_op_norm() - bwd.log_conorm() + beta * n * log_nu;
            worst = std::max({worst, qf, qb});
        }
        ns.push_back(double(n));
        logq.push_back(worst);
    }
    auto [slope, intercept] = fit_line(ns, logq);
    (void)intercept;
    BunchingCertificate cert;
    cert.beta = beta;
    cert.horizon = horizon;
    cert.theta = std::exp(slope);
    double lmax = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < ns.size(); ++i) lmax = std::max(lmax, logq[i] - slope * ns[i]);
    cert.l_const = std::exp(lmax);  // dominates every measured point
    cert.valid = cert.theta < 1.0;
    cert.margin = 1.0 - cert.theta;
    return cert;
}

// ||A^n|| from the forward product and ||(A^n)^{-1}|| = ||A^{-n} at f^n x||
// from the backward one: a single SVD cannot resolve singular-value ratios
// beyond the double-precision range
double qc_distortion_log(const SymbolicCocycle& a, const SymbolicPoint& x, long n) {
    ScaledMatrix fwd = a.iterate_scaled(x, n);
    ScaledMatrix inv = a.iterate_scaled(a.step(x, n), -n);
    return fwd.log_op_norm() + inv.log_op_norm();
}

double qc_distortion(const SymbolicCocycle& a, const SymbolicPoint& x, long n) {
    return std::exp(qc_distortion_log(a, x, n));
}

double qc_distortion_log(const TorusDerivativeCocycle& a, const Vector& x, long n) {
    ScaledMatrix fwd = a.iterate_scaled(x, n);
    ScaledMatrix inv = a.iterate_scaled(a.step(x, n), -n);
    return fwd.log_op_norm() + inv.log_op_norm();
}

} // namespace coho
