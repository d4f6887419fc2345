#include "coho/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "coho/util.hpp"

namespace coho {

// ---------------------------------------------------------------------------
// Isometrizing inner product

IsometrizingMetric isometrizing_inner_product(const Matrix& b, double jordan_tol) {
    const int d = int(b.rows());
    Eigen::EigenSolver<Matrix> es(b);
    double scale = std::max(1.0, op_norm(b));

    // diagonalizability: geometric multiplicity must match algebraic
    std::vector<std::complex<double>> evs;
    for (int i = 0; i < d; ++i) evs.push_back(es.eigenvalues()(i));
    std::vector<bool> used(evs.size(), false);
    for (size_t i = 0; i < evs.size(); ++i) {
        if (used[i]) continue;
        int alg = 0;
        for (size_t j = 0; j < evs.size(); ++j)
            if (!used[j] && std::abs(evs[j] - evs[i]) <= 1e-7 * scale) {
                used[j] = true;
                ++alg;
            }
        Eigen::MatrixXcd shifted =
            b.cast<std::complex<double>>() - evs[i] * Eigen::MatrixXcd::Identity(d, d);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
        int rank = 0;
        for (int s = 0; s < svd.singularValues().size(); ++s)
            if (svd.singularValues()(s) > jordan_tol * scale) ++rank;
        if (d - rank < alg)
            throw NotDiagonalizable("isometrizing_inner_product: Jordan block detected");
    }

    // realified eigenframe, eigenvalues sorted by (modulus desc, argument asc)
    struct Item {
        std::complex<double> lam;
        Eigen::VectorXcd vec;
    };
    std::vector<Item> items;
    for (int i = 0; i < d; ++i)
        items.push_back({es.eigenvalues()(i), es.eigenvectors().col(i)});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& bb) {
        double ma = std::abs(a.lam), mb = std::abs(bb.lam);
        if (std::abs(ma - mb) > 1e-13 * std::max(1.0, std::max(ma, mb))) return ma > mb;
        return std::arg(a.lam) < std::arg(bb.lam);
    });

    IsometrizingMetric met;
    met.frame.resize(d, d);
    int col = 0;
    std::vector<double> col_modulus;
    for (const auto& it : items) {
        if (std::abs(it.lam.imag()) < 1e-10 * std::max(1.0, std::abs(it.lam))) {
            Vector v = it.vec.real();
            if (v.norm() < 1e-12) v = it.vec.imag();
            v.normalize();
            met.frame.col(col++) = v;
            col_modulus.push_back(std::abs(it.lam));
        } else if (it.lam.imag() > 0) {
            Eigen::VectorXcd v = it.vec;
            int arg_max = 0;
            for (int j = 1; j < d; ++j)
                if (std::abs(v(j)) > std::abs(v(arg_max))) arg_max = j;
            v *= std::conj(v(arg_max)) / std::abs(v(arg_max));
            // block scale fixed by a unit real part, so an orthogonal B
            // yields the Euclidean gram
            v /= v.real().norm();
            met.frame.col(col++) = v.real();
            met.frame.col(col++) = v.imag();
            col_modulus.push_back(std::abs(it.lam));
            col_modulus.push_back(std::abs(it.lam));
        }
    }
    if (col != d) throw NotDiagonalizable("isometrizing_inner_product: frame incomplete");
    if (condition_number(met.frame) > 1e9)
        throw NotDiagonalizable("isometrizing_inner_product: eigenframe ill-conditioned");
    met.frame_inv = met.frame.fullPivLu().inverse();
    met.gram = met.frame_inv.transpose() * met.frame_inv;

    // group Lyapunov blocks by modulus (descending)
    size_t i = 0;
    while (i < col_modulus.size()) {
        size_t j = i;
        while (j < col_modulus.size() &&
               std::abs(col_modulus[j] - col_modulus[i]) <= 1e-9 * std::max(1.0, col_modulus[i]))
            ++j;
        met.moduli.push_back(col_modulus[i]);
        met.block_dims.push_back(int(j - i));
        i = j;
    }
    met.rho = met.moduli.size() == 1 ? met.moduli[0] : 1.0;
    return met;
}

std::vector<int> recurrence_times(const Matrix& b, const IsometrizingMetric& metric,
                                  int n_max, double tol) {
    std::vector<int> times;
    const int d = int(b.rows());
    Matrix bg = metric.frame_inv * b * metric.frame / metric.rho;
    Matrix pw = Matrix::Identity(d, d);
    for (int n = 1; n <= n_max; ++n) {
        pw = bg * pw;
        if (op_norm(pw - Matrix::Identity(d, d)) < tol) times.push_back(n);
    }
    if (times.size() < 3)
        throw NoRecurrenceFound("recurrence_times: fewer than 3 times; raise N_max");
    return times;
}

// ---------------------------------------------------------------------------
// Scalar Livšic solver

namespace {

// a cyclic admissible word whose shifts visit every admissible window word
// of length 2*depth+1
std::vector<int> covering_cycle(const SftBase& base, int depth) {
    const int k = base.alphabet_size();
    const int wlen = 2 * depth;  // node = admissible word of this length
    if (wlen == 0) {
        // depth 0: one self-looping symbol suffices; walk all symbols via
        // a mixing path
        std::vector<int> cyc;
        for (int s = 0; s < k; ++s) cyc.push_back(s);
        // fallback: not necessarily admissible; use paths below instead
    }

    auto code_of = [&](const std::vector<int>& w) {
        size_t c = 0, mul = 1;
        for (int s : w) {
            c += size_t(s) * mul;
            mul *= size_t(k);
        }
        return c;
    };
    auto admissible_word = [&](const std::vector<int>& w) {
        for (size_t i = 0; i + 1 < w.size(); ++i)
            if (!base.admissible(w[i], w[i + 1])) return false;
        return true;
    };

    // enumerate nodes (admissible wlen-words); depth >= 1 here
    const int nlen = std::max(wlen, 1);
    size_t total = 1;
    for (int i = 0; i < nlen; ++i) total *= size_t(k);
    std::vector<char> is_node(total, 0);
    std::vector<int> word(size_t(nlen), 0);
    for (size_t c = 0; c < total; ++c) {
        size_t rem = c;
        for (int i = 0; i < nlen; ++i) {
            word[size_t(i)] = int(rem % size_t(k));
            rem /= size_t(k);
        }
        if (admissible_word(word)) is_node[c] = 1;
    }

    // edges: node u --s--> v where v = shift(u) + s admissibly
    auto node_step = [&](size_t c, int s) -> long {
        // decode, shift left, append s
        std::vector<int> w(size_t(nlen), 0);
        size_t rem = c;
        for (int i = 0; i < nlen; ++i) {
            w[size_t(i)] = int(rem % size_t(k));
            rem /= size_t(k);
        }
        if (!base.admissible(w.back(), s)) return -1;
        std::vector<int> v(w.begin() + 1, w.end());
        v.push_back(s);
        size_t cv = code_of(v);
        return is_node[cv] ? long(cv) : -1;
    };

    // start node: lexicographically smallest admissible word
    size_t start = total;
    for (size_t c = 0; c < total; ++c)
        if (is_node[c]) { start = c; break; }
    if (start == total) throw Error("covering_cycle: no admissible words");

    std::vector<std::vector<char>> edge_done(total, std::vector<char>(size_t(k), 0));
    size_t remaining = 0;
    for (size_t c = 0; c < total; ++c)
        if (is_node[c])
            for (int s = 0; s < k; ++s)
                if (node_step(c, s) >= 0) ++remaining;

    std::vector<int> walk;  // emitted edge symbols
    size_t cur = start;
    while (remaining > 0) {
        bool advanced = false;
        for (int s = 0; s < k; ++s) {
            long nxt = node_step(cur, s);
            if (nxt >= 0 && !edge_done[cur][size_t(s)]) {
                edge_done[cur][size_t(s)] = 1;
                --remaining;
                walk.push_back(s);
                cur = size_t(nxt);
                advanced = true;
                break;
            }
        }
        if (advanced) continue;
        // BFS along covered edges to the nearest node with an open out-edge
        std::vector<long> prev(total, -2);
        std::vector<int> prev_sym(total, -1);
        std::deque<size_t> queue{cur};
        prev[cur] = -1;
        long goal = -1;
        while (!queue.empty() && goal < 0) {
            size_t u = queue.front();
            queue.pop_front();
            for (int s = 0; s < k; ++s) {
                long v = node_step(u, s);
                if (v < 0 || prev[size_t(v)] != -2) continue;
                prev[size_t(v)] = long(u);
                prev_sym[size_t(v)] = s;
                bool open = false;
                for (int t = 0; t < k; ++t)
                    if (node_step(size_t(v), t) >= 0 && !edge_done[size_t(v)][size_t(t)])
                        open = true;
                if (open) {
                    goal = v;
                    break;
                }
                queue.push_back(size_t(v));
            }
        }
        if (goal < 0) throw Error("covering_cycle: graph not strongly connected");
        std::vector<int> path;
        for (long v = goal; prev[size_t(v)] >= 0; v = prev[size_t(v)])
            path.push_back(prev_sym[size_t(v)]);
        std::reverse(path.begin(), path.end());
        for (int s : path) walk.push_back(s);
        cur = size_t(goal);
    }
    // close the cycle back to the start node
    if (cur != start) {
        std::vector<long> prev(total, -2);
        std::vector<int> prev_sym(total, -1);
        std::deque<size_t> queue{cur};
        prev[cur] = -1;
        while (!queue.empty() && prev[start] == -2) {
            size_t u = queue.front();
            queue.pop_front();
            for (int s = 0; s < k; ++s) {
                long v = node_step(u, s);
                if (v < 0 || prev[size_t(v)] != -2) continue;
                prev[size_t(v)] = long(u);
                prev_sym[size_t(v)] = s;
                queue.push_back(size_t(v));
            }
        }
        if (prev[start] == -2) throw Error("covering_cycle: cannot close cycle");
        std::vector<int> path;
        for (long v = long(start); prev[size_t(v)] >= 0; v = prev[size_t(v)])
            path.push_back(prev_sym[size_t(v)]);
        std::reverse(path.begin(), path.end());
        for (int s : path) walk.push_back(s);
    }
    return walk;  // cyclic word: windows wrap through the start node
}

} // namespace

double LivsicSolution::value_at(const SymbolicPoint& x) const {
    std::vector<int> w = x.window(-depth, depth);
    size_t c = 0, mul = 1;
    for (int s : w) {
        c += size_t(s) * mul;
        mul *= size_t(alphabet);
    }
    double v = phi[c];
    if (v <= 0.0) throw Error("LivsicSolution: window not covered");
    return v;
}

LivsicSolution scalar_livsic(const SftBase& base,
                             const std::function<double(const SymbolicPoint&)>& a,
                             double rho, int depth, int obstruction_n_max,
                             double obstruction_tol) {
    if (rho <= 0.0) throw Error("scalar_livsic: rho must be positive");
    LivsicSolution sol;
    sol.depth = depth;
    sol.rho = rho;
    sol.alphabet = base.alphabet_size();

    // periodic obstruction scan
    double worst = 0.0;
    for (const auto& orbit : enumerate_periodic_orbits(base, obstruction_n_max)) {
        double logprod = 0.0;
        SymbolicPoint p = orbit.point;
        for (int j = 0; j < orbit.period; ++j) {
            double v = a(p);
            if (v <= 0.0) throw Error("scalar_livsic: cocycle not positive");
            logprod += std::log(v);
            p = p.shifted();
        }
        double dev = std::abs(logprod - orbit.period * std::log(rho));
        worst = std::max(worst, dev);
        if (dev > obstruction_tol) {
            std::ostringstream os;
            os << "scalar_livsic: periodic obstruction at orbit "
               << orbit.point.to_string() << " (period " << orbit.period
               << ", deviation " << dev << ")";
            throw PeriodicObstruction(os.str());
        }
    }
    sol.obstruction = worst;

    // telescope along a cylinder-covering cycle
    std::vector<int> cyc = covering_cycle(base, depth);
    SymbolicPoint x0 = SymbolicPoint::periodic(cyc);
    const long e = long(cyc.size());
    size_t total = 1;
    for (int i = 0; i < 2 * depth + 1; ++i) total *= size_t(base.alphabet_size());
    sol.phi.assign(total, 0.0);

    double logphi = 0.0;
    std::vector<double> logphis(size_t(e), 0.0);
    SymbolicPoint p = x0;
    for (long kk = 0; kk < e; ++kk) {
        logphis[size_t(kk)] = logphi;
        std::vector<int> w = p.window(-depth, depth);
        size_t c = 0, mul = 1;
        for (int s : w) {
            c += size_t(s) * mul;
            mul *= size_t(base.alphabet_size());
        }
        if (sol.phi[c] == 0.0) sol.phi[c] = std::exp(logphi);
        logphi += std::log(a(p)) - std::log(rho);
        p = p.shifted();
    }

    // self-consistency of the table along the orbit, wrap included
    double resid = 0.0;
    p = x0;
    for (long kk = 0; kk < e; ++kk) {
        double lhs = a(p) * sol.value_at(p);
        double rhs = rho * sol.value_at(p.shifted());
        resid = std::max(resid, std::abs(lhs / rhs - 1.0));
        p = p.shifted();
    }
    sol.residual = resid;
    return sol;
}

// ---------------------------------------------------------------------------

SymbolicCocycle normalize_at_fixed_point(const SymbolicCocycle& a, const SymbolicPoint& q,
                                         const Matrix& c_q, const Matrix& b, double tol) {
    if (q.shifted() != q) throw Error("normalize_at_fixed_point: q must be fixed");
    Matrix cinv = c_q.fullPivLu().inverse();
    Matrix aq = cinv * a.generator(q) * c_q;
    if (op_norm(aq - b) > tol * std::max(1.0, op_norm(b)))
        throw BadConjugator("normalize_at_fixed_point: C_q does not conjugate A_q to B");
    return a.conjugated_by(c_q);
}

// ---------------------------------------------------------------------------
// TransferMap

void TransferMap::rebuild_index() {
    const int len = 2 * depth_ + 1;
    size_t total = 1;
    for (int i = 0; i < len; ++i) total *= size_t(alphabet_);
    word_index_.assign(total, size_t(-1));
    for (size_t i = 0; i < points_.size(); ++i) {
        std::vector<int> w = points_[i].window(-depth_, depth_);
        size_t c = 0, mul = 1;
        for (int s : w) {
            c += size_t(s) * mul;
            mul *= size_t(alphabet_);
        }
        word_index_[c] = i;
    }
}

size_t TransferMap::index_of_word(const std::vector<int>& w) const {
    size_t c = 0, mul = 1;
    for (int s : w) {
        c += size_t(s) * mul;
        mul *= size_t(alphabet_);
    }
    if (c >= word_index_.size() || word_index_[c] == size_t(-1))
        throw MissingSample("TransferMap: window word not stored");
    return word_index_[c];
}

Matrix TransferMap::value_at(const SymbolicPoint& x) const {
    // projection to the nearest homoclinic point: symbols outside the
    // window replaced by q
    return values_[index_of_word(x.window(-depth_, depth_))];
}

void TransferMap::set_fields(SymbolicPoint q, int depth, double beta, double holder_const,
                             std::vector<SymbolicPoint> pts, std::vector<Matrix> vals) {
    q_ = std::move(q);
    depth_ = depth;
    beta_ = beta;
    holder_const_ = holder_const;
    points_ = std::move(pts);
    values_ = std::move(vals);
    alphabet_ = 0;
    for (const auto& p : points_) {
        for (long i = -depth_; i <= depth_; ++i) alphabet_ = std::max(alphabet_, p.at(i) + 1);
    }
    alphabet_ = std::max(alphabet_, 2);
    rebuild_index();
}

TransferMap build_transfer_fixed_point(const SymbolicCocycle& a, const Matrix& b,
                                       const SymbolicPoint& q, int depth,
                                       const BunchingCertificate& cert,
                                       double consistency_tol, double holonomy_tol,
                                       size_t max_pair_checks) {
    if (q.shifted() != q)
        throw Error("build_transfer_fixed_point: q must be a fixed point");
    if (op_norm(a.generator(q) - b) > 1e-8 * std::max(1.0, op_norm(b)))
        throw BadConjugator("build_transfer_fixed_point: A_q != B (normalize first)");
    if (!cert.valid)
        throw NoBunchingCertificate("build_transfer_fixed_point: invalid certificate");

    TransferMap tm;
    tm.q_ = q;
    tm.depth_ = depth;
    tm.beta_ = cert.beta;
    tm.alphabet_ = a.base().alphabet_size();
    tm.points_ = homoclinic_points(a.base(), q, depth);

    const int d = a.dimension();
    tm.values_.resize(tm.points_.size());
    double worst_consistency = 0.0;
    for (size_t i = 0; i < tm.points_.size(); ++i) {
        const SymbolicPoint& x = tm.points_[i];
        HolonomyOperator hs = stable_holonomy(a, q, x, cert, holonomy_tol);
        HolonomyOperator hu = unstable_holonomy(a, q, x, cert, holonomy_tol);
        tm.values_[i] = hs.h;
        // homoclinic identity H^s_{x,q} o H^u_{q,x} = Id
        Matrix hsqx_inv = hs.h.fullPivLu().inverse();
        double cons = op_norm(hsqx_inv * hu.h - Matrix::Identity(d, d));
        worst_consistency = std::max(worst_consistency, cons);
        if (cons > consistency_tol) {
            std::ostringstream os;
            os << "build_transfer_fixed_point: homoclinic inconsistency " << cons
               << " at " << x.to_string();
            throw HomoclinicInconsistency(os.str());
        }
    }
    tm.worst_consistency_ = worst_consistency;
    tm.rebuild_index();

    // Hölder certificate over a deterministic pair subsample
    double m_bound = 0.0;
    for (const auto& v : tm.values_)
        m_bound = std::max({m_bound, op_norm(v), op_norm(v.fullPivLu().inverse())});
    double k_prime = 0.0;
    const size_t n_pts = tm.points_.size();
    size_t checks = std::min(max_pair_checks, n_pts * (n_pts - 1) / 2);
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t j = 0; pairs.size() < checks && j < 4 * checks + 16; ++j) {
        size_t i1 = (j * 2654435761u) % n_pts;
        size_t i2 = (j * 40503u + 1 + j / n_pts) % n_pts;
        if (i1 != i2) pairs.emplace_back(i1, i2);
    }
    for (auto& [i1, i2] : pairs) {
        double dist = sft_distance(tm.points_[i1], tm.points_[i2], a.base());
        if (dist <= 0.0) continue;
        double ratio = op_norm(tm.values_[i1] * tm.values_[i2].fullPivLu().inverse() -
                               Matrix::Identity(d, d)) /
                       std::pow(dist, cert.beta);
        k_prime = std::max(k_prime, ratio);
    }
    tm.holder_const_ = 2.0 * m_bound * std::max(k_prime, 1e-300);
    double excess = 0.0;
    for (auto& [i1, i2] : pairs) {
        double dist = sft_distance(tm.points_[i1], tm.points_[i2], a.base());
        if (dist <= 0.0) continue;
        double lhs = gl_distance(tm.values_[i1], tm.values_[i2]);
        excess = std::max(excess, lhs / (tm.holder_const_ * std::pow(dist, cert.beta)));
    }
    tm.cert_residual_ = excess;
    return tm;
}

HomoclinicConsistencyReport homoclinic_consistency(const SymbolicCocycle& a,
                                                   const SymbolicPoint& x,
                                                   const SymbolicPoint& q,
                                                   const std::vector<int>& times) {
    auto off_s = stable_leaf_offset(q, x);
    auto off_u = unstable_leaf_offset(q, x);
    if (!off_s || !off_u)
        throw Error("homoclinic_consistency: x is not homoclinic to q");
    long depth = std::max(*off_s, *off_u);

    int n_k = -1;
    for (int t : times)
        if (t > depth) n_k = std::max(n_k, t);
    if (n_k < 0)
        throw Error("homoclinic_consistency: no usable recurrence time beyond depth");

    HomoclinicConsistencyReport rep;
    rep.n_k = n_k;
    const int d = a.dimension();
    SymbolicPoint z = x.shifted(-n_k);
    Matrix m = a.iterate(z, 2 * n_k);
    rep.value = op_norm(m - Matrix::Identity(d, d));

    auto closing = anosov_closing(a.base(), z, 2 * n_k);
    rep.closing_orbit = closing.orbit;
    Matrix mp = a.iterate(closing.orbit.point, 2 * n_k);
    rep.closing_orbit_value = op_norm(mp - Matrix::Identity(d, d));
    return rep;
}

double verify_conjugacy(const SymbolicCocycle& a, const SymbolicCocycle& b,
                        const std::function<Matrix(const SymbolicPoint&)>& c,
                        const std::vector<SymbolicPoint>& samples) {
    double worst = 0.0;
    for (const auto& x : samples) {
        Matrix ax = a.generator(x);
        Matrix lhs = c(x.shifted()) * b.generator(x) * c(x).fullPivLu().inverse();
        worst = std::max(worst, op_norm(ax - lhs) / std::max(1e-300, op_norm(ax)));
    }
    return worst;
}

MetricField invariant_metric_from_transfer(
    const SymbolicCocycle& a, const std::function<Matrix(const SymbolicPoint&)>& c,
    const std::vector<SymbolicPoint>& samples, const BunchingCertificate& cert,
    const Matrix& b_frame) {
    MetricField mf;
    const int d = a.dimension();
    Matrix frame_inv = b_frame.fullPivLu().inverse();
    double worst_a = 0.0;
    for (const auto& x : samples) {
        Matrix cx = c(x);
        Matrix cxi = cx.fullPivLu().inverse();
        mf.points.push_back(x);
        mf.gram.push_back(cxi.transpose() * cxi);
        Matrix t = frame_inv * c(x.shifted()).fullPivLu().inverse() * a.generator(x) *
                   cx * b_frame;
        worst_a = std::max(worst_a, op_norm(t.transpose() * t - Matrix::Identity(d, d)));
    }
    mf.a_isometry_residual = worst_a;

    // u-holonomy isometry via H^u_{x,y} C(x) = C(y)
    double worst_h = 0.0;
    for (size_t i = 0; i + 1 < samples.size(); ++i) {
        const SymbolicPoint& x = samples[i];
        const SymbolicPoint& y = samples[i + 1];
        if (!unstable_leaf_offset(x, y)) continue;
        HolonomyOperator hu = unstable_holonomy(a, x, y, cert);
        Matrix t = frame_inv * c(y).fullPivLu().inverse() * hu.h * c(x) * b_frame;
        Eigen::JacobiSVD<Matrix> svd(t);
        for (int s = 0; s < svd.singularValues().size(); ++s)
            worst_h = std::max(worst_h, std::abs(svd.singularValues()(s) - 1.0));
    }
    mf.holonomy_isometry_residual = worst_h;
    return mf;
}

CoprimeCombineReport combine_coprime(const SymbolicCocycle& a, const Matrix& b, int n,
                                     int m, int k,
                                     const std::function<Matrix(const SymbolicPoint&)>& c1,
                                     const std::function<Matrix(const SymbolicPoint&)>& c2,
                                     const std::vector<SymbolicPoint>& samples,
                                     double tol) {
    CoprimeCombineReport rep;
    rep.n = n;
    rep.m = m;
    rep.k = k;
    long long nm = (long long)(n)*m;
    long long r, s;
    long long g = ext_gcd(nm, k, r, s);
    if (g != 1) throw NotCoprime("combine_coprime: gcd(NM, K) != 1");
    rep.r = r;
    rep.s = s;

    const int d = int(b.rows());
    // period-1 conjugacy residual of C2
    double worst = 0.0;
    for (const auto& x : samples) {
        Matrix ax = a.generator(x);
        Matrix lhs = c2(x.shifted()) * b * c2(x).fullPivLu().inverse();
        worst = std::max(worst, op_norm(ax - lhs) / std::max(1e-300, op_norm(ax)));
    }
    rep.period1_residual = worst;

    // centralizer membership of D = C1 C2^{-1} for B^{NM} over f^{NM}
    Matrix bnm = Matrix::Identity(d, d);
    for (long long i = 0; i < nm; ++i) bnm = b * bnm;
    double worst_z = 0.0;
    for (const auto& x : samples) {
        Matrix dx = c1(x) * c2(x).fullPivLu().inverse();
        Matrix dfx = c1(x.shifted(nm)) * c2(x.shifted(nm)).fullPivLu().inverse();
        worst_z = std::max(worst_z, op_norm(bnm - dfx * bnm * dx.fullPivLu().inverse()) /
                                        std::max(1e-300, op_norm(bnm)));
    }
    rep.centralizer_residual = worst_z;

    if (rep.period1_residual > tol) {
        std::ostringstream os;
        os << "combine_coprime: period-1 residual " << rep.period1_residual;
        throw CombineFailed(os.str());
    }
    rep.combined = true;
    return rep;
}

// ---------------------------------------------------------------------------
// Unipotent family

double UnipotentFamily::alpha(const SymbolicPoint& x) const {
    std::vector<int> w = x.window(win_lo, win_hi);
    size_t c = 0, mul = 1;
    for (int s : w) {
        c += size_t(s) * mul;
        mul *= size_t(base.alphabet_size());
    }
    return alpha_table[c];
}

SymbolicCocycle UnipotentFamily::upper_triangular() const {
    return SymbolicCocycle::from_window_fn(
        base, win_lo, win_hi, 2,
        [&](const std::vector<int>& w) {
            size_t c = 0, mul = 1;
            for (int s : w) {
                c += size_t(s) * mul;
                mul *= size_t(base.alphabet_size());
            }
            Matrix m(2, 2);
            m << 1.0, alpha_table[c], 0.0, 1.0;
            return m;
        });
}

UnipotentReport unipotent_periodic_criterion(const UnipotentFamily& fam,
                                             const std::vector<PeriodicOrbit>& orbits,
                                             double zero_tol) {
    UnipotentReport rep;
    for (size_t oi = 0; oi < orbits.size(); ++oi) {
        const auto& orbit = orbits[oi];
        double sum = 0.0;
        SymbolicPoint p = orbit.point;
        for (int j = 0; j < orbit.period; ++j) {
            sum += fam.alpha(p);
            p = p.shifted();
        }
        rep.birkhoff_sums.push_back(sum);
        double nb = orbit.period * fam.beta_const;
        bool s_zero = std::abs(sum) <= zero_tol;
        bool nb_zero = std::abs(nb) <= zero_tol;
        if (s_zero != nb_zero) {
            if (rep.conjugate) rep.witness_orbit = oi;
            rep.conjugate = false;
            continue;
        }
        if (!s_zero)
            rep.ratio_bound =
                std::max({rep.ratio_bound, std::abs(sum / nb), std::abs(nb / sum)});
    }
    return rep;
}

} // namespace coho
