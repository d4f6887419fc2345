#include "coho/rigidity.hpp"

#include <algorithm>
#include <cmath>

#include "coho/util.hpp"

namespace coho {

namespace {

Vector mod1(Vector x) {
    for (int i = 0; i < x.size(); ++i) x(i) -= std::floor(x(i));
    return x;
}

// lifted map: y = L x + P(x), no reduction
Vector apply_lift(const TorusMap& f, const Vector& x) {
    return f.linear_part().matrix_d() * x + f.displacement(mod1(x));
}

// lifted inverse: solve L x + P(x) = y with x near L^{-1} y
Vector apply_inverse_lift(const TorusMap& f, const Vector& y) {
    Matrix linv = f.linear_part().matrix_d().inverse();
    Vector x = linv * y;
    for (int it = 0; it < 200; ++it) {
        Vector xn = linv * (y - f.displacement(mod1(x)));
        double step = (xn - x).norm();
        x = xn;
        if (step < 1e-15) break;
    }
    return x;
}

// Unit tangent to the unstable (or stable) foliation at p: the derivative
// is pushed along a stored orbit segment ending exactly at p.  The stored
// segment is a pseudo-orbit whose shadowing offset stays below the cone
// contraction, so the direction converges to machine precision.
Vector foliation_tangent(const TorusMap& f, const Vector& p, bool unstable,
                         int depth = 22) {
    Matrix es, eu;
    f.linear_part().stable_unstable(es, eu);
    std::vector<Vector> orbit(size_t(depth + 1));
    orbit[0] = mod1(p);
    for (int i = 1; i <= depth; ++i)
        orbit[size_t(i)] = unstable ? f.apply_inverse(orbit[size_t(i - 1)])
                                    : f.apply(orbit[size_t(i - 1)]);
    Vector v = unstable ? Vector(eu.col(0)) : Vector(es.col(0));
    for (int i = depth; i >= 1; --i) {
        if (unstable)
            v = f.derivative(orbit[size_t(i)]) * v;  // T(orbit_i) -> T(orbit_{i-1})
        else
            v = f.derivative(orbit[size_t(i - 1)]).inverse() * v;
        v.normalize();
    }
    // deterministic orientation: positive component along the linear direction
    Vector ref = unstable ? Vector(eu.col(0)) : Vector(es.col(0));
    if (v.dot(ref) < 0) v = -v;
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// Franks-Manning conjugacy

ConjugacyField::ConjugacyField(const TorusMap& f, double term_tol, int series_cap)
    : f_(&f) {
    const int d = f.dimension();
    Matrix es, eu;
    f.linear_part().stable_unstable(es, eu);
    if (es.cols() + eu.cols() != d)
        throw Error("ConjugacyField: splitting does not span");
    Matrix w(d, d);
    w.leftCols(es.cols()) = es;
    w.rightCols(eu.cols()) = eu;
    Matrix winv = w.fullPivLu().inverse();
    Matrix sel_s = Matrix::Zero(d, d), sel_u = Matrix::Zero(d, d);
    for (int i = 0; i < es.cols(); ++i) sel_s(i, i) = 1.0;
    for (int i = 0; i < eu.cols(); ++i)
        sel_u(es.cols() + i, es.cols() + i) = 1.0;
    Matrix proj_s = w * sel_s * winv;  // oblique spectral projections
    Matrix proj_u = w * sel_u * winv;

    const Matrix l = f.linear_part().matrix_d();
    const Matrix linv = l.inverse();
    // stable terms M_k = L^{k-1} P_s (k >= 1), unstable N_k = L^{-k} P_u;
    // reprojecting each step keeps rounding out of the expanding directions
    Matrix mk = proj_s;
    Matrix nk = linv * proj_u;
    for (int k = 0; k < series_cap; ++k) {
        stable_ops_.push_back(mk);
        unstable_ops_.push_back(nk);
        ++terms_;
        if (op_norm(mk) < term_tol && op_norm(nk) < term_tol) break;
        mk = proj_s * (l * mk);
        nk = proj_u * (linv * nk);
    }
    if (op_norm(stable_ops_.back()) > 1e-12 || op_norm(unstable_ops_.back()) > 1e-12)
        throw NotContracting("ConjugacyField: series did not reach the term tolerance");
}

Vector ConjugacyField::displacement(const Vector& x) const {
    const int d = f_->dimension();
    Vector u = Vector::Zero(d);
    // unstable component: sum_k L^{-(k+1)} P_u P(f^k x)
    Vector p = mod1(x);
    for (const auto& nk : unstable_ops_) {
        u += nk * f_->displacement(p);
        p = f_->apply(p);
    }
    // stable component: -sum_{k>=1} L^{k-1} P_s P(f^{-k} x)
    p = mod1(x);
    for (const auto& mk : stable_ops_) {
        p = f_->apply_inverse(p);
        u -= mk * f_->displacement(p);
    }
    return u;
}

Vector ConjugacyField::h(const Vector& x) const { return mod1(x + displacement(x)); }

double ConjugacyField::equation_residual(const Vector& x) const {
    // u(x) and u(fx) share the backward and forward orbit sweeps of x
    // (no forward-backward round trips, which hyperbolicity would amplify)
    const long k = long(stable_ops_.size());
    const int d = f_->dimension();
    std::vector<Vector> back(size_t(k + 1)), fwd(size_t(k + 2));
    back[0] = mod1(x);
    for (long j = 1; j <= k; ++j) back[size_t(j)] = f_->apply_inverse(back[size_t(j - 1)]);
    fwd[0] = mod1(x);
    for (long j = 1; j <= k + 1; ++j) fwd[size_t(j)] = f_->apply(fwd[size_t(j - 1)]);

    auto u_at = [&](long shift) {  // 0 for x, 1 for fx
        Vector u = Vector::Zero(d);
        for (long j = 0; j < k; ++j)
            u += unstable_ops_[size_t(j)] * f_->displacement(fwd[size_t(j + shift)]);
        for (long j = 0; j < k; ++j)
            u -= stable_ops_[size_t(j)] * f_->displacement(back[size_t(j + 1 - shift)]);
        return u;
    };
    Vector hx = mod1(x + u_at(0));
    Vector hfx = mod1(fwd[1] + u_at(1));
    Vector lhs = f_->linear_part().apply(hx);
    return torus_distance(lhs, hfx);
}

double ConjugacyField::max_grid_residual(int grid_n, int threads) const {
    const int d = f_->dimension();
    if (d != 2) throw Error("max_grid_residual: grid sweep implemented for d = 2");
    std::vector<double> rows = parallel_map<double>(
        size_t(grid_n), threads, [&](size_t i) {
            double worst = 0.0;
            Vector x(2);
            for (int j = 0; j < grid_n; ++j) {
                x << double(i) / grid_n, double(j) / grid_n;
                worst = std::max(worst, equation_residual(x));
            }
            return worst;
        });
    double worst = 0.0;
    for (double r : rows) worst = std::max(worst, r);
    return worst;
}

DerivativeTransferReport derivative_transfer(const ConjugacyField& h,
                                             const std::vector<Vector>& samples,
                                             const std::vector<double>& steps) {
    const TorusMap& f = h.map();
    const int d = f.dimension();
    const Matrix l = f.linear_part().matrix_d();
    DerivativeTransferReport rep;
    rep.steps = steps;
    std::vector<Matrix> prev;
    for (size_t si = 0; si < steps.size(); ++si) {
        double t = steps[si];
        double worst_resid = 0.0, worst_update = 0.0;
        std::vector<Matrix> cur;
        for (size_t xi = 0; xi < samples.size(); ++xi) {
            const Vector& x = samples[xi];
            Matrix dh = Matrix::Identity(d, d);
            for (int j = 0; j < d; ++j) {
                Vector xp = x, xm = x;
                xp(j) += t;
                xm(j) -= t;
                dh.col(j) += (h.displacement(xp) - h.displacement(xm)) / (2 * t);
            }
            cur.push_back(dh);
            Vector fx = f.apply(x);
            Matrix dh_fx = Matrix::Identity(d, d);
            for (int j = 0; j < d; ++j) {
                Vector xp = fx, xm = fx;
                xp(j) += t;
                xm(j) -= t;
                dh_fx.col(j) += (h.displacement(xp) - h.displacement(xm)) / (2 * t);
            }
            worst_resid = std::max(worst_resid, op_norm(l * dh - dh_fx * f.derivative(x)));
            if (!prev.empty())
                worst_update = std::max(worst_update, op_norm(dh - prev[xi]));
        }
        rep.identity_residuals.push_back(worst_resid);
        if (!prev.empty()) rep.jacobian_updates.push_back(worst_update);
        prev = std::move(cur);
    }
    rep.converged = true;
    for (size_t i = 1; i < rep.jacobian_updates.size(); ++i)
        if (rep.jacobian_updates[i] > rep.jacobian_updates[i - 1]) rep.converged = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Leaf growth by graph transform

Vector LeafSegment::point_at(double s) const {
    if (s < arc.front() || s > arc.back())
        throw Error("LeafSegment: arclength out of range");
    size_t lo = size_t(std::lower_bound(arc.begin(), arc.end(), s) - arc.begin());
    if (lo == 0) lo = 1;
    double t = (s - arc[lo - 1]) / (arc[lo] - arc[lo - 1]);
    return pts[lo - 1] + t * (pts[lo] - pts[lo - 1]);
}

Vector LeafSegment::tangent_at(double s) const {
    size_t lo = size_t(std::lower_bound(arc.begin(), arc.end(), s) - arc.begin());
    lo = std::clamp<size_t>(lo, 1, arc.size() - 1);
    Vector t = pts[lo] - pts[lo - 1];
    t.normalize();
    return t;
}

LeafSegment grow_leaf(const TorusMap& f, const Vector& x, bool unstable, double radius,
                      int iterations, int grid_points) {
    if (f.dimension() != 2)
        throw LeafGrowthFailed("grow_leaf: implemented for 2-D maps");
    Matrix es, eu;
    f.linear_part().stable_unstable(es, eu);
    Vector e_tan = unstable ? Vector(eu.col(0)) : Vector(es.col(0));
    Vector e_tr = unstable ? Vector(es.col(0)) : Vector(eu.col(0));

    // backward orbit in the expanding direction:
    // unstable leaf grows under f, so start deep in the past
    std::vector<Vector> orbit(static_cast<size_t>(iterations + 1));
    orbit[0] = mod1(x);
    for (int k = 1; k <= iterations; ++k)
        orbit[size_t(k)] = unstable ? f.apply_inverse(orbit[size_t(k - 1)])
                                    : f.apply(orbit[size_t(k - 1)]);

    const double r_all = radius * 1.35;
    const int m = grid_points;
    std::vector<double> g(size_t(m), 0.0), gnext(size_t(m), 0.0);
    auto tau_of = [&](int i) { return -r_all + 2.0 * r_all * double(i) / double(m - 1); };

    for (int k = iterations; k >= 1; --k) {
        const Vector& base = orbit[size_t(k)];
        const Vector& target = orbit[size_t(k - 1)];
        // push the graph at orbit[k] forward to orbit[k-1]
        // image curve: c(tau) = F(base + tau e_tan + g(tau) e_tr) - target
        // coordinates of the image in (e_tan, e_tr)
        std::vector<double> img_tan(size_t(m), 0.0), img_tr(size_t(m), 0.0);
        for (int i = 0; i < m; ++i) {
            Vector p = base + tau_of(i) * e_tan + g[size_t(i)] * e_tr;
            Vector q = unstable ? apply_lift(f, p) : apply_inverse_lift(f, p);
            // choose the lift of q nearest the target point
            Vector diff = q - target;
            for (int c2 = 0; c2 < 2; ++c2) diff(c2) -= std::round(diff(c2));
            img_tan[size_t(i)] = diff.dot(e_tan);
            img_tr[size_t(i)] = diff.dot(e_tr);
        }
        // resample as a graph over [-r_all, r_all]; img_tan is monotone
        for (int i = 0; i < m; ++i) {
            double t = tau_of(i);
            auto it = std::lower_bound(img_tan.begin(), img_tan.end(), t);
            size_t hi = size_t(it - img_tan.begin());
            hi = std::clamp<size_t>(hi, 1, size_t(m - 1));
            double w = (t - img_tan[hi - 1]) / (img_tan[hi] - img_tan[hi - 1]);
            w = std::clamp(w, -1.0, 2.0);  // mild extrapolation at the ends
            gnext[size_t(i)] = img_tr[hi - 1] + w * (img_tr[hi] - img_tr[hi - 1]);
        }
        std::swap(g, gnext);
    }

    // assemble the polyline through x, arclength-parametrized
    LeafSegment leaf;
    leaf.anchor = mod1(x);
    std::vector<Vector> raw(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
        raw[size_t(i)] = leaf.anchor + tau_of(i) * e_tan + g[size_t(i)] * e_tr;
    // anchor correction: the graph at tau = 0 should pass through x itself
    Vector offset = leaf.anchor - raw[size_t((m - 1) / 2)];
    for (auto& p : raw) p += offset;

    std::vector<double> arc(size_t(m), 0.0);
    for (int i = 1; i < m; ++i)
        arc[size_t(i)] = arc[size_t(i - 1)] + (raw[size_t(i)] - raw[size_t(i - 1)]).norm();
    double mid = arc[size_t((m - 1) / 2)];
    for (auto& s : arc) s -= mid;
    // trim to the requested radius
    for (int i = 0; i < m; ++i) {
        if (arc[size_t(i)] < -radius || arc[size_t(i)] > radius) continue;
        leaf.pts.push_back(raw[size_t(i)]);
        leaf.arc.push_back(arc[size_t(i)]);
    }
    if (leaf.pts.size() < 8) throw LeafGrowthFailed("grow_leaf: trimmed leaf too short");
    return leaf;
}

// ---------------------------------------------------------------------------

RateTriple measure_rates(const TorusMap& f, int sweep) {
    RateTriple r;
    r.nu = 0.0;
    double minu = std::numeric_limits<double>::infinity(), maxu = 0.0;
    for (int i = 0; i < sweep; ++i) {
        for (int j = 0; j < sweep; ++j) {
            Vector x(2);
            x << (i + 0.5) / sweep, (j + 0.5) / sweep;
            Vector ts = foliation_tangent(f, x, false);
            Vector tu = foliation_tangent(f, x, true);
            r.nu = std::max(r.nu, (f.derivative(x) * ts).norm());
            double su = (f.derivative(x) * tu).norm();
            minu = std::min(minu, su);
            maxu = std::max(maxu, su);
        }
    }
    r.gamma = 1.0 / minu;
    r.gamma_hat = maxu;
    return r;
}

BunchingCheck bunching_check(const RateTriple& rates, double beta) {
    BunchingCheck c;
    c.holonomy_value =
        rates.gamma_hat * rates.gamma * std::pow(rates.nu, beta / (1.0 + beta));
    c.linearization_value = rates.gamma_hat * std::pow(rates.gamma, 1.0 + beta);
    c.holonomy_ok = c.holonomy_value < 1.0;
    c.linearization_ok = c.linearization_value < 1.0;
    return c;
}

namespace {

// signed arclength of the nearest point of the leaf polyline to w
double project_arclength(const LeafSegment& leaf, const Vector& w) {
    double best = std::numeric_limits<double>::infinity();
    double arc = 0.0;
    for (size_t j = 1; j < leaf.pts.size(); ++j) {
        const Vector& a = leaf.pts[j - 1];
        const Vector& b = leaf.pts[j];
        Vector diff = w - a;
        for (int c = 0; c < diff.size(); ++c) diff(c) -= std::round(diff(c));
        Vector ab = b - a;
        double tt = std::clamp(diff.dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        double dd = (diff - tt * ab).squaredNorm();
        if (dd < best) {
            best = dd;
            arc = leaf.arc[j - 1] + tt * (leaf.arc[j] - leaf.arc[j - 1]);
        }
    }
    return arc;
}

} // namespace

LinearizationChart nonstationary_linearization(const TorusMap& f, const Vector& x,
                                               bool unstable, double radius, double beta,
                                               int depth, int samples) {
    RateTriple rates = measure_rates(f, 16);
    BunchingCheck gate = bunching_check(rates, beta);
    if (!gate.linearization_ok)
        throw BunchingFailed("nonstationary_linearization: rate test failed");

    LinearizationChart chart;
    chart.base_point = mod1(x);
    chart.radius = radius;
    chart.depth = depth;

    // leaves along the orbit of the contracting map g (= f^{-1} on the
    // unstable leaf); the iterate of a leaf point is re-projected onto the
    // next leaf so transversal error never amplifies
    std::vector<Vector> anchors(size_t(depth + 2));
    anchors[0] = chart.base_point;
    for (int n = 1; n <= depth + 1; ++n)
        anchors[size_t(n)] =
            unstable ? f.apply_inverse(anchors[size_t(n - 1)]) : f.apply(anchors[size_t(n - 1)]);
    std::vector<LeafSegment> leaves;
    std::vector<double> stretch(size_t(depth + 1), 1.0);
    const double shrink = 0.75;
    for (int n = 0; n <= depth + 1; ++n) {
        double rn = std::max(radius * 1.25 * std::pow(shrink, n), 24.0 / 12000.0);
        int gp = std::clamp(int(12001 * rn / (radius * 1.25)) | 1, 601, 12001);
        leaves.push_back(grow_leaf(f, anchors[size_t(n)], unstable, rn, 30, gp));
    }
    for (int n = 0; n <= depth; ++n) {
        // signed leafwise stretch of g at the anchor
        Vector t0 = leaves[size_t(n)].tangent_at(0.0);
        Vector t1 = leaves[size_t(n + 1)].tangent_at(0.0);
        Matrix dg = unstable ? f.derivative(anchors[size_t(n + 1)]).inverse().eval()
                             : f.derivative(anchors[size_t(n)]);
        stretch[size_t(n)] = (dg * t0).dot(t1);
    }

    auto transport = [&](double s, int n) {
        // arclength coordinate on leaf n+1 of g(leaf_n(s))
        Vector z = leaves[size_t(n)].point_at(s);
        Vector w = unstable ? apply_inverse_lift(f, z) : apply_lift(f, z);
        return project_arclength(leaves[size_t(n + 1)], w);
    };
    auto phi_of = [&](double s, int start, int nsteps) {
        double sn = s, denom = 1.0;
        for (int n = start; n < start + nsteps; ++n) {
            sn = transport(sn, n);
            denom *= stretch[size_t(n)];
        }
        return sn / denom;
    };

    const double span =
        0.95 * std::min(-leaves[0].arc_min(), leaves[0].arc_max());
    for (int i = 0; i < samples; ++i) {
        double s = -span + 2.0 * span * double(i) / double(samples - 1);
        chart.leaf_arc.push_back(s);
        chart.phi.push_back(phi_of(s, 0, depth));
    }
    double h0 = span / 64.0;
    chart.derivative_at_zero = (phi_of(h0, 0, depth) - phi_of(-h0, 0, depth)) / (2 * h0);

    // conjugation residual: Dg|E phi_x(z) = phi_{gx}(g z), relative scale
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        double s = chart.leaf_arc[size_t(i)];
        if (std::abs(s) < span / 16.0) continue;
        double lhs = stretch[0] * chart.phi[size_t(i)];
        double rhs = phi_of(transport(s, 0), 1, depth);
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(s));
    }
    chart.conjugation_residual = worst;
    return chart;
}

FoliationHolonomy foliation_holonomy(const TorusMap& f, const Vector& x, const Vector& y,
                                     double radius, int n_samples, int leaf_grid) {
    FoliationHolonomy out;
    LeafSegment wx = grow_leaf(f, x, true, radius, 30, leaf_grid);
    LeafSegment wy = grow_leaf(f, y, true, radius * 2.0, 30, leaf_grid);
    for (int i = 0; i < n_samples; ++i) {
        double s = -radius * 0.6 + 1.2 * radius * double(i) / double(n_samples - 1);
        Vector z = wx.point_at(s);
        LeafSegment wsz = grow_leaf(f, mod1(z), false, radius * 2.0, 30, leaf_grid);
        // find the crossing of W^s(z) with W^u(y) by a sign sweep + bisection
        auto side = [&](double t) {
            Vector p = wy.point_at(t);
            // signed distance of p from the stable curve via nearest segment
            double best = std::numeric_limits<double>::infinity();
            double sign = 0.0;
            for (size_t j = 1; j < wsz.pts.size(); ++j) {
                Vector a = wsz.pts[j - 1], b = wsz.pts[j];
                Vector pp = p;
                Vector dab = b - a;
                // reduce p to the lift nearest a
                Vector diff = pp - a;
                for (int c2 = 0; c2 < 2; ++c2) diff(c2) -= std::round(diff(c2));
                pp = a + diff;
                double tt = std::clamp(diff.dot(dab) / dab.squaredNorm(), 0.0, 1.0);
                Vector proj = a + tt * dab;
                double dd = (pp - proj).norm();
                if (dd < best) {
                    best = dd;
                    double cross = dab(0) * (pp - a)(1) - dab(1) * (pp - a)(0);
                    sign = cross >= 0 ? 1.0 : -1.0;
                }
            }
            return sign * best;
        };
        double lo = wy.arc_min() * 0.98, hi = wy.arc_max() * 0.98;
        double flo = side(lo), fhi = side(hi);
        if (flo * fhi > 0) continue;  // crossing outside the grown segment
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = side(mid);
            if (flo * fm <= 0) {
                hi = mid;
                fhi = fm;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        out.source_arc.push_back(s);
        out.image_arc.push_back(0.5 * (lo + hi));
    }
    out.accuracy = 1e-9;  // leaf growth + bisection budget
    if (out.source_arc.size() < 3)
        throw LeafGrowthFailed("foliation_holonomy: too few crossings found");
    return out;
}

double cocycle_holonomy_unstable_line(const TorusMap& f, const Vector& x, const Vector& y,
                                      int depth) {
    // H^s for Df|E^u in unit tangent frames: Prod a(x_j) / Prod a(y_j).
    // Iteration stops when the pair stops contracting: off-leaf rounding
    // error grows like the unstable rate and would otherwise corrupt the
    // tail of the product.
    double logh = 0.0, best_logh = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    Vector px = mod1(x), py = mod1(y);
    for (int j = 0; j < depth; ++j) {
        double d = torus_distance(px, py);
        if (d < best_dist) {
            best_dist = d;
            best_logh = logh;
        } else if (d > 4.0 * best_dist) {
            break;
        }
        Vector tx = foliation_tangent(f, px, true);
        Vector ty = foliation_tangent(f, py, true);
        logh += std::log((f.derivative(px) * tx).norm()) -
                std::log((f.derivative(py) * ty).norm());
        px = f.apply(px);
        py = f.apply(py);
    }
    double d = torus_distance(px, py);
    if (d < best_dist) best_logh = logh;
    return std::exp(best_logh);
}

DerivativeCheckReport holonomy_derivative_check(const TorusMap& f, const Vector& x,
                                                const Vector& y,
                                                const std::vector<double>& steps,
                                                double beta,
                                                const RateTriple* rates_override) {
    RateTriple rates = rates_override ? *rates_override : measure_rates(f, 12);
    if (!bunching_check(rates, beta).holonomy_ok)
        throw BunchingFailed("holonomy_derivative_check: s-bunching fails at this beta");
    DerivativeCheckReport rep;
    rep.cocycle_value = cocycle_holonomy_unstable_line(f, x, y, 60);
    double radius = 0.0;
    for (double t : steps) radius = std::max(radius, t);
    radius = std::max(radius * 4.0, 0.02);

    LeafSegment wx = grow_leaf(f, x, true, radius);
    LeafSegment wy = grow_leaf(f, y, true, radius * 3.0);
    // image of the anchor itself fixes the holonomy origin
    auto cross_arc = [&](const Vector& z) {
        LeafSegment wsz = grow_leaf(f, mod1(z), false, radius * 3.0);
        auto side = [&](double t) {
            Vector p = wy.point_at(t);
            double best = std::numeric_limits<double>::infinity();
            double sign = 0.0;
            for (size_t j = 1; j < wsz.pts.size(); ++j) {
                Vector a = wsz.pts[j - 1], b = wsz.pts[j];
                Vector dab = b - a;
                Vector diff = p - a;
                for (int c2 = 0; c2 < 2; ++c2) diff(c2) -= std::round(diff(c2));
                Vector pp = a + diff;
                double tt = std::clamp(diff.dot(dab) / dab.squaredNorm(), 0.0, 1.0);
                Vector proj = a + tt * dab;
                double dd = (pp - proj).norm();
                if (dd < best) {
                    best = dd;
                    double cr = dab(0) * (pp - a)(1) - dab(1) * (pp - a)(0);
                    sign = cr >= 0 ? 1.0 : -1.0;
                }
            }
            return sign * best;
        };
        double lo = wy.arc_min() * 0.98, hi = wy.arc_max() * 0.98;
        double flo = side(lo), fhi = side(hi);
        if (flo * fhi > 0)
            throw LeafGrowthFailed("holonomy_derivative_check: no crossing");
        for (int it = 0; it < 90; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = side(mid);
            if (flo * fm <= 0) {
                hi = mid;
                fhi = fm;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        return 0.5 * (lo + hi);
    };
    double s0 = cross_arc(wx.point_at(0.0));
    for (double t : steps) {
        double st = cross_arc(wx.point_at(t));
        double fd = (st - s0) / t;
        rep.steps.push_back(t);
        rep.deviation.push_back(std::abs(fd - rep.cocycle_value));
    }
    rep.final_deviation = rep.deviation.back();
    rep.monotone = true;
    for (size_t i = 1; i < rep.deviation.size(); ++i)
        if (rep.deviation[i] > rep.deviation[i - 1]) rep.monotone = false;
    return rep;
}

double metric_isometry_residual(const std::vector<double>& source_arc,
                                const std::vector<double>& image_arc,
                                const std::function<double(double)>& g_source,
                                const std::function<double(double)>& g_image) {
    if (source_arc.size() != image_arc.size() || source_arc.size() < 2)
        throw Error("metric_isometry_residual: bad sample arrays");
    double worst = 0.0;
    for (size_t i = 1; i < source_arc.size(); ++i) {
        double ds = source_arc[i] - source_arc[i - 1];
        double di = image_arc[i] - image_arc[i - 1];
        double ls = 0.5 * (g_source(source_arc[i]) + g_source(source_arc[i - 1])) * ds;
        double li = 0.5 * (g_image(image_arc[i]) + g_image(image_arc[i - 1])) * di;
        worst = std::max(worst, std::abs(li / ls - 1.0));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// T^4 skew demo

T4SkewReport t4_skew_periodic_demo(const IntMatrix& a2, const IntMatrix& b2, double eps,
                                   int n_max, size_t conjugator_subsample, int threads) {
    ToralAutomorphism la(a2), lb(b2);
    // lambda, mu from the 2x2 blocks
    auto top_eig = [](const IntMatrix& m) {
        double tr = double(m(0, 0) + m(1, 1));
        double det = double(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
        return (tr + std::sqrt(tr * tr - 4 * det)) / 2.0;
    };
    const double lambda = top_eig(a2), mu = top_eig(b2);
    if (!(mu > lambda && lambda > 1.0))
        throw Error("t4_skew_periodic_demo: need mu > lambda > 1");

    // v = unit eigenvector of A for lambda
    Matrix a2d(2, 2);
    a2d << double(a2(0, 0)), double(a2(0, 1)), double(a2(1, 0)), double(a2(1, 1));
    Eigen::EigenSolver<Matrix> es(a2d);
    Vector v(2);
    for (int i = 0; i < 2; ++i)
        if (std::abs(es.eigenvalues()(i).real() - lambda) < 1e-9)
            v = es.eigenvectors().col(i).real();
    v.normalize();

    // f(x, y) = (Ax + eps sin(2 pi y_1) v, By) as a 4-D trig perturbation
    IntMatrix l4 = IntMatrix::Zero(4, 4);
    l4.block(0, 0, 2, 2) = a2;
    l4.block(2, 2, 2, 2) = b2;
    ToralAutomorphism l(l4);
    TrigTerm term;
    term.amplitude = eps;
    term.frequency = Eigen::VectorXi::Zero(4);
    term.frequency(2) = 1;  // sin(2 pi y_1)
    term.direction = Vector::Zero(4);
    term.direction.head(2) = v;
    PerturbedToralMap f(l, {term});
    TorusDerivativeCocycle df(f);

    T4SkewReport rep;
    rep.eps = eps;
    rep.n_max = n_max;
    rep.l_weakly_irreducible = l.weak_irreducibility().weakly_irreducible;

    std::vector<Vector> conj_points;
    long long checked = 0;
    double worst_eig = 0.0;

    for (int n = 1; n <= n_max; ++n) {
        // exact y-orbits of B, then x solved per lattice residue of A^n - I
        auto yfixed = lb.fixed_points(n);
        IntMatrix an = la.power(n);
        IntMatrix s = an - IntMatrix::Identity(2, 2);
        Matrix sd(2, 2);
        sd << double(s(0, 0)), double(s(0, 1)), double(s(1, 0)), double(s(1, 1));
        Matrix sd_inv = sd.inverse();
        // residue representatives m = U^{-1} t, t_i in [0, D_ii)
        IntMatrix uu, dd, vv;
        smith_normal_form(s, uu, dd, vv);
        IntMatrix uinv = unimodular_inverse(uu);
        std::vector<Vector> residues;
        for (long long t0 = 0; t0 < dd(0, 0); ++t0)
            for (long long t1 = 0; t1 < dd(1, 1); ++t1) {
                Vector m(2);
                m << double(uinv(0, 0) * t0 + uinv(0, 1) * t1),
                    double(uinv(1, 0) * t0 + uinv(1, 1) * t1);
                residues.push_back(m);
            }

        std::vector<double> errs = parallel_map<double>(
            yfixed.size(), threads, [&](size_t yi) {
                const auto& y = yfixed[yi];
                // forcing sum: sum_j A^{n-1-j} c_j with c_j = eps sin(2 pi y_j1) v
                Vector forcing = Vector::Zero(2);
                RationalVec yj = y;
                std::vector<Vector> cs;
                for (int j = 0; j < n; ++j) {
                    double s1 = std::sin(2.0 * M_PI * yj[0].to_double());
                    cs.push_back(eps * s1 * v);
                    yj = lb.apply(yj);
                }
                for (int j = 0; j < n; ++j) {
                    IntMatrix ap = la.power(n - 1 - j);
                    Matrix apd(2, 2);
                    apd << double(ap(0, 0)), double(ap(0, 1)), double(ap(1, 0)),
                        double(ap(1, 1));
                    forcing += apd * cs[size_t(j)];
                }
                double worst = 0.0;
                for (const auto& m : residues) {
                    Vector x0 = sd_inv * (m - forcing);
                    Vector p(4);
                    p << x0(0) - std::floor(x0(0)), x0(1) - std::floor(x0(1)),
                        y[0].to_double(), y[1].to_double();
                    Matrix dfn = df.iterate(p, n);
                    Eigen::EigenSolver<Matrix> esn(dfn);
                    std::vector<double> mods;
                    for (int i = 0; i < 4; ++i) mods.push_back(std::abs(esn.eigenvalues()(i)));
                    std::sort(mods.begin(), mods.end());
                    std::vector<double> expect{std::pow(mu, -n), std::pow(lambda, -n),
                                               std::pow(lambda, n), std::pow(mu, n)};
                    std::sort(expect.begin(), expect.end());
                    for (int i = 0; i < 4; ++i)
                        worst = std::max(worst,
                                         std::abs(mods[size_t(i)] - expect[size_t(i)]) /
                                             expect[size_t(i)]);
                }
                return worst;
            });
        for (double e : errs) worst_eig = std::max(worst_eig, e);
        checked += (long long)(yfixed.size()) * (long long)(residues.size());

        // deterministic subsample for conjugator tabulation
        for (size_t yi = 0; yi < yfixed.size() && conj_points.size() < conjugator_subsample;
             yi += std::max<size_t>(1, yfixed.size() / 8)) {
            const auto& y = yfixed[yi];
            Vector forcing = Vector::Zero(2);
            RationalVec yj = y;
            std::vector<Vector> cs;
            for (int j = 0; j < n; ++j) {
                double s1 = std::sin(2.0 * M_PI * yj[0].to_double());
                cs.push_back(eps * s1 * v);
                yj = lb.apply(yj);
            }
            for (int j = 0; j < n; ++j) {
                IntMatrix ap = la.power(n - 1 - j);
                Matrix apd(2, 2);
                apd << double(ap(0, 0)), double(ap(0, 1)), double(ap(1, 0)), double(ap(1, 1));
                forcing += apd * cs[size_t(j)];
            }
            Vector x0 = sd_inv * (Vector::Zero(2) - forcing);
            Vector p(4);
            p << x0(0) - std::floor(x0(0)), x0(1) - std::floor(x0(1)), y[0].to_double(),
                y[1].to_double();
            PeriodicDatum da = periodic_data(df, p, n);
            PeriodicDatum dbm;
            IntMatrix ln = l.power(n);
            Matrix lnd(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) lnd(i, j) = double(ln(i, j));
            dbm.return_matrix = lnd;
            dbm.period = n;
            Eigen::EigenSolver<Matrix> esl(lnd);
            for (int i = 0; i < 4; ++i) dbm.eigenvalues.push_back(esl.eigenvalues()(i));
            std::sort(dbm.eigenvalues.begin(), dbm.eigenvalues.end(),
                      [](const auto& aa, const auto& bb) {
                          if (std::abs(std::abs(aa) - std::abs(bb)) > 1e-12)
                              return std::abs(aa) > std::abs(bb);
                          return std::arg(aa) < std::arg(bb);
                      });
            auto conj = match_periodic_conjugator(da, dbm, 1e-6);
            if (conj) {
                rep.max_conjugator_residual =
                    std::max(rep.max_conjugator_residual, conj->residual);
                rep.max_conjugator_condition =
                    std::max(rep.max_conjugator_condition, conj->condition_number);
                ++rep.conjugators_tabulated;
            }
            conj_points.push_back(p);
        }
    }
    rep.points_checked = checked;
    rep.max_eigenvalue_rel_error = worst_eig;
    return rep;
}

} // namespace coho
