#include <doctest.h>

#include <random>

#include "coho/textio.hpp"
#include "coho/transfer.hpp"

using namespace coho;

namespace {

Matrix rotation(double a) {
    Matrix m(2, 2);
    m << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return m;
}

std::vector<SymbolicPoint> orbit_points(const SftBase& base, int n_max) {
    std::vector<SymbolicPoint> pts;
    for (const auto& o : enumerate_periodic_orbits(base, n_max)) {
        SymbolicPoint p = o.point;
        for (int j = 0; j < o.period; ++j) {
            pts.push_back(p);
            p = p.shifted();
        }
    }
    return pts;
}

} // namespace

TEST_CASE("isometrizing inner product") {
    // orthogonal matrix: Euclidean metric already works
    auto m1 = isometrizing_inner_product(rotation(0.7));
    CHECK(op_norm(m1.gram - Matrix::Identity(2, 2)) < 1e-12);
    CHECK(m1.rho == doctest::Approx(1.0));

    // scaled rotation [[0,-2],[2,0]]
    Matrix sr(2, 2);
    sr << 0, -2, 2, 0;
    auto m2 = isometrizing_inner_product(sr);
    CHECK(m2.rho == doctest::Approx(2.0));
    CHECK(op_norm(m2.gram - Matrix::Identity(2, 2)) < 1e-12);

    // conjugated rotation-scaling: ||Bu||_G / ||u||_G constant over random u
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 1);
    Matrix p(2, 2);
    p << 1.5, 0.4, -0.3, 0.8;
    Matrix core(2, 2);
    core << 1, 1, -1, 1;
    Matrix b = p * core * p.inverse();
    auto met = isometrizing_inner_product(b);
    double expect = std::sqrt(2.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vector u(2);
        u << g(rng), g(rng);
        double num = std::sqrt((b * u).dot(met.gram * (b * u)));
        double den = std::sqrt(u.dot(met.gram * u));
        CHECK(num / den == doctest::Approx(expect).epsilon(1e-10));
    }

    // Jordan block: hypothesis fails
    Matrix jb(2, 2);
    jb << 1, 1, 0, 1;
    CHECK_THROWS_AS(isometrizing_inner_product(jb), NotDiagonalizable);
}

TEST_CASE("recurrence times") {
    auto met_id = isometrizing_inner_product(Matrix::Identity(2, 2));
    auto times = recurrence_times(Matrix::Identity(2, 2), met_id, 5, 1e-10);
    CHECK(times == std::vector<int>{1, 2, 3, 4, 5});

    Matrix r5 = rotation(2.0 * M_PI / 5.0);
    auto met5 = isometrizing_inner_product(r5);
    auto t5 = recurrence_times(r5, met5, 16, 1e-9);
    CHECK(t5 == std::vector<int>{5, 10, 15});

    // golden-angle rotation: brute scan oracle with an independent distance
    double golden = 2.0 * M_PI * 0.3819660112501051;
    Matrix rg = rotation(golden);
    auto metg = isometrizing_inner_product(rg);
    auto tg = recurrence_times(rg, metg, 200, 0.09);
    std::vector<int> oracle;
    for (int n = 1; n <= 200; ++n) {
        double ang = std::fmod(golden * n, 2.0 * M_PI);
        ang = std::min(ang, 2.0 * M_PI - ang);
        // || R(ang) - Id || = 2 |sin(ang/2)|
        if (2.0 * std::abs(std::sin(ang / 2)) < 0.09) oracle.push_back(n);
    }
    CHECK(tg == oracle);

    Matrix r7 = rotation(2.0 * M_PI / 7.0);
    auto met7 = isometrizing_inner_product(r7);
    CHECK_THROWS_AS(recurrence_times(r7, met7, 6, 1e-9), NoRecurrenceFound);
}

TEST_CASE("scalar livsic planted recovery and obstruction") {
    SftBase gm = SftBase::golden_mean(0.5);
    const double rho = 0.8;
    // a == rho: phi constant
    auto sol0 = scalar_livsic(gm, [&](const SymbolicPoint&) { return rho; }, rho, 2, 6);
    for (const auto& p : homoclinic_points(gm, SymbolicPoint::fixed(0), 2))
        CHECK(sol0.value_at(p) == doctest::Approx(sol0.value_at(SymbolicPoint::fixed(0))));

    auto psi = [](const SymbolicPoint& x) {
        return 1.0 + 0.25 * x.at(0) + 0.1 * x.at(-1);
    };
    auto a_fn = [&](const SymbolicPoint& x) { return rho * psi(x.shifted()) / psi(x); };
    auto sol = scalar_livsic(gm, a_fn, rho, 3, 8);
    CHECK(sol.obstruction < 1e-12);
    auto pts = homoclinic_points(gm, SymbolicPoint::fixed(0), 3);
    double scale = sol.value_at(pts[0]) / psi(pts[0]);
    for (const auto& p : pts)
        CHECK(sol.value_at(p) / psi(p) == doctest::Approx(scale).epsilon(1e-6));

    // uniqueness up to scale: an independently built solution has constant ratio
    auto sol2 = scalar_livsic(gm, a_fn, rho, 4, 8);
    double ratio = sol2.value_at(pts[0]) / sol.value_at(pts[0]);
    for (const auto& p : pts)
        CHECK(sol2.value_at(p) / sol.value_at(p) == doctest::Approx(ratio).epsilon(1e-8));

    // obstruction at a fixed point
    CHECK_THROWS_AS(
        scalar_livsic(gm, [&](const SymbolicPoint& x) { return rho * (1.0 + 0.2 * x.at(0)); },
                      rho, 2, 4),
        PeriodicObstruction);
}

TEST_CASE("normalization at the fixed point") {
    SftBase full = SftBase::full_shift(2, 0.5);
    Matrix b = rotation(1.1);
    SymbolicPoint q = SymbolicPoint::fixed(0);

    auto a0 = SymbolicCocycle::constant(full, b);
    auto same = normalize_at_fixed_point(a0, q, Matrix::Identity(2, 2), b);
    CHECK(op_norm(same.generator(q) - b) == 0.0);

    Matrix p(2, 2);
    p << 2, 0.5, -0.3, 1.1;
    auto conj = SymbolicCocycle::constant(full, (p * b * p.inverse()).eval());
    auto normed = normalize_at_fixed_point(conj, q, p, b);
    CHECK(op_norm(normed.generator(q) - b) < 1e-10);

    CHECK_THROWS_AS(normalize_at_fixed_point(conj, q, Matrix::Identity(2, 2), b),
                    BadConjugator);
}

TEST_CASE("transfer map on a constant cocycle is the identity") {
    SftBase full = SftBase::full_shift(2, 0.5);
    Matrix b = rotation(2.0 * M_PI / 5.0);
    auto a = SymbolicCocycle::constant(full, b);
    auto cert = bunching_margin(a, 1.0, 10, orbit_points(full, 4));
    SymbolicPoint q = SymbolicPoint::fixed(0);
    TransferMap tm = build_transfer_fixed_point(a, b, q, 3, cert);
    for (size_t i = 0; i < tm.size(); ++i)
        CHECK(op_norm(tm.values()[i] - Matrix::Identity(2, 2)) < 1e-13);
    CHECK(tm.worst_consistency() < 1e-13);

    // value_at projects unseen symbols onto the window
    SymbolicPoint far = SymbolicPoint::parse("(0)^inf|10001.000100|(0)^inf");
    CHECK(op_norm(tm.value_at(far) - Matrix::Identity(2, 2)) < 1e-13);
}

TEST_CASE("transfer uniqueness across depths and planted recovery") {
    SftBase full = SftBase::full_shift(2, 0.5);
    Matrix b = rotation(2.0 * M_PI / 5.0);
    // planted conjugacy with window [-1,1], identity on the zero cylinder
    auto cbar_fn = [](const std::vector<int>& w3) {
        double t = 0.15 * w3[0] + 0.3 * w3[1] - 0.2 * w3[2];
        Matrix m(2, 2);
        m << std::cos(t), -std::sin(t), std::sin(t), std::cos(t) + 0.1 * t;
        return m;
    };
    auto cbar = SymbolicCocycle::from_window_fn(full, -1, 1, 2, cbar_fn);
    auto a = SymbolicCocycle::from_window_fn(full, -1, 2, 2, [&](const std::vector<int>& w4) {
        std::vector<int> wx(w4.begin(), w4.begin() + 3);
        std::vector<int> wfx(w4.begin() + 1, w4.end());
        Matrix cx_inv = cbar_fn(wx).inverse();
        return (cbar_fn(wfx) * b * cx_inv).eval();
    });
    SymbolicPoint q = SymbolicPoint::fixed(0);
    auto cert = bunching_margin(a, 1.0, 12, orbit_points(full, 4));
    TransferMap t4 = build_transfer_fixed_point(a, b, q, 4, cert);
    TransferMap t6 = build_transfer_fixed_point(a, b, q, 6, cert);

    // recovery of the planted conjugacy
    for (size_t i = 0; i < t4.size(); ++i)
        CHECK(gl_distance(t4.values()[i], cbar.generator(t4.points()[i])) < 1e-6);
    // two depths agree at shared homoclinic points
    for (size_t i = 0; i < t4.size(); ++i)
        CHECK(gl_distance(t4.values()[i], t6.value_at(t4.points()[i])) < 1e-10);
    // Hölder certificate holds on the checked pairs, and C(q) = Id
    CHECK(t6.certificate_residual() <= 1.0 + 1e-12);
    CHECK(op_norm(t6.value_at(q) - Matrix::Identity(2, 2)) < 1e-13);

    // verify_conjugacy: planted, recovered, and a wrong candidate
    auto samples = homoclinic_points(full, q, 3);
    double r_planted = verify_conjugacy(
        a, SymbolicCocycle::constant(full, b),
        [&](const SymbolicPoint& x) { return cbar.generator(x); }, samples);
    CHECK(r_planted < 1e-10);
    double r_recovered = verify_conjugacy(
        a, SymbolicCocycle::constant(full, b),
        [&](const SymbolicPoint& x) { return t6.value_at(x); }, samples);
    CHECK(r_recovered < 1e-6);
    double r_wrong = verify_conjugacy(
        a, SymbolicCocycle::constant(full, b),
        [&](const SymbolicPoint&) { return Matrix::Identity(2, 2); }, samples);
    CHECK(r_wrong > 1e-2);

    // homoclinic consistency decays along recurrence times
    auto met = isometrizing_inner_product(b);
    auto times = recurrence_times(b, met, 40, 1e-9);
    SymbolicPoint x = samples[5];
    auto rep = homoclinic_consistency(a, x, q, times);
    CHECK(rep.value < 1e-6);
    CHECK(rep.closing_orbit_value < 1e-6);

    // JSON round trip preserves values
    TransferMap t2 = build_transfer_fixed_point(a, b, q, 2, cert);
    TransferMap back = transfer_map_from_json(transfer_map_to_json(t2));
    REQUIRE(back.size() == t2.size());
    for (size_t i = 0; i < t2.size(); ++i)
        CHECK(op_norm(back.value_at(t2.points()[i]) - t2.values()[i]) < 1e-15);
}

TEST_CASE("transfer build is gated on the hypotheses") {
    SftBase full = SftBase::full_shift(2, 0.5);
    // non-diagonalizable target: the isometrizing step refuses upstream
    Matrix uni(2, 2);
    uni << 1, 0.4, 0, 1;
    CHECK_THROWS_AS(isometrizing_inner_product(uni), NotDiagonalizable);

    // stalled homoclinic consistency for a non-cohomologous unipotent family
    std::vector<double> alpha(4, 0.0);
    alpha[0] = 0.5;  // nonzero at the fixed-point cylinder breaks nothing:
    alpha[0 + 2 * 0] = 0.0;  // keep A_q = B so the build precondition holds
    alpha[1] = 0.45;
    alpha[2] = -0.2;
    alpha[3] = 0.3;
    UnipotentFamily fam(full, 0, 1, alpha, 0.0);
    auto a = fam.upper_triangular();
    SymbolicPoint q = SymbolicPoint::fixed(0);
    BunchingCertificate cert = bunching_margin(a, 1.0, 12, orbit_points(full, 4));
    REQUIRE(cert.valid);  // unipotent distortion grows polynomially
    bool stalled = false;
    try {
        TransferMap tm = build_transfer_fixed_point(a, Matrix::Identity(2, 2), q, 4, cert,
                                                    1e-6);
    } catch (const HomoclinicInconsistency&) {
        stalled = true;
    }
    CHECK(stalled);
}

TEST_CASE("invariant metric from the transfer map") {
    SftBase full = SftBase::full_shift(2, 0.5);
    Matrix b = rotation(0.9);
    auto a = SymbolicCocycle::constant(full, b);
    auto samples = homoclinic_points(full, SymbolicPoint::fixed(0), 2);
    auto cert = bunching_margin(a, 1.0, 10, orbit_points(full, 4));
    MetricField mf = invariant_metric_from_transfer(
        a, [&](const SymbolicPoint&) { return Matrix::Identity(2, 2); }, samples, cert,
        Matrix::Identity(2, 2));
    for (const auto& g : mf.gram) CHECK(op_norm(g - Matrix::Identity(2, 2)) < 1e-14);
    CHECK(mf.a_isometry_residual < 1e-14);
}

TEST_CASE("coprime bezout and failures") {
    SftBase full = SftBase::full_shift(2, 0.5);
    Matrix b = rotation(2.0 * M_PI / 3.0);
    auto a = SymbolicCocycle::constant(full, b);
    auto samples = homoclinic_points(full, SymbolicPoint::fixed(0), 2);
    auto id_eval = [](const SymbolicPoint&) { return Matrix::Identity(2, 2); };

    auto rep = combine_coprime(a, b, 2, 1, 3, id_eval, id_eval, samples);
    CHECK(rep.r * 2 + rep.s * 3 == 1);
    CHECK(rep.combined);

    CHECK_THROWS_AS(combine_coprime(a, b, 2, 1, 4, id_eval, id_eval, samples), NotCoprime);
}

TEST_CASE("unipotent periodic criterion examples") {
    SftBase full = SftBase::full_shift(2, 0.5);
    auto orbits = enumerate_periodic_orbits(full, 6);

    // alpha identically beta: conjugate with ratio 1
    UnipotentFamily same(full, 0, 0, {0.4, 0.4}, 0.4);
    auto rep = unipotent_periodic_criterion(same, orbits);
    CHECK(rep.conjugate);
    CHECK(rep.ratio_bound == doctest::Approx(1.0));

    // zero sum on the fixed point vs nonzero beta: not conjugate
    UnipotentFamily bad(full, 0, 0, {0.0, 0.5}, 0.2);
    auto rep2 = unipotent_periodic_criterion(bad, orbits);
    CHECK_FALSE(rep2.conjugate);
    CHECK(orbits[rep2.witness_orbit].period == 1);

    // exhaustive oracle for the bound
    UnipotentFamily fam(full, 0, 1, {0.3, 0.55, 0.05, 0.3}, 0.3);
    auto rep3 = unipotent_periodic_criterion(fam, orbits);
    double oracle = 1.0;
    for (const auto& o : orbits) {
        double s = 0.0;
        SymbolicPoint p = o.point;
        for (int j = 0; j < o.period; ++j) {
            s += fam.alpha(p);
            p = p.shifted();
        }
        double nb = o.period * fam.beta_const;
        oracle = std::max({oracle, std::abs(s / nb), std::abs(nb / s)});
    }
    CHECK(rep3.conjugate);
    CHECK(rep3.ratio_bound == doctest::Approx(oracle));
}
