#include <doctest.h>

#include <fstream>
#include <sstream>

#include "coho/scenario.hpp"
#include "coho/textio.hpp"

using namespace coho;

TEST_CASE("symbolic point text format") {
    SymbolicPoint p = SymbolicPoint::parse("(0)^inf|01.10|(0)^inf");
    CHECK(p.at(-2) == 0);
    CHECK(p.at(-1) == 1);
    CHECK(p.at(0) == 1);
    CHECK(p.at(1) == 0);
    CHECK(p.at(5) == 0);
    CHECK(p.at(-9) == 0);
    CHECK(SymbolicPoint::parse(p.to_string()) == p);

    CHECK_THROWS_AS(SymbolicPoint::parse("011010"), Error);
    CHECK_THROWS_AS(SymbolicPoint::parse("(0)^inf|01x10|(0)^inf"), Error);
}

TEST_CASE("matrix text round trips") {
    Matrix m(2, 3);
    m << 1.5, -2.25, 3.0625, 1e-17, 123456.75, -0.5;
    std::istringstream in(format_matrix(m));
    Matrix back = parse_matrix(in, 2, 3);
    CHECK((m - back).cwiseAbs().maxCoeff() == 0.0);

    std::istringstream short_in("1 2 3");
    CHECK_THROWS_AS(parse_matrix(short_in, 2, 2), Error);

    std::istringstream iin("2 1\n1 1");
    Eigen::MatrixXi im = parse_int_matrix(iin, 2, 2);
    CHECK(im(0, 0) == 2);
    CHECK(im(1, 1) == 1);
}

TEST_CASE("generator table round trip") {
    SftBase gm = SftBase::golden_mean(0.5);
    auto a = SymbolicCocycle::from_window_fn(gm, -1, 0, 2, [](const std::vector<int>& w) {
        Matrix m(2, 2);
        m << 1.0 + 0.5 * w[0], 0.25 * w[1], -0.125, 0.75;
        return m;
    });
    std::ostringstream out;
    write_generator_table(out, a);
    std::istringstream in(out.str());
    auto back = read_generator_table(in, gm, -1, 0, 2);
    SymbolicPoint x = SymbolicPoint::parse("(0)^inf|1.0|(0)^inf");
    CHECK(op_norm(a.generator(x) - back.generator(x)) == 0.0);
    CHECK(op_norm(a.iterate(x, 5) - back.iterate(x, 5)) == 0.0);

    // constant tables
    std::ostringstream cout_;
    write_generator_table(cout_, SymbolicCocycle::constant(gm, Matrix::Identity(2, 2)));
    std::istringstream cin_(cout_.str());
    auto cback = read_generator_table(cin_, gm, 0, 0, 2);
    CHECK(cback.is_constant());
}

TEST_CASE("rational vectors as exact fractions") {
    RationalVec v{Rational(3, 7), Rational(-2, 5), Rational(4)};
    std::string s = rational_vec_to_string(v);
    CHECK(s == "3/7 -2/5 4/1");
    RationalVec back = parse_rational_vec(s);
    CHECK(back == v);
}

TEST_CASE("holonomy and splitting csv headers") {
    std::ostringstream out;
    write_holonomy_csv(out, {});
    CHECK(out.str() == "x,y,direction,n,error_bound,h_minus_id\n");

    SymbolicSplittingField s;
    std::ostringstream out2;
    write_splitting_csv(out2, s);
    CHECK(out2.str() == "sample,point,block,frame\n");
}

TEST_CASE("config parsing and errors") {
    auto sections = parse_config("[scenario]\nname = planted-coboundary\nseed = 7\n"
                                 "[params]\ndepth = 4  # comment\n");
    CHECK(sections["scenario"].get("name", "") == "planted-coboundary");
    CHECK(sections["scenario"].get_int("seed", 0) == 7);
    CHECK(sections["params"].get_int("depth", 0) == 4);

    CHECK_THROWS_AS(parse_config("[scenario\nname = x\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("novalue\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("key =\n"), ConfigError);

    // malformed bracketed matrix rows name the field
    ScenarioParams p;
    p.kv["matrix"] = "[[2,1],[1]]";
    bool named = false;
    try {
        p.get_int_matrix("matrix");
    } catch (const ConfigError& e) {
        named = std::string(e.what()).find("matrix") != std::string::npos;
    }
    CHECK(named);
    ScenarioParams good;
    good.kv["matrix"] = "[[2,1],[1,1]]";
    auto rows = good.get_int_matrix("matrix");
    CHECK(rows.size() == 2);
    CHECK(rows[0][0] == 2);
}

TEST_CASE("gallery lists at least nine runnable scenarios") {
    auto g = list_gallery();
    CHECK(g.size() >= 9);
    for (const char* expect :
         {"sft-holonomy", "planted-coboundary", "delta-narrow-splitting",
          "unipotent-criterion", "coprime-combine", "catmap-rigidity", "t4-skew",
          "linearization-demo", "weak-irreducibility"}) {
        bool found = false;
        for (const auto& [name, _] : g)
            if (name == expect) found = true;
        CHECK(found);
    }
    CHECK_THROWS_AS(run_gallery_scenario("does-not-exist", {}, 1, 1), UnknownScenario);
}

TEST_CASE("reports are deterministic across runs and thread counts") {
    ScenarioParams params;
    auto r1 = run_gallery_scenario("weak-irreducibility", params, 5, 1);
    auto r2 = run_gallery_scenario("weak-irreducibility", params, 5, 8);
    CHECK(report_to_json(r1, 5, 1) == report_to_json(r2, 5, 8));

    auto u1 = run_gallery_scenario("unipotent-criterion", params, 5, 1);
    auto u2 = run_gallery_scenario("unipotent-criterion", params, 5, 8);
    CHECK(report_to_json(u1, 5, 1) == report_to_json(u2, 5, 8));
}

TEST_CASE("scenario files run through the config path") {
    // write a tiny config and execute it
    std::string cfg = "[scenario]\nname = weak-irreducibility\nseed = 11\n";
    std::string path = "/tmp/coho_test_scenario.cfg";
    {
        std::ofstream out(path);
        out << cfg;
    }
    auto r = run_scenario_file(path, 0, false, 1);
    CHECK(r.passed());

    std::string bad = "[scenario]\nname = weak-irreducibility\n[params]\nmatrix = [[2,1],[1]]\n";
    std::string bad_path = "/tmp/coho_test_scenario_bad.cfg";
    {
        std::ofstream out(bad_path);
        out << bad;
    }
    CHECK_THROWS_AS(run_scenario_file(bad_path, 0, false, 1), ConfigError);
}
