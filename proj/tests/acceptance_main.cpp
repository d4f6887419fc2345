// Acceptance suite: runs every criterion at its stated tolerance and
// prints one pass/fail line per criterion.  Exit code equals the number
// of failed criteria.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "coho/scenario.hpp"

namespace {

using coho::ScenarioParams;
using coho::ScenarioResult;

struct Timed {
    ScenarioResult result;
    double seconds = 0.0;
    std::string report1;  // 1-thread report bytes
    std::string report8;  // 8-thread report bytes
};

const std::uint64_t kSeed = 20240927u;

Timed run_twice(const std::string& name) {
    using clock = std::chrono::steady_clock;
    Timed t;
    ScenarioParams params;
    auto t0 = clock::now();
    ScenarioResult r8 = coho::run_gallery_scenario(name, params, kSeed, 8);
    t.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    ScenarioResult r1 = coho::run_gallery_scenario(name, params, kSeed, 1);
    t.report8 = coho::report_to_json(r8, kSeed, 8);
    t.report1 = coho::report_to_json(r1, kSeed, 1);
    t.result = std::move(r8);
    return t;
}

const coho::CheckResult* find_check(const ScenarioResult& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

bool all_pass(const ScenarioResult& r, const std::vector<std::string>& names,
              std::string& detail) {
    bool ok = true;
    std::ostringstream os;
    for (const auto& n : names) {
        const auto* c = find_check(r, n);
        if (!c) {
            ok = false;
            os << n << "=MISSING ";
            continue;
        }
        if (!c->pass) ok = false;
        os.precision(3);
        os << n << "=" << c->value << (c->pass ? "" : "(FAIL)") << " ";
    }
    detail = os.str();
    return ok;
}

int failures = 0;

void grade(int id, const std::string& name, bool pass, const std::string& detail,
           double seconds, double budget) {
    bool in_budget = seconds <= budget;
    bool overall = pass && in_budget;
    if (!overall) ++failures;
    std::printf("%s  criterion %2d  %-28s  %s runtime=%.1fs (budget %.0fs)\n",
                overall ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds,
                budget);
}

} // namespace

int main() {
    std::map<std::string, Timed> runs;
    for (const char* name :
         {"planted-coboundary", "sft-holonomy", "delta-narrow-splitting",
          "unipotent-criterion", "coprime-combine", "catmap-rigidity",
          "linearization-demo", "t4-skew", "weak-irreducibility"})
        runs[name] = run_twice(name);

    std::string detail;

    {
        const auto& t = runs["planted-coboundary"];
        bool ok = all_pass(t.result,
                           {"recovery_max_gl_distance", "recovered_points",
                            "conjugacy_residual"},
                           detail);
        grade(1, "planted-coboundary-recovery", ok, detail, t.seconds, 30.0);

        bool ok2 = all_pass(t.result, {"homoclinic_identity_max"}, detail);
        grade(2, "homoclinic-identity", ok2, detail, 0.0, 30.0);
    }
    {
        const auto& t = runs["sft-holonomy"];
        bool ok = all_pass(t.result,
                           {"bunching_theta", "pairs_tested",
                            "truncation_vs_certified_bound", "holder_beta_relative_error"},
                           detail);
        grade(3, "holonomy-certification", ok, detail, t.seconds, 10.0);
    }
    {
        const auto& t = runs["delta-narrow-splitting"];
        bool ok = all_pass(t.result,
                           {"delta_narrow_radius", "domination_tau", "invariance_residual"},
                           detail);
        grade(4, "delta-narrow-domination", ok, detail, t.seconds, 20.0);
    }
    {
        const auto& t = runs["unipotent-criterion"];
        bool ok = all_pass(t.result,
                           {"planted_conjugate", "planted_ratio_bound",
                            "oracle_sum_agreement", "zero_sum_orbit_detected",
                            "witness_is_period_2_orbit"},
                           detail);
        grade(5, "unipotent-criterion", ok, detail, t.seconds, 5.0);
    }
    {
        const auto& t = runs["coprime-combine"];
        bool ok = all_pass(t.result, {"bezout_minus1_1", "period1_residual"}, detail);
        grade(6, "coprime-combination", ok, detail, t.seconds, 5.0);
    }
    {
        // Lyapunov/periodic consistency on the cocycles of criteria 1 and 4
        std::string d1, d4;
        bool ok1 = all_pass(runs["planted-coboundary"].result,
                            {"periodic_vs_generic_exponents", "determinant_telescoping"},
                            d1);
        bool ok4 = all_pass(runs["delta-narrow-splitting"].result,
                            {"periodic_vs_generic_exponents", "determinant_telescoping"},
                            d4);
        grade(7, "lyapunov-periodic-consistency", ok1 && ok4,
              "c1: " + d1 + "c4: " + d4, 0.0, 10.0);
    }
    {
        const auto& t = runs["catmap-rigidity"];
        bool ok = all_pass(t.result,
                           {"functional_equation_residual", "planted_conjugacy_sup_error"},
                           detail);
        grade(8, "franks-manning", ok, detail, t.seconds, 60.0);
    }
    {
        const auto& t = runs["linearization-demo"];
        bool ok = all_pass(t.result, {"ladder_monotone", "ladder_final_deviation"}, detail);
        grade(9, "holonomy-derivative-lemma", ok, detail, t.seconds, 60.0);
    }
    {
        const auto& t = runs["t4-skew"];
        bool ok = all_pass(t.result,
                           {"eigenvalue_rel_error", "diag_ab_not_weakly_irreducible",
                            "dh_nonconvergence_documented"},
                           detail);
        grade(10, "t4-skew-demo", ok, detail, t.seconds, 90.0);
    }
    {
        const auto& t = runs["weak-irreducibility"];
        bool ok = all_pass(t.result,
                           {"cat_map_weakly_irreducible", "diag_aa_weakly_irreducible",
                            "diag_ab_not_weakly_irreducible"},
                           detail);
        grade(11, "weak-irreducibility", ok, detail, t.seconds, 1.0);
    }
    {
        bool identical = true;
        std::string bad;
        for (const auto& [name, t] : runs) {
            if (t.report1 != t.report8) {
                identical = false;
                bad += name + " ";
            }
        }
        grade(12, "determinism-1-vs-8-threads",
              identical, identical ? "reports byte-identical " : ("differ: " + bad), 0.0,
              600.0);
    }

    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures;
}
