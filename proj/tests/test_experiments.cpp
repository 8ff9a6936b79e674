#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "subsparse/experiments.hpp"

using namespace subsparse;

namespace {

SweepSpec tiny_snr_spec() {
    SweepSpec s;
    s.kind = SweepKind::snr;
    s.n = 64;
    s.k = 4;
    s.snr_db = {0.0, 12.0};
    s.estimators = {"ml", "separable"};
    s.trials = 60;
    s.seed = 7;
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("spec hash tracks inputs that matter and ignores the rest") {
    SweepSpec a = tiny_snr_spec();
    SweepSpec b = a;
    CHECK(spec_hash(a) == spec_hash(b));

    b.threads = 8;  // execution detail, not an input
    CHECK(spec_hash(a) == spec_hash(b));

    b = a;
    b.seed = 8;
    CHECK(spec_hash(a) != spec_hash(b));

    b = a;
    b.snr_db.push_back(14.0);
    CHECK(spec_hash(a) != spec_hash(b));

    b = a;
    b.alphabet_points = {1.0, -1.0};
    CHECK(spec_hash(a) != spec_hash(b));
}

TEST_CASE("manifest line carries version, seed, and hash") {
    const SweepSpec s = tiny_snr_spec();
    const std::string line = manifest_line(s);
    CHECK(line.rfind("# subsparse 0.1.0 seed=7 spec=", 0) == 0);
    CHECK(line.size() == std::string("# subsparse 0.1.0 seed=7 spec=").size() + 16);
}

TEST_CASE("snr sweep is repeatable and internally consistent") {
    const SweepSpec s = tiny_snr_spec();
    const std::vector<SweepRow> rows = sweep_snr(s);
    REQUIRE(rows.size() == 4);  // 2 estimators x 2 grid points

    // sorted by estimator then coordinate
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const bool ordered =
            rows[i - 1].estimator < rows[i].estimator ||
            (rows[i - 1].estimator == rows[i].estimator &&
             rows[i - 1].coordinate < rows[i].coordinate);
        CHECK(ordered);
    }
    for (const SweepRow& r : rows) {
        CHECK(r.n == 64);
        CHECK(r.k == 4);
        CHECK(r.trials == 60);
        CHECK(r.mse_mean >= 0.0);
        CHECK(r.mse_stderr >= 0.0);
    }

    const std::vector<SweepRow> again = sweep_snr(s);
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(again[i].mse_mean == rows[i].mse_mean);
        CHECK(again[i].mse_stderr == rows[i].mse_stderr);
    }

    SweepSpec threaded = s;
    threaded.threads = 3;
    const std::vector<SweepRow> par = sweep_snr(threaded);
    REQUIRE(par.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(par[i].mse_mean == rows[i].mse_mean);
}

TEST_CASE("snr sweep error falls with snr for the ml rule") {
    SweepSpec s = tiny_snr_spec();
    s.n = 1024;
    s.k = 8;
    s.estimators = {"ml"};
    s.trials = 150;
    const std::vector<SweepRow> rows = sweep_snr(s);
    REQUIRE(rows.size() == 2);
    const SweepRow& low = rows[0].coordinate == 0.0 ? rows[0] : rows[1];
    const SweepRow& high = rows[0].coordinate == 0.0 ? rows[1] : rows[0];
    CHECK(high.mse_mean < low.mse_mean);
}

TEST_CASE("snr sweep validates estimators and enumeration budgets") {
    SweepSpec s = tiny_snr_spec();
    s.estimators = {"ml", "oracle"};
    CHECK_THROWS_AS(sweep_snr(s), std::invalid_argument);

    SweepSpec big = tiny_snr_spec();
    big.n = 4096;
    big.k = 8;
    big.estimators = {"exact"};
    CHECK_THROWS_AS(sweep_snr(big), std::invalid_argument);
}

TEST_CASE("measurement sweep emits both policies on a shared grid") {
    SweepSpec s;
    s.kind = SweepKind::delta;
    s.n = 256;
    s.k = 4;
    s.delta_grid = {0.5, 4.0};
    s.trials = 4;
    s.iterations = 12;
    s.channel_snr_db = 40.0;
    s.seed = 11;
    const std::vector<SweepRow> rows = sweep_delta(s);
    REQUIRE(rows.size() == 4);
    int sep = 0, sw = 0;
    for (const SweepRow& r : rows) {
        if (r.estimator == "amp-separable") ++sep;
        if (r.estimator == "amp-switched") ++sw;
        CHECK((r.coordinate == 0.5 || r.coordinate == 4.0));
    }
    CHECK(sep == 2);
    CHECK(sw == 2);

    const std::vector<SweepRow> again = sweep_delta(s);
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(again[i].mse_mean == rows[i].mse_mean);
}

TEST_CASE("transfer curves pin the denoiser map at the grid edges") {
    SweepSpec s;
    s.kind = SweepKind::transfer;
    s.n = 512;
    s.k = 4;
    s.v_grid = {1e-8, 1e-4, 1.0};
    s.delta_grid = {4.0};
    s.trials = 200;
    s.iterations = 10;
    s.channel_snr_db = 40.0;
    s.seed = 13;
    const std::vector<TransferRow> rows = denoiser_transfer(s);

    bool saw_curves = false, saw_amp = false;
    double sep_at_tiny = -1.0, nonsep_at_tiny = -1.0;
    for (const TransferRow& r : rows) {
        if (r.run == "separable-curve" || r.run == "nonseparable-curve") {
            saw_curves = true;
            CHECK(r.output_mse >= 0.0);
            if (r.run == "separable-curve" && r.iteration == 0)
                sep_at_tiny = r.output_mse;
            if (r.run == "nonseparable-curve" && r.iteration == 0)
                nonsep_at_tiny = r.output_mse;
        }
        if (r.run.rfind("amp-", 0) == 0) saw_amp = true;
    }
    REQUIRE(saw_curves);
    REQUIRE(saw_amp);
    // at v = 1e-8 the pseudo-data pins the signal almost exactly
    CHECK(sep_at_tiny < 1e-4);
    CHECK(nonsep_at_tiny < 1e-4);

    // a converging trajectory ends below where it started
    double first_in = -1.0, last_out = -1.0;
    for (const TransferRow& r : rows) {
        if (r.run != "amp-0") continue;
        if (first_in < 0.0) first_in = r.input_mse;
        last_out = r.output_mse;
    }
    REQUIRE(first_in >= 0.0);
    CHECK(last_out < first_in);
}

TEST_CASE("bounds report includes thresholds, bounds, and converse rows") {
    SweepSpec s;
    s.kind = SweepKind::bounds;
    s.n = 256;
    s.k = 4;
    s.snr_db = {0.0};  // sigma_sq = 1
    s.seed = 3;
    const std::vector<BoundsRow> rows = bounds_report(s);

    double up = -1.0, low = -1.0, gamma_max = -1.0;
    bool saw_closed = false, saw_oracle = false;
    for (const BoundsRow& r : rows) {
        if (r.quantity == "threshold_direct") up = r.value;
        if (r.quantity == "threshold_converse") low = r.value;
        if (r.quantity == "converse_gamma_max") gamma_max = r.value;
        if (r.quantity == "reliability" && r.w == 1 && r.w_prime == 0)
            saw_closed = true;
        if (r.quantity == "reliability_oracle" && r.w == 1 && r.w_prime == 0)
            saw_oracle = true;
    }
    CHECK(up == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(low == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gamma_max == doctest::Approx(1.0 / 13.0).epsilon(1e-12));
    CHECK(saw_closed);
    CHECK(saw_oracle);

    // closed-form vs quadrature agreement on every paired row
    for (const BoundsRow& a : rows) {
        if (a.quantity != "reliability") continue;
        for (const BoundsRow& b : rows) {
            if (b.quantity != "reliability_oracle" || a.w != b.w ||
                a.w_prime != b.w_prime || a.sigma_sq != b.sigma_sq)
                continue;
            CHECK(a.value == doctest::Approx(b.value).epsilon(1e-3));
        }
    }
}

TEST_CASE("csv writers emit the manifest and identical bytes on rerun") {
    const SweepSpec s = tiny_snr_spec();
    const std::vector<SweepRow> rows = sweep_snr(s);
    const std::string path = "test_experiments_tmp.csv";
    write_sweep_csv(path, s, rows);
    const std::string first = slurp(path);
    write_sweep_csv(path, s, rows);
    const std::string second = slurp(path);
    std::remove(path.c_str());

    CHECK(first == second);
    CHECK(first.rfind(manifest_line(s), 0) == 0);
    CHECK(first.find("coordinate,estimator,N,k,trials,mse_mean,mse_stderr,seed") !=
          std::string::npos);
}

TEST_CASE("verification harness passes clean and catches the planted fault") {
    SweepSpec s;
    s.kind = SweepKind::verify;
    s.seed = 21;
    const VerifyReport clean = run_verification(s);
    CHECK(clean.all_passed());
    REQUIRE(clean.suites.size() == 5);
    for (const VerifySuite& suite : clean.suites) {
        CHECK(suite.instances > 0);
        CHECK(suite.failures == 0);
    }

    SweepSpec bad = s;
    bad.inject_fault = true;
    const VerifyReport faulted = run_verification(bad);
    CHECK_FALSE(faulted.all_passed());
    int faulted_failures = 0;
    for (const VerifySuite& suite : faulted.suites)
        faulted_failures += suite.failures;
    CHECK(faulted_failures > 0);
}
