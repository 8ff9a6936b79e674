#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "subsparse/channel.hpp"

using namespace subsparse;

TEST_CASE("sensing matrix is addressable and consistent") {
    const SensingMatrix A(7, 11, 42);
    const Eigen::MatrixXd D = A.dense();
    REQUIRE(D.rows() == 7);
    REQUIRE(D.cols() == 11);
    for (int i = 0; i < 7; ++i) {
        const Vector r = A.row(i);
        for (int j = 0; j < 11; ++j) {
            CHECK(A.entry(i, j) == D(i, j));
            CHECK(r[j] == D(i, j));
        }
    }
    // same seed, same matrix; different seed, different matrix
    const SensingMatrix B(7, 11, 42);
    CHECK(B.entry(3, 5) == A.entry(3, 5));
    const SensingMatrix C(7, 11, 43);
    CHECK(C.entry(3, 5) != A.entry(3, 5));
}

TEST_CASE("streaming products match the dense matrix") {
    const SensingMatrix A(9, 17, 5);
    const Eigen::MatrixXd D = A.dense();
    Rng rng(substream(1, 2));
    Vector x(17), r(9);
    for (int j = 0; j < 17; ++j) x[j] = rng.normal();
    for (int i = 0; i < 9; ++i) r[i] = rng.normal();
    CHECK((A.apply(x) - D * x).norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((A.apply_adjoint(r) - D.transpose() * r).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("matrix entries look standard normal") {
    const SensingMatrix A(200, 200, 77);
    double sum = 0.0, sq = 0.0;
    const int n = 200 * 200;
    for (int i = 0; i < 200; ++i)
        for (int j = 0; j < 200; ++j) {
            const double e = A.entry(i, j);
            sum += e;
            sq += e * e;
        }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("measurement budget delta round-trips") {
    const ProblemDims dims(4096, 8);
    const CsDims cs = CsDims::from_delta(2.0, dims);
    // M = delta * k * ln(N/k), rounded to a whole measurement count
    CHECK(cs.M_meas == static_cast<int>(std::lround(2.0 * 8 * std::log(512.0))));
    CHECK(cs.delta == 2.0);  // the requested budget is kept verbatim
    // the achieved ratio moves by at most half a measurement
    const double half_step = 0.5 / (8 * std::log(512.0));
    CHECK(std::abs(delta_of(cs.M_meas, dims) - 2.0) <= half_step);
    const CsDims cs2 = CsDims::from_measurements(cs.M_meas, dims);
    CHECK(cs2.M_meas == cs.M_meas);
    CHECK(cs2.delta == delta_of(cs.M_meas, dims));
    CHECK_THROWS_AS(CsDims::from_measurements(0, dims), std::invalid_argument);
    CHECK_THROWS_AS(CsDims::from_delta(0.0, dims), std::invalid_argument);
}

TEST_CASE("awgn transmit adds noise at the effective variance") {
    const ProblemDims dims(4000, 4);
    const Alphabet a = Alphabet::from_points({1.0});
    const NoiseModel noise = NoiseModel::make(1.0, dims);
    Rng rng(substream(3, 1));
    const SparseSignal x = sample_signal(dims, a, rng);
    const ObservedVector y = awgn_transmit(x, noise, rng);
    REQUIRE(y.size() == 4000);
    const Vector w = y - x.dense();
    const double var = w.squaredNorm() / 4000.0;
    CHECK(var == doctest::Approx(noise.sigma_eff_sq).epsilon(0.08));
}

TEST_CASE("awgn transmit is deterministic per stream") {
    const ProblemDims dims(32, 2);
    const Alphabet a = Alphabet::from_points({1.0, -1.0});
    const NoiseModel noise = NoiseModel::make(0.5, dims);
    Rng r1(substream(8, 4));
    Rng r2(substream(8, 4));
    const SparseSignal x1 = sample_signal(dims, a, r1);
    const SparseSignal x2 = sample_signal(dims, a, r2);
    CHECK((awgn_transmit(x1, noise, r1) - awgn_transmit(x2, noise, r2)).norm() == 0.0);
}

TEST_CASE("compressed measurements follow y = A x / sqrt(k) + w") {
    const ProblemDims dims(64, 4);
    const Alphabet a = Alphabet::from_points({1.0});
    const SensingMatrix A(20, 64, 13);
    Rng r1(substream(6, 1));
    const SparseSignal x = sample_signal(dims, a, r1);
    const ObservedVector y = cs_measure(x, A, 0.25, r1);
    REQUIRE(y.size() == 20);
    const Vector clean = A.apply(x.dense()) / std::sqrt(4.0);
    const Vector w = y - clean;
    // noise variance sanity (loose: only 20 samples)
    double var = w.squaredNorm() / 20.0;
    CHECK(var > 0.02);
    CHECK(var < 1.0);

    // zero noise is exact
    Rng r3(substream(6, 2));
    const ObservedVector y0 = cs_measure(x, A, 0.0, r3);
    CHECK((y0 - clean).norm() == doctest::Approx(0.0).epsilon(1e-12));
}
