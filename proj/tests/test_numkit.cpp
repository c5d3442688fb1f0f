// SPDX-License-Identifier: Apache-2.0
//
// cfolab: two-stage CFO estimation for MIMO-OFDM
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <doctest.h>

#include "cfolab/numkit.hpp"
#include "oracles.hpp"

#include <random>

using namespace cfolab;
using namespace cfolab::numkit;

TEST_CASE("fft: delta and constant") {
    ComplexVec delta = ComplexVec::Zero(4);
    delta[0] = 1.0;
    const ComplexVec d = fft(delta);
    for (long k = 0; k < 4; ++k) CHECK(std::abs(d[k] - cplx(0.5, 0)) < 1e-15);

    const ComplexVec c = fft(ComplexVec(ComplexVec::Ones(4)));
    CHECK(std::abs(c[0] - cplx(2, 0)) < 1e-15);
    for (long k = 1; k < 4; ++k) CHECK(std::abs(c[k]) < 1e-15);
}

TEST_CASE("fft: round trip, unitarity and dense DFT agreement") {
    std::mt19937_64 rng(7);
    const ComplexVec x = oracle::random_cvec(64, rng);
    const ComplexVec X = fft(x);
    const ComplexVec back = fft(X, true);
    CHECK((back - x).cwiseAbs().maxCoeff() < 1e-12 * x.cwiseAbs().maxCoeff());
    CHECK(std::abs(X.norm() - x.norm()) < 1e-12 * x.norm());

    const ComplexVec dense = oracle::dft_matrix(64) * x;
    CHECK((dense - X).cwiseAbs().maxCoeff() < 1e-12);

    for (long n : {1L, 2L, 1024L}) {
        const ComplexVec y = oracle::random_cvec(n, rng);
        CHECK(std::abs(fft(y).norm() - y.norm()) < 1e-12 * y.norm());
    }
}

TEST_CASE("fft: non-power-of-two length is a dimension error") {
    CHECK_THROWS_AS(fft(ComplexVec(ComplexVec::Zero(12))), DimensionError);
    CHECK_THROWS_AS(FftPlan<double>(0), DimensionError);
    FftPlan<double> plan(8);
    ComplexVec x = ComplexVec::Zero(4);
    CHECK_THROWS_AS(plan(x), DimensionError);
}

TEST_CASE("fft: float instantiation") {
    VecX<std::complex<float>> x = VecX<std::complex<float>>::Ones(8);
    const auto X = fft(x);
    CHECK(std::abs(X[0] - std::complex<float>(std::sqrt(8.0f), 0)) < 1e-5f);
}

TEST_CASE("eig_sym_real: trivial cases") {
    const auto e = eig_sym_real<double>(RealMat::Identity(4, 4));
    for (long k = 0; k < 4; ++k) CHECK(e.values[k] == doctest::Approx(1.0));

    RealMat d(2, 2);
    d << 1, 0, 0, 3;
    const auto e2 = eig_sym_real<double>(d);
    CHECK(e2.values[0] == doctest::Approx(3.0));
    CHECK(e2.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(std::abs(e2.vectors(1, 0)) - 1.0) < 1e-15);
    CHECK(std::abs(std::abs(e2.vectors(0, 1)) - 1.0) < 1e-15);
}

TEST_CASE("eig_sym_real: random symmetric reconstruction and properties") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (long n : {2L, 5L, 16L, 33L}) {
        RealMat b(n, n);
        for (auto& x : b.reshaped()) x = g(rng);
        const RealMat a = b + b.transpose();
        const auto e = eig_sym_real(a);
        const double an = a.norm();

        const RealMat rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((rec - a).cwiseAbs().maxCoeff() < 1e-9 * an);
        CHECK((e.vectors.transpose() * e.vectors - RealMat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(a.trace() - e.values.sum()) < 1e-9 * an);
        for (long k = 0; k < n; ++k) {
            CHECK((a * e.vectors.col(k) - e.values[k] * e.vectors.col(k)).norm() < 1e-9 * an);
            if (k > 0) CHECK(e.values[k - 1] >= e.values[k]);
        }

        // Eigen's QR-based solver as an independent reference for the spectrum.
        Eigen::SelfAdjointEigenSolver<RealMat> ref(a);
        for (long k = 0; k < n; ++k) CHECK(std::abs(e.values[k] - ref.eigenvalues()[n - 1 - k]) < 1e-10 * an);
    }
}

TEST_CASE("eig_sym_real: contract violations") {
    RealMat a(2, 2);
    a << 1, 2, 3, 4;
    CHECK_THROWS_AS(eig_sym_real(a), ContractError);
    CHECK_THROWS_AS(eig_sym_real<double>(RealMat::Zero(2, 3)), ContractError);
    CHECK_THROWS_AS(eig_sym_real<double>(RealMat::Identity(257, 257)), ContractError);
    const auto z = eig_sym_real<double>(RealMat::Zero(3, 3));
    CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("roots_real_poly: small exact cases") {
    auto r = roots_real_poly(RealPoly<double>{1.0, 0.0, 1.0}).roots;
    REQUIRE(r.size() == 2);
    CHECK(std::abs(r[0] - cplx(0, -1)) < 1e-14);
    CHECK(std::abs(r[1] - cplx(0, 1)) < 1e-14);
    CHECK(r[0] == std::conj(r[1]));

    r = roots_real_poly(RealPoly<double>{-6.0, 1.0, 1.0}).roots;
    REQUIRE(r.size() == 2);
    CHECK(std::abs(r[0] - cplx(-3, 0)) < 1e-14);
    CHECK(std::abs(r[1] - cplx(2, 0)) < 1e-14);
    CHECK(r[0].imag() == 0.0);

    // x^2 (x - 1): exact zero roots are split off.
    r = roots_real_poly(RealPoly<double>{0.0, 0.0, -1.0, 1.0}).roots;
    REQUIRE(r.size() == 3);
    CHECK(std::abs(r[2] - cplx(1, 0)) < 1e-14);
}

TEST_CASE("roots_real_poly: trimming and degenerate input") {
    const auto res = roots_real_poly(RealPoly<double>{-6.0, 1.0, 1.0, 1e-14});
    CHECK(res.degree_reduction == 1);
    CHECK(res.roots.size() == 2);
    CHECK_THROWS_AS(roots_real_poly(RealPoly<double>{0.0, 0.0}), DegenerateInputError);
    CHECK_THROWS_AS(roots_real_poly(RealPoly<double>{3.0}), DegenerateInputError);
    CHECK_THROWS_AS(RealPoly<double>({1.0, std::nan("")}), ContractError);
}

TEST_CASE("roots_real_poly: random degree-30 against companion matrix") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        RealVec c(31);
        for (auto& x : c) x = g(rng);
        const RealPoly<double> p(c);
        auto mine = roots_real_poly(p).roots;
        auto ref = oracle::companion_roots(c);
        REQUIRE(mine.size() == 30);

        // conjugate closure is exact
        for (const auto& r : mine) {
            if (r.imag() == 0.0) continue;
            CHECK(std::count(mine.begin(), mine.end(), std::conj(r)) >= 1);
        }
        // backward error bound
        const double cmax = p.max_abs_coeff();
        for (const auto& r : mine)
            CHECK(std::abs(p(r)) <= 1e-8 * cmax * std::pow(std::max(1.0, std::abs(r)), 30));

        // greedy nearest matching against the oracle
        std::vector<bool> used(ref.size(), false);
        for (const auto& r : mine) {
            std::size_t best = 0;
            double bd = 1e300;
            for (std::size_t j = 0; j < ref.size(); ++j)
                if (!used[j] && std::abs(ref[j] - r) < bd) {
                    bd = std::abs(ref[j] - r);
                    best = j;
                }
            used[best] = true;
            CHECK(bd < 1e-7);
        }
    }
}

TEST_CASE("roots_real_poly: double roots and wide coefficient range") {
    // (g - 0.3)^2 (g + 2)^2 (g^2 + 4)
    RealVec c(7);
    const RealVec a = (RealVec(3) << 0.09, -0.6, 1.0).finished();
    const RealVec b = (RealVec(3) << 4.0, 4.0, 1.0).finished();
    const RealVec e = (RealVec(3) << 4.0, 0.0, 1.0).finished();
    auto mul = [](const RealVec& x, const RealVec& y) {
        RealVec z = RealVec::Zero(x.size() + y.size() - 1);
        for (long i = 0; i < x.size(); ++i)
            for (long j = 0; j < y.size(); ++j) z[i + j] += x[i] * y[j];
        return z;
    };
    c = mul(mul(a, b), e);
    const auto r = roots_real_poly(RealPoly<double>(c)).roots;
    REQUIRE(r.size() == 6);
    int near03 = 0, nearm2 = 0;
    cplx sum03 = 0;
    for (const auto& x : r) {
        if (std::abs(x - 0.3) < 1e-6) {
            ++near03;
            sum03 += x;
        }
        if (std::abs(x + 2.0) < 1e-6) ++nearm2;
    }
    CHECK(near03 == 2);
    CHECK(nearm2 == 2);
    // iterates stop anywhere inside the O(sqrt(eps)) rounding disk; their mean
    // is much closer than either root
    CHECK(std::abs(sum03 / 2.0 - 0.3) < 1e-8);

    // roots spanning 1e-4 .. 1e4
    RealVec w = mul((RealVec(2) << -1e-4, 1.0).finished(), (RealVec(2) << -1e4, 1.0).finished());
    w = mul(w, (RealVec(2) << 1.0, 1.0).finished());
    const auto rw = roots_real_poly(RealPoly<double>(w)).roots;
    REQUIRE(rw.size() == 3);
    CHECK(std::abs(rw[0] + 1.0) < 1e-12);
    CHECK(std::abs(rw[1] - 1e-4) < 1e-16);
    CHECK(std::abs(rw[2] - 1e4) < 1e-8);
}
