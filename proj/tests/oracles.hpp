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

// Test-only reference computations. Nothing here calls into the library's
// numerical kernels; each oracle takes an independent route.

#pragma once

#include "cfolab/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <random>
#include <vector>

namespace cfolab::oracle {

/// Dense unitary DFT matrix.
inline ComplexMat dft_matrix(long n) {
    ComplexMat f(n, n);
    for (long k = 0; k < n; ++k)
        for (long m = 0; m < n; ++m)
            f(k, m) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * kPi * double((k * m) % n) / double(n));
    return f;
}

/// Roots of a real polynomial (ascending coefficients) as companion-matrix
/// eigenvalues.
inline std::vector<cplx> companion_roots(const RealVec& c) {
    const long d = c.size() - 1;
    RealMat comp = RealMat::Zero(d, d);
    for (long i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (long i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
    Eigen::EigenSolver<RealMat> es(comp, false);
    std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + d);
    return r;
}

/// Roots of a complex polynomial (ascending coefficients).
inline std::vector<cplx> companion_roots(const ComplexVec& c) {
    const long d = c.size() - 1;
    ComplexMat comp = ComplexMat::Zero(d, d);
    for (long i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (long i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
    Eigen::ComplexEigenSolver<ComplexMat> es(comp, false);
    return {es.eigenvalues().data(), es.eigenvalues().data() + d};
}

inline void sort_lex(std::vector<cplx>& r) {
    std::sort(r.begin(), r.end(), [](const cplx& a, const cplx& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
}

inline ComplexVec random_cvec(long n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    ComplexVec v(n);
    for (auto& x : v) x = {g(rng), g(rng)};
    return v;
}

/// Stacked covariance by explicit loops: [Y]_{q, nu P + p} = y_nu[qP + p].
inline ComplexMat stacked_covariance(const std::vector<ComplexVec>& y, int P, int Q) {
    const long cols = long(y.size()) * P;
    ComplexMat Y(Q, cols);
    for (std::size_t nu = 0; nu < y.size(); ++nu)
        for (int q = 0; q < Q; ++q)
            for (int p = 0; p < P; ++p) Y(q, long(nu) * P + p) = y[nu][long(q) * P + p];
    return Y * Y.adjoint() / double(cols);
}

/// Complex-path FCFO: forward-backward averaged covariance, complex noise
/// subspace, f(z) = a^T(z) J A a(z) rooted by companion matrix. Keeps the
/// Nt roots inside and closest to the unit circle, maps each through
/// g = j(z+1)/(z-1) and returns beta = Q/pi acot(Re g) in [0, Q).
inline std::vector<double> complex_path_betas(const std::vector<ComplexVec>& ybar, int P, int Q, int Nt) {
    const ComplexMat R = stacked_covariance(ybar, P, Q);
    ComplexMat J = ComplexMat::Zero(Q, Q);
    for (int q = 0; q < Q; ++q) J(q, Q - 1 - q) = 1.0;
    const ComplexMat Rfb = (R + J * R.conjugate() * J) / 2.0;
    Eigen::SelfAdjointEigenSolver<ComplexMat> es(Rfb);
    const ComplexMat En = es.eigenvectors().leftCols(Q - Nt);  // ascending eigenvalues
    const ComplexMat JA = J * En * En.adjoint();
    ComplexVec c = ComplexVec::Zero(2 * Q - 1);
    for (int q = 0; q < Q; ++q)
        for (int qp = 0; qp < Q; ++qp) c[q + qp] += JA(q, qp);
    std::vector<cplx> z = companion_roots(c);
    std::vector<cplx> inside;
    for (const cplx& r : z)
        if (std::abs(r) <= 1.0) inside.push_back(r);
    std::sort(inside.begin(), inside.end(),
              [](const cplx& a, const cplx& b) { return 1.0 - std::abs(a) < 1.0 - std::abs(b); });
    std::vector<double> betas;
    for (int k = 0; k < Nt && k < int(inside.size()); ++k) {
        const cplx g = cplx(0, 1) * (inside[k] + 1.0) / (inside[k] - 1.0);
        double b = double(Q) / kPi * (kPi / 2 - std::atan(g.real()));
        b = std::fmod(b, double(Q));
        if (b < 0) b += Q;
        betas.push_back(b);
    }
    std::sort(betas.begin(), betas.end());
    return betas;
}

}  // namespace cfolab::oracle
