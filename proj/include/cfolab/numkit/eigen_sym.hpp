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

#pragma once

#include "cfolab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace cfolab::numkit {

template <typename T>
struct SymEigen {
    VecX<T> values;   // descending
    MatX<T> vectors;  // column k pairs with values[k]
    int sweeps = 0;
};

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr long kJacobiMaxDim = 256;

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix.
///
/// Sweeps over all (p, q) pairs with one plane rotation each until the
/// off-diagonal Frobenius norm drops below 1e-13 * ||A||_F. Throws
/// ContractError for a non-square, oversized, or non-symmetric input and
/// NumericalError when the sweep cap is hit.
template <typename T>
SymEigen<T> eig_sym_real(const MatX<T>& input) {
    const long n = input.rows();
    if (n != input.cols()) throw ContractError("eig_sym_real: matrix is not square");
    if (n > kJacobiMaxDim) throw ContractError("eig_sym_real: dimension exceeds 256");

    const T norm = input.norm();
    const T asym = (input - input.transpose()).cwiseAbs().maxCoeff();
    if (n > 0 && asym > T(1e-10) * std::max(norm, std::numeric_limits<T>::min()))
        throw ContractError("eig_sym_real: matrix is not symmetric");

    MatX<T> a = (input + input.transpose()) / T(2);
    MatX<T> v = MatX<T>::Identity(n, n);

    auto off_norm = [&] {
        T s = 0;
        for (long j = 0; j < n; ++j)
            for (long i = 0; i < n; ++i)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    const T tol = T(1e-13) * norm;
    int sweep = 0;
    while (off_norm() > tol) {
        if (sweep == kJacobiMaxSweeps)
            throw NumericalError("eig_sym_real: no convergence after 100 sweeps");
        ++sweep;
        for (long p = 0; p < n - 1; ++p) {
            for (long q = p + 1; q < n; ++q) {
                const T apq = a(p, q);
                if (apq == T(0)) continue;
                const T theta = (a(q, q) - a(p, p)) / (T(2) * apq);
                const T t = (theta >= 0 ? T(1) : T(-1)) / (std::abs(theta) + std::sqrt(theta * theta + T(1)));
                const T c = T(1) / std::sqrt(t * t + T(1));
                const T s = t * c;

                for (long k = 0; k < n; ++k) {
                    const T akp = a(k, p);
                    const T akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (long k = 0; k < n; ++k) {
                    const T apk = a(p, k);
                    const T aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = T(0);
                a(q, p) = T(0);
                for (long k = 0; k < n; ++k) {
                    const T vkp = v(k, p);
                    const T vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<long> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(), [&](long i, long j) { return a(i, i) > a(j, j); });

    SymEigen<T> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (long k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    out.sweeps = sweep;
    return out;
}

}  // namespace cfolab::numkit
