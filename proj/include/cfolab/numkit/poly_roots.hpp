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
#include <limits>
#include <vector>

namespace cfolab::numkit {

/// Polynomial with real coefficients stored in ascending degree order.
template <typename T>
class RealPoly {
public:
    RealPoly() = default;
    explicit RealPoly(VecX<T> coeffs) : c_(std::move(coeffs)) {
        if (!c_.allFinite()) throw ContractError("RealPoly: non-finite coefficient");
    }
    RealPoly(std::initializer_list<T> coeffs) : RealPoly(VecX<T>::Map(coeffs.begin(), long(coeffs.size()))) {}

    const VecX<T>& coeffs() const noexcept { return c_; }
    long degree() const noexcept { return c_.size() - 1; }
    T max_abs_coeff() const { return c_.size() ? c_.cwiseAbs().maxCoeff() : T(0); }

    template <typename U>
    U operator()(const U& x) const {
        U acc(0);
        for (long k = c_.size() - 1; k >= 0; --k) acc = acc * x + U(c_[k]);
        return acc;
    }

    /// Drop trailing coefficients below 1e-12 * max|c_k|.
    RealPoly trimmed() const {
        const T cut = T(1e-12) * max_abs_coeff();
        long d = c_.size() - 1;
        while (d >= 0 && std::abs(c_[d]) <= cut) --d;
        return RealPoly(VecX<T>(c_.head(d + 1)));
    }

private:
    VecX<T> c_;
};

template <typename T>
struct PolyRoots {
    std::vector<std::complex<T>> roots;
    long degree_reduction = 0;  // coefficients removed by trimming
    int iterations = 0;
};

inline constexpr int kAberthMaxIterations = 200;

namespace detail {

// Bini's starting points: one circle per edge of the upper convex hull of
// (k, log|c_k|), radius (|c_i|/|c_j|)^(1/(j-i)) holding j-i points.
template <typename T>
std::vector<std::complex<T>> aberth_initial(const VecX<T>& c) {
    const long d = c.size() - 1;
    std::vector<long> idx;
    std::vector<T> lg;
    for (long k = 0; k <= d; ++k) {
        if (c[k] == T(0)) continue;
        const T y = std::log(std::abs(c[k]));
        while (idx.size() >= 2) {
            const long i0 = idx[idx.size() - 2], i1 = idx.back();
            const T y0 = lg[lg.size() - 2], y1 = lg.back();
            // pop i1 if it lies on or below the chord i0 -> k
            if ((y1 - y0) * T(k - i0) <= (y - y0) * T(i1 - i0)) {
                idx.pop_back();
                lg.pop_back();
            } else {
                break;
            }
        }
        idx.push_back(k);
        lg.push_back(y);
    }

    std::vector<std::complex<T>> z;
    z.reserve(static_cast<std::size_t>(d));
    const T two_pi = T(2) * std::numbers::pi_v<T>;
    const T sigma = T(0.7);
    for (std::size_t h = 0; h + 1 < idx.size(); ++h) {
        const long m = idx[h + 1] - idx[h];
        const T r = std::exp((lg[h] - lg[h + 1]) / T(m));
        for (long j = 0; j < m; ++j) {
            const T ang = two_pi * T(j) / T(m) + two_pi * T(idx[h]) / T(d) + sigma;
            z.push_back(std::polar(r, ang));
        }
    }
    return z;
}

// Newton correction p(z)/p'(z) and whether |p(z)| is within rounding of zero.
// Uses the reversed polynomial for |z| > 1 to keep Horner well scaled.
template <typename T>
std::pair<std::complex<T>, bool> newton_ratio(const VecX<T>& c, std::complex<T> z) {
    using C = std::complex<T>;
    const long d = c.size() - 1;
    const T eps = std::numeric_limits<T>::epsilon();
    if (std::abs(z) <= T(1)) {
        C p(c[d]), dp(0);
        T bound = std::abs(c[d]);
        const T az = std::abs(z);
        for (long k = d - 1; k >= 0; --k) {
            dp = dp * z + p;
            p = p * z + c[k];
            bound = bound * az + std::abs(c[k]);
        }
        const bool small = std::abs(p) <= T(4) * eps * bound;
        if (dp == C(0)) return {C(0), small};
        return {p / dp, small};
    }
    const C w = T(1) / z;
    C q(c[0]), dq(0);
    T bound = std::abs(c[0]);
    const T aw = std::abs(w);
    for (long k = 1; k <= d; ++k) {
        dq = dq * w + q;
        q = q * w + c[k];
        bound = bound * aw + std::abs(c[k]);
    }
    const bool small = std::abs(q) <= T(4) * eps * bound;
    if (q == C(0)) return {C(0), true};
    const C denom = T(d) - w * dq / q;
    if (denom == C(0)) return {C(0), small};
    return {z / denom, small};
}

// Pair every root with the root closest to its conjugate; a root whose own
// conjugate is closer than any partner is made exactly real.
template <typename T>
void enforce_conjugate_pairs(std::vector<std::complex<T>>& z) {
    const std::size_t n = z.size();
    std::vector<bool> done(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (done[i]) continue;
        const T self = T(2) * std::abs(z[i].imag());
        std::size_t best = n;
        T best_d = std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || done[j]) continue;
            const T dj = std::abs(z[j] - std::conj(z[i]));
            if (dj < best_d) {
                best_d = dj;
                best = j;
            }
        }
        done[i] = true;
        if (best == n || self <= best_d) {
            z[i] = {z[i].real(), T(0)};
            continue;
        }
        done[best] = true;
        const std::complex<T> m = (z[i] + std::conj(z[best])) / T(2);
        const std::complex<T> up = m.imag() >= 0 ? m : std::conj(m);
        z[i] = up;
        z[best] = std::conj(up);
    }
}

}  // namespace detail

/// All roots of a real polynomial by Aberth-Ehrlich simultaneous iteration.
///
/// Trailing near-zero coefficients are trimmed first and the reduction is
/// reported. Complex roots come back in bit-exact conjugate pairs.
template <typename T>
PolyRoots<T> roots_real_poly(const RealPoly<T>& poly) {
    using C = std::complex<T>;
    PolyRoots<T> out;
    if (poly.coeffs().size() == 0 || poly.max_abs_coeff() == T(0))
        throw DegenerateInputError("roots_real_poly: zero polynomial");
    const RealPoly<T> p = poly.trimmed();
    out.degree_reduction = poly.degree() - p.degree();
    if (p.degree() < 1) throw DegenerateInputError("roots_real_poly: degree < 1 after trimming");

    // Exact zero roots.
    long low = 0;
    while (p.coeffs()[low] == T(0)) ++low;
    for (long k = 0; k < low; ++k) out.roots.emplace_back(T(0), T(0));
    const VecX<T> c = p.coeffs().segment(low, p.degree() + 1 - low);
    const long d = c.size() - 1;
    if (d == 0) return out;

    std::vector<C> z = detail::aberth_initial(c);
    std::vector<bool> conv(static_cast<std::size_t>(d), false);
    long remaining = d;
    int it = 0;
    while (remaining > 0) {
        if (it == kAberthMaxIterations)
            throw NumericalError("roots_real_poly: Aberth iteration did not converge");
        ++it;
        for (long i = 0; i < d; ++i) {
            if (conv[i]) continue;
            const auto [ratio, small] = detail::newton_ratio(c, z[i]);
            if (small) {
                conv[i] = true;
                --remaining;
                continue;
            }
            C s(0);
            for (long j = 0; j < d; ++j)
                if (j != i) s += T(1) / (z[i] - z[j]);
            const C w = ratio / (T(1) - ratio * s);
            z[i] -= w;
            if (std::abs(w) <= std::numeric_limits<T>::epsilon() * std::abs(z[i])) {
                conv[i] = true;
                --remaining;
            }
        }
    }
    out.iterations = it;

    detail::enforce_conjugate_pairs(z);
    out.roots.insert(out.roots.end(), z.begin(), z.end());
    std::sort(out.roots.begin(), out.roots.end(), [](const C& a, const C& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return out;
}

}  // namespace cfolab::numkit
