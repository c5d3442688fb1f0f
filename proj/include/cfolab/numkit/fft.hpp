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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cfolab::numkit {

/// Iterative radix-2 decimation-in-time FFT with precomputed twiddles and
/// bit-reversal table. Both directions are scaled by 1/sqrt(n), so the
/// forward transform is the unitary DFT F_n and the inverse is F_n^H.
template <typename T>
class FftPlan {
public:
    using value_type = std::complex<T>;

    explicit FftPlan(std::size_t n) : n_(n) {
        if (!is_power_of_two(static_cast<long long>(n)))
            throw DimensionError("fft: length " + std::to_string(n) + " is not a power of two");
        log2n_ = 0;
        while ((std::size_t{1} << log2n_) < n_) ++log2n_;

        rev_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t r = 0;
            for (unsigned b = 0; b < log2n_; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n_ - 1 - b);
            rev_[i] = r;
        }

        // Twiddles e^{-j 2 pi k / n}, k < n/2, evaluated directly to avoid
        // accumulated recurrence error.
        twiddle_.resize(n_ / 2);
        for (std::size_t k = 0; k < n_ / 2; ++k) {
            const T angle = -T(2) * std::numbers::pi_v<T> * T(k) / T(n_);
            twiddle_[k] = {std::cos(angle), std::sin(angle)};
        }
        scale_ = T(1) / std::sqrt(T(n_));
    }

    std::size_t size() const noexcept { return n_; }

    void transform(std::span<value_type> data, bool inverse) const {
        if (data.size() != n_)
            throw DimensionError("fft: plan length " + std::to_string(n_) + " != input length " +
                                 std::to_string(data.size()));
        for (std::size_t i = 0; i < n_; ++i)
            if (i < rev_[i]) std::swap(data[i], data[rev_[i]]);

        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    value_type w = twiddle_[k * stride];
                    if (inverse) w = std::conj(w);
                    const value_type u = data[start + k];
                    const value_type v = data[start + k + half] * w;
                    data[start + k] = u + v;
                    data[start + k + half] = u - v;
                }
            }
        }
        for (auto& x : data) x *= scale_;
    }

    VecX<value_type> operator()(const VecX<value_type>& x, bool inverse = false) const {
        VecX<value_type> out = x;
        transform(std::span<value_type>(out.data(), static_cast<std::size_t>(out.size())), inverse);
        return out;
    }

private:
    std::size_t n_;
    unsigned log2n_ = 0;
    std::vector<std::size_t> rev_;
    std::vector<value_type> twiddle_;
    T scale_;
};

/// Unitary DFT (or its inverse) of a power-of-two-length vector.
template <typename T>
VecX<std::complex<T>> fft(const VecX<std::complex<T>>& x, bool inverse = false) {
    return FftPlan<T>(static_cast<std::size_t>(x.size()))(x, inverse);
}

}  // namespace cfolab::numkit
