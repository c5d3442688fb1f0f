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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <type_traits>
#include <stdexcept>
#include <string>

namespace cfolab {

using cplx = std::complex<double>;

template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using ComplexVec = VecX<cplx>;
using ComplexMat = MatX<cplx>;
using RealVec = VecX<double>;
using RealMat = MatX<double>;

inline constexpr double kPi = std::numbers::pi;

// Error hierarchy. The CLI maps ConfigError/DimensionError/ContractError to
// exit status 1 and NumericalError/DegenerateInputError/AmbiguityError to 2.
enum class ErrorKind { Config, Dimension, Contract, Numerical, Degenerate, Ambiguity };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error(ErrorKind::Dimension, w) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string& w) : Error(ErrorKind::Contract, w) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::Numerical, w) {}
};
struct DegenerateInputError : Error {
    explicit DegenerateInputError(const std::string& w) : Error(ErrorKind::Degenerate, w) {}
};

inline bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

// Residue modulo m in [0, m).
inline long long mod_floor(long long a, long long m) {
    long long r = a % m;
    return r < 0 ? r + m : r;
}

template <class I, class J>
    requires(std::is_integral_v<I> && std::is_integral_v<J>)
inline long long mod_floor(I a, J m) {
    return mod_floor(static_cast<long long>(a), static_cast<long long>(m));
}

inline double mod_floor(double a, double m) {
    double r = std::fmod(a, m);
    return r < 0 ? r + m : r;
}

}  // namespace cfolab
