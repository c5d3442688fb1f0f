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

#include "cfolab/numkit.hpp"
#include "cfolab/seqdesign.hpp"
#include "cfolab/sigmodel.hpp"
#include "cfolab/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cfolab {

/// Q x Q matrices turning the complex root search into a real one.
struct TransformMatrices {
    int Q = 0;
    ComplexMat L_mat;  // unitary, column conjugate symmetric
    ComplexMat Phi;    // row q: ascending coefficients of (g+j)^q (g-j)^(Q-1-q)
    RealMat PhiHL;     // Phi^H L, real
    RealMat J;         // exchange matrix
};

TransformMatrices build_transform_matrices(int Q);

/// Integer ICFO candidates in (-floor(Q/2), Q - floor(Q/2)], ascending.
/// metric[k] belongs to icfo_candidate(k, Q).
inline int icfo_candidate(int k, int Q) { return -(Q / 2) + 1 + k; }

struct IcfoResult {
    int icfo = 0;
    RealVec metric;  // length Q
};

/// Pilot-comb energy of the N-point spectrum of each receive antenna, shifted
/// by every integer candidate. `bin_power` is sum_nu |Y_nu[k]|^2.
RealVec icfo_metric_from_power(const RealVec& bin_power, const SystemConfig& cfg);
IcfoResult estimate_icfo(const std::vector<ComplexVec>& y, const SystemConfig& cfg,
                         const numkit::FftPlan<double>* plan = nullptr);

/// e^{-j2 pi icfo Ng/N} D_N(-icfo) y per antenna.
std::vector<ComplexVec> correct_icfo(const std::vector<ComplexVec>& y, double icfo, const SystemConfig& cfg);

struct SubspaceDecomposition {
    ComplexMat Y;         // Q x Nr*P, [Y]_{q, nu P + p} = ybar_nu[qP + p]
    ComplexMat Ryy;       // Y Y^H / (Nr P)
    RealMat Rr;           // Re(L^H Ryy L)
    RealMat E_X;          // top-Nt eigenvectors of Rr
    RealMat E_V;          // remaining eigenvectors
    RealVec eigenvalues;  // descending
};

SubspaceDecomposition stack_and_covariance(const std::vector<ComplexVec>& ybar, const SystemConfig& cfg,
                                           const TransformMatrices& tm);

/// Real polynomial f^r(g) with c_k = sum_{q+q'=k} [Phi^H L E_V E_V^T L^H Phi]_{q,q'}.
numkit::RealPoly<double> fcfo_polynomial(const SubspaceDecomposition& dec, const TransformMatrices& tm);

/// g = cot(pi beta / Q) and its inverse with acot in (0, pi).
inline double g_from_beta(double beta, int Q) { return 1.0 / std::tan(kPi * beta / Q); }
inline double beta_from_g(double g, int Q) { return double(Q) / kPi * (kPi / 2 - std::atan(g)); }

struct RootCandidate {
    cplx g;             // representative with Im >= 0
    double abs_imag = 0;
    double beta = 0;    // in [0, Q)
    int window = -1;    // index mu of the matched pilot window, -1 if none
    bool merged_real = false;
};

struct CfoEstimate {
    int icfo = 0;
    double fcfo = 0;
    double cfo = 0;                       // wrapped into the CFO range
    std::vector<double> betas;            // selected roots
    std::vector<double> fcfos;            // per matched root
    std::vector<int> matched_windows;     // per selected root, -1 if unmatched
    std::vector<RootCandidate> candidates;  // all, sorted by |Im g|
    RealVec metric;
    RealVec eigenvalues;
    int icfo_shift = 0;                   // integer correction from root consistency, added to icfo
    std::vector<std::string> warnings;
};

/// Thrown when the root-to-window step cannot produce an estimate.
/// Carries whatever was computed up to that point.
struct AmbiguityError : Error {
    AmbiguityError(const std::string& w, CfoEstimate p) : Error(ErrorKind::Ambiguity, w), partial(std::move(p)) {}
    CfoEstimate partial;
};

/// Steps 1-4 of the root mapping. Fills betas, fcfos, matched_windows,
/// candidates, fcfo and warnings of `est`.
///
/// The selected roots sit at i_mu + residual (mod Q). When the pilot windows
/// shifted by some integer d explain all Nt roots (distinct windows, every
/// per-root offset within 0.5 of their mean) more consistently than d = 0,
/// the integer part was wrong: icfo_shift is set to d and the fractional
/// fields are recomputed against the shifted windows.
void map_roots_to_fcfo(const std::vector<cplx>& roots, const SystemConfig& cfg, CfoEstimate& est);

/// Immutable per-configuration state: FFT plan and transform matrices.
class EstimatorContext {
public:
    explicit EstimatorContext(const SystemConfig& cfg);

    const SystemConfig& config() const { return cfg_; }
    const TransformMatrices& transforms() const { return tm_; }
    const numkit::FftPlan<double>& plan() const { return plan_; }

    CfoEstimate estimate(const std::vector<ComplexVec>& y) const;
    /// FCFO stage only, on an ICFO-corrected observation.
    CfoEstimate estimate_fcfo(const std::vector<ComplexVec>& ybar) const;

private:
    SystemConfig cfg_;
    numkit::FftPlan<double> plan_;
    TransformMatrices tm_;
};

CfoEstimate estimate_cfo(const ReceivedFrame& frame, const SystemConfig& cfg, const TrainingSet& ts);

}  // namespace cfolab
