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

#include "cfolab/estimator.hpp"
#include "cfolab/seqdesign.hpp"
#include "cfolab/sigmodel.hpp"
#include "cfolab/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cfolab {

/// S = F_bar^H diag(s~) F_breve (N x Nt L) with an orthonormal basis of its
/// range, and the CP-offset time index diagonal.
struct ModelOperators {
    ComplexMat S;
    ComplexMat range_basis;  // N x Nt L, orthonormal columns spanning S
    RealVec b0;              // Ng, Ng+1, ..., Ng+N-1
};

/// Throws NumericalError when S is rank deficient.
ModelOperators build_model_operators(const SystemConfig& cfg, const TrainingSet& ts);

/// N sigma^2 / (8 pi^2 sum_nu ||(I - P_S) B S h_nu||^2).
double crb_snapshot(const ChannelSet& ch, const ModelOperators& ops, double noise_var, const SystemConfig& cfg);

struct MeanWithError {
    double mean = 0;
    double stderr_ = 0;
};

/// Snapshot CRB averaged over n_trials channels drawn from the channel
/// sub-streams of `seed`.
MeanWithError average_crb(const SystemConfig& cfg, const TrainingSet& ts, double noise_var, int n_trials,
                          std::uint64_t seed);

/// Same streams as run_monte_carlo; RS pilots are redrawn per trial.
MeanWithError average_crb(const SystemConfig& cfg, Variant variant, double noise_var, int n_trials,
                          std::uint64_t seed);

struct MonteCarloSpec {
    std::vector<Variant> variants{Variant::TS0};
    std::vector<double> snr_db{10.0};
    int n_trials = 500;
    int workers = 1;
    bool timing = false;
};

struct MonteCarloRow {
    Variant variant = Variant::TS0;
    double snr_db = 0;
    int n_trials = 0;
    double mse = 0;             // over trials that produced an estimate
    double mse_stderr = 0;
    double icfo_error_rate = 0; // |eps^ - eps| >= 0.5 or wrong partial integer; over all trials
    double ambiguity_rate = 0;  // trials without an estimate
    double avcrb = 0;
    double avcrb_stderr = 0;
    double sec_per_trial = -1;  // negative when timing is off
};

/// Trial t draws its channel, CFO and unit noise from sub-streams
/// (seed, stream, t); the same draws are reused for every variant and SNR.
/// RS pilots are redrawn per trial. Results do not depend on `workers`.
std::vector<MonteCarloRow> run_monte_carlo(const SystemConfig& cfg, const MonteCarloSpec& spec);

std::string monte_carlo_csv(const std::vector<MonteCarloRow>& rows);

struct IdentifiabilityReport {
    RealVec delta;
    RealVec d_values;
    double total_energy = 0;
    double d_at_zero = 0;
    double min_value = 0;    // over |delta| >= exclusion
    double argmin = 0;
    double exclusion = 0.25;
    bool pass = false;       // min_value > 1e-9 * total_energy
};

/// D(delta) = ||y0||^2 - ||F_bar D_N(delta) y0||^2 for the noiseless
/// eps = 0 frame, delta on a grid of spacing <= grid_step over (-Q, Q).
IdentifiabilityReport identifiability_scan(const SystemConfig& cfg, const TrainingSet& ts, const ChannelSet& ch,
                                           double grid_step = 0.05);

/// Normalises delta from (-Q, Q) into [-floor(Q/2), Q - floor(Q/2)).
double r_normalize(double delta, int Q);

struct IcfoDiagRow {
    double delta = 0;
    double r_delta = 0;
    double theta = 0;
    double psi = 0;
    double m_diag = 0;
    double m_offdiag_abs = 0;
    cplx m_offdiag;
    double zeta = 0;  // +inf where |sin(theta/2)| < 1e-9
};

struct IcfoDiagnostics {
    int mu = 0, mu1 = 0, mu2 = 0, l = 0, l2 = 0;
    cplx alpha;
    std::vector<IcfoDiagRow> rows;
    double max_direct_error = -1;  // closed form vs direct, negative if not checked

    std::string csv() const;
};

/// Closed-form M diagonal, M off-diagonal and zeta for the tuple
/// (mu, mu', mu'') over `deltas`. Needs mu != mu''.
IcfoDiagnostics icfo_diagnostics(const SystemConfig& cfg, const TrainingSet& ts, int mu, int mu1, int mu2, int l,
                                 int l2, const std::vector<double>& deltas);

/// [S_mu^H G_mu'(delta) S_mu'']_{l,l'} by explicit transforms.
cplx m_entry_direct(const SystemConfig& cfg, const TrainingSet& ts, int mu, int mu1, int mu2, int l, int l2,
                    double delta);

/// Cross-checks the closed forms against m_entry_direct at `n_points`
/// grid points (picked deterministically) and stores the max error.
void check_icfo_closed_forms(const SystemConfig& cfg, const TrainingSet& ts, IcfoDiagnostics& diag, int n_points = 20);

/// Exhaustive CFO search over the pilot-energy metric on a zero-padded
/// FFT grid of fft_size points (resolution N / fft_size subcarriers).
struct GridSearchResult {
    double cfo = 0;
    double metric = 0;
};
GridSearchResult grid_search_cfo(const std::vector<ComplexVec>& y, const SystemConfig& cfg,
                                 std::size_t fft_size = std::size_t{1} << 20);

}  // namespace cfolab
