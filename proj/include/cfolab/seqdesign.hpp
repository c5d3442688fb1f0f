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

#include "cfolab/rng.hpp"
#include "cfolab/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfolab {

/// Scalar parameters of the MIMO-OFDM training system.
struct SystemConfig {
    int N = 1024;   // subcarriers
    int Ng = 64;    // cyclic prefix length
    int P = 64;     // block length
    int Q = 16;     // repetitions, N / P
    int Nt = 3;     // transmit antennas
    int Nr = 2;     // receive antennas
    int L = 9;      // channel taps
    std::vector<int> pilot_offsets{2, 7, 12};
    int chu_v = 1;
    int N_I = 3;    // TS0 shift divisor, M = floor(P / N_I)
    double eps_th = 0.75;
    std::uint64_t seed = 0;
    std::vector<double> profile;  // per-tap power; empty selects default_profile(L)

    int shift_M() const { return P / N_I; }
};

/// Fills Q, chu_v, N_I, eps_th and (when empty) pilot offsets from the
/// primary dimensions.
SystemConfig make_config(int N, int Ng, int P, int Nt, int Nr, int L, std::vector<int> pilot_offsets = {});

/// Pilot offsets spread over [0, Q): floor(mu Q / Nt) + floor(Q / (2 Nt)),
/// falling back to an exhaustive search when that set is shift-invariant.
std::vector<int> default_pilot_offsets(int Q, int Nt);

/// Power-delay profile of length L, normalized to unit sum. For L >= 9 the
/// 20 MHz four-tap profile (0, -9.7, -19.2, -22.8 dB at taps 0, 2, 4, 8);
/// shorter channels get equal-power taps.
RealVec default_profile(int L);

struct ConditionResult {
    std::string id;
    std::string description;
    bool pass = false;
    bool structural = false;  // required to build a training set at all
    std::string detail;
};

struct ValidationReport {
    std::vector<ConditionResult> conditions;

    bool ok() const;
    bool structural_ok() const;
    const ConditionResult* find(const std::string& id) const;
    std::string failures() const;
    std::string to_text() const;
};

ValidationReport validate_conditions(const SystemConfig& cfg);

/// Throws ConfigError listing every failing structural condition.
void require_structural(const SystemConfig& cfg);
/// Throws ConfigError listing every failing condition.
void require_valid(const SystemConfig& cfg);

/// (1 - l)^T l^(q) minimized over q = 1..Q-1, l the pilot indicator.
int shift_correlation_metric(int Q, const std::vector<int>& offsets);
/// min over mu != mu' of (i_mu' - i_mu) mod Q.
int min_circular_gap(int Q, const std::vector<int>& offsets);

enum class Variant { TS0, TS1, RS };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct TrainingSet {
    Variant variant = Variant::TS0;
    std::vector<int> pilot_offsets;
    std::vector<ComplexVec> base_sequences;  // s~_mu, length P, frequency domain
    std::vector<ComplexVec> time_blocks;     // s_mu = F_P^H s~_mu / sqrt(Q)
    std::vector<ComplexVec> freq_symbols;    // t~_mu, length N
    std::vector<ComplexVec> time_frames;     // CP + sqrt(N) F_N^H t~_mu

    int num_tx() const { return static_cast<int>(base_sequences.size()); }
};

/// [s]_p = exp(j pi v p^2 / P).
ComplexVec chu_sequence(int P, int v);

/// m-cyclic-down-shift: out[p] = x[(p - m) mod n].
ComplexVec cyclic_down_shift(const ComplexVec& x, long m);

/// TS0, TS1 or random pilots. RS draws from `rng` when given, otherwise from
/// the pilots sub-stream of cfg.seed.
TrainingSet make_training_set(const SystemConfig& cfg, Variant variant, Rng* rng = nullptr);

/// Builds a training set from caller-supplied base sequences (e.g. read
/// back from a design file). Enforces C2 energy and nonzero entries.
TrainingSet training_set_from_base(const SystemConfig& cfg, Variant variant, std::vector<ComplexVec> base);

/// Per-antenna transmitted frame: sqrt(N) F_N^H t~_mu with its last Ng
/// samples prepended.
std::vector<ComplexVec> map_to_frame(const TrainingSet& ts, const SystemConfig& cfg);

struct TEntry {
    int mu = 0, mu2 = 0, l = 0, l2 = 0;
    double abs_direct = 0;
    double abs_closed = -1;  // negative when no closed form applies (RS)
};

struct AlphaEntry {
    int mu = 0, mu2 = 0, l = 0, l2 = 0;
    double abs_alpha = 0;
};

struct DesignDiagnostics {
    std::vector<TEntry> t_table;
    std::vector<AlphaEntry> alpha_table;  // mu != mu2 only
    double closed_form_max_error = 0;     // TS0/TS1 only
    double max_cross_t = 0;               // max |T| over mu != mu'
    double max_auto_t = 0;                // max |T| over mu == mu', l == l'
    double max_offpeak_cross_t = 0;       // mu != mu', p_{mu,l} != p_{mu',l'}
    double max_peak_cross_t = 0;          // mu != mu', p_{mu,l} == p_{mu',l'}
    double t_bound = 0;                   // P / Nt
    double max_alpha = 0;
    int alpha_violations = 0;             // |alpha| >= 1 / Nt
    int min_gap = 0;
    int shift_metric = 0;
    RealMat varpi;                        // (i_mu - i_mu') / Q

    std::string to_text() const;
    std::string t_table_csv() const;
};

/// T^(mu,mu') by the direct inner product, cross-checked against the Chu
/// closed form for TS0/TS1; alpha table and pilot-gap metrics.
DesignDiagnostics design_diagnostics(const TrainingSet& ts, const SystemConfig& cfg);

/// Direct [T^(mu,mu')]_{l,l'} = (s_mu^(l))^T D_P(i_mu - i_mu') (s_mu'^(l'))^*.
cplx t_matrix_entry(const TrainingSet& ts, const SystemConfig& cfg, int mu, int mu2, int l, int l2);

/// alpha(mu, mu''; l, l') per the ICFO diagnostic definition.
cplx alpha_entry(const TrainingSet& ts, const SystemConfig& cfg, int mu, int mu2, int l, int l2);

}  // namespace cfolab
