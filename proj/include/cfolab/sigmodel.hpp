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
#include "cfolab/seqdesign.hpp"
#include "cfolab/types.hpp"

#include <vector>

namespace cfolab {

/// Channel impulse responses for every (receive, transmit) pair.
struct ChannelSet {
    std::vector<std::vector<ComplexVec>> taps;  // taps[nu][mu], length L
    RealVec profile;

    int num_rx() const { return static_cast<int>(taps.size()); }
    int num_tx() const { return taps.empty() ? 0 : static_cast<int>(taps.front().size()); }
    /// Stacked h_nu = [h^(nu,0); ...; h^(nu,Nt-1)], length Nt*L.
    ComplexVec stacked(int nu) const;
};

struct ReceivedFrame {
    std::vector<ComplexVec> y;  // per receive antenna, CP removed
    double true_cfo = 0;
    double noise_var = 0;
    double snr_db = 0;

    int num_rx() const { return static_cast<int>(y.size()); }
};

/// Profile from cfg.profile when set, else default_profile(cfg.L).
RealVec config_profile(const SystemConfig& cfg);

/// Rayleigh taps, CN(0, profile[l]) per tap, independent across pairs.
/// Zero-power taps stay exactly zero; an all-zero pair is redrawn.
ChannelSet gen_channel(const SystemConfig& cfg, const RealVec& profile, Rng& rng);

/// Lower (exclusive) and upper (inclusive) ends of the CFO range,
/// (-floor(Q/2), Q - floor(Q/2)].
inline double cfo_lower(int Q) { return -double(Q / 2); }
inline double cfo_upper(int Q) { return double(Q - Q / 2); }
bool cfo_in_range(double eps, int Q);
/// Reduces x modulo Q into the CFO range.
double wrap_cfo(double x, int Q);
/// Uniform draw over the CFO range.
double draw_cfo(int Q, Rng& rng);

/// Noise-free received training, CP removed:
/// sqrt(N) e^{j2 pi eps Ng/N} D_N(eps) sum_mu F_N^H diag(F_N h_pad) t~_mu.
std::vector<ComplexVec> received_signal(const SystemConfig& cfg, const TrainingSet& ts, const ChannelSet& ch,
                                        double eps);

/// Unit-variance circular white Gaussian samples, Nr vectors of length N.
std::vector<ComplexVec> draw_noise(const SystemConfig& cfg, Rng& rng);

/// Received frame with AWGN of variance noise_var per complex sample.
ReceivedFrame transmit(const SystemConfig& cfg, const TrainingSet& ts, const ChannelSet& ch, double eps,
                       double noise_var, Rng& rng);

/// Signal power per sample is one under unit-energy channels and the
/// training energy split, so this is 10^(-snr_db/10).
double snr_to_noise_var(const SystemConfig& cfg, const TrainingSet& ts, double snr_db);

/// Applies e^{j2 pi eps Ng/N} D_N(eps) in place.
void apply_cfo(ComplexVec& y, double eps, int N, int Ng);

}  // namespace cfolab
