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

#include "cfolab/sigmodel.hpp"

#include "cfolab/numkit/fft.hpp"

#include <cmath>

namespace cfolab {

ComplexVec ChannelSet::stacked(int nu) const {
    const auto& row = taps.at(std::size_t(nu));
    const long L = row.empty() ? 0 : row.front().size();
    ComplexVec h(long(row.size()) * L);
    for (std::size_t mu = 0; mu < row.size(); ++mu) h.segment(long(mu) * L, L) = row[mu];
    return h;
}

RealVec config_profile(const SystemConfig& cfg) {
    if (cfg.profile.empty()) return default_profile(cfg.L);
    RealVec p = Eigen::Map<const RealVec>(cfg.profile.data(), long(cfg.profile.size()));
    if (p.size() != cfg.L) throw ConfigError("profile length must equal L");
    if ((p.array() < 0).any() || !(p.sum() > 0)) throw ConfigError("profile must be nonnegative with positive sum");
    return p / p.sum();
}

ChannelSet gen_channel(const SystemConfig& cfg, const RealVec& profile, Rng& rng) {
    if (profile.size() != cfg.L) throw ConfigError("gen_channel: profile length != L");
    if (std::abs(profile.sum() - 1.0) > 1e-12) throw ConfigError("gen_channel: profile must sum to 1");
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    ChannelSet ch;
    ch.profile = profile;
    ch.taps.assign(std::size_t(cfg.Nr), std::vector<ComplexVec>(std::size_t(cfg.Nt)));
    for (int nu = 0; nu < cfg.Nr; ++nu) {
        for (int mu = 0; mu < cfg.Nt; ++mu) {
            ComplexVec h(cfg.L);
            do {
                for (int l = 0; l < cfg.L; ++l) {
                    const double s = std::sqrt(profile[l]);
                    const double re = nd(rng), im = nd(rng);
                    h[l] = s > 0 ? cplx(s * re, s * im) : cplx(0);
                }
            } while (h.squaredNorm() == 0.0);
            ch.taps[std::size_t(nu)][std::size_t(mu)] = std::move(h);
        }
    }
    return ch;
}

bool cfo_in_range(double eps, int Q) { return std::isfinite(eps) && eps > cfo_lower(Q) && eps <= cfo_upper(Q); }

double wrap_cfo(double x, int Q) {
    double r = mod_floor(x - cfo_lower(Q), double(Q));
    if (r == 0.0) r = Q;
    return cfo_lower(Q) + r;
}

double draw_cfo(int Q, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // 1 - u lies in (0, 1], mapping onto (lo, hi]
    return cfo_lower(Q) + double(Q) * (1.0 - u(rng));
}

void apply_cfo(ComplexVec& y, double eps, int N, int Ng) {
    for (long n = 0; n < y.size(); ++n)
        y[n] *= std::polar(1.0, 2.0 * kPi * eps * double(Ng + n) / double(N));
}

std::vector<ComplexVec> received_signal(const SystemConfig& cfg, const TrainingSet& ts, const ChannelSet& ch,
                                        double eps) {
    if (ts.num_tx() != cfg.Nt || ch.num_tx() != cfg.Nt || ch.num_rx() != cfg.Nr)
        throw ConfigError("transmit: antenna counts disagree with the configuration");
    if (!cfo_in_range(eps, cfg.Q))
        throw ConfigError("transmit: CFO " + std::to_string(eps) + " outside (-floor(Q/2), Q-floor(Q/2)]");
    const numkit::FftPlan<double> plan(std::size_t(cfg.N));
    const double sqrt_n = std::sqrt(double(cfg.N));
    std::vector<ComplexVec> out;
    for (int nu = 0; nu < cfg.Nr; ++nu) {
        ComplexVec acc = ComplexVec::Zero(cfg.N);
        for (int mu = 0; mu < cfg.Nt; ++mu) {
            const ComplexVec& h = ch.taps[std::size_t(nu)][std::size_t(mu)];
            if (h.size() != cfg.L || ts.freq_symbols[std::size_t(mu)].size() != cfg.N)
                throw ConfigError("transmit: tap or symbol length mismatch");
            ComplexVec hp = ComplexVec::Zero(cfg.N);
            hp.head(cfg.L) = h;
            acc += plan(hp).cwiseProduct(ts.freq_symbols[std::size_t(mu)]);
        }
        ComplexVec y = plan(acc, true) * sqrt_n;
        apply_cfo(y, eps, cfg.N, cfg.Ng);
        out.push_back(std::move(y));
    }
    return out;
}

std::vector<ComplexVec> draw_noise(const SystemConfig& cfg, Rng& rng) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    std::vector<ComplexVec> w;
    for (int nu = 0; nu < cfg.Nr; ++nu) {
        ComplexVec v(cfg.N);
        for (auto& x : v) {
            const double re = nd(rng);
            x = {re, nd(rng)};
        }
        w.push_back(std::move(v));
    }
    return w;
}

ReceivedFrame transmit(const SystemConfig& cfg, const TrainingSet& ts, const ChannelSet& ch, double eps,
                       double noise_var, Rng& rng) {
    if (!(noise_var >= 0) || !std::isfinite(noise_var)) throw ConfigError("transmit: noise variance must be >= 0");
    ReceivedFrame f;
    f.y = received_signal(cfg, ts, ch, eps);
    f.true_cfo = eps;
    f.noise_var = noise_var;
    f.snr_db = noise_var > 0 ? -10.0 * std::log10(noise_var) : std::numeric_limits<double>::infinity();
    if (noise_var > 0) {
        const auto w = draw_noise(cfg, rng);
        const double s = std::sqrt(noise_var);
        for (std::size_t nu = 0; nu < f.y.size(); ++nu) f.y[nu] += s * w[nu];
    }
    return f;
}

double snr_to_noise_var(const SystemConfig& cfg, const TrainingSet& ts, double snr_db) {
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
    if (ts.num_tx() != cfg.Nt) throw DimensionError("snr_to_noise_var: training set does not match config");
    return std::pow(10.0, -snr_db / 10.0);
}

}  // namespace cfolab
