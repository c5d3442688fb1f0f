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

#include "cfolab/evalkit.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace cfolab {

namespace {

std::vector<long> pilot_bins(const SystemConfig& cfg) {
    std::vector<long> k;
    for (int i : cfg.pilot_offsets)
        for (int p = 0; p < cfg.P; ++p) k.push_back(long(i) + long(p) * cfg.Q);
    return k;
}

MeanWithError mean_and_error(const std::vector<double>& v) {
    MeanWithError r;
    if (v.empty()) return r;
    double s = 0;
    for (double x : v) s += x;
    r.mean = s / double(v.size());
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.stderr_ = std::sqrt(ss / double(v.size() - 1) / double(v.size()));
    }
    return r;
}

// Column (mu, l) of S before the sqrt(N) scaling: pilots of antenna mu
// carrying s~_mu[p] [F_N]_{i_mu + pQ, l}.
ComplexVec s_column_freq(const SystemConfig& cfg, const TrainingSet& ts, int mu, int l) {
    ComplexVec v = ComplexVec::Zero(cfg.N);
    const double inv = 1.0 / std::sqrt(double(cfg.N));
    for (int p = 0; p < cfg.P; ++p) {
        const long k = long(ts.pilot_offsets[std::size_t(mu)]) + long(p) * cfg.Q;
        const double ph = -2.0 * kPi * double(mod_floor(k * l, cfg.N)) / cfg.N;
        v[k] = ts.base_sequences[std::size_t(mu)][p] * std::polar(inv, ph);
    }
    return v;
}

}  // namespace

ModelOperators build_model_operators(const SystemConfig& cfg, const TrainingSet& ts) {
    if (ts.num_tx() != cfg.Nt) throw DimensionError("model operators: training set does not match Nt");
    const numkit::FftPlan<double> plan(std::size_t(cfg.N));
    ModelOperators ops;
    const long cols = long(cfg.Nt) * cfg.L;
    ops.S.resize(cfg.N, cols);
    for (int mu = 0; mu < cfg.Nt; ++mu)
        for (int l = 0; l < cfg.L; ++l) ops.S.col(long(mu) * cfg.L + l) = plan(s_column_freq(cfg, ts, mu, l), true);
    ops.b0 = RealVec::LinSpaced(cfg.N, cfg.Ng, cfg.Ng + cfg.N - 1);

    Eigen::ColPivHouseholderQR<ComplexMat> qr(ops.S);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols)
        throw NumericalError("model operators: S has rank " + std::to_string(qr.rank()) + " < Nt*L = " +
                             std::to_string(cols));
    ops.range_basis = qr.householderQ() * ComplexMat::Identity(cfg.N, cols);
    return ops;
}

double crb_snapshot(const ChannelSet& ch, const ModelOperators& ops, double noise_var, const SystemConfig& cfg) {
    if (ch.num_rx() != cfg.Nr || ch.num_tx() != cfg.Nt) throw DimensionError("crb: channel does not match config");
    double den = 0;
    for (int nu = 0; nu < cfg.Nr; ++nu) {
        const ComplexVec h = ch.stacked(nu);
        if (h.size() != ops.S.cols()) throw DimensionError("crb: channel length does not match S");
        const ComplexVec v = ops.b0.cast<cplx>().cwiseProduct(ops.S * h);
        const ComplexVec r = v - ops.range_basis * (ops.range_basis.adjoint() * v);
        den += r.squaredNorm();
    }
    if (!(den > 0)) throw NumericalError("crb: zero Fisher information (all-zero channel?)");
    return double(cfg.N) * noise_var / (8.0 * kPi * kPi * den);
}

MeanWithError average_crb(const SystemConfig& cfg, const TrainingSet& ts, double noise_var, int n_trials,
                          std::uint64_t seed) {
    if (n_trials < 1) throw ConfigError("average_crb: n_trials must be >= 1");
    const ModelOperators ops = build_model_operators(cfg, ts);
    const RealVec prof = config_profile(cfg);
    std::vector<double> v;
    for (int t = 0; t < n_trials; ++t) {
        Rng rng = substream(seed, Stream::Channel, std::uint64_t(t));
        v.push_back(crb_snapshot(gen_channel(cfg, prof, rng), ops, noise_var, cfg));
    }
    return mean_and_error(v);
}

MeanWithError average_crb(const SystemConfig& cfg, Variant variant, double noise_var, int n_trials,
                          std::uint64_t seed) {
    if (variant != Variant::RS) return average_crb(cfg, make_training_set(cfg, variant), noise_var, n_trials, seed);
    if (n_trials < 1) throw ConfigError("average_crb: n_trials must be >= 1");
    const RealVec prof = config_profile(cfg);
    std::vector<double> v;
    for (int t = 0; t < n_trials; ++t) {
        Rng rp = substream(seed, Stream::Pilots, std::uint64_t(t));
        const ModelOperators ops = build_model_operators(cfg, make_training_set(cfg, Variant::RS, &rp));
        Rng rng = substream(seed, Stream::Channel, std::uint64_t(t));
        v.push_back(crb_snapshot(gen_channel(cfg, prof, rng), ops, noise_var, cfg));
    }
    return mean_and_error(v);
}

// ---------------------------------------------------------------------------
// Monte-Carlo

std::vector<MonteCarloRow> run_monte_carlo(const SystemConfig& cfg, const MonteCarloSpec& spec) {
    require_valid(cfg);
    if (spec.n_trials < 1) throw ConfigError("monte carlo: n_trials must be >= 1");
    if (spec.variants.empty() || spec.snr_db.empty()) throw ConfigError("monte carlo: empty variant or SNR list");
    for (double s : spec.snr_db)
        if (!std::isfinite(s)) throw ConfigError("monte carlo: SNR must be finite");

    const EstimatorContext ctx(cfg);
    const RealVec prof = config_profile(cfg);
    const std::size_t nv = spec.variants.size(), ns = spec.snr_db.size(), nt = std::size_t(spec.n_trials);

    std::vector<TrainingSet> fixed(nv);
    std::vector<ModelOperators> fixed_ops(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        if (spec.variants[v] == Variant::RS) continue;
        fixed[v] = make_training_set(cfg, spec.variants[v]);
        fixed_ops[v] = build_model_operators(cfg, fixed[v]);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> err(nt * nv * ns, nan), secs(nt * nv * ns, 0.0), crb1(nt * nv, nan);
    std::vector<unsigned char> icfo_bad(nt * nv * ns, 0);
    auto at = [&](std::size_t t, std::size_t v, std::size_t s) { return (t * nv + v) * ns + s; };

    auto trial = [&](std::size_t t) {
        Rng rc = substream(cfg.seed, Stream::Channel, t);
        const ChannelSet ch = gen_channel(cfg, prof, rc);
        Rng re = substream(cfg.seed, Stream::Cfo, t);
        const double eps = draw_cfo(cfg.Q, re);
        Rng rn = substream(cfg.seed, Stream::Noise, t);
        const std::vector<ComplexVec> w = draw_noise(cfg, rn);
        const long eps_i = long(std::floor(eps + 0.5));

        for (std::size_t v = 0; v < nv; ++v) {
            TrainingSet rs;
            ModelOperators rs_ops;
            const TrainingSet* ts = &fixed[v];
            const ModelOperators* ops = &fixed_ops[v];
            if (spec.variants[v] == Variant::RS) {
                Rng rp = substream(cfg.seed, Stream::Pilots, t);
                rs = make_training_set(cfg, Variant::RS, &rp);
                rs_ops = build_model_operators(cfg, rs);
                ts = &rs;
                ops = &rs_ops;
            }
            crb1[t * nv + v] = crb_snapshot(ch, *ops, 1.0, cfg);
            const std::vector<ComplexVec> y0 = received_signal(cfg, *ts, ch, eps);
            for (std::size_t s = 0; s < ns; ++s) {
                const double sigma = std::sqrt(snr_to_noise_var(cfg, *ts, spec.snr_db[s]));
                std::vector<ComplexVec> y = y0;
                for (std::size_t nu = 0; nu < y.size(); ++nu) y[nu] += sigma * w[nu];
                const auto t0 = std::chrono::steady_clock::now();
                bool bad = true;
                try {
                    const CfoEstimate e = ctx.estimate(y);
                    err[at(t, v, s)] = wrap_cfo(e.cfo - eps, cfg.Q);
                    // the integer/fraction split may straddle +-0.5; judge the sum
                    bad = std::abs(err[at(t, v, s)]) >= 0.5;
                } catch (const AmbiguityError& a) {
                    bad = mod_floor(long(a.partial.icfo) - eps_i, long(cfg.Q)) != 0;
                } catch (const Error&) {
                }
                secs[at(t, v, s)] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                icfo_bad[at(t, v, s)] = bad;
            }
        }
    };

    const int nw = std::max(1, std::min(spec.workers, spec.n_trials));
    if (nw == 1) {
        for (std::size_t t = 0; t < nt; ++t) trial(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex m;
        std::vector<std::thread> pool;
        for (int k = 0; k < nw; ++k) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t t = next.fetch_add(1);
                    if (t >= nt) return;
                    try {
                        trial(t);
                    } catch (...) {
                        std::lock_guard<std::mutex> lk(m);
                        if (!failure) failure = std::current_exception();
                        next = nt;
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<MonteCarloRow> rows;
    for (std::size_t v = 0; v < nv; ++v) {
        std::vector<double> c;
        for (std::size_t t = 0; t < nt; ++t) c.push_back(crb1[t * nv + v]);
        const MeanWithError crb = mean_and_error(c);
        for (std::size_t s = 0; s < ns; ++s) {
            MonteCarloRow r;
            r.variant = spec.variants[v];
            r.snr_db = spec.snr_db[s];
            r.n_trials = spec.n_trials;
            std::vector<double> sq;
            std::size_t bad = 0;
            double tsum = 0;
            for (std::size_t t = 0; t < nt; ++t) {
                const double e = err[at(t, v, s)];
                if (!std::isnan(e)) sq.push_back(e * e);
                bad += icfo_bad[at(t, v, s)];
                tsum += secs[at(t, v, s)];
            }
            const MeanWithError m = mean_and_error(sq);
            r.mse = sq.empty() ? nan : m.mean;
            r.mse_stderr = sq.empty() ? nan : m.stderr_;
            r.icfo_error_rate = double(bad) / double(nt);
            r.ambiguity_rate = double(nt - sq.size()) / double(nt);
            const double var = std::pow(10.0, -spec.snr_db[s] / 10.0);
            r.avcrb = crb.mean * var;
            r.avcrb_stderr = crb.stderr_ * var;
            r.sec_per_trial = spec.timing ? tsum / double(nt) : -1.0;
            rows.push_back(r);
        }
    }
    return rows;
}

std::string monte_carlo_csv(const std::vector<MonteCarloRow>& rows) {
    std::ostringstream os;
    os << "variant,snr_db,n_trials,mse,mse_stderr,icfo_error_rate,ambiguity_rate,avcrb,avcrb_stderr,sec_per_trial\n";
    os << std::setprecision(10);
    for (const auto& r : rows) {
        os << to_string(r.variant) << ',' << r.snr_db << ',' << r.n_trials << ',' << r.mse << ',' << r.mse_stderr
           << ',' << r.icfo_error_rate << ',' << r.ambiguity_rate << ',' << r.avcrb << ',' << r.avcrb_stderr << ',';
        if (r.sec_per_trial < 0)
            os << "NA";
        else
            os << r.sec_per_trial;
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Identifiability

IdentifiabilityReport identifiability_scan(const SystemConfig& cfg, const TrainingSet& ts, const ChannelSet& ch,
                                           double grid_step) {
    if (!(grid_step > 0) || grid_step > 0.1) throw ConfigError("identifiability scan: grid step must be in (0, 0.1]");
    const auto y0 = received_signal(cfg, ts, ch, 0.0);
    const numkit::FftPlan<double> plan(std::size_t(cfg.N));
    const auto bins = pilot_bins(cfg);
    // integer number of points per unit so integer offsets are hit exactly
    const long per_unit = long(std::ceil(1.0 / grid_step - 1e-9));
    const long half = long(cfg.Q) * per_unit - 1;

    IdentifiabilityReport rep;
    for (const auto& y : y0) rep.total_energy += y.squaredNorm();
    rep.delta.resize(2 * half + 1);
    rep.d_values.resize(2 * half + 1);
    rep.min_value = std::numeric_limits<double>::infinity();
    for (long k = -half; k <= half; ++k) {
        const double d = double(k) / double(per_unit);
        double captured = 0;
        for (const auto& y : y0) {
            ComplexVec z = y;
            for (long n = 0; n < cfg.N; ++n) z[n] *= std::polar(1.0, 2.0 * kPi * d * double(n) / cfg.N);
            const ComplexVec Z = plan(z);
            for (long b : bins) captured += std::norm(Z[b]);
        }
        const double D = rep.total_energy - captured;
        rep.delta[k + half] = d;
        rep.d_values[k + half] = D;
        if (k == 0) rep.d_at_zero = D;
        if (std::abs(d) >= rep.exclusion && D < rep.min_value) {
            rep.min_value = D;
            rep.argmin = d;
        }
    }
    rep.pass = rep.min_value > 1e-9 * rep.total_energy;
    return rep;
}

// ---------------------------------------------------------------------------
// ICFO diagnostics

double r_normalize(double delta, int Q) {
    auto sgn = [](double x) { return x >= 0 ? 1.0 : -1.0; };
    const double h = Q / 2;
    return delta - (sgn(delta - Q + h) + sgn(delta + h)) * Q / 2.0;
}

namespace {

void closed_forms(const SystemConfig& cfg, cplx alpha, IcfoDiagRow& row) {
    const int Q = cfg.Q;
    const double sh = std::sin(row.theta / 2);
    const double sq = std::sin(Q * row.theta / 2);
    const double sd = std::sin((row.psi - row.theta) / 2);
    if (std::abs(sh) < 1e-9) {
        row.m_diag = double(cfg.N) / cfg.Nt;
        row.m_offdiag = 0;
    } else {
        row.m_diag = double(cfg.P) / (double(cfg.Nt) * Q) * sq * sq / (sh * sh);
        // (1 - e^{jQt})^2 / [(1 - e^{jt})(e^{jp} - e^{jt}) e^{j(Q-1)t}] in sine form
        row.m_offdiag = std::abs(sd) < 1e-9 ? cplx(0)
                                            : -alpha / double(Q) * std::polar(1.0, -row.psi / 2) * (sq * sq / (sh * sd));
    }
    row.m_offdiag_abs = std::abs(row.m_offdiag);
    if (std::abs(sh) < 1e-9 || std::abs(alpha) == 0.0)
        row.zeta = std::numeric_limits<double>::infinity();
    else
        row.zeta = double(cfg.P) / (cfg.Nt * std::abs(alpha)) * std::abs(std::sin(row.psi / 2)) *
                   std::abs(1.0 / std::tan(row.psi / 2) - 1.0 / std::tan(row.theta / 2));
}

}  // namespace

cplx m_entry_direct(const SystemConfig& cfg, const TrainingSet& ts, int mu, int mu1, int mu2, int l, int l2,
                    double delta) {
    const numkit::FftPlan<double> plan(std::size_t(cfg.N));
    const double sn = std::sqrt(double(cfg.N));
    const ComplexVec a = plan(s_column_freq(cfg, ts, mu, l), true) * sn;
    ComplexVec b = plan(s_column_freq(cfg, ts, mu2, l2), true) * sn;
    // G_mu1(delta) b = D(-delta) F^H Theta Theta^T F D(delta) b
    for (long n = 0; n < cfg.N; ++n) b[n] *= std::polar(1.0, 2.0 * kPi * delta * double(n) / cfg.N);
    ComplexVec B = plan(b);
    const int i1 = ts.pilot_offsets[std::size_t(mu1)];
    for (long k = 0; k < cfg.N; ++k)
        if (mod_floor(k - i1, long(cfg.Q)) != 0) B[k] = 0;
    ComplexVec g = plan(B, true);
    for (long n = 0; n < cfg.N; ++n) g[n] *= std::polar(1.0, -2.0 * kPi * delta * double(n) / cfg.N);
    return a.dot(g);  // a^H g
}

IcfoDiagnostics icfo_diagnostics(const SystemConfig& cfg, const TrainingSet& ts, int mu, int mu1, int mu2, int l,
                                 int l2, const std::vector<double>& deltas) {
    for (int m : {mu, mu1, mu2})
        if (m < 0 || m >= cfg.Nt) throw ConfigError("icfo diagnostics: antenna index out of range");
    if (mu == mu2) throw ConfigError("icfo diagnostics: need mu != mu''");
    if (l < 0 || l >= cfg.L || l2 < 0 || l2 >= cfg.L) throw ConfigError("icfo diagnostics: lag out of range");
    IcfoDiagnostics d;
    d.mu = mu;
    d.mu1 = mu1;
    d.mu2 = mu2;
    d.l = l;
    d.l2 = l2;
    d.alpha = alpha_entry(ts, cfg, mu, mu2, l, l2);
    const double i0 = ts.pilot_offsets[std::size_t(mu)], i1 = ts.pilot_offsets[std::size_t(mu1)],
                 i2 = ts.pilot_offsets[std::size_t(mu2)];
    const bool closed = ts.variant != Variant::RS;
    for (double delta : deltas) {
        IcfoDiagRow r;
        r.delta = delta;
        r.r_delta = r_normalize(delta, cfg.Q);
        r.theta = 2 * kPi * (i1 - i0 - delta) / cfg.Q;
        r.psi = 2 * kPi * (i2 - i0) / cfg.Q;
        closed_forms(cfg, d.alpha, r);
        if (!closed) {
            // non-constant-amplitude pilots: direct evaluation only
            r.m_diag = m_entry_direct(cfg, ts, mu, mu1, mu, l, l, delta).real();
            r.m_offdiag = m_entry_direct(cfg, ts, mu, mu1, mu2, l, l2, delta);
            r.m_offdiag_abs = std::abs(r.m_offdiag);
            r.zeta = r.m_offdiag_abs > 0 ? r.m_diag / r.m_offdiag_abs : std::numeric_limits<double>::infinity();
        }
        d.rows.push_back(r);
    }
    return d;
}

void check_icfo_closed_forms(const SystemConfig& cfg, const TrainingSet& ts, IcfoDiagnostics& diag, int n_points) {
    if (diag.rows.empty() || n_points < 1) return;
    double worst = 0;
    const std::size_t n = diag.rows.size();
    for (int k = 0; k < n_points; ++k) {
        const std::size_t idx = (std::size_t(k) * 7919u + 13u) % n;
        const IcfoDiagRow& r = diag.rows[idx];
        const cplx md = m_entry_direct(cfg, ts, diag.mu, diag.mu1, diag.mu, diag.l, diag.l, r.delta);
        const cplx mo = m_entry_direct(cfg, ts, diag.mu, diag.mu1, diag.mu2, diag.l, diag.l2, r.delta);
        worst = std::max({worst, std::abs(md - r.m_diag), std::abs(mo - r.m_offdiag)});
    }
    diag.max_direct_error = worst;
}

std::string IcfoDiagnostics::csv() const {
    std::ostringstream os;
    os << "r_delta,m_diag,m_offdiag_abs,zeta\n" << std::setprecision(12);
    for (const auto& r : rows) {
        os << r.r_delta << ',' << r.m_diag << ',' << r.m_offdiag_abs << ',';
        if (std::isinf(r.zeta))
            os << "inf";
        else
            os << r.zeta;
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Baseline

GridSearchResult grid_search_cfo(const std::vector<ComplexVec>& y, const SystemConfig& cfg, std::size_t fft_size) {
    if (fft_size < std::size_t(cfg.N) || fft_size % std::size_t(cfg.N) != 0)
        throw ConfigError("grid search: FFT size must be a multiple of N");
    const numkit::FftPlan<double> plan(fft_size);
    const long M = long(fft_size), over = M / cfg.N;
    RealVec pw = RealVec::Zero(M);
    for (const auto& v : y) {
        ComplexVec z = ComplexVec::Zero(M);
        z.head(cfg.N) = v;
        pw += plan(z).cwiseAbs2();
    }
    const auto bins = pilot_bins(cfg);
    GridSearchResult best{0, -1};
    const long lo = long(-(cfg.Q / 2)) * over + 1, hi = long(cfg.Q - cfg.Q / 2) * over;
    for (long j = lo; j <= hi; ++j) {
        double m = 0;
        for (long b : bins) m += pw[mod_floor(b * over + j, M)];
        if (m > best.metric) best = {double(j) / double(over), m};
    }
    return best;
}

}  // namespace cfolab
