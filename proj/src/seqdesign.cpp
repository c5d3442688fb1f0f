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

#include "cfolab/seqdesign.hpp"

#include "cfolab/numkit/fft.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace cfolab {

namespace {

// exp(j pi k / P) with k reduced mod 2P in integer arithmetic.
cplx half_turn_phase(long long k, long long P) {
    const long long r = mod_floor(k, 2 * P);
    return std::polar(1.0, kPi * double(r) / double(P));
}

std::string join(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

}  // namespace

SystemConfig make_config(int N, int Ng, int P, int Nt, int Nr, int L, std::vector<int> pilot_offsets) {
    SystemConfig cfg;
    cfg.N = N;
    cfg.Ng = Ng;
    cfg.P = P;
    cfg.Q = P > 0 ? N / P : 0;
    cfg.Nt = Nt;
    cfg.Nr = Nr;
    cfg.L = L;
    cfg.chu_v = 1;
    cfg.N_I = Nt;
    cfg.eps_th = 0.75;
    cfg.pilot_offsets = pilot_offsets.empty() ? default_pilot_offsets(cfg.Q, Nt) : std::move(pilot_offsets);
    return cfg;
}

int shift_correlation_metric(int Q, const std::vector<int>& offsets) {
    if (Q < 2) return 0;
    std::vector<int> l(static_cast<std::size_t>(Q), 0);
    for (int i : offsets)
        if (i >= 0 && i < Q) l[static_cast<std::size_t>(i)] = 1;
    int best = std::numeric_limits<int>::max();
    for (int q = 1; q < Q; ++q) {
        int s = 0;
        for (int n = 0; n < Q; ++n) s += (1 - l[std::size_t(n)]) * l[std::size_t(mod_floor(n - q, Q))];
        best = std::min(best, s);
    }
    return best;
}

int min_circular_gap(int Q, const std::vector<int>& offsets) {
    int best = std::numeric_limits<int>::max();
    for (std::size_t a = 0; a < offsets.size(); ++a)
        for (std::size_t b = 0; b < offsets.size(); ++b)
            if (a != b) best = std::min<int>(best, int(mod_floor(offsets[b] - offsets[a], Q)));
    return offsets.size() < 2 ? 0 : best;
}

std::vector<int> default_pilot_offsets(int Q, int Nt) {
    if (Nt < 1 || Q < Nt) throw ConfigError("default_pilot_offsets: need 1 <= Nt <= Q");
    std::vector<int> v;
    for (int mu = 0; mu < Nt; ++mu) v.push_back(mu * Q / Nt + Q / (2 * Nt));
    if (Nt == 1 || shift_correlation_metric(Q, v) > 0) return v;

    double combos = 1;
    for (int k = 0; k < Nt; ++k) combos = combos * double(Q - k) / double(k + 1);
    if (combos > 2e5)
        throw ConfigError("default_pilot_offsets: no default for Q=" + std::to_string(Q) +
                          ", Nt=" + std::to_string(Nt) + "; set pilot_offsets explicitly");

    // Exhaustive: prefer C3-valid sets avoiding offset 0, then the widest
    // minimum gap, then the largest shift metric.
    std::vector<int> best;
    std::tuple<int, int, int, int> best_score{-1, -1, -1, -1};
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
        if (int(cur.size()) == Nt) {
            const int sm = shift_correlation_metric(Q, cur);
            const auto score = std::make_tuple(sm > 0 ? 1 : 0, cur[0] != 0 ? 1 : 0, min_circular_gap(Q, cur), sm);
            if (score > best_score) {
                best_score = score;
                best = cur;
            }
            return;
        }
        for (int i = start; i < Q; ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
    return best;
}

RealVec default_profile(int L) {
    if (L < 1) throw ConfigError("default_profile: L must be >= 1");
    RealVec p = RealVec::Zero(L);
    if (L >= 9) {
        const int taps[4] = {0, 2, 4, 8};
        const double db[4] = {0.0, -9.7, -19.2, -22.8};
        for (int k = 0; k < 4; ++k) p[taps[k]] = std::pow(10.0, db[k] / 10.0);
    } else {
        p.setOnes();
    }
    return p / p.sum();
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::ok() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
}

bool ValidationReport::structural_ok() const {
    return std::all_of(conditions.begin(), conditions.end(),
                       [](const auto& c) { return c.pass || !c.structural; });
}

const ConditionResult* ValidationReport::find(const std::string& id) const {
    for (const auto& c : conditions)
        if (c.id == id) return &c;
    return nullptr;
}

std::string ValidationReport::failures() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& c : conditions) {
        if (c.pass) continue;
        os << (first ? "" : "; ") << c.id << " (" << c.description << "): " << c.detail;
        first = false;
    }
    return os.str();
}

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    for (const auto& c : conditions) {
        os << (c.pass ? "  PASS  " : "  FAIL  ") << c.id;
        os << std::string(c.id.size() < 8 ? 8 - c.id.size() : 1, ' ') << c.description;
        if (!c.detail.empty()) os << "  [" << c.detail << "]";
        os << "\n";
    }
    return os.str();
}

ValidationReport validate_conditions(const SystemConfig& c) {
    ValidationReport r;
    auto add = [&](std::string id, std::string desc, bool pass, bool structural, std::string detail) {
        r.conditions.push_back({std::move(id), std::move(desc), pass, structural, std::move(detail)});
    };
    std::ostringstream d;

    const bool dims_ok = is_power_of_two(c.N) && is_power_of_two(c.P) && c.P >= 2 && c.Q >= 1 &&
                         (long long)c.P * c.Q == c.N && c.N % c.P == 0;
    d << "N=" << c.N << " P=" << c.P << " Q=" << c.Q;
    if (!is_power_of_two(c.N)) d << "; N not a power of two";
    if (!is_power_of_two(c.P)) d << "; P not a power of two";
    if ((long long)c.P * c.Q != c.N) d << "; N != P*Q";
    add("dims", "N = P*Q with N, P powers of two, P even", dims_ok, true, d.str());

    d.str("");
    bool params_ok = c.Nt >= 1 && c.Nr >= 1 && c.L >= 1 && c.eps_th > 0.5 && c.eps_th < 1.0 && c.N_I >= c.Nt &&
                     c.N_I >= 1 && c.N_I <= c.P;
    d << "Nt=" << c.Nt << " Nr=" << c.Nr << " L=" << c.L << " N_I=" << c.N_I << " eps_th=" << c.eps_th;
    if (c.N_I < c.Nt) d << "; N_I < Nt";
    if (!(c.eps_th > 0.5 && c.eps_th < 1.0)) d << "; eps_th outside (0.5, 1)";
    if (!c.profile.empty()) {
        const bool prof_ok = int(c.profile.size()) == c.L &&
                             std::all_of(c.profile.begin(), c.profile.end(), [](double x) { return x >= 0; }) &&
                             std::accumulate(c.profile.begin(), c.profile.end(), 0.0) > 0;
        if (!prof_ok) d << "; profile must have L nonnegative entries with positive sum";
        params_ok = params_ok && prof_ok;
    }
    add("params", "Nt, Nr, L >= 1; N_I >= Nt; 0.5 < eps_th < 1", params_ok, true, d.str());

    d.str("");
    bool c0 = int(c.pilot_offsets.size()) == c.Nt;
    for (std::size_t k = 0; k < c.pilot_offsets.size(); ++k) {
        const int i = c.pilot_offsets[k];
        if (i < 0 || i >= c.Q) c0 = false;
        if (k > 0 && c.pilot_offsets[k - 1] >= i) c0 = false;
    }
    d << "offsets={" << join(c.pilot_offsets) << "}";
    if (int(c.pilot_offsets.size()) != c.Nt) d << "; expected " << c.Nt << " offsets";
    add("C0", "0 <= i_0 < i_1 < ... < i_{Nt-1} < Q", c0, true, d.str());

    d.str("");
    const bool c1 = c.P % 2 == 0 && c.P > 0 && std::gcd(c.chu_v, c.P) == 1;
    d << "P=" << c.P << " v=" << c.chu_v << " gcd=" << std::gcd(c.chu_v, c.P);
    add("C1", "pilot comb i_mu + pQ with nonzero Chu base (P even, gcd(v,P)=1)", c1, true, d.str());

    d.str("");
    d << "N/Nt=" << (c.Nt > 0 ? double(c.N) / c.Nt : 0.0);
    add("C2", "training energy N/Nt per antenna", c.Nt >= 1, true, d.str());

    d.str("");
    d << "Ng=" << c.Ng << " L-1=" << c.L - 1;
    add("CP", "Ng >= L - 1", c.Ng >= c.L - 1 && c.Ng >= 0, true, d.str());

    d.str("");
    const long long rest = (long long)c.N - (long long)c.Nt * c.P;
    d << "N-Nt*P=" << rest << " Nt*P=" << (long long)c.Nt * c.P;
    add("C3.1", "N - Nt*P >= Nt*P", rest >= (long long)c.Nt * c.P, false, d.str());

    d.str("");
    d << "P=" << c.P << " L=" << c.L;
    add("C3.2", "P >= L", c.P >= c.L, false, d.str());

    d.str("");
    int sm = 0;
    int worst_q = 0;
    if (c0 && c.Q >= 2) {
        sm = shift_correlation_metric(c.Q, c.pilot_offsets);
        std::vector<int> l(std::size_t(c.Q), 0);
        for (int i : c.pilot_offsets) l[std::size_t(i)] = 1;
        for (int q = 1; q < c.Q; ++q) {
            int s = 0;
            for (int n = 0; n < c.Q; ++n) s += (1 - l[std::size_t(n)]) * l[std::size_t(mod_floor(n - q, c.Q))];
            if (s == sm) {
                worst_q = q;
                break;
            }
        }
        d << "min_q (1-l)^T l^(q) = " << sm << " at q=" << worst_q;
    } else {
        d << "needs valid C0 and Q >= 2";
    }
    add("C3.3", "(1_Q - l)^T l^(q) > 0 for q = 1..Q-1", c0 && c.Q >= 2 && sm > 0, false, d.str());

    d.str("");
    d << "Nr*P=" << (long long)c.Nr * c.P << " Q=" << c.Q;
    add("C4", "Nr*P > Q", (long long)c.Nr * c.P > c.Q, false, d.str());
    return r;
}

void require_structural(const SystemConfig& cfg) {
    const auto r = validate_conditions(cfg);
    if (!r.structural_ok()) throw ConfigError("invalid configuration: " + r.failures());
}

void require_valid(const SystemConfig& cfg) {
    const auto r = validate_conditions(cfg);
    if (!r.ok()) throw ConfigError("invalid configuration: " + r.failures());
}

// ---------------------------------------------------------------------------
// Sequences

std::string to_string(Variant v) {
    switch (v) {
        case Variant::TS0: return "TS0";
        case Variant::TS1: return "TS1";
        case Variant::RS: return "RS";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "TS0" || s == "ts0") return Variant::TS0;
    if (s == "TS1" || s == "ts1") return Variant::TS1;
    if (s == "RS" || s == "rs") return Variant::RS;
    throw ConfigError("unknown training variant '" + s + "' (expected TS0, TS1 or RS)");
}

ComplexVec chu_sequence(int P, int v) {
    if (P <= 0 || P % 2 != 0) throw ConfigError("chu_sequence: P must be even and positive");
    if (std::gcd(v, P) != 1) throw ConfigError("chu_sequence: v must be coprime to P");
    ComplexVec s(P);
    for (long long p = 0; p < P; ++p) s[p] = half_turn_phase((long long)v * p * p, P);
    return s;
}

ComplexVec cyclic_down_shift(const ComplexVec& x, long m) {
    const long n = x.size();
    ComplexVec out(n);
    for (long p = 0; p < n; ++p) out[p] = x[mod_floor(p - m, n)];
    return out;
}

TrainingSet training_set_from_base(const SystemConfig& cfg, Variant variant, std::vector<ComplexVec> base) {
    require_structural(cfg);
    if (int(base.size()) != cfg.Nt) throw DimensionError("training set: expected Nt base sequences");
    const double target = double(cfg.N) / cfg.Nt;
    for (const auto& s : base) {
        if (s.size() != cfg.P) throw DimensionError("training set: base sequence length != P");
        if (std::abs(s.squaredNorm() - target) > 1e-9 * target)
            throw ConfigError("training set: base sequence energy != N/Nt");
        if ((s.array() == cplx(0)).any()) throw ConfigError("training set: base sequence has a zero element");
    }

    TrainingSet ts;
    ts.variant = variant;
    ts.pilot_offsets = cfg.pilot_offsets;
    ts.base_sequences = std::move(base);
    const numkit::FftPlan<double> fftP(std::size_t(cfg.P));
    const double inv_sqrt_q = 1.0 / std::sqrt(double(cfg.Q));
    for (int mu = 0; mu < cfg.Nt; ++mu) {
        ts.time_blocks.push_back(fftP(ts.base_sequences[mu], true) * inv_sqrt_q);
        ComplexVec t = ComplexVec::Zero(cfg.N);
        for (int p = 0; p < cfg.P; ++p) t[cfg.pilot_offsets[mu] + p * cfg.Q] = ts.base_sequences[mu][p];
        ts.freq_symbols.push_back(std::move(t));
    }
    ts.time_frames = map_to_frame(ts, cfg);
    return ts;
}

TrainingSet make_training_set(const SystemConfig& cfg, Variant variant, Rng* rng) {
    require_structural(cfg);
    const numkit::FftPlan<double> fftP(std::size_t(cfg.P));
    const double amp = std::sqrt(double(cfg.Q) / cfg.Nt);
    std::vector<ComplexVec> base;

    if (variant == Variant::RS) {
        Rng local = substream(cfg.seed, Stream::Pilots);
        Rng& g = rng ? *rng : local;
        std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
        const double target = double(cfg.N) / cfg.Nt;
        for (int mu = 0; mu < cfg.Nt; ++mu) {
            ComplexVec s(cfg.P);
            do {
                for (auto& x : s) x = {nd(g), nd(g)};
            } while ((s.array() == cplx(0)).any());
            s *= std::sqrt(target / s.squaredNorm());
            base.push_back(std::move(s));
        }
    } else {
        const ComplexVec chu = chu_sequence(cfg.P, cfg.chu_v);
        const int M = cfg.shift_M();
        for (int mu = 0; mu < cfg.Nt; ++mu) {
            const ComplexVec src = variant == Variant::TS0 ? cyclic_down_shift(chu, long(mu) * M) : chu;
            base.push_back(fftP(src) * amp);
        }
    }
    return training_set_from_base(cfg, variant, std::move(base));
}

std::vector<ComplexVec> map_to_frame(const TrainingSet& ts, const SystemConfig& cfg) {
    const numkit::FftPlan<double> fftN(std::size_t(cfg.N));
    const double sqrt_n = std::sqrt(double(cfg.N));
    std::vector<ComplexVec> frames;
    for (const auto& t : ts.freq_symbols) {
        if (t.size() != cfg.N) throw DimensionError("map_to_frame: symbol length != N");
        const ComplexVec body = fftN(t, true) * sqrt_n;
        ComplexVec f(cfg.Ng + cfg.N);
        f.head(cfg.Ng) = body.tail(cfg.Ng);
        f.tail(cfg.N) = body;
        frames.push_back(std::move(f));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Design diagnostics

cplx t_matrix_entry(const TrainingSet& ts, const SystemConfig& cfg, int mu, int mu2, int l, int l2) {
    const ComplexVec a = cyclic_down_shift(ts.time_blocks[mu], l);
    const ComplexVec b = cyclic_down_shift(ts.time_blocks[mu2], l2);
    const int shift = ts.pilot_offsets[mu] - ts.pilot_offsets[mu2];
    cplx acc = 0;
    for (int p = 0; p < cfg.P; ++p)
        acc += a[p] * std::polar(1.0, 2.0 * kPi * double(shift) * p / cfg.N) * std::conj(b[p]);
    return acc;
}

cplx alpha_entry(const TrainingSet& ts, const SystemConfig& cfg, int mu, int mu2, int l, int l2) {
    const ComplexVec a = cyclic_down_shift(ts.time_blocks[mu], l);
    const ComplexVec b = cyclic_down_shift(ts.time_blocks[mu2], l2);
    const int im = ts.pilot_offsets[mu], im2 = ts.pilot_offsets[mu2];
    cplx acc = 0;
    for (int p = 0; p < cfg.P; ++p)
        acc += std::conj(a[p]) * std::polar(1.0, 2.0 * kPi * double(im2 - im) * p / cfg.N) * b[p];
    const double ph = 2.0 * kPi * double(mod_floor((long long)l * im - (long long)l2 * im2, cfg.N)) / cfg.N;
    return std::polar(1.0, ph) * acc;
}

namespace {

// Chu closed form of T^(mu,mu') for TS0 (m = 0) and TS1 (m = 1).
cplx t_closed_form(const SystemConfig& cfg, int m, int mu, int mu2, int l, int l2, int i1, int i2) {
    const long long M = cfg.shift_M();
    const long long P = cfg.P, v = cfg.chu_v;
    const long long p1 = (1 - m) * mu * M + l;
    const long long p2 = (1 - m) * mu2 * M + l2;
    const long long dv = v * (p1 - p2);
    const double varpi = double(i1 - i2) / cfg.Q;
    const double sign = (mod_floor(dv + 1, 2) == 0) ? 1.0 : -1.0;
    const cplx quad = half_turn_phase(v * (p1 * p1 - p2 * p2), P);
    const double a = double(dv) - varpi;
    const cplx tilt = std::polar(1.0, -kPi * double(P - 1) * a / double(P));
    const double den = std::sin(kPi * a / double(P));
    double ratio;
    if (std::abs(den) < 1e-12) {
        // varpi integer (mu == mu') and dv = kP: limit of sin(pi varpi)/sin(pi a / P)
        const long long k = dv / P;
        ratio = (mod_floor(k, 2) == 0 ? -1.0 : 1.0) * double(P);
    } else {
        ratio = std::sin(kPi * varpi) / den;
    }
    return sign * quad * tilt * ratio / double(cfg.Nt);
}

}  // namespace

DesignDiagnostics design_diagnostics(const TrainingSet& ts, const SystemConfig& cfg) {
    DesignDiagnostics dd;
    const int Nt = cfg.Nt, L = cfg.L;
    dd.t_bound = double(cfg.P) / Nt;
    const bool chu = ts.variant != Variant::RS;
    const int m = ts.variant == Variant::TS1 ? 1 : 0;
    const long long M = cfg.shift_M();

    for (int mu = 0; mu < Nt; ++mu) {
        for (int mu2 = 0; mu2 < Nt; ++mu2) {
            for (int l = 0; l < L; ++l) {
                for (int l2 = 0; l2 < L; ++l2) {
                    TEntry e{mu, mu2, l, l2};
                    const cplx t = t_matrix_entry(ts, cfg, mu, mu2, l, l2);
                    e.abs_direct = std::abs(t);
                    if (chu) {
                        const cplx tc = t_closed_form(cfg, m, mu, mu2, l, l2, ts.pilot_offsets[mu], ts.pilot_offsets[mu2]);
                        e.abs_closed = std::abs(tc);
                        dd.closed_form_max_error = std::max(dd.closed_form_max_error, std::abs(tc - t));
                    }
                    if (mu != mu2) {
                        dd.max_cross_t = std::max(dd.max_cross_t, e.abs_direct);
                        if (chu) {
                            const long long p1 = (1 - m) * mu * M + l, p2 = (1 - m) * mu2 * M + l2;
                            if (p1 == p2)
                                dd.max_peak_cross_t = std::max(dd.max_peak_cross_t, e.abs_direct);
                            else
                                dd.max_offpeak_cross_t = std::max(dd.max_offpeak_cross_t, e.abs_direct);
                        }
                    } else if (l == l2) {
                        dd.max_auto_t = std::max(dd.max_auto_t, e.abs_direct);
                    }
                    dd.t_table.push_back(e);

                    if (mu != mu2) {
                        const double aa = std::abs(alpha_entry(ts, cfg, mu, mu2, l, l2));
                        dd.alpha_table.push_back({mu, mu2, l, l2, aa});
                        dd.max_alpha = std::max(dd.max_alpha, aa);
                        if (aa >= 1.0 / Nt) ++dd.alpha_violations;
                    }
                }
            }
        }
    }

    dd.min_gap = min_circular_gap(cfg.Q, cfg.pilot_offsets);
    dd.shift_metric = shift_correlation_metric(cfg.Q, cfg.pilot_offsets);
    dd.varpi.resize(Nt, Nt);
    for (int a = 0; a < Nt; ++a)
        for (int b = 0; b < Nt; ++b) dd.varpi(a, b) = double(cfg.pilot_offsets[a] - cfg.pilot_offsets[b]) / cfg.Q;
    return dd;
}

std::string DesignDiagnostics::to_text() const {
    std::ostringstream os;
    os << "  |T| bound P/Nt            : " << t_bound << "\n";
    os << "  max |T| auto (mu=mu',l=l'): " << max_auto_t << "\n";
    os << "  max |T| cross (mu!=mu')   : " << max_cross_t << "\n";
    if (max_peak_cross_t > 0 || max_offpeak_cross_t > 0) {
        os << "    aligned (p = p')        : " << max_peak_cross_t << "\n";
        os << "    off-peak (p != p')      : " << max_offpeak_cross_t << "\n";
        if (max_offpeak_cross_t > 0)
            os << "    peak/off-peak ratio     : " << max_peak_cross_t / max_offpeak_cross_t << "\n";
        os << "  closed-form max error     : " << closed_form_max_error << "\n";
    }
    os << "  max |alpha| (mu!=mu'')    : " << max_alpha << "  (entries >= 1/Nt: " << alpha_violations << " of "
       << alpha_table.size() << ")\n";
    os << "  min circular pilot gap    : " << min_gap << "\n";
    os << "  shift-correlation metric  : " << shift_metric << "\n";
    return os.str();
}

std::string DesignDiagnostics::t_table_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "mu,mu2,l,l2,t_abs,t_abs_closed_form\n";
    for (const auto& e : t_table) {
        os << e.mu << "," << e.mu2 << "," << e.l << "," << e.l2 << "," << e.abs_direct << ",";
        if (e.abs_closed >= 0) os << e.abs_closed;
        os << "\n";
    }
    return os.str();
}

}  // namespace cfolab
