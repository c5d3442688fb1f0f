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

#include "cfolab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cfolab {

namespace {

constexpr int kMaxQ = 64;
constexpr double kConditioningLimit = 1e6;

using i128 = __int128;

std::vector<std::vector<i128>> binomials(int n) {
    std::vector<std::vector<i128>> c(std::size_t(n + 1), std::vector<i128>(std::size_t(n + 1), 0));
    for (int a = 0; a <= n; ++a) {
        c[a][0] = 1;
        for (int b = 1; b <= a; ++b) c[a][b] = c[a - 1][b - 1] + c[a - 1][b];
    }
    return c;
}

cplx j_power(int k) {
    switch (mod_floor(k, 4)) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

TransformMatrices build_transform_matrices(int Q) {
    if (Q < 2 || Q > kMaxQ) throw ConfigError("transform matrices: Q must lie in [2, 64]");
    TransformMatrices tm;
    tm.Q = Q;
    tm.J = RealMat::Zero(Q, Q);
    for (int q = 0; q < Q; ++q) tm.J(q, Q - 1 - q) = 1.0;

    const int h = Q / 2;
    const double r = 1.0 / std::sqrt(2.0);
    const cplx jr(0, r);
    tm.L_mat = ComplexMat::Zero(Q, Q);
    for (int k = 0; k < h; ++k) {
        tm.L_mat(k, k) = r;
        tm.L_mat(k, Q - h + k) = jr;
        tm.L_mat(Q - 1 - k, k) = r;
        tm.L_mat(Q - 1 - k, Q - h + k) = -jr;
    }
    if (Q % 2 == 1) tm.L_mat(h, h) = 1.0;

    const auto C = binomials(Q - 1);
    tm.Phi.resize(Q, Q);
    for (int q = 0; q < Q; ++q) {
        for (int qp = 0; qp < Q; ++qp) {
            i128 s = 0;
            const int lo = std::max(0, q + qp - Q + 1), hi = std::min(q, qp);
            for (int k = lo; k <= hi; ++k) {
                const i128 t = C[q][k] * C[Q - 1 - q][qp - k];
                s += ((Q - 1 - q - qp + k) % 2 == 0) ? t : -t;
            }
            tm.Phi(q, qp) = j_power(Q - 1 - qp) * double(s);
        }
    }

    // Rows q and Q-1-q of Phi and L are conjugates, so their contributions
    // to Phi^H L are conjugates too: summing 2 Re over the upper half keeps
    // the product exactly real.
    tm.PhiHL = RealMat::Zero(Q, Q);
    for (int a = 0; a < Q; ++a) {
        for (int c = 0; c < Q; ++c) {
            double acc = 0;
            for (int q = 0; q < h; ++q) acc += 2.0 * (std::conj(tm.Phi(q, a)) * tm.L_mat(q, c)).real();
            if (Q % 2 == 1) acc += (std::conj(tm.Phi(h, a)) * tm.L_mat(h, c)).real();
            tm.PhiHL(a, c) = acc;
        }
    }
    return tm;
}

RealVec icfo_metric_from_power(const RealVec& bin_power, const SystemConfig& cfg) {
    const int Q = cfg.Q;
    if (bin_power.size() != cfg.N) throw DimensionError("icfo metric: power vector length != N");
    // energy per residue class k mod Q; the comb shifted by m collects
    // classes (i_mu + m) mod Q
    RealVec cls = RealVec::Zero(Q);
    for (long k = 0; k < bin_power.size(); ++k) cls[k % Q] += bin_power[k];
    RealVec metric = RealVec::Zero(Q);
    for (int k = 0; k < Q; ++k) {
        const int m = icfo_candidate(k, Q);
        for (int i : cfg.pilot_offsets) metric[k] += cls[mod_floor(i + m, Q)];
    }
    return metric;
}

IcfoResult estimate_icfo(const std::vector<ComplexVec>& y, const SystemConfig& cfg,
                         const numkit::FftPlan<double>* plan) {
    if (int(y.size()) != cfg.Nr) throw DimensionError("estimate_icfo: expected Nr receive vectors");
    std::unique_ptr<numkit::FftPlan<double>> own;
    if (!plan) {
        own = std::make_unique<numkit::FftPlan<double>>(std::size_t(cfg.N));
        plan = own.get();
    }
    RealVec power = RealVec::Zero(cfg.N);
    for (const auto& v : y) {
        if (v.size() != cfg.N) throw DimensionError("estimate_icfo: receive vector length != N");
        power += (*plan)(v).cwiseAbs2();
    }
    IcfoResult r;
    r.metric = icfo_metric_from_power(power, cfg);
    int best = 0;
    for (int k = 1; k < cfg.Q; ++k) {
        const double a = r.metric[k], b = r.metric[best];
        const int mk = icfo_candidate(k, cfg.Q), mb = icfo_candidate(best, cfg.Q);
        if (a > b || (a == b && (std::abs(mk) < std::abs(mb) || (std::abs(mk) == std::abs(mb) && mk < mb))))
            best = k;
    }
    r.icfo = icfo_candidate(best, cfg.Q);
    return r;
}

std::vector<ComplexVec> correct_icfo(const std::vector<ComplexVec>& y, double icfo, const SystemConfig& cfg) {
    std::vector<ComplexVec> out = y;
    if (icfo == 0) return out;
    for (auto& v : out) apply_cfo(v, -icfo, cfg.N, cfg.Ng);
    return out;
}

SubspaceDecomposition stack_and_covariance(const std::vector<ComplexVec>& ybar, const SystemConfig& cfg,
                                           const TransformMatrices& tm) {
    const int Q = cfg.Q, P = cfg.P, Nr = cfg.Nr;
    if ((long long)Nr * P <= Q) throw ConfigError("covariance: Nr*P must exceed Q");
    if (tm.Q != Q) throw DimensionError("covariance: transform matrices built for a different Q");
    if (int(ybar.size()) != Nr) throw DimensionError("covariance: expected Nr receive vectors");
    if (cfg.Nt >= Q) throw DegenerateInputError("covariance: signal subspace fills all Q dimensions");

    SubspaceDecomposition d;
    d.Y.resize(Q, long(Nr) * P);
    for (int nu = 0; nu < Nr; ++nu) {
        if (ybar[std::size_t(nu)].size() != cfg.N) throw DimensionError("covariance: receive vector length != N");
        d.Y.block(0, long(nu) * P, Q, P) =
            Eigen::Map<const ComplexMat>(ybar[std::size_t(nu)].data(), P, Q).transpose();
    }
    d.Ryy = d.Y * d.Y.adjoint() / double(Nr * P);
    d.Ryy = (d.Ryy + d.Ryy.adjoint()).eval() / 2.0;
    d.Rr = (tm.L_mat.adjoint() * d.Ryy * tm.L_mat).real();
    d.Rr = (d.Rr + d.Rr.transpose()).eval() / 2.0;
    if (!d.Rr.allFinite()) throw NumericalError("covariance: non-finite entries");

    const auto es = numkit::eig_sym_real<double>(d.Rr);
    d.eigenvalues = es.values;
    d.E_X = es.vectors.leftCols(cfg.Nt);
    d.E_V = es.vectors.rightCols(Q - cfg.Nt);
    return d;
}

numkit::RealPoly<double> fcfo_polynomial(const SubspaceDecomposition& dec, const TransformMatrices& tm) {
    const long Q = tm.Q;
    if (dec.E_V.rows() != Q || dec.E_V.cols() == 0) throw DegenerateInputError("fcfo polynomial: empty noise subspace");
    // Projector as E_V E_V^T rather than I - E_X E_X^T: no cancellation and
    // the quadratic form stays nonnegative on the real axis.
    const RealMat G = tm.PhiHL * dec.E_V;
    const RealMat M = G * G.transpose();
    RealVec c = RealVec::Zero(2 * Q - 1);
    for (long q = 0; q < Q; ++q)
        for (long qp = 0; qp < Q; ++qp) c[q + qp] += M(q, qp);
    if (!c.allFinite()) throw NumericalError("fcfo polynomial: non-finite coefficients");
    if (c.cwiseAbs().maxCoeff() == 0.0) throw DegenerateInputError("fcfo polynomial: all coefficients vanish");
    return numkit::RealPoly<double>(c);
}

namespace {

struct ShiftFit {
    bool full = false;  // every root matched to a distinct window
    double spread = 0;  // mean squared deviation of per-root offsets
    double max_dev = 0;
    double mean = 0;
    std::vector<int> windows;
    std::vector<double> offsets;
};

// Per-root offsets against the windows i_mu + d.
ShiftFit fit_shift(const std::vector<double>& betas, const SystemConfig& cfg, int d) {
    const int Q = cfg.Q;
    ShiftFit f;
    std::vector<bool> used(cfg.pilot_offsets.size(), false);
    for (double b : betas) {
        int best = -1;
        double bo = 0, bd = cfg.eps_th;
        for (int mu = 0; mu < int(cfg.pilot_offsets.size()); ++mu) {
            const double o = mod_floor(b - cfg.pilot_offsets[std::size_t(mu)] - d + Q / 2.0, double(Q)) - Q / 2.0;
            if (std::abs(o) < bd) {
                bd = std::abs(o);
                bo = o;
                best = mu;
            }
        }
        if (best < 0 || used[std::size_t(best)]) return f;
        used[std::size_t(best)] = true;
        f.windows.push_back(best);
        f.offsets.push_back(bo);
    }
    f.full = !betas.empty();
    for (double o : f.offsets) f.mean += o / double(f.offsets.size());
    for (double o : f.offsets) {
        f.spread += (o - f.mean) * (o - f.mean) / double(f.offsets.size());
        f.max_dev = std::max(f.max_dev, std::abs(o - f.mean));
    }
    return f;
}

void revise_integer_shift(const SystemConfig& cfg, CfoEstimate& est) {
    if (cfg.Nt < 2 || int(est.betas.size()) != cfg.Nt) return;
    const ShiftFit base = fit_shift(est.betas, cfg, 0);
    int best_d = 0;
    ShiftFit best = base;
    for (int d = 1; d < cfg.Q; ++d) {
        ShiftFit f = fit_shift(est.betas, cfg, d);
        if (!f.full || f.max_dev >= 0.5) continue;
        if (best_d == 0 && base.full && base.max_dev < 0.5 && !(f.spread < 0.25 * base.spread)) continue;
        if (best_d != 0 && !(f.spread < 0.25 * best.spread)) continue;
        best_d = d;
        best = std::move(f);
    }
    if (best_d == 0) return;
    // report the shift in the signed integer range
    const int d = best_d > cfg.Q - cfg.Q / 2 ? best_d - cfg.Q : best_d;
    est.warnings.push_back("roots fit pilot windows shifted by " + std::to_string(d) +
                           "; integer CFO revised accordingly");
    est.icfo_shift = d;
    est.matched_windows = best.windows;
    est.fcfos = best.offsets;
    est.fcfo = best.mean;
}

}  // namespace

void map_roots_to_fcfo(const std::vector<cplx>& roots, const SystemConfig& cfg, CfoEstimate& est) {
    const int Q = cfg.Q, Nt = cfg.Nt;
    auto window_of = [&](double beta) {
        int best = -1;
        double bd = cfg.eps_th;
        for (int mu = 0; mu < int(cfg.pilot_offsets.size()); ++mu) {
            const double d = std::abs(mod_floor(beta - cfg.pilot_offsets[mu] + Q / 2.0, double(Q)) - Q / 2.0);
            if (d < bd) {
                bd = d;
                best = mu;
            }
        }
        return best;
    };
    auto make = [&](cplx g, double im, bool merged) {
        RootCandidate rc;
        rc.g = g;
        rc.abs_imag = im;
        rc.beta = mod_floor(beta_from_g(g.real(), Q), double(Q));
        rc.window = window_of(rc.beta);
        rc.merged_real = merged;
        return rc;
    };

    std::vector<RootCandidate> cand;
    std::vector<double> reals;
    for (const cplx& z : roots) {
        if (z.imag() > 0)
            cand.push_back(make(z, z.imag(), false));
        else if (z.imag() == 0)
            reals.push_back(z.real());
    }
    // Real roots come from (numerically) double roots on the real axis:
    // merge the closest pairs.
    std::sort(reals.begin(), reals.end());
    while (reals.size() >= 2) {
        std::size_t k = 0;
        for (std::size_t i = 1; i + 1 < reals.size(); ++i)
            if (reals[i + 1] - reals[i] < reals[k + 1] - reals[k]) k = i;
        const double half = (reals[k + 1] - reals[k]) / 2;
        cand.push_back(make(cplx(reals[k] + half, 0.0), half, true));
        reals.erase(reals.begin() + long(k), reals.begin() + long(k) + 2);
    }
    if (!reals.empty()) est.warnings.push_back("unpaired real root at g=" + fmt(reals[0]) + " ignored");

    std::stable_sort(cand.begin(), cand.end(), [](const RootCandidate& a, const RootCandidate& b) {
        if (a.abs_imag != b.abs_imag) return a.abs_imag < b.abs_imag;
        return (a.window >= 0) > (b.window >= 0);
    });
    est.candidates = cand;

    if (int(cand.size()) < Nt) {
        est.warnings.push_back("only " + std::to_string(cand.size()) + " root pairs available");
        throw AmbiguityError("fewer root pairs than transmit antennas", est);
    }

    est.betas.clear();
    est.fcfos.clear();
    est.matched_windows.clear();
    double sum = 0;
    for (int k = 0; k < Nt; ++k) {
        const RootCandidate& rc = cand[std::size_t(k)];
        if (std::abs(rc.g.real()) > kConditioningLimit)
            est.warnings.push_back("ill-conditioned root, |Re g| = " + fmt(std::abs(rc.g.real())));
        est.betas.push_back(rc.beta);
        est.matched_windows.push_back(rc.window);
        if (rc.window < 0) {
            est.warnings.push_back("root with beta=" + fmt(rc.beta) + " outside every pilot window, dropped");
            continue;
        }
        double f = rc.beta - cfg.pilot_offsets[std::size_t(rc.window)];
        f = mod_floor(f + Q / 2.0, double(Q)) - Q / 2.0;
        if (f == -Q / 2.0) f = Q / 2.0;
        est.fcfos.push_back(f);
        sum += f;
    }
    if (!est.fcfos.empty()) est.fcfo = sum / double(est.fcfos.size());

    revise_integer_shift(cfg, est);
    if (est.fcfos.empty()) throw AmbiguityError("no root fell inside a pilot window", est);
}

EstimatorContext::EstimatorContext(const SystemConfig& cfg)
    : cfg_(cfg), plan_(std::size_t(cfg.N > 0 ? cfg.N : 1)), tm_() {
    require_structural(cfg_);
    if ((long long)cfg_.Nr * cfg_.P <= cfg_.Q) throw ConfigError("estimator requires Nr*P > Q");
    if (cfg_.Q < 2 || cfg_.Q > kMaxQ) throw ConfigError("estimator requires 2 <= Q <= 64");
    tm_ = build_transform_matrices(cfg_.Q);
}

CfoEstimate EstimatorContext::estimate_fcfo(const std::vector<ComplexVec>& ybar) const {
    CfoEstimate est;
    const SubspaceDecomposition dec = stack_and_covariance(ybar, cfg_, tm_);
    est.eigenvalues = dec.eigenvalues;
    const auto poly = fcfo_polynomial(dec, tm_);
    const auto pr = numkit::roots_real_poly(poly);
    if (pr.degree_reduction > 0)
        est.warnings.push_back("polynomial degree reduced by " + std::to_string(pr.degree_reduction) +
                               " (root near beta = 0)");
    map_roots_to_fcfo(pr.roots, cfg_, est);
    est.cfo = wrap_cfo(est.icfo_shift + est.fcfo, cfg_.Q);
    return est;
}

CfoEstimate EstimatorContext::estimate(const std::vector<ComplexVec>& y) const {
    const IcfoResult ir = estimate_icfo(y, cfg_, &plan_);
    const auto ybar = correct_icfo(y, ir.icfo, cfg_);
    CfoEstimate est;
    try {
        est = estimate_fcfo(ybar);
    } catch (AmbiguityError& e) {
        e.partial.icfo = ir.icfo;
        e.partial.metric = ir.metric;
        throw;
    }
    const int lo = -(cfg_.Q / 2);
    est.icfo = int(mod_floor(ir.icfo + est.icfo_shift - lo - 1, cfg_.Q)) + lo + 1;
    est.metric = ir.metric;
    // the fractional part can push the sum just past either end of the range
    est.cfo = wrap_cfo(double(est.icfo) + est.fcfo, cfg_.Q);
    return est;
}

CfoEstimate estimate_cfo(const ReceivedFrame& frame, const SystemConfig& cfg, const TrainingSet& ts) {
    if (ts.pilot_offsets != cfg.pilot_offsets) throw ConfigError("estimate: training set offsets differ from config");
    return EstimatorContext(cfg).estimate(frame.y);
}

}  // namespace cfolab
