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
#include "oracles.hpp"

#include <doctest.h>

using namespace cfolab;

namespace {

SystemConfig paper_cfg() { return SystemConfig{}; }

}  // namespace

TEST_CASE("chu sequence: small case and unit modulus") {
    const ComplexVec s = chu_sequence(4, 1);
    const cplx e = std::polar(1.0, kPi / 4);
    CHECK(std::abs(s[0] - cplx(1)) < 1e-15);
    CHECK(std::abs(s[1] - e) < 1e-15);
    CHECK(std::abs(s[2] - cplx(-1)) < 1e-15);
    CHECK(std::abs(s[3] - e) < 1e-15);
    for (int v : {1, 3, 5, 7, 31}) {
        const ComplexVec c = chu_sequence(64, v);
        CHECK((c.array().abs() - 1.0).abs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("chu sequence: zero periodic autocorrelation") {
    for (int v : {1, 5}) {
        const ComplexVec s = chu_sequence(64, v);
        for (int tau = 1; tau < 64; ++tau) {
            cplx acc = 0;
            for (int p = 0; p < 64; ++p) acc += s[p] * std::conj(s[(p + tau) % 64]);
            CHECK(std::abs(acc) < 1e-10);
        }
    }
}

TEST_CASE("chu sequence: rejects bad parameters") {
    CHECK_THROWS_AS(chu_sequence(5, 1), ConfigError);
    CHECK_THROWS_AS(chu_sequence(64, 2), ConfigError);
    CHECK_THROWS_AS(chu_sequence(0, 1), ConfigError);
}

TEST_CASE("validation: default configuration passes") {
    const auto r = validate_conditions(paper_cfg());
    CHECK(r.ok());
    CHECK(r.find("C3.3")->pass);
    CHECK(shift_correlation_metric(16, {2, 7, 12}) > 0);
    CHECK(min_circular_gap(16, {2, 7, 12}) == 5);
}

TEST_CASE("validation: shift-invariant pilots fail C3.3") {
    SystemConfig c = paper_cfg();
    c.Nt = 4;
    c.N_I = 4;
    c.pilot_offsets = {0, 4, 8, 12};
    const auto r = validate_conditions(c);
    CHECK_FALSE(r.ok());
    CHECK(r.structural_ok());
    CHECK_FALSE(r.find("C3.3")->pass);
    CHECK(shift_correlation_metric(16, c.pilot_offsets) == 0);
    CHECK(r.find("C3.3")->detail.find("q=4") != std::string::npos);
    // still constructible
    CHECK_NOTHROW(make_training_set(c, Variant::TS0));
}

TEST_CASE("validation: C3.1 arithmetic and other failures") {
    SystemConfig c = make_config(64, 8, 16, 3, 2, 4);
    const auto r = validate_conditions(c);
    CHECK_FALSE(r.find("C3.1")->pass);

    SystemConfig d = paper_cfg();
    d.pilot_offsets = {7, 2, 12};
    CHECK_FALSE(validate_conditions(d).find("C0")->pass);
    CHECK_THROWS_AS(require_structural(d), ConfigError);

    SystemConfig e = paper_cfg();
    e.chu_v = 2;
    CHECK_FALSE(validate_conditions(e).find("C1")->pass);

    SystemConfig f = paper_cfg();
    f.eps_th = 0.5;
    CHECK_FALSE(validate_conditions(f).find("params")->pass);

    SystemConfig g = paper_cfg();
    g.Nr = 1;
    g.P = 8;
    g.Q = 128;
    CHECK_FALSE(validate_conditions(g).find("C4")->pass);

    SystemConfig h = paper_cfg();
    h.Ng = 4;
    CHECK_FALSE(validate_conditions(h).find("CP")->pass);
}

TEST_CASE("default pilot offsets") {
    CHECK(default_pilot_offsets(16, 3) == std::vector<int>{2, 7, 12});
    CHECK(default_pilot_offsets(8, 3) == std::vector<int>{1, 3, 6});
    for (int Nt = 1; Nt <= 6; ++Nt) {
        const auto v = default_pilot_offsets(16, Nt);
        REQUIRE(int(v.size()) == Nt);
        CHECK(std::is_sorted(v.begin(), v.end()));
        if (Nt > 1) CHECK(shift_correlation_metric(16, v) > 0);
    }
}

TEST_CASE("default profile") {
    const RealVec p = default_profile(9);
    CHECK(std::abs(p.sum() - 1.0) < 1e-14);
    CHECK(p[1] == 0.0);
    CHECK(p[8] > 0.0);
    CHECK(std::abs(p[2] / p[0] - std::pow(10.0, -0.97)) < 1e-12);
    const RealVec q = default_profile(4);
    CHECK((q.array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("training sets: energy, support and structure") {
    const SystemConfig c = paper_cfg();
    const ComplexMat FP = oracle::dft_matrix(c.P);
    for (Variant v : {Variant::TS0, Variant::TS1, Variant::RS}) {
        CAPTURE(to_string(v));
        const TrainingSet ts = make_training_set(c, v);
        REQUIRE(ts.num_tx() == c.Nt);
        for (int mu = 0; mu < c.Nt; ++mu) {
            const double e = ts.base_sequences[mu].squaredNorm();
            CHECK(std::abs(e - double(c.N) / c.Nt) < 1e-9 * c.N / c.Nt);
            CHECK((ts.base_sequences[mu].array().abs() > 0).all());
            // time block against a dense inverse DFT
            const ComplexVec tb = FP.adjoint() * ts.base_sequences[mu] / std::sqrt(double(c.Q));
            CHECK((tb - ts.time_blocks[mu]).norm() < 1e-10);
            // comb support
            const ComplexVec& t = ts.freq_symbols[mu];
            for (int k = 0; k < c.N; ++k) {
                const bool pilot = (k - ts.pilot_offsets[mu]) % c.Q == 0 && k >= ts.pilot_offsets[mu];
                if (!pilot) CHECK(t[k] == cplx(0));
            }
            if (v != Variant::RS) {
                const RealVec a = ts.time_blocks[mu].array().abs();
                CHECK(a.maxCoeff() - a.minCoeff() < 1e-12);
            }
        }
        // disjoint supports
        for (int a = 0; a < c.Nt; ++a)
            for (int b = a + 1; b < c.Nt; ++b)
                CHECK((ts.freq_symbols[a].array().abs() * ts.freq_symbols[b].array().abs()).maxCoeff() == 0.0);
    }
}

TEST_CASE("training sets: TS0 shift and TS1 identity") {
    const SystemConfig c = paper_cfg();
    REQUIRE(c.shift_M() == 21);
    const ComplexVec chu = chu_sequence(c.P, 1);
    const TrainingSet ts0 = make_training_set(c, Variant::TS0);
    for (int mu = 0; mu < c.Nt; ++mu) {
        ComplexVec ref(c.P);
        for (int p = 0; p < c.P; ++p) ref[p] = chu[((p - 21 * mu) % 64 + 64) % 64] / std::sqrt(3.0);
        CHECK((ts0.time_blocks[mu] - ref).norm() < 1e-12);
    }
    const TrainingSet ts1 = make_training_set(c, Variant::TS1);
    for (int mu = 1; mu < c.Nt; ++mu) CHECK(ts1.base_sequences[mu] == ts1.base_sequences[0]);
}

TEST_CASE("training sets: RS is seeded and reproducible") {
    SystemConfig c = paper_cfg();
    const TrainingSet a = make_training_set(c, Variant::RS);
    const TrainingSet b = make_training_set(c, Variant::RS);
    CHECK(a.base_sequences[0] == b.base_sequences[0]);
    c.seed = 99;
    const TrainingSet d = make_training_set(c, Variant::RS);
    CHECK((a.base_sequences[0] - d.base_sequences[0]).norm() > 1.0);
}

TEST_CASE("frames: length, periodic structure, constant modulus") {
    const SystemConfig c = paper_cfg();
    const TrainingSet ts = make_training_set(c, Variant::TS0);
    const ComplexMat FN = oracle::dft_matrix(c.N);
    for (int mu = 0; mu < c.Nt; ++mu) {
        const ComplexVec& x = ts.time_frames[mu];
        REQUIRE(x.size() == c.Ng + c.N);
        const ComplexVec body = x.tail(c.N);
        CHECK((body - std::sqrt(double(c.N)) * FN.adjoint() * ts.freq_symbols[mu]).norm() < 1e-9);
        CHECK((x.head(c.Ng) - body.tail(c.Ng)).norm() == 0.0);
        // Q repeats of one block times the pilot ramp
        ComplexVec blk(c.P);
        for (int n = 0; n < c.P; ++n)
            blk[n] = body[n] * std::polar(1.0, -2 * kPi * ts.pilot_offsets[mu] * n / double(c.N));
        double err = 0;
        for (int n = 0; n < c.N; ++n) {
            const cplx want = blk[n % c.P] * std::polar(1.0, 2 * kPi * ts.pilot_offsets[mu] * n / double(c.N));
            err = std::max(err, std::abs(body[n] - want));
        }
        CHECK(err < 1e-10);
        const RealVec a = body.array().abs();
        CHECK(a.maxCoeff() - a.minCoeff() < 1e-10);
    }
}

TEST_CASE("training sets: from base validates inputs") {
    const SystemConfig c = paper_cfg();
    const TrainingSet ts = make_training_set(c, Variant::TS1);
    auto base = ts.base_sequences;
    CHECK_NOTHROW(training_set_from_base(c, Variant::TS1, base));
    base[0] *= 2.0;
    CHECK_THROWS_AS(training_set_from_base(c, Variant::TS1, base), ConfigError);
    base.pop_back();
    CHECK_THROWS_AS(training_set_from_base(c, Variant::TS1, base), DimensionError);
}

TEST_CASE("design diagnostics: closed form and bounds") {
    const SystemConfig c = paper_cfg();
    for (Variant v : {Variant::TS0, Variant::TS1}) {
        CAPTURE(to_string(v));
        const TrainingSet ts = make_training_set(c, v);
        const DesignDiagnostics dd = design_diagnostics(ts, c);
        CHECK(dd.t_table.size() == std::size_t(c.Nt * c.Nt * c.L * c.L));
        CHECK(dd.closed_form_max_error < 1e-8);
        CHECK(std::abs(dd.max_auto_t - double(c.P) / c.Nt) < 1e-10);
        CHECK(dd.max_cross_t < dd.t_bound);
        CHECK(dd.min_gap == 5);
        CHECK(dd.shift_metric > 0);
        CHECK(std::abs(dd.varpi(0, 1) - (2.0 - 7.0) / 16.0) < 1e-15);
        for (const auto& e : dd.t_table) CHECK(e.abs_direct >= 0.0);
    }
    const DesignDiagnostics d0 = design_diagnostics(make_training_set(c, Variant::TS0), c);
    CHECK(d0.max_offpeak_cross_t < 0.1 * d0.t_bound);

    const DesignDiagnostics dr = design_diagnostics(make_training_set(c, Variant::RS), c);
    CHECK(dr.t_table.front().abs_closed < 0);
    CHECK(std::abs(dr.max_auto_t - double(c.P) / c.Nt) < 1e-9);
}

TEST_CASE("design diagnostics: direct T against a brute-force oracle") {
    const SystemConfig c = paper_cfg();
    const TrainingSet ts = make_training_set(c, Variant::RS);
    const int mu = 0, mu2 = 2, l = 3, l2 = 5;
    cplx ref = 0;
    for (int p = 0; p < c.P; ++p) {
        const cplx a = ts.time_blocks[mu][((p - l) % c.P + c.P) % c.P];
        const cplx b = ts.time_blocks[mu2][((p - l2) % c.P + c.P) % c.P];
        ref += a * std::exp(cplx(0, 2 * kPi * (2 - 12) * p / double(c.N))) * std::conj(b);
    }
    CHECK(std::abs(t_matrix_entry(ts, c, mu, mu2, l, l2) - ref) < 1e-10);
}
