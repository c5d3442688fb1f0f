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

#include "cfolab/io.hpp"
#include "cfolab/sigmodel.hpp"

#include <doctest.h>

#include <filesystem>

using namespace cfolab;

namespace {
const std::string kMinimal = R"({"N":1024,"Ng":64,"P":64,"Nt":3,"Nr":2,"pilot_offsets":[2,7,12],"L":9})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
    s.replace(s.find(from), from.size(), to);
    return s;
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}
}  // namespace

TEST_CASE("config: minimal file gets defaults") {
    const RunConfig rc = parse_config(kMinimal);
    CHECK(rc.system.Q == 16);
    CHECK(rc.system.chu_v == 1);
    CHECK(rc.system.eps_th == 0.75);
    CHECK(rc.system.seed == 0);
    CHECK(rc.system.N_I == 3);
    CHECK(rc.n_trials == 500);
    CHECK(rc.format == "csv");

    const RunConfig d = parse_config(R"({"N":1024,"Ng":64,"P":64,"Nt":2,"Nr":2,"L":9})");
    CHECK(d.system.pilot_offsets == default_pilot_offsets(16, 2));
}

TEST_CASE("config: rejections carry context") {
    CHECK(error_of(replace(kMinimal, "1024", "1000")).find("power of two") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "[2,7,12]", "[7,2,12]")).find("C0") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "\"L\":9", "\"L\":9,\"bogus\":1")).find("bogus") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "\"Nr\":2,", "")).find("\"Nr\"") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "\"Nr\":2", "\"Nr\":2.5")).find("integer") != std::string::npos);
    CHECK(error_of("{\n\"N\": 1024,\n\"Ng\": }").find("line 3") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "\"L\":9", "\"L\":9,\"snr_db\":[10,0]")).find("sorted") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "\"L\":9", "\"L\":9,\"Q\":8")).find("\"Q\"") != std::string::npos);
    // every failing condition is listed
    const std::string e = error_of(replace(replace(kMinimal, "[2,7,12]", "[7,2,12]"), "\"L\":9", "\"L\":70"));
    CHECK(e.find("C0") != std::string::npos);
    CHECK(e.find("C3.2") != std::string::npos);
}

TEST_CASE("config: run keys and structural-only loading") {
    const RunConfig rc = parse_config(replace(
        kMinimal, "\"L\":9",
        R"("L":9,"variants":["TS0","RS"],"snr_db":[0,10],"n_trials":7,"workers":3,"seed":42,"format":"json","diagnose":{"mu":1,"mu1":2,"mu2":0,"delta_step":0.5})"));
    CHECK(rc.variants.size() == 2);
    CHECK(rc.variants[1] == Variant::RS);
    CHECK(rc.n_trials == 7);
    CHECK(rc.workers == 3);
    CHECK(rc.system.seed == 42);
    CHECK(rc.diag.mu == 1);
    CHECK(rc.diag.delta_step == 0.5);

    const std::string shift_invariant = R"({"N":1024,"Ng":64,"P":64,"Nt":4,"Nr":2,"L":9,"pilot_offsets":[0,4,8,12]})";
    CHECK_THROWS_AS(parse_config(shift_invariant), ConfigError);
    CHECK(parse_config(shift_invariant, ConfigCheck::Structural).system.Nt == 4);
}

TEST_CASE("training set json round trip") {
    SystemConfig c;
    for (auto v : {Variant::TS0, Variant::TS1, Variant::RS}) {
        const TrainingSet ts = make_training_set(c, v);
        const TrainingSet back = training_set_from_json(training_set_json(ts), c);
        CHECK(back.variant == v);
        for (int mu = 0; mu < c.Nt; ++mu)
            CHECK((back.freq_symbols[std::size_t(mu)] - ts.freq_symbols[std::size_t(mu)]).norm() == 0.0);
    }
}

TEST_CASE("frame formats round trip") {
    SystemConfig c;
    c.seed = 9;
    Rng rng(5);
    const TrainingSet ts = make_training_set(c, Variant::TS0);
    const ChannelSet ch = gen_channel(c, config_profile(c), rng);
    const ReceivedFrame f = transmit(c, ts, ch, 3.3, 0.01, rng);

    const FrameFile j = frame_from_json(frame_json(c, f.y, 3.3));
    REQUIRE(j.config);
    CHECK(j.config->pilot_offsets == c.pilot_offsets);
    CHECK(j.config->seed == 9);
    CHECK(*j.true_cfo == 3.3);
    REQUIRE(j.y.size() == f.y.size());
    for (std::size_t nu = 0; nu < f.y.size(); ++nu) CHECK((j.y[nu] - f.y[nu]).norm() == 0.0);

    const std::string bin = frame_binary(f.y);
    CHECK(bin.size() == 32 + std::size_t(c.N) * c.Nr * 16);
    CHECK(bin.compare(0, 4, "CFOF") == 0);
    CHECK(bin[8] == 0);  // N = 1024 little-endian: 00 04 00 00
    CHECK(bin[9] == 4);
    const FrameFile b = frame_from_binary(bin);
    CHECK_FALSE(b.config);
    for (std::size_t nu = 0; nu < f.y.size(); ++nu) CHECK((b.y[nu] - f.y[nu]).norm() == 0.0);

    CHECK_THROWS_AS(frame_from_binary(bin.substr(0, bin.size() - 8)), DimensionError);
    CHECK_THROWS_AS(frame_from_binary("XXXX" + bin.substr(4)), ConfigError);
}

TEST_CASE("atomic write leaves no temporaries") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cfolab_io_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string p = (dir / "out.csv").string();
    write_file_atomic(p, "a,b\n1,2\n");
    write_file_atomic(p, "a,b\n3,4\n");
    CHECK(read_file(p) == "a,b\n3,4\n");
    CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator()) == 1);
    CHECK_THROWS_AS(write_file_atomic((dir / "missing" / "x").string(), "x"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("result json carries the documented fields") {
    CfoEstimate e;
    e.icfo = 2;
    e.fcfo = 0.25;
    e.cfo = 2.25;
    e.betas = {1.0};
    e.metric = RealVec::Ones(3);
    e.warnings = {"w"};
    const std::string s = estimate_json(e, 2.0);
    for (const char* k : {"\"icfo\"", "\"fcfo\"", "\"cfo\"", "\"betas\"", "\"metric\"", "\"warnings\"", "\"error\""})
        CHECK(s.find(k) != std::string::npos);

    IcfoDiagnostics d;
    IcfoDiagRow r;
    r.zeta = std::numeric_limits<double>::infinity();
    d.rows.push_back(r);
    CHECK(icfo_diagnostics_json(d).find("\"inf\"") != std::string::npos);
}
