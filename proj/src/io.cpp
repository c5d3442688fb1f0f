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

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace cfolab {

using nlohmann::json;

namespace {

const std::set<std::string> kSystemKeys{"N",   "Ng", "P",      "Q",    "Nt",      "Nr", "L",
                                        "pilot_offsets", "v", "N_I", "eps_th", "seed", "profile"};
const std::set<std::string> kRunKeys{"variants", "snr_db", "n_trials", "workers", "output", "format", "diagnose"};
const std::set<std::string> kDiagKeys{"mu", "mu1", "mu2", "l", "l2", "delta_step"};

std::string ctx(const std::string& source, const std::string& field) { return source + ": field \"" + field + "\": "; }

template <class T>
T get_as(const json& j, const std::string& key, const std::string& source) {
    try {
        if constexpr (std::is_integral_v<T>) {
            if (!j.at(key).is_number_integer()) throw ConfigError(ctx(source, key) + "expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!j.at(key).is_number()) throw ConfigError(ctx(source, key) + "expected a number");
        }
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ctx(source, key) + e.what());
    }
}

// 1-based line of a byte offset, for parse errors.
std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
}

SystemConfig system_from_json(const json& j, const std::string& source) {
    for (const auto& [k, v] : j.items())
        if (!kSystemKeys.count(k) && !kRunKeys.count(k)) throw ConfigError(ctx(source, k) + "unknown key");
    for (const char* k : {"N", "Ng", "P", "Nt", "Nr", "L"})
        if (!j.contains(k)) throw ConfigError(ctx(source, k) + "missing");
    SystemConfig c;
    c.N = get_as<int>(j, "N", source);
    c.Ng = get_as<int>(j, "Ng", source);
    c.P = get_as<int>(j, "P", source);
    c.Nt = get_as<int>(j, "Nt", source);
    c.Nr = get_as<int>(j, "Nr", source);
    c.L = get_as<int>(j, "L", source);
    c.Q = c.P > 0 ? c.N / c.P : 0;
    if (j.contains("Q") && get_as<int>(j, "Q", source) != c.Q)
        throw ConfigError(ctx(source, "Q") + "must equal N / P = " + std::to_string(c.Q));
    c.chu_v = j.contains("v") ? get_as<int>(j, "v", source) : 1;
    c.N_I = j.contains("N_I") ? get_as<int>(j, "N_I", source) : c.Nt;
    c.eps_th = j.contains("eps_th") ? get_as<double>(j, "eps_th", source) : 0.75;
    c.seed = j.contains("seed") ? get_as<std::uint64_t>(j, "seed", source) : 0;
    if (j.contains("pilot_offsets")) {
        c.pilot_offsets = get_as<std::vector<int>>(j, "pilot_offsets", source);
    } else {
        if (c.Q < 2 || c.Nt < 1 || c.Nt > c.Q)
            throw ConfigError(ctx(source, "pilot_offsets") + "cannot derive defaults from N, P, Nt");
        c.pilot_offsets = default_pilot_offsets(c.Q, c.Nt);
    }
    if (j.contains("profile")) {
        c.profile = get_as<std::vector<double>>(j, "profile", source);
        if (long(c.profile.size()) != c.L) throw ConfigError(ctx(source, "profile") + "length must equal L");
    }
    return c;
}

json cplx_array(const ComplexVec& v) {
    json a = json::array();
    for (long k = 0; k < v.size(); ++k) a.push_back({v[k].real(), v[k].imag()});
    return a;
}

ComplexVec cplx_from(const json& a, const std::string& what) {
    if (!a.is_array()) throw ConfigError(what + ": expected an array of [re, im] pairs");
    ComplexVec v(static_cast<long>(a.size()));
    for (std::size_t k = 0; k < a.size(); ++k) {
        const json& e = a[k];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError(what + "[" + std::to_string(k) + "]: expected [re, im]");
        v[long(k)] = {e[0].get<double>(), e[1].get<double>()};
    }
    return v;
}

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void put_u32(std::string& s, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) s.push_back(char((v >> (8 * b)) & 0xff));
}
std::uint32_t get_u32(const std::string& s, std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t(std::uint8_t(s[at + b])) << (8 * b);
    return v;
}
void put_f64(std::string& s, double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    for (int b = 0; b < 8; ++b) s.push_back(char((u >> (8 * b)) & 0xff));
}
double get_f64(const std::string& s, std::size_t at) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= std::uint64_t(std::uint8_t(s[at + b])) << (8 * b);
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}

constexpr std::uint32_t kFrameVersion = 1;
constexpr std::size_t kHeaderBytes = 32;

}  // namespace

RunConfig parse_config(const std::string& text, ConfigCheck check, const std::string& source) {
    const json j = parse_json(text, source);
    if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
    RunConfig rc;
    rc.system = system_from_json(j, source);
    if (j.contains("variants")) {
        rc.variants.clear();
        for (const auto& s : get_as<std::vector<std::string>>(j, "variants", source)) {
            try {
                rc.variants.push_back(variant_from_string(s));
            } catch (const Error& e) {
                throw ConfigError(ctx(source, "variants") + e.what());
            }
        }
        if (rc.variants.empty()) throw ConfigError(ctx(source, "variants") + "must not be empty");
    }
    if (j.contains("snr_db")) {
        rc.snr_db = get_as<std::vector<double>>(j, "snr_db", source);
        if (rc.snr_db.empty()) throw ConfigError(ctx(source, "snr_db") + "must not be empty");
        if (!std::is_sorted(rc.snr_db.begin(), rc.snr_db.end()))
            throw ConfigError(ctx(source, "snr_db") + "must be sorted ascending");
    }
    if (j.contains("n_trials")) rc.n_trials = get_as<int>(j, "n_trials", source);
    if (rc.n_trials < 1) throw ConfigError(ctx(source, "n_trials") + "must be >= 1");
    if (j.contains("workers")) rc.workers = get_as<int>(j, "workers", source);
    if (rc.workers < 1) throw ConfigError(ctx(source, "workers") + "must be >= 1");
    if (j.contains("output")) rc.output = get_as<std::string>(j, "output", source);
    if (j.contains("format")) rc.format = get_as<std::string>(j, "format", source);
    if (rc.format != "csv" && rc.format != "json") throw ConfigError(ctx(source, "format") + "must be csv or json");
    if (j.contains("diagnose")) {
        const json& d = j.at("diagnose");
        if (!d.is_object()) throw ConfigError(ctx(source, "diagnose") + "expected an object");
        for (const auto& [k, v] : d.items())
            if (!kDiagKeys.count(k)) throw ConfigError(ctx(source, "diagnose." + k) + "unknown key");
        const std::string s = source + " (diagnose)";
        if (d.contains("mu")) rc.diag.mu = get_as<int>(d, "mu", s);
        if (d.contains("mu1")) rc.diag.mu1 = get_as<int>(d, "mu1", s);
        if (d.contains("mu2")) rc.diag.mu2 = get_as<int>(d, "mu2", s);
        if (d.contains("l")) rc.diag.l = get_as<int>(d, "l", s);
        if (d.contains("l2")) rc.diag.l2 = get_as<int>(d, "l2", s);
        if (d.contains("delta_step")) rc.diag.delta_step = get_as<double>(d, "delta_step", s);
        if (!(rc.diag.delta_step > 0)) throw ConfigError(ctx(source, "diagnose.delta_step") + "must be positive");
    }
    if (check == ConfigCheck::Full)
        require_valid(rc.system);
    else if (check == ConfigCheck::Structural)
        require_structural(rc.system);
    return rc;
}

RunConfig load_config(const std::string& path, ConfigCheck check) { return parse_config(read_file(path), check, path); }

std::string system_config_json(const SystemConfig& c, int indent) {
    json j{{"N", c.N},   {"Ng", c.Ng},   {"P", c.P},         {"Q", c.Q},           {"Nt", c.Nt},
           {"Nr", c.Nr}, {"L", c.L},     {"v", c.chu_v},     {"N_I", c.N_I},       {"eps_th", c.eps_th},
           {"seed", c.seed}, {"pilot_offsets", c.pilot_offsets}};
    if (!c.profile.empty()) j["profile"] = c.profile;
    return j.dump(indent);
}

std::string training_set_json(const TrainingSet& ts) {
    json j;
    j["variant"] = to_string(ts.variant);
    j["pilot_offsets"] = ts.pilot_offsets;
    j["base_sequences"] = json::array();
    for (const auto& s : ts.base_sequences) j["base_sequences"].push_back(cplx_array(s));
    return j.dump(2) + "\n";
}

TrainingSet training_set_from_json(const std::string& text, const SystemConfig& cfg) {
    const json j = parse_json(text, "training set");
    for (const char* k : {"variant", "base_sequences", "pilot_offsets"})
        if (!j.contains(k)) throw ConfigError(std::string("training set: missing \"") + k + "\"");
    if (j.at("pilot_offsets").get<std::vector<int>>() != cfg.pilot_offsets)
        throw ConfigError("training set: pilot offsets do not match the config");
    std::vector<ComplexVec> base;
    for (const auto& a : j.at("base_sequences")) base.push_back(cplx_from(a, "base_sequences"));
    return training_set_from_base(cfg, variant_from_string(j.at("variant").get<std::string>()), std::move(base));
}

std::string frame_json(const SystemConfig& cfg, const std::vector<ComplexVec>& y, std::optional<double> true_cfo) {
    json j;
    j["config"] = json::parse(system_config_json(cfg, -1));
    j["y"] = json::array();
    for (const auto& v : y) j["y"].push_back(cplx_array(v));
    if (true_cfo) j["true_cfo"] = *true_cfo;
    return j.dump() + "\n";
}

FrameFile frame_from_json(const std::string& text) {
    const json j = parse_json(text, "frame");
    if (!j.is_object() || !j.contains("y")) throw ConfigError("frame: missing \"y\"");
    for (const auto& [k, v] : j.items())
        if (k != "config" && k != "y" && k != "true_cfo") throw ConfigError("frame: unknown key \"" + k + "\"");
    FrameFile f;
    if (j.contains("config")) f.config = parse_config(j.at("config").dump(), ConfigCheck::None, "frame config").system;
    for (const auto& a : j.at("y")) f.y.push_back(cplx_from(a, "y"));
    if (j.contains("true_cfo")) {
        if (!j.at("true_cfo").is_number()) throw ConfigError("frame: \"true_cfo\" must be a number");
        f.true_cfo = j.at("true_cfo").get<double>();
    }
    return f;
}

std::string frame_binary(const std::vector<ComplexVec>& y) {
    if (y.empty()) throw DimensionError("frame: no receive antennas");
    std::string s = "CFOF";
    put_u32(s, kFrameVersion);
    put_u32(s, std::uint32_t(y.front().size()));
    put_u32(s, std::uint32_t(y.size()));
    s.append(kHeaderBytes - s.size(), '\0');
    for (const auto& v : y) {
        if (v.size() != y.front().size()) throw DimensionError("frame: antennas differ in length");
        for (long n = 0; n < v.size(); ++n) {
            put_f64(s, v[n].real());
            put_f64(s, v[n].imag());
        }
    }
    return s;
}

FrameFile frame_from_binary(const std::string& b) {
    if (b.size() < kHeaderBytes || b.compare(0, 4, "CFOF") != 0) throw ConfigError("frame: bad magic");
    if (get_u32(b, 4) != kFrameVersion) throw ConfigError("frame: unsupported version " + std::to_string(get_u32(b, 4)));
    const std::size_t N = get_u32(b, 8), Nr = get_u32(b, 12);
    if (b.size() != kHeaderBytes + N * Nr * 16)
        throw DimensionError("frame: payload is " + std::to_string(b.size() - kHeaderBytes) + " bytes, header implies " +
                             std::to_string(N * Nr * 16));
    FrameFile f;
    std::size_t at = kHeaderBytes;
    for (std::size_t nu = 0; nu < Nr; ++nu) {
        ComplexVec v(static_cast<long>(N));
        for (std::size_t n = 0; n < N; ++n, at += 16) v[long(n)] = {get_f64(b, at), get_f64(b, at + 8)};
        f.y.push_back(std::move(v));
    }
    return f;
}

FrameFile load_frame(const std::string& path) {
    const std::string b = read_file(path);
    if (b.size() >= 4 && b.compare(0, 4, "CFOF") == 0) return frame_from_binary(b);
    return frame_from_json(b);
}

std::string estimate_json(const CfoEstimate& e, std::optional<double> true_cfo) {
    json j;
    j["icfo"] = e.icfo;
    j["fcfo"] = e.fcfo;
    j["cfo"] = e.cfo;
    j["betas"] = e.betas;
    j["metric"] = std::vector<double>(e.metric.data(), e.metric.data() + e.metric.size());
    j["warnings"] = e.warnings;
    if (true_cfo) j["error"] = e.cfo - *true_cfo;
    return j.dump(2) + "\n";
}

std::string monte_carlo_json(const std::vector<MonteCarloRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        a.push_back({{"variant", to_string(r.variant)},
                     {"snr_db", r.snr_db},
                     {"n_trials", r.n_trials},
                     {"mse", num_or_null(r.mse)},
                     {"mse_stderr", num_or_null(r.mse_stderr)},
                     {"icfo_error_rate", r.icfo_error_rate},
                     {"ambiguity_rate", r.ambiguity_rate},
                     {"avcrb", r.avcrb},
                     {"avcrb_stderr", r.avcrb_stderr},
                     {"sec_per_trial", r.sec_per_trial < 0 ? json("NA") : json(r.sec_per_trial)}});
    }
    return a.dump(2) + "\n";
}

std::string icfo_diagnostics_json(const IcfoDiagnostics& d) {
    json rows = json::array();
    for (const auto& r : d.rows)
        rows.push_back({{"r_delta", r.r_delta},
                        {"m_diag", r.m_diag},
                        {"m_offdiag_abs", r.m_offdiag_abs},
                        {"zeta", std::isinf(r.zeta) ? json("inf") : json(r.zeta)}});
    json j{{"mu", d.mu}, {"mu1", d.mu1}, {"mu2", d.mu2}, {"l", d.l}, {"l2", d.l2}, {"rows", rows}};
    if (d.max_direct_error >= 0) j["max_direct_error"] = d.max_direct_error;
    return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(std::hash<std::string>{}(path) ^ std::uint64_t(content.size()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError(path + ": cannot write");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ConfigError(path + ": write failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ConfigError(path + ": rename failed");
    }
}

}  // namespace cfolab
