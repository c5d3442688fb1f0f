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
#include "cfolab/evalkit.hpp"
#include "cfolab/io.hpp"
#include "cfolab/seqdesign.hpp"
#include "cfolab/sigmodel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

using namespace cfolab;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config:
        case ErrorKind::Dimension:
        case ErrorKind::Contract:
            return 1;
        default:
            return 2;
    }
}

// CFOLAB_SEED > --seed > config
void resolve_seed(RunConfig& rc, const std::optional<std::uint64_t>& flag) {
    if (const char* env = std::getenv("CFOLAB_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0' || env[0] == '-') throw ConfigError(std::string("CFOLAB_SEED: not an unsigned integer: ") + env);
        rc.system.seed = v;
    } else if (flag) {
        rc.system.seed = *flag;
    }
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-")
        std::cout << content << std::flush;
    else
        write_file_atomic(path, content);
}

// Summary lines go to stderr when the payload itself is on stdout.
std::ostream& summary(const std::string& out) { return out.empty() || out == "-" ? std::cerr : std::cout; }

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string variant = "TS0";
};

int cmd_design(const Common& o, const std::string& csv) {
    RunConfig rc = load_config(o.config, ConfigCheck::None);
    const SystemConfig& c = rc.system;
    const ValidationReport rep = validate_conditions(c);
    std::cout << rep.to_text();
    if (!rep.structural_ok()) {
        std::cerr << "error: " << rep.failures() << "\n";
        return 1;
    }
    const TrainingSet ts = make_training_set(c, variant_from_string(o.variant));
    const DesignDiagnostics d = design_diagnostics(ts, c);
    std::cout << d.to_text();
    if (!rep.ok()) {
        std::cerr << "error: " << rep.failures() << "\n";
        return 1;
    }
    if (!o.out.empty()) write_file_atomic(o.out, training_set_json(ts));
    if (!csv.empty()) write_file_atomic(csv, d.t_table_csv());
    return 0;
}

int cmd_simulate(const Common& o, std::optional<int> trials, std::optional<int> workers, bool timing,
                 std::string format) {
    RunConfig rc = load_config(o.config);
    resolve_seed(rc, o.seed);
    MonteCarloSpec spec;
    spec.variants = rc.variants;
    spec.snr_db = rc.snr_db;
    spec.n_trials = trials.value_or(rc.n_trials);
    spec.workers = workers.value_or(rc.workers);
    spec.timing = timing;
    if (spec.n_trials < 1 || spec.workers < 1) throw ConfigError("--trials and --workers must be >= 1");
    if (format.empty()) format = rc.format;
    const std::string out = o.out.empty() ? rc.output : o.out;

    const auto rows = run_monte_carlo(rc.system, spec);
    for (const auto& r : rows) {
        char line[256];
        std::snprintf(line, sizeof line, "%s snr=%g dB: mse=%.4e avcrb=%.4e icfo_err=%.4f ambiguous=%.4f",
                      to_string(r.variant).c_str(), r.snr_db, r.mse, r.avcrb, r.icfo_error_rate, r.ambiguity_rate);
        summary(out) << line << "\n";
    }
    emit(out, format == "json" ? monte_carlo_json(rows) : monte_carlo_csv(rows));
    return 0;
}

int cmd_crb(const Common& o, std::optional<int> trials) {
    RunConfig rc = load_config(o.config);
    resolve_seed(rc, o.seed);
    const int n = trials.value_or(rc.n_trials);
    std::ostringstream os;
    os << "variant,snr_db,n_trials,avcrb,avcrb_stderr\n";
    os.precision(10);
    for (Variant v : rc.variants) {
        const MeanWithError unit = average_crb(rc.system, v, 1.0, n, rc.system.seed);
        for (double snr : rc.snr_db) {
            const double var = std::pow(10.0, -snr / 10.0);
            os << to_string(v) << ',' << snr << ',' << n << ',' << unit.mean * var << ',' << unit.stderr_ * var
               << '\n';
        }
    }
    emit(o.out.empty() ? rc.output : o.out, os.str());
    return 0;
}

int cmd_diagnose(const Common& o, std::string format) {
    RunConfig rc = load_config(o.config, ConfigCheck::Structural);
    const SystemConfig& c = rc.system;
    const DiagSpec& ds = rc.diag;
    const TrainingSet ts = make_training_set(c, variant_from_string(o.variant));
    const int mu1 = ds.mu1 < 0 ? c.Nt - 1 : ds.mu1;

    // delta over [-floor(Q/2), Q - floor(Q/2)); integer deltas land exactly
    // when the step divides one
    std::vector<double> deltas;
    const double inv = 1.0 / ds.delta_step;
    const bool unit_fraction = std::abs(inv - std::round(inv)) < 1e-9;
    const long lo = long(std::ceil(-(c.Q / 2) / ds.delta_step - 1e-9));
    const long hi = long(std::ceil((c.Q - c.Q / 2) / ds.delta_step - 1e-9));
    for (long k = lo; k < hi; ++k) deltas.push_back(unit_fraction ? double(k) / std::round(inv) : k * ds.delta_step);

    IcfoDiagnostics d = icfo_diagnostics(c, ts, ds.mu, mu1, ds.mu2, ds.l, ds.l2, deltas);
    check_icfo_closed_forms(c, ts, d);
    if (format.empty()) format = rc.format;
    const std::string out = o.out.empty() ? rc.output : o.out;
    summary(out) << "pilots i_mu=" << ts.pilot_offsets[std::size_t(d.mu)]
                 << " i_mu'=" << ts.pilot_offsets[std::size_t(d.mu1)]
                 << " i_mu''=" << ts.pilot_offsets[std::size_t(d.mu2)] << " |alpha|=" << std::abs(d.alpha)
                 << " max|closed-direct|=" << d.max_direct_error << "\n";
    emit(out, format == "json" ? icfo_diagnostics_json(d) : d.csv());
    return 0;
}

int cmd_estimate(const std::string& frame_path, const Common& o) {
    FrameFile f = load_frame(frame_path);
    SystemConfig c;
    if (!o.config.empty())
        c = load_config(o.config).system;
    else if (f.config)
        c = *f.config;
    else
        throw ConfigError(frame_path + ": binary frame needs --config");
    require_valid(c);
    if (int(f.y.size()) != c.Nr) throw DimensionError("frame has " + std::to_string(f.y.size()) + " antennas, Nr = " +
                                                      std::to_string(c.Nr));
    for (const auto& y : f.y)
        if (y.size() != c.N) throw DimensionError("frame length " + std::to_string(y.size()) + " != N");

    const CfoEstimate e = EstimatorContext(c).estimate(f.y);
    char line[256];
    std::snprintf(line, sizeof line, "cfo=%.9f icfo=%d fcfo=%.9f", e.cfo, e.icfo, e.fcfo);
    std::ostream& s = summary(o.out);
    s << line;
    if (f.true_cfo) {
        std::snprintf(line, sizeof line, " true=%.9f error=%.3e", *f.true_cfo, wrap_cfo(e.cfo - *f.true_cfo, c.Q));
        s << line;
    }
    s << "\n";
    for (const auto& w : e.warnings) std::cerr << "warning: " << w << "\n";
    emit(o.out, estimate_json(e, f.true_cfo));
    return 0;
}

int cmd_synth(const Common& o, std::optional<double> cfo, double snr, int trial, bool binary) {
    RunConfig rc = load_config(o.config);
    resolve_seed(rc, o.seed);
    const SystemConfig& c = rc.system;
    if (o.out.empty()) throw ConfigError("synth: --out is required");
    Rng rp = substream(c.seed, Stream::Pilots, std::uint64_t(trial));
    const TrainingSet ts = make_training_set(c, variant_from_string(o.variant), &rp);
    Rng rc_ = substream(c.seed, Stream::Channel, std::uint64_t(trial));
    const ChannelSet ch = gen_channel(c, config_profile(c), rc_);
    Rng re = substream(c.seed, Stream::Cfo, std::uint64_t(trial));
    const double eps = cfo ? *cfo : draw_cfo(c.Q, re);
    if (!cfo_in_range(eps, c.Q)) throw ConfigError("synth: --cfo outside the CFO range");
    Rng rn = substream(c.seed, Stream::Noise, std::uint64_t(trial));
    const ReceivedFrame f = transmit(c, ts, ch, eps, snr_to_noise_var(c, ts, snr), rn);
    write_file_atomic(o.out, binary ? frame_binary(f.y) : frame_json(c, f.y, eps));
    std::cout << "wrote " << o.out << " cfo=" << eps << " snr=" << snr << " dB\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cfolab: training design, Monte-Carlo evaluation and CFO estimation for MIMO-OFDM"};
    app.require_subcommand(1);

    Common o;
    std::optional<int> trials, workers;
    bool timing = false, binary = false;
    std::string format, csv, frame;
    std::optional<double> cfo;
    double snr = 20.0;
    int trial = 0;

    auto add_seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "RNG seed (CFOLAB_SEED overrides)"); };

    auto* design = app.add_subcommand("design", "validate a config and build its training set");
    design->add_option("-c,--config", o.config, "JSON config")->required();
    design->add_option("--variant", o.variant, "TS0 | TS1 | RS");
    design->add_option("-o,--out", o.out, "training set JSON");
    design->add_option("--csv", csv, "T-matrix table CSV");

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo MSE versus SNR");
    sim->add_option("-c,--config", o.config, "JSON config")->required();
    sim->add_option("-o,--out", o.out, "output file (default stdout)");
    sim->add_option("--trials", trials, "trials per point");
    sim->add_option("--workers", workers, "worker threads");
    sim->add_flag("--timing", timing, "fill sec_per_trial");
    sim->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    add_seed(sim);

    auto* crb = app.add_subcommand("crb", "channel-averaged CRB");
    crb->add_option("-c,--config", o.config, "JSON config")->required();
    crb->add_option("-o,--out", o.out, "output CSV (default stdout)");
    crb->add_option("--trials", trials, "channel draws");
    add_seed(crb);

    auto* diag = app.add_subcommand("diagnose", "ICFO uniqueness diagnostics");
    diag->add_option("-c,--config", o.config, "JSON config")->required();
    diag->add_option("-o,--out", o.out, "output file (default stdout)");
    diag->add_option("--variant", o.variant, "TS0 | TS1 | RS");
    diag->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    auto* est = app.add_subcommand("estimate", "estimate the CFO of a received frame");
    est->add_option("-f,--frame", frame, "frame file (JSON or binary)")->required();
    est->add_option("-c,--config", o.config, "JSON config (required for binary frames)");
    est->add_option("-o,--out", o.out, "result JSON (default stdout)");

    auto* synth = app.add_subcommand("synth", "write a simulated received frame");
    synth->add_option("-c,--config", o.config, "JSON config")->required();
    synth->add_option("-o,--out", o.out, "frame file")->required();
    synth->add_option("--variant", o.variant, "TS0 | TS1 | RS");
    synth->add_option("--cfo", cfo, "true CFO (default: drawn)");
    synth->add_option("--snr", snr, "SNR in dB");
    synth->add_option("--trial", trial, "substream index")->check(CLI::NonNegativeNumber);
    synth->add_flag("--binary", binary, "binary frame format");
    add_seed(synth);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*design) return cmd_design(o, csv);
        if (*sim) return cmd_simulate(o, trials, workers, timing, format);
        if (*crb) return cmd_crb(o, trials);
        if (*diag) return cmd_diagnose(o, format);
        if (*est) return cmd_estimate(frame, o);
        if (*synth) return cmd_synth(o, cfo, snr, trial, binary);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
