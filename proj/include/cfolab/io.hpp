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

#include "cfolab/estimator.hpp"
#include "cfolab/evalkit.hpp"
#include "cfolab/seqdesign.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cfolab {

/// Antenna/lag tuple and delta grid for the ICFO diagnostics.
struct DiagSpec {
    int mu = 0;
    int mu1 = -1;  // negative selects Nt - 1
    int mu2 = 1;
    int l = 0;
    int l2 = 0;
    double delta_step = 0.1;
};

/// System parameters plus run plumbing.
struct RunConfig {
    SystemConfig system;
    std::vector<Variant> variants{Variant::TS0, Variant::TS1, Variant::RS};
    std::vector<double> snr_db{0, 5, 10, 15, 20};
    int n_trials = 500;
    int workers = 1;
    std::string output;
    std::string format = "csv";  // csv | json
    DiagSpec diag;
};

enum class ConfigCheck { Full, Structural, None };

/// Parses a JSON config. Unknown keys are rejected; Q, v, N_I, eps_th, seed
/// and pilot offsets take defaults when absent. `check` selects how much of
/// validate_conditions must pass.
RunConfig parse_config(const std::string& text, ConfigCheck check = ConfigCheck::Full,
                       const std::string& source = "<config>");
RunConfig load_config(const std::string& path, ConfigCheck check = ConfigCheck::Full);

std::string system_config_json(const SystemConfig& cfg, int indent = 2);

std::string training_set_json(const TrainingSet& ts);
TrainingSet training_set_from_json(const std::string& text, const SystemConfig& cfg);

struct FrameFile {
    std::optional<SystemConfig> config;  // absent for binary frames
    std::vector<ComplexVec> y;
    std::optional<double> true_cfo;
};

std::string frame_json(const SystemConfig& cfg, const std::vector<ComplexVec>& y, std::optional<double> true_cfo);
FrameFile frame_from_json(const std::string& text);

/// 32-byte header ("CFOF", version, N, Nr as little-endian u32, 16 reserved
/// bytes) followed by little-endian float64 re/im pairs, antenna-major.
std::string frame_binary(const std::vector<ComplexVec>& y);
FrameFile frame_from_binary(const std::string& bytes);

/// Reads either format, sniffing the magic.
FrameFile load_frame(const std::string& path);

std::string estimate_json(const CfoEstimate& e, std::optional<double> true_cfo = std::nullopt);
std::string monte_carlo_json(const std::vector<MonteCarloRow>& rows);
std::string icfo_diagnostics_json(const IcfoDiagnostics& d);

std::string read_file(const std::string& path);
/// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace cfolab
