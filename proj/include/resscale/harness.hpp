/*
 * Copyright 2026 The resscale Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "resscale/core.hpp"
#include "resscale/init.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace resscale {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Kind { norms, gradients, distribution, heatmap, sde_convergence, ode_convergence, regimes, validate };

std::string to_string(Kind kind);
Kind parse_kind(std::string_view name);

/// Invalid configuration; the message starts with the offending field.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct ExperimentConfig {
    Kind kind = Kind::norms;
    ModelSpec model;
    /// iid-uniform, iid-gauss, iid-rademacher, gp or fbm.
    std::string init = "iid-uniform";
    GPSpec gp;
    std::vector<double> hursts{0.5};
    std::vector<double> betas{0.25, 0.5, 1.0};
    std::vector<int> depths;
    int trials = 50;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = "out";
    double delta = 0.1;
    int refinement = 32;
    /// 0 means 64 x the largest depth.
    int reference_steps = 0;
    /// Shift of the explosion probe (regimes with gp init); off when unset.
    std::optional<double> mu;
};

/// Per-kind defaults. norms/gradients/regimes: d = 40, n_in = 64, n_out = 1,
/// res-3, uniform weights, L from 10 to 1000, beta in {0.25, 0.5, 1}, 50 trials.
ExperimentConfig default_config(Kind kind);

void validate(const ExperimentConfig& config);

/// Everything that determines the results (no workers, no output path).
nlohmann::json config_to_json(const ExperimentConfig& config);
/// Overrides the fields present in `j`; accepts a manifest (reads its "config").
void apply_json(ExperimentConfig& config, const nlohmann::json& j);

/// "a:b" -> 10 log-spaced integers, "a:b:n" -> n of them, or "a,b,c".
std::vector<int> parse_depth_grid(std::string_view text);
/// "a:b:step" -> arithmetic grid including b, or "a,b,c".
std::vector<double> parse_real_grid(std::string_view text);

InitScheme make_scheme(const ExperimentConfig& config);

std::string config_fingerprint(const ExperimentConfig& config);

/// One CSV row. Empty optionals become empty cells.
struct ResultRecord {
    std::string quantity;
    std::optional<int> depth;
    std::optional<double> hurst;
    std::optional<double> beta;
    std::optional<int> trial;
    std::string statistic;
    std::optional<double> value;
    std::optional<double> std_error;
    std::optional<int> trials;
    std::optional<int> overflow;
    std::string label;
};

inline constexpr std::string_view kCsvHeader =
    "fingerprint,quantity,depth,hurst,beta,trial,statistic,value,stderr,trials,overflow,label";

/// 17 significant digits; +-inf and NaN are rejected.
std::string format_number(double x);

/// Non-finite values are written as an empty value with overflow >= 1.
void write_csv(std::ostream& os, const std::vector<ResultRecord>& rows, const std::string& fingerprint);

struct Outcome {
    std::vector<ResultRecord> rows;
    bool all_passed = true;  // false when a validate check fails
};

/// Runs the experiment without touching the filesystem.
Outcome execute(const ExperimentConfig& config);

/**
 * Validates, executes and writes <out>/results.csv and <out>/manifest.json.
 * Returns 0 on success, 1 when a validate check fails, 2 on an invalid
 * configuration and 3 on an I/O failure. Diagnostics go to `log`.
 */
int run(const ExperimentConfig& config, std::ostream& log);

}  // namespace resscale
