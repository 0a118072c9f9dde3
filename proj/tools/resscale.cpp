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

#include "resscale/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

struct Flags {
    std::string config;
    std::string arch;
    int d = 0;
    int n_in = 0;
    int n_out = 0;
    double slope = 1.0;
    std::string depths;
    double beta = 0.0;
    std::string betas;
    double hurst = 0.0;
    std::string hursts;
    std::string init;
    int trials = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out;
    double delta = 0.1;
    int refinement = 0;
    int reference_steps = 0;
    double lengthscale = 0.0;
    double gp_variance = 0.0;
    double mu = 0.0;
};

void add_flags(CLI::App& sub, Flags& f) {
    sub.add_option("--config", f.config, "JSON config file or manifest; flags override it");
    sub.add_option("--arch", f.arch, "res1, res2 or res3")->check(CLI::IsMember({"res1", "res2", "res3"}));
    sub.add_option("--d", f.d, "hidden width");
    sub.add_option("--n-in", f.n_in, "input dimension");
    sub.add_option("--n-out", f.n_out, "output dimension");
    sub.add_option("--slope", f.slope, "negative-side slope of the parametric ReLU");
    sub.add_option("--depths", f.depths, "start:stop[:count] (log-spaced) or a,b,c");
    sub.add_option("--beta", f.beta, "single depth-scaling exponent");
    sub.add_option("--betas", f.betas, "start:stop:step or a,b,c");
    sub.add_option("--hurst", f.hurst, "single Hurst index");
    sub.add_option("--hursts", f.hursts, "start:stop:step or a,b,c");
    sub.add_option("--init", f.init, "weight scheme")
        ->check(CLI::IsMember({"iid-uniform", "iid-gauss", "iid-rademacher", "gp", "fbm"}));
    sub.add_option("--trials", f.trials, "independent trials per cell");
    sub.add_option("--seed", f.seed, "master seed");
    sub.add_option("--workers", f.workers, "worker threads (does not change results)");
    sub.add_option("--out", f.out, "output directory");
    sub.add_option("--delta", f.delta, "failure probability of the high-probability bounds");
    sub.add_option("--refinement", f.refinement, "fine steps per coarse step (sde-convergence)");
    sub.add_option("--reference-steps", f.reference_steps, "reference Euler steps (ode-convergence)");
    sub.add_option("--lengthscale", f.lengthscale, "gp kernel lengthscale");
    sub.add_option("--gp-variance", f.gp_variance, "gp kernel variance");
    sub.add_option("--mu", f.mu, "explosion-probe shift (regimes, gp)");
}

bool given(const CLI::App& sub, const char* name) { return sub.count(name) > 0; }

resscale::ExperimentConfig build(const CLI::App& sub, const Flags& f, resscale::Kind kind) {
    using namespace resscale;
    ExperimentConfig c = default_config(kind);
    if (given(sub, "--config")) {
        std::ifstream in(f.config);
        if (!in) throw ConfigError("config", "cannot open '" + f.config + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config", e.what());
        }
        apply_json(c, j);
    }
    if (given(sub, "--arch")) c.model.arch = parse_arch(f.arch);
    if (given(sub, "--d")) c.model.width = f.d;
    if (given(sub, "--n-in")) c.model.n_in = f.n_in;
    if (given(sub, "--n-out")) c.model.n_out = f.n_out;
    if (given(sub, "--slope")) c.model.slope = f.slope;
    if (given(sub, "--depths")) c.depths = parse_depth_grid(f.depths);
    if (given(sub, "--betas")) c.betas = parse_real_grid(f.betas);
    if (given(sub, "--beta")) c.betas = {f.beta};
    if (given(sub, "--hursts")) c.hursts = parse_real_grid(f.hursts);
    if (given(sub, "--hurst")) c.hursts = {f.hurst};
    if (given(sub, "--init")) c.init = f.init;
    if (given(sub, "--trials")) c.trials = f.trials;
    if (given(sub, "--seed")) c.seed = f.seed;
    if (given(sub, "--workers")) c.workers = f.workers;
    if (given(sub, "--out")) c.out = f.out;
    if (given(sub, "--delta")) c.delta = f.delta;
    if (given(sub, "--refinement")) c.refinement = f.refinement;
    if (given(sub, "--reference-steps")) c.reference_steps = f.reference_steps;
    if (given(sub, "--lengthscale")) c.gp.lengthscale = f.lengthscale;
    if (given(sub, "--gp-variance")) c.gp.variance = f.gp_variance;
    if (given(sub, "--mu")) c.mu = f.mu;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep residual networks at initialization: scaling, regularity and continuum limits"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(resscale::kVersion));
    Flags flags;
    const char* kinds[] = {"norms", "gradients", "distribution", "heatmap",
                           "sde-convergence", "ode-convergence", "regimes", "validate"};
    for (const char* k : kinds) add_flags(*app.add_subcommand(k), flags);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    const CLI::App* sub = app.get_subcommands().front();
    try {
        const resscale::Kind kind = resscale::parse_kind(sub->get_name());
        const resscale::ExperimentConfig config = build(*sub, flags, kind);
        const int status = resscale::run(config, std::cerr);
        if (status == 0 || status == 1) std::cerr << "wrote " << config.out << "/results.csv\n";
        return status;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
