// ccascat: parameter sweeps, self-energy/DOS inspection, and oracle
// comparisons for single-photon scattering off periodic atom layers in a
// 2D coupled-cavity array. Emits plot-ready CSV or JSON.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "ccas/sweep.hpp"

namespace {

struct CliState {
    std::string config;
    std::string out;
    std::string format;
    std::string rii;
    std::string kx, ky;
    std::string var;  // sweep subcommand: delta | kx | xdist
    double xi = 0.0, delta = 0.0, omega = 0.0, omega2 = 0.0;
    double start = 0.0, stop = 0.0;
    int count = 0, d = 0, x1 = 0, x2 = 0, jobs = -1;
    bool packet = false;
};

void add_common(CLI::App* cmd, CliState& st) {
    cmd->add_option("--config", st.config, "JSON config file");
    cmd->add_option("--out", st.out, "output path");
    cmd->add_option("--format", st.format, "csv|json");
    cmd->add_option("--jobs", st.jobs, "worker threads (0 = all cores)");
    cmd->add_option("--mode", st.rii, "two-layer total: paper|directional");
    cmd->add_option("--d", st.d, "atomic period");
    cmd->add_option("--xi", st.xi, "hopping strength");
    cmd->add_option("--omega", st.omega, "layer-1 coupling");
    cmd->add_option("--omega2", st.omega2, "layer-2 coupling (enables two layers)");
    cmd->add_option("--x1", st.x1, "layer-1 column");
    cmd->add_option("--x2", st.x2, "layer-2 column");
    cmd->add_option("--kx", st.kx, "incident kx (pi expressions allowed)");
    cmd->add_option("--ky", st.ky, "incident ky (pi expressions allowed)");
    cmd->add_option("--delta", st.delta, "photon-atom detuning");
    cmd->add_option("--start", st.start, "sweep start");
    cmd->add_option("--stop", st.stop, "sweep stop");
    cmd->add_option("--count", st.count, "sweep point count");
}

// CLI flags override config-file values; only flags the user actually
// passed are applied.
ccas::SweepSpec build_spec(const CLI::App* cmd, const CliState& st,
                           ccas::SweepMode mode) {
    ccas::SweepSpec spec;
    if (!st.config.empty()) {
        std::ifstream f(st.config);
        if (!f) throw ccas::ConfigError("config: cannot open '" + st.config + "'");
        ccas::Json j;
        try {
            j = ccas::Json::parse(f);
        } catch (const std::exception& e) {
            throw ccas::ConfigError("config: " + std::string(e.what()));
        }
        spec = ccas::spec_from_json(j);
    }
    const bool sweep_family = mode == ccas::SweepMode::delta;
    if (sweep_family) {
        // keep a sweep-family mode from the config unless --var overrides it
        const bool config_sweep = spec.mode == ccas::SweepMode::delta ||
                                  spec.mode == ccas::SweepMode::kx ||
                                  spec.mode == ccas::SweepMode::xdist;
        if (!st.config.empty() && config_sweep && !cmd->count("--var")) {
            // spec.mode already set from the config
        } else if (st.var == "delta") {
            spec.mode = ccas::SweepMode::delta;
        } else if (st.var == "kx") {
            spec.mode = ccas::SweepMode::kx;
        } else if (st.var == "xdist") {
            spec.mode = ccas::SweepMode::xdist;
        } else {
            throw ccas::ConfigError("--var: expected delta|kx|xdist");
        }
    } else {
        spec.mode = mode;
    }
    auto passed = [&](const char* name) { return cmd->count(name) > 0; };
    if (passed("--xi")) spec.params.xi = st.xi;
    if (passed("--delta")) spec.params.delta = st.delta;
    if (passed("--d")) spec.params.d = st.d;
    if (passed("--omega2")) {
        if (spec.params.layers.size() < 2) spec.params.layers.resize(2);
        spec.params.layers[1].omega = ccas::Complex(st.omega2, 0.0);
    }
    if (passed("--omega")) {
        if (spec.params.layers.empty()) spec.params.layers.resize(1);
        spec.params.layers[0].omega = ccas::Complex(st.omega, 0.0);
    }
    if (passed("--x1")) {
        if (spec.params.layers.empty()) spec.params.layers.resize(1);
        spec.params.layers[0].x = st.x1;
    }
    if (passed("--x2")) {
        if (spec.params.layers.size() < 2)
            throw ccas::ConfigError("--x2: needs a second layer (--omega2)");
        spec.params.layers[1].x = st.x2;
    }
    if (passed("--kx")) spec.kx = ccas::parse_angle(st.kx);
    if (passed("--ky")) spec.ky = ccas::parse_angle(st.ky);
    if (passed("--start")) spec.start = st.start;
    if (passed("--stop")) spec.stop = st.stop;
    if (passed("--count")) spec.count = st.count;
    if (passed("--jobs")) spec.jobs = st.jobs;
    if (passed("--out")) spec.out = st.out;
    if (passed("--format")) {
        if (st.format == "csv")
            spec.format = ccas::OutputFormat::csv;
        else if (st.format == "json")
            spec.format = ccas::OutputFormat::json;
        else
            throw ccas::ConfigError("--format: expected csv or json");
    }
    if (passed("--mode")) {
        if (st.rii == "paper")
            spec.rii = ccas::RTwoMode::paper;
        else if (st.rii == "directional")
            spec.rii = ccas::RTwoMode::directional;
        else
            throw ccas::ConfigError("--mode: expected paper or directional");
    }
    if (mode == ccas::SweepMode::oracle) {
        spec.format = ccas::OutputFormat::json;
        spec.packet = st.packet;
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-photon scattering in a 2D coupled-cavity array"};
    app.require_subcommand(1);
    CliState st;

    CLI::App* sweep = app.add_subcommand(
        "sweep", "sweep a variable and tabulate R and the self-energy");
    sweep->add_option("--var", st.var, "swept variable: delta|kx|xdist")
        ->default_val("delta");
    add_common(sweep, st);

    CLI::App* selfenergy = app.add_subcommand(
        "selfenergy", "self-energy (or self-energy matrix) vs cos kx");
    add_common(selfenergy, st);

    CLI::App* dos = app.add_subcommand(
        "dos", "1D branch density of states over an energy range");
    add_common(dos, st);

    CLI::App* oracle = app.add_subcommand(
        "oracle", "compare closed forms against the strip solver");
    oracle->add_flag("--packet", st.packet, "also run the wave-packet oracle");
    add_common(oracle, st);

    CLI11_PARSE(app, argc, argv);

    ccas::SweepMode mode = ccas::SweepMode::delta;
    const CLI::App* cmd = sweep;
    if (selfenergy->parsed()) {
        mode = ccas::SweepMode::selfenergy;
        cmd = selfenergy;
    } else if (dos->parsed()) {
        mode = ccas::SweepMode::dos;
        cmd = dos;
    } else if (oracle->parsed()) {
        mode = ccas::SweepMode::oracle;
        cmd = oracle;
    }

    try {
        ccas::SweepSpec spec = build_spec(cmd, st, mode);
        const std::string content = ccas::run_sweep(spec);
        if (spec.out.empty()) std::cout << content;
        return 0;
    } catch (const ccas::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
