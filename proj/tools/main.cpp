#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subsparse/experiments.hpp"

namespace {

using subsparse::SweepKind;
using subsparse::SweepSpec;

// Grid syntax: "a,b,c" or "start:stop:step" (stop inclusive).
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> g;
    if (text.find(':') != std::string::npos) {
        double start = 0, stop = 0, step = 0;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 ||
            step <= 0)
            throw CLI::ValidationError("grid",
                                       "expected start:stop:step with step > 0");
        const double slack = 1e-9 * std::max(1.0, std::abs(stop));
        for (int i = 0;; ++i) {
            const double x = start + i * step;
            if (x > stop + slack) break;
            g.push_back(x);
        }
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) g.push_back(std::stod(item));
    }
    if (g.empty()) throw CLI::ValidationError("grid", "empty grid: " + text);
    return g;
}

std::vector<std::string> parse_names(const std::string& text) {
    std::vector<std::string> names;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) names.push_back(item);
    return names;
}

struct CliOptions {
    SweepSpec spec;
    std::string alphabet_text = "1";
    std::string snr_text;
    std::string delta_text;
    std::string v_text;
    std::string estimators_text;
    std::string damping_text;
    std::string out = "-";
    std::string config_path;
};

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

int to_int(const std::string& v) {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
}

double to_dbl(const std::string& v) {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
}

std::uint64_t to_u64(const std::string& v) {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
}

// Flat key=value config; keys are the long flag names without the leading
// dashes. Values fill in only for flags not given on the command line.
// Applied by hand because the vendored CLI11 processes set_config files on
// the top-level app only, never for a subcommand.
void apply_config(CLI::App* sub, CliOptions& o) {
    if (o.config_path.empty()) return;
    std::ifstream in(o.config_path);
    if (!in)
        throw CLI::ValidationError("--config", "cannot open " + o.config_path);

    const std::map<std::string, std::function<void(const std::string&)>> set{
        {"n", [&](const std::string& v) { o.spec.n = to_int(v); }},
        {"k", [&](const std::string& v) { o.spec.k = to_int(v); }},
        {"alphabet", [&](const std::string& v) { o.alphabet_text = v; }},
        {"trials", [&](const std::string& v) { o.spec.trials = to_int(v); }},
        {"seed", [&](const std::string& v) { o.spec.seed = to_u64(v); }},
        {"threads", [&](const std::string& v) { o.spec.threads = to_int(v); }},
        {"out", [&](const std::string& v) { o.out = v; }},
        {"snr-db", [&](const std::string& v) { o.snr_text = v; }},
        {"estimators", [&](const std::string& v) { o.estimators_text = v; }},
        {"delta", [&](const std::string& v) { o.delta_text = v; }},
        {"v-grid", [&](const std::string& v) { o.v_text = v; }},
        {"channel-snr-db",
         [&](const std::string& v) { o.spec.channel_snr_db = to_dbl(v); }},
        {"iters", [&](const std::string& v) { o.spec.iterations = to_int(v); }},
        {"damping", [&](const std::string& v) { o.damping_text = v; }},
        {"switch-db", [&](const std::string& v) { o.spec.switch_db = to_dbl(v); }},
        {"inject-fault",
         [&](const std::string& v) { o.spec.inject_fault = to_int(v) != 0; }},
    };

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError(
                "--config", "line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        const auto it = set.find(key);
        if (it == set.end() || sub->get_option_no_throw("--" + key) == nullptr)
            throw CLI::ValidationError("--config", "unknown key '" + key +
                                           "' at line " + std::to_string(lineno));
        if (sub->count("--" + key) > 0) continue;  // flags win
        try {
            it->second(value);
        } catch (const std::exception&) {
            throw CLI::ValidationError(
                "--config", "bad value for '" + key + "': " + value);
        }
    }
}

void add_common(CLI::App* sub, CliOptions& o) {
    sub->add_option("--n", o.spec.n, "signal dimension N")->capture_default_str();
    sub->add_option("--k", o.spec.k, "sparsity k")->capture_default_str();
    sub->add_option("--alphabet", o.alphabet_text,
                    "comma list of non-zero signal values")
        ->capture_default_str();
    sub->add_option("--trials", o.spec.trials, "Monte Carlo trials")
        ->capture_default_str();
    sub->add_option("--seed", o.spec.seed, "master seed")->capture_default_str();
    sub->add_option("--threads", o.spec.threads,
                    "worker threads; never changes results")
        ->capture_default_str();
    sub->add_option("--out", o.out, "output CSV path, '-' for stdout")
        ->capture_default_str();
    sub->add_option("--config", o.config_path,
                    "flat key=value config file; flags win");
}

void add_amp(CLI::App* sub, CliOptions& o) {
    sub->add_option("--channel-snr-db", o.spec.channel_snr_db,
                    "measurement SNR 1/sigma^2 in dB")
        ->capture_default_str();
    sub->add_option("--iters", o.spec.iterations, "AMP iterations")
        ->capture_default_str();
    sub->add_option("--damping", o.damping_text,
                    "damping factor in (0,1], or 'search'");
    sub->add_option("--switch-db", o.spec.switch_db,
                    "input SNR estimate above which the switched policy goes "
                    "non-separable")
        ->capture_default_str();
}

void finalize(CLI::App* sub, CliOptions& o, SweepKind kind, bool allow_search) {
    apply_config(sub, o);
    o.spec.kind = kind;
    o.spec.alphabet_points = parse_grid(o.alphabet_text);
    if (!o.snr_text.empty()) o.spec.snr_db = parse_grid(o.snr_text);
    if (!o.delta_text.empty()) o.spec.delta_grid = parse_grid(o.delta_text);
    if (!o.v_text.empty()) o.spec.v_grid = parse_grid(o.v_text);
    if (!o.estimators_text.empty())
        o.spec.estimators = parse_names(o.estimators_text);
    if (!o.damping_text.empty()) {
        if (o.damping_text == "search") {
            if (!allow_search)
                throw CLI::ValidationError(
                    "--damping", "'search' applies to sweep-delta only");
            o.spec.damping_search_enabled = true;
        } else {
            o.spec.theta = std::stod(o.damping_text);
            if (!(o.spec.theta > 0.0 && o.spec.theta <= 1.0))
                throw CLI::ValidationError("--damping", "need 0 < theta <= 1");
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "subsparse: estimators, bounds, and Monte Carlo experiments for "
        "k-sparse signals in Gaussian noise"};
    app.require_subcommand(1);

    CliOptions snr_opt, delta_opt, transfer_opt, bounds_opt, verify_opt;

    CLI::App* snr_cmd =
        app.add_subcommand("sweep-snr", "square error vs SNR on the direct channel");
    add_common(snr_cmd, snr_opt);
    snr_cmd->add_option("--snr-db", snr_opt.snr_text,
                        "SNR grid in dB (list or start:stop:step)");
    snr_cmd->add_option("--estimators", snr_opt.estimators_text,
                        "comma list from ml,separable,nonseparable,exact");

    CLI::App* delta_cmd = app.add_subcommand(
        "sweep-delta", "AMP square error vs measurement budget delta");
    add_common(delta_cmd, delta_opt);
    delta_cmd->add_option("--delta", delta_opt.delta_text,
                          "delta grid (list or start:stop:step)");
    add_amp(delta_cmd, delta_opt);

    CLI::App* transfer_cmd = app.add_subcommand(
        "transfer", "denoiser input/output curves and AMP trajectories");
    add_common(transfer_cmd, transfer_opt);
    transfer_cmd->add_option("--delta", transfer_opt.delta_text,
                             "delta for the AMP trajectory runs");
    transfer_cmd->add_option("--v-grid", transfer_opt.v_text,
                             "pseudo-noise variance grid for standalone curves");
    add_amp(transfer_cmd, transfer_opt);

    CLI::App* bounds_cmd =
        app.add_subcommand("bounds", "thresholds, reliability, and bound tables");
    add_common(bounds_cmd, bounds_opt);
    bounds_cmd->add_option("--snr-db", bounds_opt.snr_text,
                           "SNR grid fixing the sigma^2 column");

    CLI::App* verify_cmd =
        app.add_subcommand("verify", "run the oracle verification suites");
    verify_cmd->add_option("--seed", verify_opt.spec.seed, "master seed")
        ->capture_default_str();
    verify_cmd->add_flag("--inject-fault", verify_opt.spec.inject_fault,
                         "negative control: break an ML tie-break scan");
    verify_cmd->add_option("--config", verify_opt.config_path,
                           "flat key=value config file; flags win");

    CLI11_PARSE(app, argc, argv);

    try {
        if (snr_cmd->parsed()) {
            finalize(snr_cmd, snr_opt, SweepKind::snr, false);
            write_sweep_csv(snr_opt.out, snr_opt.spec, sweep_snr(snr_opt.spec));
        } else if (delta_cmd->parsed()) {
            finalize(delta_cmd, delta_opt, SweepKind::delta, true);
            write_sweep_csv(delta_opt.out, delta_opt.spec,
                            sweep_delta(delta_opt.spec));
        } else if (transfer_cmd->parsed()) {
            finalize(transfer_cmd, transfer_opt, SweepKind::transfer, false);
            write_transfer_csv(transfer_opt.out, transfer_opt.spec,
                               denoiser_transfer(transfer_opt.spec));
        } else if (bounds_cmd->parsed()) {
            finalize(bounds_cmd, bounds_opt, SweepKind::bounds, false);
            write_bounds_csv(bounds_opt.out, bounds_opt.spec,
                             bounds_report(bounds_opt.spec));
        } else if (verify_cmd->parsed()) {
            apply_config(verify_cmd, verify_opt);
            verify_opt.spec.kind = SweepKind::verify;
            const subsparse::VerifyReport report =
                run_verification(verify_opt.spec);
            for (const subsparse::VerifySuite& s : report.suites)
                std::printf("[%s] %s: %d instances, %d failures\n",
                            s.failures == 0 ? "PASS" : "FAIL", s.name.c_str(),
                            s.instances, s.failures);
            return report.all_passed() ? 0 : 1;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
