#ifndef SUBSPARSE_EXPERIMENTS_HPP
#define SUBSPARSE_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subsparse/amp.hpp"
#include "subsparse/core.hpp"

// Monte Carlo experiment harness: SNR sweeps over the scaled AWGN channel,
// measurement-budget sweeps for AMP, denoiser transfer curves, a bounds
// table, and the oracle verification suites. All runs are deterministic
// functions of (spec, seed); worker-thread count never changes output.

namespace subsparse {

enum class SweepKind { snr, delta, transfer, bounds, verify };

struct SweepSpec {
    SweepKind kind = SweepKind::snr;
    int n = 4096;
    int k = 8;
    std::vector<double> alphabet_points = {1.0};
    std::vector<std::string> estimators = {"ml", "separable", "nonseparable"};
    std::vector<double> snr_db = {0, 2, 4, 6, 8, 10, 12};  // 1/sigma^2 in dB
    std::vector<double> delta_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> v_grid;  // transfer pseudo-noise grid; empty = default
    int trials = 1000;
    std::uint64_t seed = 1;
    int threads = 1;

    // AMP settings (delta sweep and transfer)
    double channel_snr_db = 40.0;  // measurement SNR for delta/transfer
    int iterations = 30;
    double theta = 1.0;
    bool damping_search_enabled = false;
    double switch_db = 6.0;

    bool inject_fault = false;  // verify: negative control for the ML suite

    Alphabet alphabet() const { return Alphabet::from_points(alphabet_points); }
    ProblemDims dims() const { return ProblemDims(n, k); }
};

// Canonical key=value rendering of everything that affects results
// (thread count and output location excluded), and its FNV-1a hash.
std::string canonical_spec_string(const SweepSpec& spec);
std::uint64_t spec_hash(const SweepSpec& spec);

// First line of every CSV: "# subsparse <version> seed=<seed> spec=<hash>".
std::string manifest_line(const SweepSpec& spec);

struct SweepRow {
    double coordinate = 0.0;  // snr_db or delta
    std::string estimator;
    int n = 0;
    int k = 0;
    int trials = 0;
    double mse_mean = 0.0;
    double mse_stderr = 0.0;
    std::uint64_t seed = 0;
};

// Square error versus SNR for the direct-observation channel. Every
// estimator sees the same per-trial observation (paired comparison).
// Rows sorted by (estimator, coordinate).
std::vector<SweepRow> sweep_snr(const SweepSpec& spec);

// Final AMP square error versus delta = M/(k ln(N/k)) for the separable
// and switched denoiser policies, optionally damping-searched per
// (delta, policy) on pilot instances.
std::vector<SweepRow> sweep_delta(const SweepSpec& spec);

struct TransferRow {
    std::string run;  // "separable-curve", "nonseparable-curve", "amp-<i>"
    int iteration = 0;
    double input_mse = 0.0;
    double output_mse = 0.0;
};

// Denoiser input/output transfer: standalone curves on synthetic
// pseudo-data x + N(0, v), plus per-iteration AMP trajectories.
std::vector<TransferRow> denoiser_transfer(const SweepSpec& spec);

struct BoundsRow {
    std::string quantity;
    std::optional<int> w;
    std::optional<int> w_prime;
    std::optional<double> sigma_sq;
    double value = 0.0;
};

// Thresholds, closed-form and oracle reliability values, total error
// bound, converse constants, and the MSE lower bound, across the sigma^2
// grid implied by spec.snr_db.
std::vector<BoundsRow> bounds_report(const SweepSpec& spec);

struct VerifySuite {
    std::string name;
    int instances = 0;
    int failures = 0;
};

struct VerifyReport {
    std::vector<VerifySuite> suites;
    bool all_passed() const;
};

// Independent-oracle suites: ML versus exhaustive search, the fast
// nonseparable estimator versus per-coordinate recomputation, divergences
// versus finite differences, the matching-coefficient inequality by
// enumeration, and the bilinear MGF versus Monte Carlo.
VerifyReport run_verification(const SweepSpec& spec);

// CSV writers; path "-" writes to stdout. All doubles formatted %.12g.
void write_sweep_csv(const std::string& path, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows);
void write_transfer_csv(const std::string& path, const SweepSpec& spec,
                        const std::vector<TransferRow>& rows);
void write_bounds_csv(const std::string& path, const SweepSpec& spec,
                      const std::vector<BoundsRow>& rows);

}  // namespace subsparse

#endif
