#include "subsparse/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "subsparse/bounds.hpp"
#include "subsparse/channel.hpp"
#include "subsparse/estimators.hpp"
#include "subsparse/numeric.hpp"

namespace subsparse {

namespace {

constexpr const char* kVersion = "0.1.0";

// Work items fan out to a pool; each item writes only its own slot, so
// results never depend on scheduling. The first worker exception is
// rethrown after the pool drains.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += fmt(xs[i]);
    }
    return out;
}

std::string join(const std::vector<std::string>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += xs[i];
    }
    return out;
}

struct MeanStderr {
    double mean = 0.0;
    double se = 0.0;
};

// Sequential slot-order reduction, part of the determinism contract.
MeanStderr reduce(const std::vector<double>& xs) {
    MeanStderr r;
    const int n = static_cast<int>(xs.size());
    if (n == 0) return r;
    for (double x : xs) r.mean += x;
    r.mean /= n;
    if (n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / (n - 1) / n);
    }
    return r;
}

const char* kind_name(SweepKind kind) {
    switch (kind) {
        case SweepKind::snr: return "snr";
        case SweepKind::delta: return "delta";
        case SweepKind::transfer: return "transfer";
        case SweepKind::bounds: return "bounds";
        case SweepKind::verify: return "verify";
    }
    return "?";
}

double snr_db_to_sigma_sq(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

double mean_square_point(const Alphabet& a) {
    double p = 0.0;
    for (double u : a.points) p += u * u;
    return p / a.M();
}

void sort_rows(std::vector<SweepRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.estimator != b.estimator) return a.estimator < b.estimator;
        return a.coordinate < b.coordinate;
    });
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path == "-" || path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    return file;
}

}  // namespace

std::string canonical_spec_string(const SweepSpec& spec) {
    std::ostringstream os;
    os << "kind=" << kind_name(spec.kind) << "\n"
       << "n=" << spec.n << "\n"
       << "k=" << spec.k << "\n"
       << "alphabet=" << join(spec.alphabet_points) << "\n"
       << "estimators=" << join(spec.estimators) << "\n"
       << "snr_db=" << join(spec.snr_db) << "\n"
       << "delta=" << join(spec.delta_grid) << "\n"
       << "v_grid=" << join(spec.v_grid) << "\n"
       << "trials=" << spec.trials << "\n"
       << "seed=" << spec.seed << "\n"
       << "channel_snr_db=" << fmt(spec.channel_snr_db) << "\n"
       << "iterations=" << spec.iterations << "\n"
       << "theta=" << fmt(spec.theta) << "\n"
       << "damping_search=" << (spec.damping_search_enabled ? 1 : 0) << "\n"
       << "switch_db=" << fmt(spec.switch_db) << "\n"
       << "inject_fault=" << (spec.inject_fault ? 1 : 0) << "\n";
    return os.str();
}

std::uint64_t spec_hash(const SweepSpec& spec) {
    const std::string s = canonical_spec_string(spec);
    std::uint64_t h = 14695981039346656037ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string manifest_line(const SweepSpec& spec) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "# subsparse %s seed=%llu spec=%016llx",
                  kVersion, static_cast<unsigned long long>(spec.seed),
                  static_cast<unsigned long long>(spec_hash(spec)));
    return buf;
}

std::vector<SweepRow> sweep_snr(const SweepSpec& spec) {
    if (spec.snr_db.empty()) throw std::invalid_argument("sweep_snr: empty SNR grid");
    if (spec.trials < 1) throw std::invalid_argument("sweep_snr: trials >= 1");
    if (spec.estimators.empty())
        throw std::invalid_argument("sweep_snr: no estimators selected");
    const ProblemDims dims = spec.dims();
    const Alphabet alphabet = spec.alphabet();

    for (const std::string& e : spec.estimators) {
        if (e != "ml" && e != "separable" && e != "nonseparable" && e != "exact")
            throw std::invalid_argument("sweep_snr: unknown estimator " + e);
        if (e == "exact") {
            const double log_count = log_binomial(dims.N, dims.k) +
                                     dims.k * std::log(static_cast<double>(alphabet.M()));
            if (log_count > std::log(1e7))
                throw std::invalid_argument(
                    "sweep_snr: exact posterior mean infeasible at this size");
        }
        if (e == "nonseparable" && dims.N - 1 < 2 * dims.k)
            throw std::invalid_argument("sweep_snr: nonseparable needs N - 1 >= 2k");
    }

    const int n_est = static_cast<int>(spec.estimators.size());
    std::vector<SweepRow> rows;
    for (std::size_t gi = 0; gi < spec.snr_db.size(); ++gi) {
        const double sigma_sq = snr_db_to_sigma_sq(spec.snr_db[gi]);
        const NoiseModel noise = NoiseModel::make(sigma_sq, dims);
        std::vector<std::vector<double>> slot(
            n_est, std::vector<double>(spec.trials, 0.0));

        parallel_for(spec.trials, spec.threads, [&](int t) {
            // Trial t reuses the same stream at every SNR point: common
            // random numbers across the grid.
            Rng rng(substream(spec.seed, static_cast<std::uint64_t>(t)));
            const SparseSignal x = sample_signal(dims, alphabet, rng);
            const ObservedVector y = awgn_transmit(x, noise, rng);
            for (int ei = 0; ei < n_est; ++ei) {
                const std::string& name = spec.estimators[ei];
                double mse;
                if (name == "ml") {
                    mse = square_error(x, ml_estimate(y, dims, alphabet), dims.k);
                } else if (name == "separable") {
                    mse = square_error(
                        x, separable_bayes(y, dims, alphabet, noise.sigma_eff_sq),
                        dims.k);
                } else if (name == "nonseparable") {
                    mse = square_error(
                        x, nonseparable_bayes(y, dims, alphabet, noise.sigma_eff_sq),
                        dims.k);
                } else {
                    mse = square_error(
                        x, exact_posterior_mean(y, dims, alphabet, noise.sigma_eff_sq),
                        dims.k);
                }
                slot[ei][t] = mse;
            }
        });

        for (int ei = 0; ei < n_est; ++ei) {
            const MeanStderr ms = reduce(slot[ei]);
            rows.push_back({spec.snr_db[gi], spec.estimators[ei], dims.N, dims.k,
                            spec.trials, ms.mean, ms.se, spec.seed});
        }
    }
    sort_rows(rows);
    return rows;
}

namespace {

AmpInstance draw_cs_instance(const SweepSpec& spec, const ProblemDims& dims,
                             const Alphabet& alphabet, int m_meas,
                             double sigma_sq, std::uint64_t a,
                             std::uint64_t trial) {
    Rng rng(substream(spec.seed, a, trial, 1));
    SensingMatrix A(m_meas, dims.N, substream(spec.seed, a, trial, 2));
    SparseSignal x = sample_signal(dims, alphabet, rng);
    ObservedVector y = cs_measure(x, A, sigma_sq, rng);
    return AmpInstance{std::move(y), A, std::move(x)};
}

std::vector<double> default_theta_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 10; ++i) g.push_back(0.1 * i);
    return g;
}

}  // namespace

std::vector<SweepRow> sweep_delta(const SweepSpec& spec) {
    if (spec.delta_grid.empty())
        throw std::invalid_argument("sweep_delta: empty delta grid");
    if (spec.trials < 1) throw std::invalid_argument("sweep_delta: trials >= 1");
    const ProblemDims dims = spec.dims();
    const Alphabet alphabet = spec.alphabet();
    const double sigma_sq = snr_db_to_sigma_sq(spec.channel_snr_db);
    const double fallback = mean_square_point(alphabet);

    struct Policy {
        const char* name;
        DenoiserPolicy policy;
    };
    const Policy policies[2] = {{"amp-separable", DenoiserPolicy::separable},
                                {"amp-switched", DenoiserPolicy::switched}};

    std::vector<SweepRow> rows;
    for (std::size_t di = 0; di < spec.delta_grid.size(); ++di) {
        const double delta = spec.delta_grid[di];
        const CsDims cs = CsDims::from_delta(delta, dims);

        double theta[2] = {spec.theta, spec.theta};
        if (spec.damping_search_enabled) {
            const int pilots = std::max(2, std::min(spec.trials, 8));
            // Pilot instances live in a trial-index range far above the
            // measurement trials so the two never share randomness.
            const InstanceGenerator gen = [&](std::uint64_t pt) {
                return draw_cs_instance(spec, dims, alphabet, cs.M_meas, sigma_sq,
                                        di, 1'000'000 + pt);
            };
            for (int pi = 0; pi < 2; ++pi) {
                AmpConfig cfg;
                cfg.iterations = spec.iterations;
                cfg.policy = policies[pi].policy;
                cfg.switch_db = spec.switch_db;
                theta[pi] = damping_search(gen, default_theta_grid(), pilots, cfg,
                                           dims, alphabet, sigma_sq)
                                .best_theta;
            }
        }

        std::vector<std::vector<double>> slot(2,
                                              std::vector<double>(spec.trials, 0.0));
        const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(dims.k));
        parallel_for(spec.trials, spec.threads, [&](int t) {
            const AmpInstance inst = draw_cs_instance(
                spec, dims, alphabet, cs.M_meas, sigma_sq, di,
                static_cast<std::uint64_t>(t));
            const Eigen::MatrixXd A_scaled = inst.A.dense() * inv_sqrt_k;
            for (int pi = 0; pi < 2; ++pi) {
                AmpConfig cfg;
                cfg.iterations = spec.iterations;
                cfg.theta = theta[pi];
                cfg.policy = policies[pi].policy;
                cfg.switch_db = spec.switch_db;
                const AmpTrace trace = amp_run_dense(inst.y, A_scaled, &inst.x, cfg,
                                                     dims, alphabet, sigma_sq);
                slot[pi][t] = trace_score(trace, fallback);
            }
        });

        for (int pi = 0; pi < 2; ++pi) {
            const MeanStderr ms = reduce(slot[pi]);
            rows.push_back({delta, policies[pi].name, dims.N, dims.k, spec.trials,
                            ms.mean, ms.se, spec.seed});
        }
    }
    sort_rows(rows);
    return rows;
}

std::vector<TransferRow> denoiser_transfer(const SweepSpec& spec) {
    if (spec.trials < 1) throw std::invalid_argument("transfer: trials >= 1");
    const ProblemDims dims = spec.dims();
    const Alphabet alphabet = spec.alphabet();

    std::vector<double> v_grid = spec.v_grid;
    if (v_grid.empty())
        for (int i = -8; i <= 0; ++i) v_grid.push_back(std::pow(10.0, 0.5 * i));

    std::vector<TransferRow> rows;

    // Standalone curves: pseudo-data u = x + N(0, v I).
    const SeparableDenoiser sep(dims, alphabet);
    const NonseparableDenoiser nonsep(dims, alphabet);
    for (std::size_t vi = 0; vi < v_grid.size(); ++vi) {
        const double v = v_grid[vi];
        std::vector<double> in_slot(spec.trials), sep_slot(spec.trials),
            non_slot(spec.trials);
        parallel_for(spec.trials, spec.threads, [&](int t) {
            Rng rng(substream(spec.seed, vi, static_cast<std::uint64_t>(t), 3));
            const SparseSignal x = sample_signal(dims, alphabet, rng);
            Vector u = x.dense();
            const double sd = std::sqrt(v);
            for (int n = 0; n < dims.N; ++n) u[n] += sd * rng.normal();
            in_slot[t] = (u - x.dense()).squaredNorm() / dims.N;
            sep_slot[t] = square_error(x, sep.denoise(u, v), dims.k);
            non_slot[t] = square_error(x, nonsep.denoise(u, v), dims.k);
        });
        const double in_mean = reduce(in_slot).mean;
        rows.push_back({"separable-curve", static_cast<int>(vi), in_mean,
                        reduce(sep_slot).mean});
        rows.push_back({"nonseparable-curve", static_cast<int>(vi), in_mean,
                        reduce(non_slot).mean});
    }

    // AMP trajectories with the oracle signal, switched policy.
    const double delta = spec.delta_grid.empty() ? 2.5 : spec.delta_grid.front();
    const CsDims cs = CsDims::from_delta(delta, dims);
    const double sigma_sq = snr_db_to_sigma_sq(spec.channel_snr_db);
    const int n_runs = std::min(spec.trials, 8);
    std::vector<std::vector<TransferRow>> run_rows(n_runs);
    parallel_for(n_runs, spec.threads, [&](int r) {
        const AmpInstance inst =
            draw_cs_instance(spec, dims, alphabet, cs.M_meas, sigma_sq, 0xAA,
                             static_cast<std::uint64_t>(r));
        AmpConfig cfg;
        cfg.iterations = spec.iterations;
        cfg.theta = spec.theta;
        cfg.policy = DenoiserPolicy::switched;
        cfg.switch_db = spec.switch_db;
        const AmpTrace trace =
            amp_run(inst.y, inst.A, &inst.x, cfg, dims, alphabet, sigma_sq);
        const std::string name = "amp-" + std::to_string(r);
        for (std::size_t t = 0; t < trace.iterations.size(); ++t)
            run_rows[r].push_back({name, static_cast<int>(t),
                                   trace.iterations[t].input_mse,
                                   trace.iterations[t].output_mse});
    });
    for (auto& rr : run_rows) rows.insert(rows.end(), rr.begin(), rr.end());
    return rows;
}

std::vector<BoundsRow> bounds_report(const SweepSpec& spec) {
    const ProblemDims dims = spec.dims();
    const Alphabet alphabet = spec.alphabet();
    std::vector<BoundsRow> rows;

    const RecoveryThresholds th = recovery_thresholds(alphabet);
    rows.push_back({"threshold_direct", {}, {}, {}, th.direct});
    rows.push_back({"threshold_converse", {}, {}, {}, th.converse});

    const double p_u = mean_square_point(alphabet);
    const MseBound mse = mse_lower_bound(1e-6, 0.0, p_u, dims, alphabet);
    rows.push_back({"mse_lower_bound_alpha_1e-6", {}, {}, {}, mse.value});

    for (double snr : spec.snr_db) {
        const double sigma_sq = snr_db_to_sigma_sq(snr);
        for (int w = 1; w <= std::min(3, dims.k); ++w) {
            const int wp_max = std::min(3, dims.k - w);
            for (int wp = 0; wp <= wp_max; ++wp) {
                if (alphabet.M() == 1 && wp > 0) continue;
                rows.push_back({"reliability", w, wp, sigma_sq,
                                reliability_function(w, wp, sigma_sq, alphabet)});
                rows.push_back({"reliability_oracle", w, wp, sigma_sq,
                                reliability_oracle(w, wp, sigma_sq, alphabet, 200)});
            }
        }
        const double total = error_prob_bound_total(dims, alphabet, sigma_sq);
        rows.push_back(
            {"error_bound_total", {}, {}, sigma_sq, std::min(total, 1.0)});

        const ConverseConstants cc = converse_constants(sigma_sq, alphabet);
        rows.push_back({"converse_c0", {}, {}, sigma_sq, cc.c0});
        rows.push_back({"converse_c1", {}, {}, sigma_sq, cc.c1});
        rows.push_back({"converse_gamma_max", {}, {}, sigma_sq, cc.gamma_max});
    }
    return rows;
}

namespace {

Alphabet random_alphabet(Rng& rng, int m) {
    std::vector<double> pts;
    while (static_cast<int>(pts.size()) < m) {
        const double mag = 0.5 + 1.5 * rng.uniform01();
        const double val = (rng.below(2) == 0 ? 1.0 : -1.0) * mag;
        bool distinct = true;
        for (double p : pts)
            if (std::abs(p - val) < 0.05) distinct = false;
        if (distinct) pts.push_back(val);
    }
    return Alphabet::from_points(std::move(pts));
}

VerifySuite verify_ml_vs_brute_force(const SweepSpec& spec) {
    VerifySuite suite{"ml-vs-brute-force", 1000, 0};
    const double sigma_choices[3] = {0.05, 0.5, 2.0};
    for (int i = 0; i < suite.instances; ++i) {
        Rng rng(substream(spec.seed, 101, static_cast<std::uint64_t>(i)));
        const int N = 6 + static_cast<int>(rng.below(7));
        const int k = 1 + static_cast<int>(rng.below(3));
        const int M = 1 + static_cast<int>(rng.below(2));
        const Alphabet alphabet = random_alphabet(rng, M);
        const ProblemDims dims(N, k);
        const NoiseModel noise =
            NoiseModel::make(sigma_choices[rng.below(3)], dims);
        const SparseSignal x = sample_signal(dims, alphabet, rng);
        const ObservedVector y = awgn_transmit(x, noise, rng);

        const SparseSignal ml =
            spec.inject_fault ? ml_estimate_with_fault_injection(y, dims, alphabet)
                              : ml_estimate(y, dims, alphabet);
        const SparseSignal bf = brute_force_ml(y, dims, alphabet);
        if (residual_sq(y, ml) != residual_sq(y, bf)) ++suite.failures;
    }
    return suite;
}

VerifySuite verify_nonseparable_reference(const SweepSpec& spec) {
    VerifySuite suite{"nonseparable-vs-reference", 200, 0};
    for (int i = 0; i < suite.instances; ++i) {
        Rng rng(substream(spec.seed, 102, static_cast<std::uint64_t>(i)));
        const int N = 5 + static_cast<int>(rng.below(20));
        const int k_cap = std::min(3, (N - 1) / 2);
        const int k = 1 + static_cast<int>(rng.below(k_cap));
        const int M = 1 + static_cast<int>(rng.below(3));
        const Alphabet alphabet = random_alphabet(rng, M);
        const ProblemDims dims(N, k);
        const double v = 0.05 + 1.95 * rng.uniform01();

        const SparseSignal x = sample_signal(dims, alphabet, rng);
        Vector y = x.dense();
        const double sd = std::sqrt(v);
        for (int n = 0; n < N; ++n) y[n] += sd * rng.normal();

        const Vector fast = nonseparable_bayes(y, dims, alphabet, v);

        bool ok = true;
        Vector ym(N - 1);
        for (int n = 0; n < N && ok; ++n) {
            int at = 0;
            for (int j = 0; j < N; ++j)
                if (j != n) ym[at++] = y[j];
            // reference: recompute every leave-one-out penalty from scratch
            double shift = 0.0;
            std::vector<double> t(M);
            for (int m = 0; m < M; ++m) {
                const double u = alphabet.points[m];
                t[m] = (u * y[n] - 0.5 * ell_m(ym, m, dims, alphabet)) / v;
                shift = std::max(shift, t[m]);
            }
            double num = 0.0, den = std::exp(-shift);
            for (int m = 0; m < M; ++m) {
                const double e = std::exp(t[m] - shift) / M;
                num += alphabet.points[m] * e;
                den += e;
            }
            const double ref = num / den;
            if (std::abs(fast[n] - ref) > 1e-10 * std::max(1.0, std::abs(ref)))
                ok = false;
        }
        if (!ok) ++suite.failures;
    }
    return suite;
}

VerifySuite verify_divergence_fd(const SweepSpec& spec) {
    VerifySuite suite{"divergence-vs-finite-difference", 20, 0};
    for (int i = 0; i < suite.instances; ++i) {
        Rng rng(substream(spec.seed, 103, static_cast<std::uint64_t>(i)));
        const int N = 16 + static_cast<int>(rng.below(17));
        const int k = 1 + static_cast<int>(rng.below(3));
        const int M = 1 + static_cast<int>(rng.below(2));
        const Alphabet alphabet = random_alphabet(rng, M);
        const ProblemDims dims(N, k);
        const double v = 0.05 + 0.95 * rng.uniform01();

        const SparseSignal x = sample_signal(dims, alphabet, rng);
        Vector u = x.dense();
        const double sd = std::sqrt(v);
        for (int n = 0; n < N; ++n) u[n] += sd * rng.normal();

        const SeparableDenoiser sep(dims, alphabet);
        const NonseparableDenoiser nonsep(dims, alphabet);
        bool ok = true;
        for (const Denoiser* den :
             {static_cast<const Denoiser*>(&sep),
              static_cast<const Denoiser*>(&nonsep)}) {
            const double div = den->divergence(u, v);
            double fd = 0.0;
            for (int n = 0; n < N; ++n) {
                const double h = 1e-5 * (1.0 + std::abs(u[n]));
                Vector up = u, dn = u;
                up[n] += h;
                dn[n] -= h;
                fd += (den->denoise(up, v)[n] - den->denoise(dn, v)[n]) / (2.0 * h);
            }
            fd /= N;
            if (std::abs(div - fd) > 1e-5 * std::max(1.0, std::abs(fd))) ok = false;
        }
        if (!ok) ++suite.failures;
    }
    return suite;
}

VerifySuite verify_matching_inequality(const SweepSpec& spec) {
    VerifySuite suite{"matching-inequality", 0, 0};
    for (int k = 2; k <= 6; ++k) {
        for (int rep = 0; rep < 100; ++rep) {
            Rng rng(substream(spec.seed, 104, static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(rep)));
            const int M = 1 + static_cast<int>(rng.below(3));
            // f[i][m]: weight of point m at slot i; f0[i] <= sum_m f[i][m]
            std::vector<std::vector<double>> f(k, std::vector<double>(M));
            std::vector<double> f0(k);
            for (int i = 0; i < k; ++i) {
                double total = 0.0;
                for (int m = 0; m < M; ++m) {
                    f[i][m] = rng.uniform01();
                    total += f[i][m];
                }
                f0[i] = rng.uniform01() * total;
            }

            // S[j]: full enumeration over supports of size j and value
            // assignments on them.
            std::vector<double> s(k + 1, 0.0);
            for (int mask = 0; mask < (1 << k); ++mask) {
                const int j = __builtin_popcount(static_cast<unsigned>(mask));
                std::vector<int> members;
                for (int i = 0; i < k; ++i)
                    if (mask & (1 << i)) members.push_back(i);
                std::vector<int> vidx(j, 0);
                for (;;) {
                    double prod = 1.0;
                    for (int i = 0; i < k; ++i)
                        if (!(mask & (1 << i))) prod *= f0[i];
                    for (int b = 0; b < j; ++b) prod *= f[members[b]][vidx[b]];
                    s[j] += prod;
                    int pos = j - 1;
                    while (pos >= 0 && vidx[pos] == M - 1) --pos;
                    if (pos < 0) break;
                    ++vidx[pos];
                    std::fill(vidx.begin() + pos + 1, vidx.end(), 0);
                }
            }

            ++suite.instances;
            bool ok = true;
            for (int w = 0; w < k; ++w)
                for (int wp = w + 1; wp <= k; ++wp) {
                    const long long c = matching_coefficients(w, wp, k).ceil;
                    if (s[w] > c * s[wp] * (1.0 + 1e-12)) ok = false;
                }
            if (!ok) ++suite.failures;
        }
    }
    return suite;
}

VerifySuite verify_bilinear_mgf(const SweepSpec& spec) {
    VerifySuite suite{"bilinear-mgf-monte-carlo", 20, 0};
    const int n_samples = 1'000'000;
    for (int i = 0; i < suite.instances; ++i) {
        Rng rng(substream(spec.seed, 105, static_cast<std::uint64_t>(i)));
        const int kk = 1 + static_cast<int>(rng.below(4));
        Vector u1(kk), u2(kk);
        double v = 0.0;
        for (;;) {
            for (int d = 0; d < kk; ++d) {
                u1[d] = 0.3 * (2.0 * rng.uniform01() - 1.0);
                u2[d] = 0.3 * (2.0 * rng.uniform01() - 1.0);
            }
            v = 0.2 * rng.uniform01();
            // The estimator needs finite variance, i.e. the identity must
            // hold at doubled parameters too.
            const double c1 = 1.0 - u2.dot(u1);
            const double c2 = 1.0 - 2.0 * u2.dot(u1);
            const bool base =
                c1 * c1 > (2.0 * v + u2.squaredNorm()) * u1.squaredNorm();
            const bool doubled =
                c2 * c2 > 4.0 * (v + u2.squaredNorm()) * u1.squaredNorm();
            if (base && doubled) break;
        }
        const double closed = gaussian_bilinear_mgf(v, u1, u2);

        Rng mc(substream(spec.seed, 106, static_cast<std::uint64_t>(i)));
        double mean = 0.0, m2 = 0.0;
        for (int s = 0; s < n_samples; ++s) {
            double z1 = 0.0, z2 = 0.0;
            for (int d = 0; d < kk; ++d) {
                const double a = mc.normal();
                z1 += a * u1[d];
                z2 += a * u2[d];
            }
            const double val = std::exp(z1 * (v * z1 + z2));
            const double delta = val - mean;
            mean += delta / (s + 1);
            m2 += delta * (val - mean);
        }
        const double se = std::sqrt(m2 / (n_samples - 1) / n_samples);
        if (std::abs(closed - mean) > 3.0 * se) ++suite.failures;
    }
    return suite;
}

}  // namespace

bool VerifyReport::all_passed() const {
    for (const VerifySuite& s : suites)
        if (s.failures > 0) return false;
    return true;
}

VerifyReport run_verification(const SweepSpec& spec) {
    VerifyReport report;
    report.suites.push_back(verify_ml_vs_brute_force(spec));
    report.suites.push_back(verify_nonseparable_reference(spec));
    report.suites.push_back(verify_divergence_fd(spec));
    report.suites.push_back(verify_matching_inequality(spec));
    report.suites.push_back(verify_bilinear_mgf(spec));
    return report;
}

void write_sweep_csv(const std::string& path, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows) {
    std::ofstream file;
    std::ostream& os = open_out(path, file);
    os << manifest_line(spec) << "\n";
    os << "coordinate,estimator,N,k,trials,mse_mean,mse_stderr,seed\n";
    for (const SweepRow& r : rows)
        os << fmt(r.coordinate) << "," << r.estimator << "," << r.n << "," << r.k
           << "," << r.trials << "," << fmt(r.mse_mean) << ","
           << fmt(r.mse_stderr) << "," << r.seed << "\n";
}

void write_transfer_csv(const std::string& path, const SweepSpec& spec,
                        const std::vector<TransferRow>& rows) {
    std::ofstream file;
    std::ostream& os = open_out(path, file);
    os << manifest_line(spec) << "\n";
    os << "run,iteration,input_mse,output_mse\n";
    for (const TransferRow& r : rows)
        os << r.run << "," << r.iteration << "," << fmt(r.input_mse) << ","
           << fmt(r.output_mse) << "\n";
}

void write_bounds_csv(const std::string& path, const SweepSpec& spec,
                      const std::vector<BoundsRow>& rows) {
    std::ofstream file;
    std::ostream& os = open_out(path, file);
    os << manifest_line(spec) << "\n";
    os << "quantity,w,w_prime,sigma_sq,value\n";
    for (const BoundsRow& r : rows) {
        os << r.quantity << ",";
        if (r.w) os << *r.w;
        os << ",";
        if (r.w_prime) os << *r.w_prime;
        os << ",";
        if (r.sigma_sq) os << fmt(*r.sigma_sq);
        os << "," << fmt(r.value) << "\n";
    }
}

}  // namespace subsparse
