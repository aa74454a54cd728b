#pragma once

// Monte-Carlo experiment runner: sweep points, per-trial pipeline, aggregation,
// bandwidth frontier search and file output.
//
// Seeds. Every random stream is keyed by the base seed and the parameter values that
// define it, never by a sweep index, so adding or removing sweep points leaves the other
// points' streams untouched:
//   scene  <- (K, T, on_grid, trial)
//   chip   <- (T, trial)
//   noise  <- (K, T, ISNR, trial)
// Scenes, chips and noise are therefore shared across B_cs values (common random numbers).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "quadcs/chips.hpp"
#include "quadcs/frontend.hpp"
#include "quadcs/metrics.hpp"
#include "quadcs/operator.hpp"
#include "quadcs/recovery.hpp"
#include "quadcs/rip.hpp"
#include "quadcs/rng.hpp"
#include "quadcs/waveforms.hpp"

namespace quadcs {

using json = nlohmann::json;

// Which sample count enters epsilon = sqrt(count * N0 * B).
enum class EpsilonCount { Period, Atoms };

struct ExperimentConfig {
    std::string name = "experiment";
    std::string figure;  // free-form label
    WaveformKind waveform = WaveformKind::Lfm;
    int zc_root = 1;
    double bandwidth = 100e6;
    double pulse_width = 10.24e-6;
    double period = 20.48e-6;
    double carrier = 450e6;
    std::vector<double> bcs_list;     // Hz
    std::vector<std::size_t> k_list;
    std::vector<double> t_list;       // empty: {period}
    std::vector<double> isnr_list;    // dB; empty: noise free
    std::vector<double> delays;       // fixed target delays [s]; overrides K
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    bool on_grid = true;
    std::string solver = "auto";      // auto | bp | bpdn | omp
    EpsilonCount epsilon_count = EpsilonCount::Period;
    double epsilon_scale = 1.0;
    double success_threshold = kSuccessThreshold;
    double hit_window_cells = 3.0;
    std::string hit_matching = "one_to_one";  // one_to_one | any
    bool cross_check = false;
    std::size_t oversampling = 16;
    double psr_target = 0.99;
    std::string output_dir;
    unsigned threads = 0;             // 0: hardware concurrency
    SpgOptions spg;

    WaveformSpec waveform_spec() const {
        return waveform == WaveformKind::Lfm ? WaveformSpec::lfm(pulse_width, bandwidth)
                                             : WaveformSpec::zadoff_chu(pulse_width, bandwidth, zc_root);
    }

    std::vector<double> periods() const { return t_list.empty() ? std::vector<double>{period} : t_list; }

    std::vector<std::size_t> sparsities() const {
        if (!delays.empty()) return {delays.size()};
        return k_list;
    }

    void validate() const {
        require(bandwidth > 0.0 && pulse_width > 0.0, "config: bandwidth and pulse width must be positive");
        for (double t : periods()) require(t > pulse_width, "config: every T must exceed Tp");
        require(!bcs_list.empty(), "config: bcs_list is empty");
        for (double b : bcs_list) require(b > 0.0 && b <= bandwidth, "config: B_cs must lie in (0, B]");
        require(!sparsities().empty(), "config: k_list is empty");
        require(solver == "auto" || solver == "bp" || solver == "bpdn" || solver == "omp",
                "config: solver must be auto, bp, bpdn or omp");
        require(hit_matching == "one_to_one" || hit_matching == "any", "config: hit_matching must be one_to_one or any");
        require(epsilon_scale > 0.0, "config: epsilon_scale must be positive");
        require(psr_target > 0.0 && psr_target <= 1.0, "config: psr_target must lie in (0, 1]");
        waveform_spec();
    }
};

inline void to_json(json& j, const SpgOptions& o) {
    j = json{{"max_iterations", o.max_iterations}, {"feasibility_tol", o.feasibility_tol},
             {"optimality_tol", o.optimality_tol}, {"memory", o.memory},
             {"gamma", o.gamma}, {"polish", o.polish}, {"polish_tol", o.polish_tol}};
}

inline void from_json(const json& j, SpgOptions& o) {
    o.max_iterations = j.value("max_iterations", o.max_iterations);
    o.feasibility_tol = j.value("feasibility_tol", o.feasibility_tol);
    o.optimality_tol = j.value("optimality_tol", o.optimality_tol);
    o.memory = j.value("memory", o.memory);
    o.gamma = j.value("gamma", o.gamma);
    o.polish = j.value("polish", o.polish);
    o.polish_tol = j.value("polish_tol", o.polish_tol);
}

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"name", c.name},
             {"figure", c.figure},
             {"waveform", to_string(c.waveform)},
             {"zc_root", c.zc_root},
             {"bandwidth", c.bandwidth},
             {"pulse_width", c.pulse_width},
             {"period", c.period},
             {"carrier", c.carrier},
             {"bcs_list", c.bcs_list},
             {"k_list", c.k_list},
             {"t_list", c.t_list},
             {"isnr_list", c.isnr_list},
             {"delays", c.delays},
             {"trials", c.trials},
             {"seed", c.seed},
             {"on_grid", c.on_grid},
             {"solver", c.solver},
             {"epsilon_count", c.epsilon_count == EpsilonCount::Period ? "period" : "atoms"},
             {"epsilon_scale", c.epsilon_scale},
             {"success_threshold", c.success_threshold},
             {"hit_window_cells", c.hit_window_cells},
             {"hit_matching", c.hit_matching},
             {"cross_check", c.cross_check},
             {"oversampling", c.oversampling},
             {"psr_target", c.psr_target},
             {"output_dir", c.output_dir},
             {"threads", c.threads},
             {"spg", c.spg}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
    c.name = j.value("name", c.name);
    c.figure = j.value("figure", c.figure);
    if (j.contains("waveform")) c.waveform = waveform_kind_from_string(j.at("waveform").get<std::string>());
    c.zc_root = j.value("zc_root", c.zc_root);
    c.bandwidth = j.value("bandwidth", c.bandwidth);
    c.pulse_width = j.value("pulse_width", c.pulse_width);
    c.period = j.value("period", c.period);
    c.carrier = j.value("carrier", c.carrier);
    c.bcs_list = j.value("bcs_list", c.bcs_list);
    c.k_list = j.value("k_list", c.k_list);
    c.t_list = j.value("t_list", c.t_list);
    c.isnr_list = j.value("isnr_list", c.isnr_list);
    c.delays = j.value("delays", c.delays);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    c.on_grid = j.value("on_grid", c.on_grid);
    c.solver = j.value("solver", c.solver);
    if (j.contains("epsilon_count")) {
        const auto s = j.at("epsilon_count").get<std::string>();
        require(s == "period" || s == "atoms", "config: epsilon_count must be 'period' or 'atoms'");
        c.epsilon_count = s == "period" ? EpsilonCount::Period : EpsilonCount::Atoms;
    }
    c.epsilon_scale = j.value("epsilon_scale", c.epsilon_scale);
    c.success_threshold = j.value("success_threshold", c.success_threshold);
    c.hit_window_cells = j.value("hit_window_cells", c.hit_window_cells);
    c.hit_matching = j.value("hit_matching", c.hit_matching);
    c.cross_check = j.value("cross_check", c.cross_check);
    c.oversampling = j.value("oversampling", c.oversampling);
    c.psr_target = j.value("psr_target", c.psr_target);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
    if (j.contains("spg")) c.spg = j.at("spg").get<SpgOptions>();
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    ExperimentConfig c = j.get<ExperimentConfig>();
    c.validate();
    return c;
}

// 64-bit FNV-1a of the canonical JSON form, hex.
inline std::string config_hash(const ExperimentConfig& c) {
    json j = c;
    j.erase("output_dir");
    j.erase("threads");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv("QUADCS_OUTPUT_DIR"); env && *env) return std::filesystem::path(env) / c.name;
    return std::filesystem::path("quadcs_out") / c.name;
}

struct SweepPoint {
    std::size_t id = 0;
    double period = 0.0;
    std::size_t k = 0;
    double bcs = 0.0;
    std::optional<double> isnr_db;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
    std::vector<SweepPoint> pts;
    std::vector<std::optional<double>> isnrs;
    if (c.isnr_list.empty()) isnrs.emplace_back(std::nullopt);
    for (double s : c.isnr_list) isnrs.emplace_back(s);
    for (double t : c.periods())
        for (std::size_t k : c.sparsities())
            for (double b : c.bcs_list)
                for (const auto& s : isnrs) pts.push_back({pts.size(), t, k, b, s});
    return pts;
}

struct TrialRecord {
    SweepPoint point;
    std::size_t m = 0;
    std::size_t trial = 0;
    std::uint64_t scene_key = 0;
    std::uint64_t chip_key = 0;
    std::uint64_t noise_key = 0;
    TrialMetrics metrics;
    int iterations = 0;
    bool converged = false;
    std::string status;
    double epsilon = 0.0;
    double noise_norm = 0.0;
    double cross_check_error = -1.0;  // negative: not run
    std::string error;                // non-empty if the trial threw
};

struct PointAggregate {
    SweepPoint point;
    std::size_t m = 0;
    double bcs_effective = 0.0;
    std::size_t trials = 0;
    double psr = 0.0;
    double mean_error = 0.0;
    double isnr_db = kSnrCapDb;
    double osnr_db = kSnrCapDb;
    double rsnr_db = kSnrCapDb;
    double rsnr_stderr_db = 0.0;
    double err_amp = 0.0;
    double err_phase = 0.0;
    double hit_rate = 0.0;
    double coverage = 0.0;  // fraction of trials with ||n_cs|| <= epsilon
    double mean_iterations = 0.0;
    std::size_t solver_failures = 0;
    std::size_t cross_check_failures = 0;
};

// Runs fn(i) for i in [0, n) on a bounded pool; callers write results by index.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    unsigned hw = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    hw = static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(n, 1)));
    if (hw <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < hw; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)), wave_(cfg_.waveform_spec()) { cfg_.validate(); }

    const ExperimentConfig& config() const { return cfg_; }

    std::size_t rows_for(double period, double bcs) const {
        const auto grid = NyquistGrid::for_scene(cfg_.bandwidth, period, cfg_.pulse_width);
        return compressive_rows(bcs, period, grid.samples);
    }

    TrialRecord run_trial(const SweepPoint& pt, std::size_t trial) const {
        TrialRecord rec;
        rec.point = pt;
        rec.trial = trial;
        try {
            run_trial_impl(pt, trial, rec);
        } catch (const std::exception& e) {
            rec.error = e.what();
            rec.status = "error";
        }
        return rec;
    }

    std::vector<TrialRecord> run_point(const SweepPoint& pt, std::size_t trials) const {
        std::vector<TrialRecord> out(trials);
        parallel_for(trials, cfg_.threads, [&](std::size_t t) { out[t] = run_trial(pt, t); });
        return out;
    }

private:
    struct Shared {
        NyquistGrid grid;
        std::shared_ptr<const FrequencyDictionary> dict;
    };

    Shared shared_for(double period) const {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(period);
        if (it != cache_.end()) return it->second;
        Shared s;
        s.grid = NyquistGrid::for_scene(cfg_.bandwidth, period, cfg_.pulse_width);
        s.dict = std::make_shared<const FrequencyDictionary>(wave_, s.grid);
        cache_.emplace(period, s);
        return s;
    }

    std::string solver_for(const SweepPoint& pt) const {
        if (cfg_.solver != "auto") return cfg_.solver;
        return pt.isnr_db ? "bpdn" : "bp";
    }

    void run_trial_impl(const SweepPoint& pt, std::size_t trial, TrialRecord& rec) const {
        const Shared sh = shared_for(pt.period);
        const NyquistGrid& grid = sh.grid;
        const FrequencyDictionary& dict = *sh.dict;
        const std::uint64_t t_label = label_of(pt.period);
        rec.scene_key = derive_key(cfg_.seed, {0x5CE4EULL, pt.k, t_label, cfg_.on_grid ? 1ULL : 0ULL, trial});
        rec.chip_key = derive_key(cfg_.seed, {0xC41BULL, t_label, trial});
        rec.noise_key = derive_key(cfg_.seed, {0x4015EULL, pt.k, t_label, label_of(pt.isnr_db.value_or(0.0)), trial});

        CounterRng scene_rng(rec.scene_key);
        TargetScene scene;
        if (!cfg_.delays.empty()) {
            scene.on_grid = cfg_.on_grid;
            for (double d : cfg_.delays)
                scene.targets.push_back({d, scene_rng.uniform_open_closed(), kTwoPi * scene_rng.uniform_open_closed()});
        } else {
            scene = random_scene(grid, pt.k, scene_rng, cfg_.on_grid);
        }
        rec.m = compressive_rows(pt.bcs, grid.period, grid.samples);
        // The coefficient phases use the nominal carrier so scenes do not depend on B_cs.
        const double f0 = cfg_.carrier;

        CVector truth;  // on-grid coefficients
        CVector z;      // Nyquist samples of the clean envelope
        if (scene.on_grid) {
            truth = scene_to_coefficients(scene, grid, f0, wave_).values;
            z = dict.synthesize(truth);
        } else {
            z = offgrid_nyquist_samples(scene, wave_, grid, f0);
        }

        const auto chip = ChippingSequence::random(rec.chip_key, grid.samples, grid.bandwidth);
        const MeasurementOperator op(dict, chip, rec.m);
        const CVector b_clean = op.apply_nyquist(z);
        CVector b = b_clean;
        TrialMetrics& mt = rec.metrics;
        const double mean_power = z.squaredNorm() / double(grid.samples);
        double n0 = 0.0;
        if (pt.isnr_db) {
            n0 = noise_density_for_isnr(mean_power, grid.bandwidth, *pt.isnr_db);
            CounterRng noise_rng(rec.noise_key);
            const CVector nz = bandlimited_noise(grid.samples, grid.samples, n0, grid.bandwidth, noise_rng);
            const CVector b_noise = op.apply_nyquist(nz);
            b += b_noise;
            rec.noise_norm = b_noise.norm();
            mt.noise_measurement_energy = b_noise.squaredNorm();
            mt.isnr_db = isnr_db(mean_power, n0, grid.bandwidth);
            const std::size_t count = cfg_.epsilon_count == EpsilonCount::Period ? grid.samples : grid.atoms;
            rec.epsilon = cfg_.epsilon_scale * epsilon_from_noise(count, n0, grid.bandwidth);
        }
        mt.clean_measurement_energy = b_clean.squaredNorm();
        mt.osnr_db = snr_db(mt.clean_measurement_energy, mt.noise_measurement_energy);

        if (cfg_.cross_check) {
            const FrontendConfig fe = make_frontend(grid, pt.bcs, cfg_.carrier, cfg_.oversampling, false);
            const TimeGrid fine = TimeGrid::circular(grid.period, fe.fine_samples);
            const CVector env = complex_envelope(scene, wave_, grid, f0, fine, Synthesis::Bandlimited);
            const CVector td = frequency_measurements(baseband_measure(env, chip, fe).s_cs);
            rec.cross_check_error = relative_difference(td, b_clean);
        }

        const std::string solver = solver_for(pt);
        SolverResult res;
        if (solver == "bp") {
            res = solve_bp(op, b, cfg_.spg);
        } else if (solver == "bpdn") {
            res = solve_bpdn(op, b, rec.epsilon, cfg_.spg);
        } else {
            res = solve_omp(op, b, std::min<std::size_t>(std::max<std::size_t>(scene.sparsity(), 1), rec.m));
        }
        rec.iterations = res.iterations;
        rec.converged = res.converged;
        rec.status = to_string(res.status);

        const CVector z_est = dict.synthesize(res.x);
        mt.synthesis_energy = z.squaredNorm();
        mt.synthesis_error_energy = (z - z_est).squaredNorm();
        mt.rsnr_db = snr_db(mt.synthesis_energy, mt.synthesis_error_energy);
        if (scene.on_grid) {
            mt.relative_error = relative_error(truth, res.x);
            mt.success = mt.relative_error <= cfg_.success_threshold;
        } else {
            mt.relative_error = std::sqrt(mt.synthesis_error_energy / mt.synthesis_energy);
            mt.success = false;
        }
        if (mt.synthesis_energy > 0.0) {
            const auto ap = amp_phase_errors(z, z_est);
            mt.err_amp = ap.amplitude;
            mt.err_phase = ap.phase;
        }
        const auto hr = hit_rate(res.x, scene, grid, cfg_.hit_window_cells * grid.tau0(),
                                 cfg_.hit_matching == "any" ? HitMatching::Any : HitMatching::OneToOne);
        mt.hits = hr.hits;
        mt.hit_rate = hr.rate;
    }

    ExperimentConfig cfg_;
    WaveformSpec wave_;
    mutable std::mutex mutex_;
    mutable std::map<double, Shared> cache_;
};

inline PointAggregate aggregate(const SweepPoint& pt, const std::vector<TrialRecord>& recs, double period) {
    PointAggregate a;
    a.point = pt;
    a.trials = recs.size();
    if (recs.empty()) return a;
    a.m = recs.front().m;
    a.bcs_effective = double(a.m) / period;
    EnsembleSnr osnr, rsnr;
    std::vector<bool> ok;
    double sum_er = 0.0, sum_amp = 0.0, sum_ph = 0.0, sum_hit = 0.0, sum_it = 0.0, sum_isnr = 0.0;
    std::vector<double> rs;
    std::size_t covered = 0;
    for (const auto& r : recs) {
        const auto& m = r.metrics;
        ok.push_back(r.error.empty() && m.success);
        if (!r.error.empty()) {
            ++a.solver_failures;
            continue;
        }
        if (!r.converged) ++a.solver_failures;
        if (r.cross_check_error > 1e-3) ++a.cross_check_failures;
        sum_er += m.relative_error;
        sum_amp += m.err_amp;
        sum_ph += m.err_phase;
        sum_hit += m.hit_rate;
        sum_it += r.iterations;
        sum_isnr += m.isnr_db;
        osnr.add(m.clean_measurement_energy, m.noise_measurement_energy);
        rsnr.add(m.synthesis_energy, m.synthesis_error_energy);
        rs.push_back(m.rsnr_db);
        if (pt.isnr_db && r.noise_norm <= r.epsilon) ++covered;
    }
    a.psr = psr(ok);
    const double n = double(rs.size());
    if (n > 0) {
        a.mean_error = sum_er / n;
        a.err_amp = sum_amp / n;
        a.err_phase = sum_ph / n;
        a.hit_rate = sum_hit / n;
        a.mean_iterations = sum_it / n;
        a.isnr_db = sum_isnr / n;
        a.osnr_db = osnr.db();
        a.rsnr_db = rsnr.db();
        double mean = 0.0, var = 0.0;
        for (double v : rs) mean += v;
        mean /= n;
        for (double v : rs) var += (v - mean) * (v - mean);
        a.rsnr_stderr_db = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
        a.coverage = double(covered) / n;
    }
    return a;
}

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<TrialRecord> records;
    std::vector<PointAggregate> aggregates;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Experiment ex(cfg);
    ExperimentResult out;
    out.config = cfg;
    for (const auto& pt : sweep_points(cfg)) {
        auto recs = ex.run_point(pt, cfg.trials);
        out.aggregates.push_back(aggregate(pt, recs, pt.period));
        for (auto& r : recs) out.records.push_back(std::move(r));
    }
    return out;
}

// ---- bandwidth frontier -------------------------------------------------------------

struct FrontierRow {
    std::size_t k = 0;
    double period = 0.0;
    double bandwidth = 0.0;
    bool resolved = false;
    double bcs_star = 0.0;   // effective M / T at the frontier
    std::size_t m_star = 0;
    double psr_at = 0.0;
    bool monotone_consistent = true;
    std::vector<std::pair<std::size_t, double>> evaluated;  // (M, PSR)
};

// Smallest grid value with PSR >= target, by bisection on a sorted grid. psr_of must be
// monotone nondecreasing for the answer to be exact; evaluated points are checked against it.
inline FrontierRow bisect_frontier(const std::vector<std::size_t>& grid_m, double target,
                                   const std::function<double(std::size_t)>& psr_of) {
    FrontierRow row;
    require(!grid_m.empty(), "frontier: empty grid");
    std::map<std::size_t, double> seen;
    auto eval = [&](std::size_t i) {
        const std::size_t m = grid_m[i];
        auto it = seen.find(m);
        if (it != seen.end()) return it->second;
        const double p = psr_of(m);
        seen.emplace(m, p);
        return p;
    };
    std::size_t lo = 0, hi = grid_m.size() - 1;
    if (eval(hi) < target) {
        row.resolved = false;
    } else if (eval(lo) >= target) {
        row.resolved = true;
        hi = lo;
    } else {
        while (hi - lo > 1) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (eval(mid) >= target) hi = mid;
            else lo = mid;
        }
        row.resolved = true;
    }
    if (row.resolved) {
        row.m_star = grid_m[hi];
        row.psr_at = seen.at(grid_m[hi]);
        // Bisection alone never sees a contradiction; probe one step above the answer.
        if (hi + 1 < grid_m.size()) eval(hi + 1);
    }
    for (const auto& [m, p] : seen) {
        row.evaluated.emplace_back(m, p);
        if (row.resolved && ((m < row.m_star && p >= target) || (m >= row.m_star && p < target)))
            row.monotone_consistent = false;
    }
    return row;
}

// Even-M grid between the smallest and largest configured B_cs.
inline std::vector<std::size_t> frontier_grid(const ExperimentConfig& cfg, double period) {
    const auto grid = NyquistGrid::for_scene(cfg.bandwidth, period, cfg.pulse_width);
    std::vector<std::size_t> ms;
    if (cfg.bcs_list.size() == 2) {
        const std::size_t lo = compressive_rows(std::min(cfg.bcs_list[0], cfg.bcs_list[1]), period, grid.samples);
        const std::size_t hi = compressive_rows(std::max(cfg.bcs_list[0], cfg.bcs_list[1]), period, grid.samples);
        for (std::size_t m = lo; m <= hi; m += 2) ms.push_back(m);
    } else {
        for (double b : cfg.bcs_list) ms.push_back(compressive_rows(b, period, grid.samples));
        std::sort(ms.begin(), ms.end());
        ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    }
    return ms;
}

// For each (T, K): the minimum B_cs reaching psr_target. With two entries in bcs_list the
// grid is every admissible M between them; otherwise the listed values.
inline std::vector<FrontierRow> bandwidth_frontier(const ExperimentConfig& cfg) {
    cfg.validate();
    Experiment ex(cfg);
    std::vector<FrontierRow> rows;
    for (double t : cfg.periods()) {
        const auto ms = frontier_grid(cfg, t);
        for (std::size_t k : cfg.sparsities()) {
            auto psr_of = [&](std::size_t m) {
                SweepPoint pt{0, t, k, double(m) / t, std::nullopt};
                if (!cfg.isnr_list.empty()) pt.isnr_db = cfg.isnr_list.front();
                // Trials run in fixed chunks so the stopping point does not depend on thread
                // count. Once failures rule out the target, the remaining trials are skipped and
                // the returned PSR is an upper bound (still below target).
                const std::size_t budget =
                    static_cast<std::size_t>(std::floor((1.0 - cfg.psr_target) * double(cfg.trials) + 1e-9));
                constexpr std::size_t chunk = 10;
                std::size_t fails = 0;
                for (std::size_t start = 0; start < cfg.trials; start += chunk) {
                    const std::size_t n = std::min(chunk, cfg.trials - start);
                    std::vector<char> bad(n, 0);
                    parallel_for(n, cfg.threads, [&](std::size_t i) {
                        const TrialRecord r = ex.run_trial(pt, start + i);
                        bad[i] = !(r.error.empty() && r.metrics.success);
                    });
                    fails += std::size_t(std::count(bad.begin(), bad.end(), char(1)));
                    if (fails > budget) break;
                }
                return double(cfg.trials - std::min(fails, cfg.trials)) / double(cfg.trials);
            };
            FrontierRow row = bisect_frontier(ms, cfg.psr_target, psr_of);
            row.k = k;
            row.period = t;
            row.bandwidth = cfg.bandwidth;
            row.bcs_star = row.resolved ? double(row.m_star) / t : 0.0;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::vector<LawPoint> law_points(const std::vector<FrontierRow>& rows) {
    std::vector<LawPoint> pts;
    for (const auto& r : rows)
        if (r.resolved) pts.push_back({double(r.k), r.period, r.bandwidth, r.bcs_star});
    return pts;
}

// ---- output -------------------------------------------------------------------------

namespace detail {
inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}
inline std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(9) << v;
    return os.str();
}
inline std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}
inline std::string isnr_cell(const std::optional<double>& v) { return v ? fmt(*v) : std::string("inf"); }
}  // namespace detail

inline const char* kTrialColumns =
    "point,period_s,k,bcs_hz,m,isnr_db,trial,scene_key,chip_key,noise_key,relative_error,success,"
    "osnr_db,rsnr_db,err_amp,err_phase,hits,hit_rate,epsilon,noise_norm,iterations,converged,status,"
    "cross_check_error,error";

inline void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& recs) {
    os << kTrialColumns << '\n';
    for (const auto& r : recs) {
        const auto& m = r.metrics;
        os << r.point.id << ',' << detail::sci(r.point.period) << ',' << r.point.k << ',' << detail::sci(r.point.bcs)
           << ',' << r.m << ',' << detail::isnr_cell(r.point.isnr_db) << ',' << r.trial << ','
           << detail::hex(r.scene_key) << ',' << detail::hex(r.chip_key) << ',' << detail::hex(r.noise_key) << ','
           << detail::sci(m.relative_error) << ',' << (m.success ? 1 : 0) << ',' << detail::fmt(m.osnr_db) << ','
           << detail::fmt(m.rsnr_db) << ',' << detail::sci(m.err_amp) << ',' << detail::sci(m.err_phase) << ','
           << m.hits << ',' << detail::fmt(m.hit_rate) << ',' << detail::sci(r.epsilon) << ','
           << detail::sci(r.noise_norm) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.status
           << ',' << detail::sci(r.cross_check_error) << ',' << '"' << r.error << '"' << '\n';
    }
}

inline const char* kAggregateColumns =
    "point,period_s,k,bcs_hz,bcs_eff_hz,m,isnr_db,trials,psr,mean_relative_error,isnr_meas_db,osnr_db,rsnr_db,"
    "rsnr_stderr_db,err_amp,err_phase,hit_rate,coverage,mean_iterations,solver_failures,cross_check_failures";

inline void write_aggregate_csv(std::ostream& os, const std::vector<PointAggregate>& aggs) {
    os << kAggregateColumns << '\n';
    for (const auto& a : aggs) {
        os << a.point.id << ',' << detail::sci(a.point.period) << ',' << a.point.k << ',' << detail::sci(a.point.bcs)
           << ',' << detail::sci(a.bcs_effective) << ',' << a.m << ',' << detail::isnr_cell(a.point.isnr_db) << ','
           << a.trials << ',' << detail::fmt(a.psr) << ',' << detail::sci(a.mean_error) << ','
           << detail::fmt(a.isnr_db) << ',' << detail::fmt(a.osnr_db) << ',' << detail::fmt(a.rsnr_db) << ','
           << detail::fmt(a.rsnr_stderr_db) << ',' << detail::sci(a.err_amp) << ',' << detail::sci(a.err_phase)
           << ',' << detail::fmt(a.hit_rate) << ',' << detail::fmt(a.coverage) << ','
           << detail::fmt(a.mean_iterations) << ',' << a.solver_failures << ',' << a.cross_check_failures << '\n';
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        else if (ch == ',' && !quoted) {
            cells.push_back(cur);
            cur.clear();
        } else cur += ch;
    }
    cells.push_back(cur);
    return cells;
}

// Parses write_aggregate_csv output.
inline std::vector<PointAggregate> read_aggregate_csv(std::istream& is) {
    std::string line;
    std::getline(is, line);
    require(line == kAggregateColumns, "aggregate csv: unexpected header");
    std::vector<PointAggregate> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        require(c.size() == 21, "aggregate csv: wrong column count");
        PointAggregate a;
        a.point.id = std::stoul(c[0]);
        a.point.period = std::stod(c[1]);
        a.point.k = std::stoul(c[2]);
        a.point.bcs = std::stod(c[3]);
        a.bcs_effective = std::stod(c[4]);
        a.m = std::stoul(c[5]);
        if (c[6] != "inf") a.point.isnr_db = std::stod(c[6]);
        a.trials = std::stoul(c[7]);
        a.psr = std::stod(c[8]);
        a.mean_error = std::stod(c[9]);
        a.isnr_db = std::stod(c[10]);
        a.osnr_db = std::stod(c[11]);
        a.rsnr_db = std::stod(c[12]);
        a.rsnr_stderr_db = std::stod(c[13]);
        a.err_amp = std::stod(c[14]);
        a.err_phase = std::stod(c[15]);
        a.hit_rate = std::stod(c[16]);
        a.coverage = std::stod(c[17]);
        a.mean_iterations = std::stod(c[18]);
        a.solver_failures = std::stoul(c[19]);
        a.cross_check_failures = std::stoul(c[20]);
        out.push_back(a);
    }
    return out;
}

inline void write_frontier_csv(std::ostream& os, const std::vector<FrontierRow>& rows) {
    os << "k,period_s,bandwidth_hz,resolved,bcs_star_hz,m_star,psr_at,monotone_consistent,law_x_ln,law_x_log10\n";
    for (const auto& r : rows) {
        const LawPoint lp{double(r.k), r.period, r.bandwidth, r.bcs_star};
        os << r.k << ',' << detail::sci(r.period) << ',' << detail::sci(r.bandwidth) << ',' << (r.resolved ? 1 : 0)
           << ',' << detail::sci(r.bcs_star) << ',' << r.m_star << ',' << detail::fmt(r.psr_at) << ','
           << (r.monotone_consistent ? 1 : 0) << ',' << detail::sci(law_abscissa(lp, std::exp(1.0))) << ','
           << detail::sci(law_abscissa(lp, 10.0)) << '\n';
    }
}

inline std::vector<LawPoint> read_frontier_csv(std::istream& is) {
    std::string line;
    std::getline(is, line);
    std::vector<LawPoint> pts;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        require(c.size() >= 5, "frontier csv: wrong column count");
        if (c[3] != "1") continue;
        pts.push_back({std::stod(c[0]), std::stod(c[1]), std::stod(c[2]), std::stod(c[4])});
    }
    return pts;
}

inline json summary_json(const ExperimentResult& res) {
    json j;
    j["config"] = res.config;
    j["config_hash"] = config_hash(res.config);
    j["trials_total"] = res.records.size();
    json pts = json::array();
    for (const auto& a : res.aggregates) {
        pts.push_back({{"point", a.point.id},
                       {"period_s", a.point.period},
                       {"k", a.point.k},
                       {"bcs_hz", a.point.bcs},
                       {"m", a.m},
                       {"isnr_db", a.point.isnr_db ? json(*a.point.isnr_db) : json(nullptr)},
                       {"psr", a.psr},
                       {"osnr_db", a.osnr_db},
                       {"rsnr_db", a.rsnr_db},
                       {"hit_rate", a.hit_rate},
                       {"coverage", a.coverage},
                       {"solver_failures", a.solver_failures}});
    }
    j["points"] = pts;
    return j;
}

// Gnuplot script for the aggregate table; picks axes from what was swept.
inline std::string gnuplot_script(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "# regenerate with: gnuplot plot.gp\n"
       << "set datafile separator ','\nset key autotitle columnhead\nset grid\n"
       << "set terminal pngcairo size 900,600\nset output '" << cfg.name << ".png'\n";
    const bool noisy = !cfg.isnr_list.empty();
    if (!noisy) {
        os << "set xlabel 'B_cs [MHz]'\nset ylabel 'PSR'\nset yrange [0:1.05]\n"
           << "plot 'aggregate.csv' using ($4/1e6):9:3 with linespoints title 'PSR (K in col 3)'\n";
    } else if (cfg.sparsities().size() > 1) {
        os << "set xlabel 'K'\nset ylabel 'RSNR [dB]'\n"
           << "plot 'aggregate.csv' using 3:13:14 with yerrorlines title 'RSNR'\n";
    } else {
        os << "set xlabel 'B_cs [MHz]'\nset ylabel 'SNR [dB]'\n"
           << "plot 'aggregate.csv' using ($4/1e6):13:14 with yerrorlines title 'RSNR', "
           << "'' using ($4/1e6):12 with linespoints title 'OSNR'\n";
    }
    return os.str();
}

inline void emit_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw ConfigError("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("trials.csv");
        write_trials_csv(f, res.records);
    }
    {
        auto f = open("aggregate.csv");
        write_aggregate_csv(f, res.aggregates);
    }
    {
        auto f = open("summary.json");
        f << summary_json(res).dump(2) << '\n';
    }
    {
        auto f = open("plot.gp");
        f << gnuplot_script(res.config);
    }
}

}  // namespace quadcs
