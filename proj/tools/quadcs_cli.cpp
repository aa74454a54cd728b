// quadcs: command-line front end for the compressive radar receiver simulator.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "quadcs/quadcs.hpp"

using namespace quadcs;
namespace fs = std::filesystem;

namespace {

// Parameters shared by the single-shot subcommands (gen, measure, recover).
struct SceneOptions {
    std::string waveform = "lfm";
    double bandwidth = 100e6;
    double pulse_width = 10.24e-6;
    double period = 20.48e-6;
    double carrier = 450e6;
    std::size_t k = 10;
    std::vector<double> delays;
    bool off_grid = false;
    std::uint64_t seed = 1;
    double bcs = 10e6;
    double isnr = std::numeric_limits<double>::infinity();

    void add_to(CLI::App* app, bool with_measurement) {
        app->add_option("--waveform", waveform, "lfm or zc")->check(CLI::IsMember({"lfm", "zc"}));
        app->add_option("--bandwidth", bandwidth, "B [Hz]");
        app->add_option("--pulse-width", pulse_width, "Tp [s]");
        app->add_option("--period", period, "T [s]");
        app->add_option("--carrier", carrier, "IF carrier hint [Hz]");
        app->add_option("-k,--sparsity", k, "number of random targets");
        app->add_option("--delays", delays, "fixed target delays [s] (overrides -k)");
        app->add_flag("--off-grid", off_grid, "continuous delays instead of grid multiples");
        app->add_option("--seed", seed, "base seed");
        if (with_measurement) {
            app->add_option("--bcs", bcs, "compressive bandwidth B_cs [Hz]");
            app->add_option("--isnr", isnr, "input SNR [dB]; omit for noise-free");
        }
    }

    WaveformSpec spec() const {
        return waveform == "lfm" ? WaveformSpec::lfm(pulse_width, bandwidth) : WaveformSpec::zadoff_chu(pulse_width, bandwidth);
    }
    NyquistGrid grid() const { return NyquistGrid::for_scene(bandwidth, period, pulse_width); }

    TargetScene scene(const NyquistGrid& g) const {
        CounterRng rng(derive_key(seed, {0x5CE4EULL}));
        if (delays.empty()) return random_scene(g, k, rng, !off_grid);
        TargetScene s;
        s.on_grid = !off_grid;
        for (double d : delays) s.targets.push_back({d, rng.uniform_open_closed(), kTwoPi * rng.uniform_open_closed()});
        s.validate(g, pulse_width);
        return s;
    }

    // Nyquist samples of the envelope seen through a receiver tuned to f0.
    CVector nyquist_envelope(const TargetScene& s, const NyquistGrid& g, double f0) const {
        if (s.on_grid) return synthesize_nyquist(scene_to_coefficients(s, g, f0, spec()).values, spec(), g);
        return offgrid_nyquist_samples(s, spec(), g, f0);
    }
};

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << std::setprecision(12);
    return f;
}

void write_scene_csv(std::ostream& os, const TargetScene& s) {
    os << "delay_s,gain,phase_rad\n" << std::setprecision(12);
    for (const auto& t : s.targets) os << t.delay << ',' << t.gain << ',' << t.phase << '\n';
}

void write_complex_csv(std::ostream& os, const char* index_name, const std::vector<std::pair<std::string, const CVector*>>& cols) {
    os << index_name;
    for (const auto& [name, _] : cols) os << ',' << name << "_re," << name << "_im";
    os << '\n' << std::setprecision(12);
    const Index n = cols.front().second->size();
    for (Index i = 0; i < n; ++i) {
        os << i;
        for (const auto& [_, v] : cols) os << ',' << (*v)[i].real() << ',' << (*v)[i].imag();
        os << '\n';
    }
}

void print_aggregates(const std::vector<PointAggregate>& aggs) {
    std::printf("%5s %10s %4s %10s %5s %7s %6s %9s %9s %8s %7s\n", "point", "T[us]", "K", "Bcs[MHz]", "M", "ISNR", "PSR",
                "OSNR[dB]", "RSNR[dB]", "hit", "fails");
    for (const auto& a : aggs) {
        const std::string isnr = a.point.isnr_db ? std::to_string(*a.point.isnr_db).substr(0, 5) : "inf";
        std::printf("%5zu %10.3f %4zu %10.4f %5zu %7s %6.3f %9.3f %9.3f %8.3f %7zu\n", a.point.id, a.point.period * 1e6,
                    a.point.k, a.bcs_effective / 1e6, a.m, isnr.c_str(), a.psr, a.osnr_db, a.rsnr_db, a.hit_rate,
                    a.solver_failures);
    }
}

void print_fits(const std::vector<LawPoint>& pts) {
    if (pts.size() < 3) {
        std::printf("fit: %zu resolved points, need at least three\n", pts.size());
        return;
    }
    for (double base : {std::exp(1.0), 10.0}) {
        const auto f = fit_bcs_law(pts, base);
        std::printf("fit log%-4s slope %.5f  intercept %.5g Hz  r2 %.5f  (%zu points)\n", base == 10.0 ? "10" : "e",
                    f.slope, f.intercept, f.r2, f.points);
    }
}

int cmd_gen(const SceneOptions& o, const std::string& out) {
    const auto g = o.grid();
    const auto scene = o.scene(g);
    const CVector z = o.nyquist_envelope(scene, g, o.carrier);
    std::printf("P %zu  N %zu  tau0 %.4g s  K %zu  %s\n", g.samples, g.atoms, g.tau0(), scene.sparsity(),
                scene.on_grid ? "on-grid" : "off-grid");
    for (const auto& t : scene.targets) std::printf("  delay %.6e s  gain %.4f  phase %.4f\n", t.delay, t.gain, t.phase);
    if (!out.empty()) {
        const fs::path dir = prepare_dir(out);
        auto sf = open_out(dir / "scene.csv");
        write_scene_csv(sf, scene);
        auto ef = open_out(dir / "envelope.csv");
        write_waveform_csv(ef, TimeGrid::circular(g.period, g.samples), z);
        auto pf = open_out(dir / "pulse.csv");
        write_waveform_csv(pf, TimeGrid::circular(g.period, g.samples), [&] {
            CVector p = CVector::Zero(static_cast<Index>(g.samples));
            const CVector s0 = nyquist_samples(o.spec());
            p.head(s0.size()) = s0;
            return p;
        }());
        std::printf("wrote %s/{scene,envelope,pulse}.csv\n", out.c_str());
    }
    return 0;
}

int cmd_measure(const SceneOptions& o, std::uint64_t chip_seed, std::size_t oversampling, const std::string& out) {
    const auto g = o.grid();
    const auto w = o.spec();
    const auto scene = o.scene(g);
    const auto fe = make_frontend(g, o.bcs, o.carrier, oversampling);
    const auto chip = ChippingSequence::random(chip_seed, g.samples, g.bandwidth);
    const MeasurementOperator op(FrequencyDictionary(w, g), chip, fe.m);
    const CVector fd = op.apply_nyquist(o.nyquist_envelope(scene, g, fe.carrier));
    const TimeGrid fine = fe.fine_grid();
    const CVector env = complex_envelope(scene, w, g, fe.carrier, fine, Synthesis::Bandlimited);
    const Measurements bb = baseband_measure(env, chip, fe);
    const Measurements ifm = if_measure(if_signal(scene, w, g, fe.carrier, fine, Synthesis::Bandlimited), chip, fe);
    const CVector td = frequency_measurements(bb.s_cs);
    const CVector tdif = frequency_measurements(ifm.s_cs);
    std::printf("M %zu  B_cs %.6g Hz  f0 %.6g Hz  l %ld  L %zu  fine %zu\n", fe.m, fe.bcs, fe.carrier, fe.l, fe.oversampling,
                fe.fine_samples);
    std::printf("baseband path vs operator   %.3e\n", relative_difference(td, fd));
    std::printf("IF path vs baseband path    %.3e (edge bin lost at minimum rate)\n", relative_difference(ifm.s_cs, bb.s_cs));
    std::printf("IF path vs edge-trimmed BB  %.3e\n", relative_difference(ifm.s_cs, minimum_rate_edge_loss(bb.s_cs)));
    if (!out.empty()) {
        const fs::path dir = prepare_dir(out);
        auto f = open_out(dir / "measurements.csv");
        write_complex_csv(f, "m", {{"s_cs", &bb.s_cs}, {"if_s_cs", &ifm.s_cs}, {"fd", &fd}, {"fd_from_td", &td}, {"fd_from_if", &tdif}});
        std::printf("wrote %s/measurements.csv\n", out.c_str());
    }
    return 0;
}

int cmd_recover(const SceneOptions& o, std::uint64_t chip_seed, const std::string& solver, double eps_scale,
                const std::string& out) {
    const auto g = o.grid();
    const auto w = o.spec();
    const FrequencyDictionary dict(w, g);
    const auto scene = o.scene(g);
    const std::size_t m = compressive_rows(o.bcs, g.period, g.samples);
    const MeasurementOperator op(dict, ChippingSequence::random(chip_seed, g.samples, g.bandwidth), m);
    const CVector z = o.nyquist_envelope(scene, g, o.carrier);
    CVector b = op.apply_nyquist(z);
    double eps = 0.0;
    if (std::isfinite(o.isnr)) {
        const double n0 = noise_density_for_isnr(z.squaredNorm() / double(g.samples), g.bandwidth, o.isnr);
        CounterRng rng(derive_key(o.seed, {0x4015EULL}));
        const CVector n = op.apply_nyquist(bandlimited_noise(g.samples, g.samples, n0, g.bandwidth, rng));
        b += n;
        eps = eps_scale * epsilon_from_noise(g.samples, n0, g.bandwidth);
        std::printf("noise: ISNR %.2f dB  OSNR %.2f dB  ||n_cs|| %.4g  epsilon %.4g\n", o.isnr,
                    snr_db((b - n).squaredNorm(), n.squaredNorm()), n.norm(), eps);
    }
    std::string which = solver;
    if (which == "auto") which = std::isfinite(o.isnr) ? "bpdn" : "bp";
    SpgOptions spg;
    spg.trace = true;
    SolverResult res;
    if (which == "bp") res = solve_bp(op, b, spg);
    else if (which == "bpdn") res = solve_bpdn(op, b, eps, spg);
    else res = solve_omp(op, b, std::max<std::size_t>(scene.sparsity(), 1));
    const CVector z_est = dict.synthesize(res.x);
    std::printf("solver %s  status %s  iterations %d  polished %d  %.3f s\n", which.c_str(), to_string(res.status).c_str(),
                res.iterations, res.polished ? 1 : 0, res.wall_seconds);
    if (scene.on_grid) {
        const CVector v = scene_to_coefficients(scene, g, o.carrier, w).values;
        std::printf("relative error %.3e (%s)\n", relative_error(v, res.x),
                    relative_error(v, res.x) <= kSuccessThreshold ? "success" : "failure");
    }
    const auto ap = amp_phase_errors(z, z_est);
    const auto hr = hit_rate(res.x, scene, g, 3 * g.tau0());
    std::printf("RSNR %.2f dB  ErrAmp %.3e  ErrPhase %.3e rad  hits %zu/%zu\n", snr_db(z.squaredNorm(), (z - z_est).squaredNorm()),
                ap.amplitude, ap.phase, hr.hits, scene.sparsity());
    if (!out.empty()) {
        const fs::path dir = prepare_dir(out);
        auto f = open_out(dir / "coefficients.csv");
        f << "atom,delay_s,re,im,abs\n";
        for (Index i = 0; i < res.x.size(); ++i)
            if (res.x[i] != cplx{}) f << i << ',' << g.delay(static_cast<std::size_t>(i)) << ',' << res.x[i].real() << ','
                                     << res.x[i].imag() << ',' << std::abs(res.x[i]) << '\n';
        auto t = open_out(dir / "trace.csv");
        write_trace_csv(t, res);
        auto s = open_out(dir / "scene.csv");
        write_scene_csv(s, scene);
        std::printf("wrote %s/{coefficients,trace,scene}.csv\n", out.c_str());
    }
    return 0;
}

struct RunOverrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<unsigned> threads;
    std::string output;

    void add_to(CLI::App* app) {
        app->add_option("-c,--config", config, "experiment config (JSON)")->required();
        app->add_option("--seed", seed, "override the base seed");
        app->add_option("--trials", trials, "override trials per point");
        app->add_option("--threads", threads, "worker threads (0: all cores)");
        app->add_option("-o,--output", output, "output directory");
    }

    ExperimentConfig load() const {
        ExperimentConfig c = load_config(config);
        if (seed) c.seed = *seed;
        if (trials) c.trials = *trials;
        if (threads) c.threads = *threads;
        if (!output.empty()) c.output_dir = output;
        c.validate();
        return c;
    }
};

int cmd_run(const RunOverrides& o) {
    const ExperimentConfig c = o.load();
    const fs::path dir = resolve_output_dir(c);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_experiment(c);
    emit_outputs(res, dir);
    print_aggregates(res.aggregates);
    std::printf("%zu trials in %.1f s, config %s, outputs in %s\n", res.records.size(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), config_hash(c).c_str(),
                dir.string().c_str());
    return 0;
}

int cmd_frontier(const RunOverrides& o) {
    const ExperimentConfig c = o.load();
    const fs::path dir = prepare_dir(resolve_output_dir(c).string());
    const auto rows = bandwidth_frontier(c);
    {
        auto f = open_out(dir / "frontier.csv");
        write_frontier_csv(f, rows);
    }
    std::printf("%6s %10s %9s %5s %12s %6s\n", "K", "T[us]", "resolved", "M*", "Bcs*[MHz]", "mono");
    for (const auto& r : rows)
        std::printf("%6zu %10.3f %9d %5zu %12.4f %6d\n", r.k, r.period * 1e6, r.resolved ? 1 : 0, r.m_star, r.bcs_star / 1e6,
                    r.monotone_consistent ? 1 : 0);
    print_fits(law_points(rows));
    std::printf("wrote %s\n", (dir / "frontier.csv").string().c_str());
    return 0;
}

int cmd_fit(const std::string& input) {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot open " + input);
    print_fits(read_frontier_csv(in));
    return 0;
}

int cmd_rip(std::size_t k, std::size_t n, double delta, double eta, double period, double bandwidth, std::size_t com_m,
            double com_eps, std::size_t com_trials, std::uint64_t seed) {
    std::printf("M_min (K %zu, N %zu, delta %.3g, eta %.3g) = %zu\n", k, n, delta, eta, rip_sample_bound(k, n, delta, eta));
    std::printf("B_cs_min (T %.4g s, B %.4g Hz) = %.6g Hz\n", period, bandwidth, bcs_bound(k, period, bandwidth, delta, eta));
    if (com_m == 0) return 0;
    const auto g = NyquistGrid::for_scene(bandwidth, period, period / 2);
    const FrequencyDictionary dict(WaveformSpec::lfm(period / 2, bandwidth), g);
    CounterRng rng(seed);
    const CVector v = scene_to_coefficients(random_scene(g, k, rng, true), g, 450e6, dict.spec()).values;
    const double sigma = sigma_v(dict, v / v.norm());
    const double eps = com_eps > 0.0 ? com_eps : com_validity_floor(com_m, sigma);
    const auto r = com_check(dict, v, com_m, eps, com_trials, seed);
    std::printf("sigma_v %.4f (sqrt K = %.4f)\n", r.sigma, std::sqrt(double(k)));
    std::printf("CoM: M %zu  eps %.4g  trials %zu  empirical %.4f  bound %.4g  valid %d  respected %d  mean ratio %.4f\n",
                com_m, r.eps, r.trials, r.empirical_failure, r.bound, r.valid ? 1 : 0, r.bound_respected ? 1 : 0,
                r.mean_ratio);
    return 0;
}

int cmd_gram(const std::string& waveform, double bandwidth, double pulse_width, double period, bool dense) {
    const auto g = NyquistGrid::for_scene(bandwidth, period, pulse_width);
    for (const std::string& w : {std::string("lfm"), std::string("zc")}) {
        if (waveform != "both" && waveform != w) continue;
        const auto spec = w == "lfm" ? WaveformSpec::lfm(pulse_width, bandwidth) : WaveformSpec::zadoff_chu(pulse_width, bandwidth);
        const FrequencyDictionary dict(spec, g);
        const auto s = dense ? summarize_gram(gram(dict)) : gram_summary(dict);
        std::printf("%-3s N %zu  max off-diagonal %.6f at lag %ld  max |G_nn - 1| %.2e\n", w.c_str(), g.atoms,
                    s.max_off_diagonal, static_cast<long>(std::abs(s.argmax_row - s.argmax_col)), s.max_diagonal_deviation);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compressive sensing radar receiver simulator"};
    app.require_subcommand(1);

    SceneOptions gen_o, meas_o, rec_o;
    std::string gen_out, meas_out, rec_out;
    std::uint64_t meas_chip = 1, rec_chip = 1;
    std::size_t meas_l = 16;
    std::string rec_solver = "auto";
    double rec_eps_scale = 1.0;

    auto* gen = app.add_subcommand("gen", "generate a scene and its Nyquist-rate envelope");
    gen_o.add_to(gen, false);
    gen->add_option("-o,--output", gen_out, "directory for scene.csv, envelope.csv, pulse.csv");

    auto* meas = app.add_subcommand("measure", "one acquisition through the operator, baseband and IF paths");
    meas_o.add_to(meas, true);
    meas->add_option("--chip-seed", meas_chip, "chipping sequence seed");
    meas->add_option("--oversampling", meas_l, "fine grid factor L (raised if the IF path needs it)");
    meas->add_option("-o,--output", meas_out, "directory for measurements.csv");

    auto* rec = app.add_subcommand("recover", "one acquisition followed by sparse recovery");
    rec_o.add_to(rec, true);
    rec->add_option("--chip-seed", rec_chip, "chipping sequence seed");
    rec->add_option("--solver", rec_solver, "auto, bp, bpdn or omp")->check(CLI::IsMember({"auto", "bp", "bpdn", "omp"}));
    rec->add_option("--epsilon-scale", rec_eps_scale, "multiplier on the noise-derived epsilon");
    rec->add_option("-o,--output", rec_out, "directory for coefficients.csv, trace.csv, scene.csv");

    RunOverrides run_o, fr_o;
    auto* run = app.add_subcommand("run", "Monte-Carlo sweep from a config file");
    run_o.add_to(run);
    auto* fr = app.add_subcommand("frontier", "minimum B_cs reaching the PSR target, per K and T");
    fr_o.add_to(fr);

    std::string fit_in;
    auto* fit = app.add_subcommand("fit", "least-squares fit of B_cs* against (K/T) log(BT/K)");
    fit->add_option("input", fit_in, "frontier.csv")->required();

    std::size_t rk = 1, rn = 1024, com_m = 0, com_trials = 500;
    double rdelta = 0.5, reta = 0.01, rperiod = 20.48e-6, rband = 100e6, com_eps = 0.0;
    std::uint64_t rseed = 1;
    auto* rip = app.add_subcommand("rip", "RIP sample and bandwidth bounds, optional concentration check");
    rip->add_option("-k", rk, "sparsity");
    rip->add_option("-n", rn, "dictionary size N");
    rip->add_option("--delta", rdelta, "restricted isometry constant");
    rip->add_option("--eta", reta, "failure probability");
    rip->add_option("--period", rperiod, "T [s] for the bandwidth bound");
    rip->add_option("--bandwidth", rband, "B [Hz] for the bandwidth bound");
    rip->add_option("--com-m", com_m, "run a concentration check with this many measurements");
    rip->add_option("--com-eps", com_eps, "tolerance (default: validity floor)");
    rip->add_option("--com-trials", com_trials, "chipping seeds to draw");
    rip->add_option("--seed", rseed, "seed for the test vector and chips");

    std::string gw = "both";
    double gb = 100e6, gtp = 10.24e-6, gt = 20.48e-6;
    bool gdense = false;
    auto* gr = app.add_subcommand("gram", "largest off-diagonal entry of the dictionary Gram matrix");
    gr->add_option("--waveform", gw, "lfm, zc or both")->check(CLI::IsMember({"lfm", "zc", "both"}));
    gr->add_option("--bandwidth", gb, "B [Hz]");
    gr->add_option("--pulse-width", gtp, "Tp [s]");
    gr->add_option("--period", gt, "T [s]");
    gr->add_flag("--dense", gdense, "form the full matrix instead of using its Toeplitz lags");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen(gen_o, gen_out);
        if (*meas) return cmd_measure(meas_o, meas_chip, meas_l, meas_out);
        if (*rec) return cmd_recover(rec_o, rec_chip, rec_solver, rec_eps_scale, rec_out);
        if (*run) return cmd_run(run_o);
        if (*fr) return cmd_frontier(fr_o);
        if (*fit) return cmd_fit(fit_in);
        if (*rip) return cmd_rip(rk, rn, rdelta, reta, rperiod, rband, com_m, com_eps, com_trials, rseed);
        if (*gr) return cmd_gram(gw, gb, gtp, gt, gdense);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
