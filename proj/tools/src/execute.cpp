#include "fkv/app/execute.hpp"

#include "fkv/analysis.hpp"
#include "fkv/energy.hpp"
#include "fkv/errors.hpp"
#include "fkv/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#ifndef FKV_VERSION
#define FKV_VERSION "0.0.0"
#endif

namespace fkv::app {

using nlohmann::json;
namespace fs = std::filesystem;

std::string version_string() { return FKV_VERSION; }

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Collects artifacts in memory so that every header can carry the final wall time.
class Artifacts {
public:
    Artifacts(const RunConfig& cfg) : cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

    std::ostream& text(const std::string& name, const std::string& kind) {
        auto& e = entries_.emplace_back();
        e.name = name;
        e.kind = kind;
        return e.body;
    }

    void binary(const std::string& name, std::string bytes) {
        auto& e = entries_.emplace_back();
        e.name = name;
        e.raw = true;
        e.body << bytes;
    }

    void flush(ExecResult& result) {
        const fs::path dir = cfg_.outputs.directory;
        fs::create_directories(dir);
        OutputHeader h;
        h.version = version_string();
        h.config_hash = cfg_.hash;
        h.timestamp = utc_now();
        h.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        for (auto& e : entries_) {
            const fs::path p = dir / e.name;
            std::ofstream out(p, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
            if (!e.raw) {
                h.kind = e.kind;
                write_header(out, h);
            }
            out << e.body.str();
            result.files.push_back(p.string());
        }
    }

    json meta() const {
        return {{"version", version_string()}, {"config_hash", cfg_.hash}};
    }

    // JSON summaries carry the header as fields; the volatile ones share a line.
    void summary(const std::string& name, json body) {
        body["meta"] = meta();
        body["timestamp"] = "@TIMESTAMP@";
        auto& e = entries_.emplace_back();
        e.name = name;
        e.raw = true;
        e.json_body = std::move(body);
        e.is_json = true;
    }

    void finalize_json() {
        const std::string stamp =
            utc_now() + " wall_time " +
            format_double(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
        for (auto& e : entries_)
            if (e.is_json) {
                e.json_body["timestamp"] = stamp;
                e.body << e.json_body.dump(2) << '\n';
            }
    }

private:
    struct Entry {
        std::string name;
        std::string kind;
        bool raw = false;
        bool is_json = false;
        json json_body;
        std::ostringstream body;
    };
    const RunConfig& cfg_;
    std::chrono::steady_clock::time_point start_;
    std::deque<Entry> entries_;
};

class Checks {
public:
    Checks(ExecResult& r, std::ostream& log) : r_(r), log_(log) {}

    // Passes when value >= threshold (at_least) or value <= threshold.
    void add(const std::string& name, double value, double threshold, bool at_least) {
        Check c{name, at_least ? value >= threshold : value <= threshold, value, threshold};
        log_ << (c.pass ? "PASS " : "FAIL ") << name << " value=" << format_double(value)
             << (at_least ? " >= " : " <= ") << format_double(threshold) << '\n';
        r_.checks.push_back(c);
    }

    void flag(const std::string& name, bool pass) {
        log_ << (pass ? "PASS " : "FAIL ") << name << '\n';
        r_.checks.push_back({name, pass, pass ? 1.0 : 0.0, 1.0});
    }

    json to_json() const {
        json out = json::object();
        for (const auto& c : r_.checks)
            out[c.name] = {{"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}};
        return out;
    }

    bool all_pass() const {
        for (const auto& c : r_.checks)
            if (!c.pass) return false;
        return true;
    }

private:
    ExecResult& r_;
    std::ostream& log_;
};

void run_mode(const RunConfig& cfg, Artifacts& art, Checks& checks, json& summary) {
    const Problem problem = cfg.problem();
    const KernelSamples samples = sample_grid(problem.kernel, cfg.solver.n, problem.T);
    const SignCertificate cert = certify_signs(samples, cfg.seed);
    checks.flag("kernel_sign_certificate", cert.ok);

    const double spd = spd_certificate(problem, samples, cfg.solver, cfg.seed);
    checks.add("step_matrix_positive", spd, 0.0, true);

    auto ctx = init(problem, samples, cfg.solver);
    for (int j = 1; j <= cfg.solver.n; ++j) ctx->step_solve(j);
    if (cfg.outputs.checkpoint) {
        std::ostringstream bin;
        ctx->save_checkpoint(bin);
        art.binary("checkpoint.bin", bin.str());
    }
    const DiscreteTrajectory traj = ctx->take_trajectory();

    const EnergyLedger ledger = discrete_energy_audit(traj, samples, problem);
    checks.add("energy_equality_residual", ledger.max_relative_residual(), 1e-8, false);
    checks.add("energy_inequality_margin", ledger.min_relative_margin(), -1e-10, true);
    const auto violations = ledger.sign_violations(1e-12);
    checks.add("sign_ledger_violations", static_cast<double>(violations.size()), 0.0, false);

    summary["steps"] = traj.n;
    summary["tau"] = traj.tau;
    summary["factorizations"] = traj.factorizations;
    summary["initial_energy"] = ledger.initial_energy;
    summary["scale"] = ledger.scale;
    summary["max_linear_residual"] =
        traj.residuals.empty() ? 0.0 : *std::max_element(traj.residuals.begin(), traj.residuals.end());
    summary["variational_residual"] = variational_residual(problem, samples, traj, cfg.seed);
    summary["second_derivative_dual_bound"] = second_derivative_dual_bound(traj, problem);
    const InitialContinuity ic = initial_continuity_check(traj, problem);
    summary["initial_continuity"] = {{"displacement", ic.displacement},
                                     {"velocity", ic.velocity},
                                     {"displacement_rate", ic.displacement_rate},
                                     {"velocity_rate", ic.velocity_rate}};
    json sv = json::array();
    for (const auto& v : violations) sv.push_back({{"step", v.step}, {"term", v.term}, {"value", v.value}});
    summary["sign_violations"] = sv;
    summary["final"] = {{"t", traj.n * traj.tau},
                        {"displacement_max", traj.at(traj.n).lpNorm<Eigen::Infinity>()},
                        {"energy", ledger.rows.empty() ? 0.0 : ledger.rows.back().energy()}};

    if (cfg.outputs.generalized_residual) {
        const auto family = default_test_family(problem, traj);
        const GeneralizedResidual g = check_generalized_residual(problem, traj, family);
        summary["generalized_residual"] = {{"max_abs", g.max_abs},
                                           {"tests", static_cast<int>(g.values.size())}};
    }

    if (cfg.outputs.continuous_energy) {
        const auto series = continuous_energy_series(traj, problem, problem.kernel);
        double worst = std::numeric_limits<double>::infinity();
        std::vector<double> t, e, d, w, m;
        for (std::size_t i = 0; i < series.size(); ++i) {
            t.push_back(i * traj.tau);
            e.push_back(series[i].energy);
            d.push_back(series[i].dissipation);
            w.push_back(series[i].work);
            m.push_back(series[i].margin);
            if (i > 0) worst = std::min(worst, series[i].margin / ledger.scale);
        }
        if (series.size() > 1) checks.add("continuous_energy_margin", worst, -1e-10, true);
        write_columns(art.text("continuous_energy.txt", "continuous_energy"),
                      {"t", "energy", "dissipation", "work", "margin"}, {t, e, d, w, m});
    }

    if (cfg.outputs.kernel_table) write_kernel_table(art.text("kernel.txt", "kernel_table"), samples);
    if (cfg.outputs.ledger) write_ledger(art.text("ledger.txt", "energy_ledger"), ledger);
    if (cfg.outputs.snapshots)
        write_snapshots(art.text("snapshots.txt", "snapshots"), traj, *problem.mesh,
                        cfg.outputs.snapshot_stride);
    write_mesh(art.text("mesh.txt", "mesh"), *problem.mesh);
}

void sweep_mode(const RunConfig& cfg, Artifacts& art, Checks& checks, json& summary) {
    const Problem problem = cfg.problem();
    const SweepReport r =
        epsilon_sweep(problem, cfg.sweep.eps0, cfg.sweep.levels, cfg.solver, cfg.sweep.workers);
    bool inactive = true;
    for (double d : r.diff_linf_h) inactive = inactive && d == 0.0;
    summary["kernel_inactive"] = inactive;
    checks.flag("sweep_diffs_strictly_decreasing", r.strictly_decreasing() || inactive);
    checks.add("sweep_min_margin", *std::min_element(r.min_margins.begin(), r.min_margins.end()),
               -1e-10, true);
    checks.add("sweep_max_residual",
               *std::max_element(r.max_residuals.begin(), r.max_residuals.end()), 1e-8, false);

    std::vector<double> k, eps, linf, l2;
    for (int i = 0; i < static_cast<int>(r.epsilons.size()); ++i) {
        k.push_back(i);
        eps.push_back(r.epsilons[i]);
        const bool has = i < static_cast<int>(r.diff_linf_h.size());
        linf.push_back(has ? r.diff_linf_h[i] : std::nan(""));
        l2.push_back(has ? r.diff_l2_strain[i] : std::nan(""));
    }
    write_columns(art.text("sweep.txt", "epsilon_sweep"),
                  {"k", "epsilon", "diff_linf_h", "diff_l2_strain", "min_margin", "max_residual"},
                  {k, eps, linf, l2, r.min_margins, r.max_residuals});
    summary["n"] = r.n;
    summary["epsilons"] = r.epsilons;
    summary["diff_linf_h"] = r.diff_linf_h;
    summary["diff_l2_strain"] = r.diff_l2_strain;
    summary["min_margins"] = r.min_margins;
    summary["max_residuals"] = r.max_residuals;
}

void convergence_mode(const RunConfig& cfg, Artifacts& art, Checks& checks, json& summary) {
    const ConvergenceReport r = manufactured_convergence(cfg.convergence.oracle, cfg.convergence.ns);
    if (r.oracle == OracleCase::Wave) {
        checks.add("observed_order", *std::min_element(r.rates.begin(), r.rates.end()), 0.8, true);
    } else {
        checks.add("max_error", *std::max_element(r.errors.begin(), r.errors.end()), 1e-10, false);
    }
    std::vector<double> ns(r.ns.begin(), r.ns.end()), rates = r.rates;
    rates.push_back(std::nan(""));
    write_columns(art.text("convergence.txt", "convergence"), {"n", "error", "rate"},
                  {ns, r.errors, rates});
    summary["case"] = oracle_case_name(r.oracle);
    summary["ns"] = r.ns;
    summary["errors"] = r.errors;
    summary["rates"] = r.rates;
}

void uniqueness_mode(const RunConfig& cfg, Artifacts&, Checks& checks, json& summary) {
    const Problem problem = cfg.problem();
    SolverConfig direct = cfg.solver;
    direct.linear_tol.reset();
    const AssemblyOptions permuted =
        permuted_order(problem.mesh->num_elements(), cfg.uniqueness.permute_seed);
    const UniquenessReport same = uniqueness_check(problem, direct, {}, {});
    const UniquenessReport order = uniqueness_check(problem, direct, {}, {permuted, std::nullopt});
    const UniquenessReport perturbed =
        uniqueness_check(problem, direct, {}, {permuted, cfg.uniqueness.linear_tol});
    checks.add("identical_runs_difference", same.max_diff, 0.0, false);
    checks.add("permuted_order_relative_difference", order.relative, 1e-10, false);
    checks.add("perturbed_solve_relative_difference", perturbed.relative, 1e-8, false);
    auto row = [](const UniquenessReport& u) {
        return json{{"max_diff", u.max_diff}, {"scale", u.scale}, {"relative", u.relative}};
    };
    summary["identical"] = row(same);
    summary["permuted_order"] = row(order);
    summary["perturbed_solve"] = row(perturbed);
    summary["perturbed_linear_tol"] = cfg.uniqueness.linear_tol;
}

void positivity_mode(const RunConfig& cfg, Artifacts& art, Checks& checks, json& summary) {
    const Problem problem = cfg.problem();
    const PositivityReport r = positivity_test(problem.kernel, cfg.positivity.n_max, problem.T, cfg.seed);
    std::vector<double> n, lo, nrm, pass;
    double worst = std::numeric_limits<double>::infinity();
    json rows = json::array();
    for (const auto& row : r.rows) {
        n.push_back(row.n);
        lo.push_back(row.min_eigenvalue);
        nrm.push_back(row.norm);
        pass.push_back(row.pass ? 1.0 : 0.0);
        worst = std::min(worst, row.norm > 0.0 ? row.min_eigenvalue / row.norm : 0.0);
        rows.push_back({{"n", row.n}, {"min_eigenvalue", row.min_eigenvalue}, {"norm", row.norm},
                        {"pass", row.pass}});
    }
    checks.add("min_relative_eigenvalue", worst, -1e-10, true);
    checks.add("identity_residual_ratio", r.identity.ratio, 1.5, true);
    write_columns(art.text("positivity.txt", "positivity"), {"n", "min_eigenvalue", "norm", "pass"},
                  {n, lo, nrm, pass});
    summary["rows"] = rows;
    summary["identity"] = {{"n_coarse", r.identity.n_coarse},
                           {"residual_coarse", r.identity.residual_coarse},
                           {"residual_fine", r.identity.residual_fine},
                           {"ratio", r.identity.ratio}};
}

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const SingularityError*>(&e)) return "singularity";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const SolveError*>(&e)) return "solve";
    return "runtime";
}

} // namespace

ExecResult execute(const RunConfig& cfg, std::ostream& log) {
    ExecResult result;
    Artifacts art(cfg);
    Checks checks(result, log);
    json summary;
    summary["mode"] = mode_name(cfg.mode);
    try {
        switch (cfg.mode) {
        case Mode::Run: run_mode(cfg, art, checks, summary); break;
        case Mode::Sweep: sweep_mode(cfg, art, checks, summary); break;
        case Mode::Convergence: convergence_mode(cfg, art, checks, summary); break;
        case Mode::Uniqueness: uniqueness_mode(cfg, art, checks, summary); break;
        case Mode::Positivity: positivity_mode(cfg, art, checks, summary); break;
        }
        summary["checks"] = checks.to_json();
        summary["pass"] = checks.all_pass();
        art.summary("summary.json", summary);
        art.finalize_json();
        art.flush(result);
        result.exit_code = checks.all_pass() ? exit_ok : exit_check_failed;
    } catch (const std::exception& e) {
        result.exit_code = exit_runtime_error;
        result.error = json{{"error", error_kind(e)}, {"mode", mode_name(cfg.mode)},
                            {"message", e.what()}}
                           .dump();
    }
    return result;
}

} // namespace fkv::app
