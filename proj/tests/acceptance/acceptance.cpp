// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
#include "fkv/analysis.hpp"
#include "fkv/app/config.hpp"
#include "fkv/app/execute.hpp"
#include "fkv/energy.hpp"
#include "fkv/errors.hpp"
#include "fkv/kernel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace fkv;
namespace fs = std::filesystem;

namespace {

const fs::path fixtures = FKV_TEST_FIXTURES;

struct Outcome {
    bool pass = false;
    std::string detail;
};

app::RunConfig load(const std::string& name) {
    const app::ParseResult r = app::parse_config(fixtures / name);
    if (!r.ok()) throw std::runtime_error("fixture " + name + " does not parse");
    return *r.config;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome kernel_calculus() {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = 2000;
    double worst_caputo = 0.0;
    for (int p : {1, 2})
        for (double alpha : {0.3, 0.5, 0.7}) {
            std::vector<double> g(n + 1);
            for (int i = 0; i <= n; ++i) g[i] = std::pow(static_cast<double>(i) / n, p);
            const auto d = caputo_eval(g, 1.0 / n, alpha);
            boost::math::quadrature::tanh_sinh<double> q;
            for (double t : {0.25, 0.5, 1.0}) {
                const double integral = q.integrate(
                    [&](double r) { return p * std::pow(r, p - 1) * std::pow(t - r, -alpha); }, 0.0, t);
                const double oracle = integral / boost::math::tgamma(1.0 - alpha);
                const int i = static_cast<int>(std::lround(t * n));
                worst_caputo = std::max(worst_caputo, std::abs(d[i] - oracle) / std::abs(oracle));
            }
        }
    double worst_relation = 0.0;
    for (double alpha : {0.3, 0.5, 0.7}) {
        std::vector<double> g(n + 1);
        for (int i = 0; i <= n; ++i) {
            const double t = static_cast<double>(i) / n;
            g[i] = 1.0 + t + std::sin(3 * t);
        }
        const auto rl = riemann_liouville_eval(g, 1.0 / n, alpha);
        const auto c = caputo_eval(g, 1.0 / n, alpha);
        for (int i = n / 10; i <= n; ++i) {
            const double t = static_cast<double>(i) / n;
            worst_relation = std::max(worst_relation, std::abs(rl[i] - c[i] - g[0] * rho(alpha, t)));
        }
    }
    const double secs = seconds_since(t0);
    return {worst_caputo <= 1e-3 && worst_relation <= 1e-3 && secs < 2.0,
            "caputo_rel=" + fmt(worst_caputo) + " relation=" + fmt(worst_relation) +
                " time=" + fmt(secs) + "s"};
}

Outcome energy_equality() {
    const auto t0 = std::chrono::steady_clock::now();
    const app::RunConfig cfg = load("crack_fixed_2d.json");
    const Problem p = cfg.problem();
    const KernelSamples s = sample_grid(p.kernel, cfg.solver.n, p.T);
    auto ctx = init(p, s, cfg.solver);
    const DiscreteTrajectory traj = run(*ctx);
    const EnergyLedger ledger = discrete_energy_audit(traj, s, p);
    const double res = ledger.max_relative_residual();
    const double secs = seconds_since(t0);
    return {res <= 1e-8 && secs < 60.0 && static_cast<int>(ledger.rows.size()) == cfg.solver.n,
            "nodes=" + std::to_string(p.mesh->num_nodes()) + " n=" + std::to_string(cfg.solver.n) +
                " residual=" + fmt(res) + " time=" + fmt(secs) + "s"};
}

const std::vector<std::string> run_fixtures = {"minimal.json", "run_1d.json", "crack_fixed_2d.json",
                                               "crack_growing_2d.json", "late_release.json"};

struct FixtureAudit {
    double discrete_margin = 0.0;
    double continuous_margin = 0.0;
    std::size_t violations = 0;
    bool certificate = true;
    double certificate_worst = 0.0;
};

const std::vector<FixtureAudit>& fixture_audits() {
    static const std::vector<FixtureAudit> audits = [] {
        std::vector<FixtureAudit> out;
        for (const std::string& name : run_fixtures) {
            const app::RunConfig cfg = load(name);
            const Problem p = cfg.problem();
            const KernelSamples s = sample_grid(p.kernel, cfg.solver.n, p.T);
            auto ctx = init(p, s, cfg.solver);
            const DiscreteTrajectory traj = run(*ctx);
            const EnergyLedger ledger = discrete_energy_audit(traj, s, p);
            FixtureAudit a;
            a.discrete_margin = ledger.min_relative_margin();
            a.continuous_margin = std::numeric_limits<double>::infinity();
            const auto series = continuous_energy_series(traj, p, p.kernel);
            for (std::size_t i = 1; i < series.size(); ++i)
                a.continuous_margin = std::min(a.continuous_margin, series[i].margin / ledger.scale);
            a.violations = ledger.sign_violations(1e-12).size();
            const SignCertificate c = certify_signs(s, cfg.seed);
            a.certificate = c.ok;
            a.certificate_worst = std::max(c.worst_first, -c.worst_second);
            out.push_back(a);
        }
        return out;
    }();
    return audits;
}

std::string fixture_label(std::size_t i) {
    const std::string& name = run_fixtures[i];
    return name.substr(0, name.find('.'));
}

Outcome dissipation_inequality() {
    bool pass = true;
    std::string detail;
    const auto& audits = fixture_audits();
    for (std::size_t i = 0; i < audits.size(); ++i) {
        const FixtureAudit& a = audits[i];
        pass = pass && a.discrete_margin >= -1e-10 && a.continuous_margin >= -1e-10;
        detail += (i ? " " : "") + fixture_label(i) + "=" + fmt(a.discrete_margin) + "/" +
                  fmt(a.continuous_margin);
    }
    return {pass, "discrete/continuous margins " + detail};
}

Outcome sign_ledger() {
    bool pass = true;
    std::string detail;
    const auto& audits = fixture_audits();
    for (std::size_t i = 0; i < audits.size(); ++i) {
        const FixtureAudit& a = audits[i];
        pass = pass && a.violations == 0 && a.certificate;
        detail += (i ? " " : "") + fixture_label(i) + "=" + std::to_string(a.violations) + "/" +
                  fmt(a.certificate_worst);
    }
    return {pass, "violations/certificate_worst " + detail};
}

Outcome epsilon_sweep_decrease() {
    const auto t0 = std::chrono::steady_clock::now();
    app::RunConfig cfg = load("run_1d.json");
    SolverConfig solver = cfg.solver;
    solver.n = 200;
    const SweepReport r = epsilon_sweep(cfg.problem(), 0.1, 5, solver, 1);
    const double secs = seconds_since(t0);
    std::string diffs;
    for (double d : r.diff_linf_h) diffs += (diffs.empty() ? "" : ",") + fmt(d);
    return {r.strictly_decreasing() && secs < 30.0, "diffs=" + diffs + " time=" + fmt(secs) + "s"};
}

Outcome kernel_positivity() {
    const SymTensor b = scalar_tensor(1, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    double ratio = std::numeric_limits<double>::infinity();
    bool pass = true;
    for (int k = 1; k <= 9; ++k) {
        const double alpha = 0.1 * k;
        const auto kernel = RegularizedKernel::shifted(FractionalKernel(alpha, b), 1e-3);
        const PositivityReport r = positivity_test(kernel, 256, 1.0, k);
        pass = pass && r.pass;
        for (const PositivityRow& row : r.rows) worst = std::min(worst, row.min_eigenvalue / row.norm);
        ratio = std::min(ratio, r.identity.ratio);
    }
    return {pass && worst >= -1e-10 && ratio >= 1.5,
            "min_relative_eigenvalue=" + fmt(worst) + " identity_ratio=" + fmt(ratio)};
}

Outcome uniqueness() {
    const app::RunConfig cfg = load("crack_fixed_2d.json");
    const Problem p = cfg.problem();
    UniquenessVariant permuted;
    permuted.assembly = permuted_order(p.mesh->num_elements(), 7);
    const UniquenessReport r = uniqueness_check(p, cfg.solver, {}, permuted);
    bool refused = false;
    try {
        const app::RunConfig growing = load("crack_growing_2d.json");
        uniqueness_check(growing.problem(), growing.solver, {}, {});
    } catch (const PreconditionError&) {
        refused = true;
    }
    return {r.relative <= 1e-10 && refused,
            "relative=" + fmt(r.relative) + std::string(" moving_crack_refused=") +
                (refused ? "yes" : "no")};
}

Outcome manufactured() {
    const ConvergenceReport wave = manufactured_convergence(OracleCase::Wave, {100, 200, 400});
    double rate = std::numeric_limits<double>::infinity();
    for (double r : wave.rates) rate = std::min(rate, r);
    double exact = 0.0;
    for (OracleCase c : {OracleCase::Static, OracleCase::Translation})
        for (double e : manufactured_convergence(c, {100, 200, 400}).errors)
            exact = std::max(exact, e);
    return {rate >= 0.8 && exact <= 1e-10, "wave_rate=" + fmt(rate) + " exact_error=" + fmt(exact)};
}

Outcome uniform_bound() {
    const app::RunConfig cfg = load("run_1d.json");
    const BoundStudy b = uniform_bound_study(cfg.problem(), {50, 100, 200, 400}, cfg.solver);
    return {b.variation < 0.1, "variation=" + fmt(b.variation)};
}

std::string read_numeric(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("# timestamp", 0) != 0 && line.find("\"timestamp\"") == std::string::npos)
            out += line + "\n";
    return out;
}

Outcome determinism() {
    std::vector<std::vector<std::string>> runs;
    for (int pass = 0; pass < 2; ++pass) {
        app::Overrides o;
        o.out_dir = fs::temp_directory_path() / ("fkv-acceptance-" + std::to_string(pass));
        fs::remove_all(*o.out_dir);
        const app::ParseResult r = app::parse_config(fixtures / "crack_growing_2d.json", true, o);
        if (!r.ok()) throw std::runtime_error("fixture does not parse");
        app::RunConfig cfg = *r.config;
        cfg.outputs.checkpoint = true;
        std::ostringstream log;
        const app::ExecResult e = app::execute(cfg, log);
        if (e.exit_code != app::exit_ok)
            return {false, "run exited with " + std::to_string(e.exit_code) + " " + e.error};
        std::vector<std::string> contents;
        for (const std::string& f : e.files) contents.push_back(read_numeric(f));
        runs.push_back(std::move(contents));
    }
    const bool same = runs[0] == runs[1] && !runs[0].empty();
    return {same, "files=" + std::to_string(runs[0].size()) + (same ? " identical" : " differ")};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"kernel calculus", kernel_calculus},
        {"discrete energy equality", energy_equality},
        {"energy-dissipation inequality", dissipation_inequality},
        {"sign ledger", sign_ledger},
        {"epsilon sweep", epsilon_sweep_decrease},
        {"kernel positivity", kernel_positivity},
        {"uniqueness", uniqueness},
        {"manufactured convergence", manufactured},
        {"uniform bound", uniform_bound},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first
                  << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
