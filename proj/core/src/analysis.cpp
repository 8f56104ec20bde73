#include "fkv/analysis.hpp"

#include "fkv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fkv {

double h_norm(const Operators& ops, const Eigen::VectorXd& v) {
    return std::sqrt(std::max(0.0, v.dot(ops.mass * v)));
}

double strain_norm(const Operators& ops, const Eigen::VectorXd& v) {
    return std::sqrt(std::max(0.0, v.dot(ops.strain * v)));
}

bool SweepReport::strictly_decreasing() const {
    for (std::size_t k = 1; k < diff_linf_h.size(); ++k)
        if (!(diff_linf_h[k] < diff_linf_h[k - 1])) return false;
    return !diff_linf_h.empty();
}

namespace {

// Runs job(i) for i in [0, count) on up to `workers` threads. Results are
// written by index, so the outcome does not depend on scheduling. The
// exception of the lowest failing index is rethrown.
template <class Job>
void run_indexed(int count, int workers, Job job) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(workers, 1, std::max(count, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace

SweepReport epsilon_sweep(const Problem& problem, double eps0, int levels,
                          const SolverConfig& config, int workers) {
    if (levels < 2) throw DomainError("epsilon sweep needs at least two levels");
    if (!(eps0 > 0.0)) throw DomainError("epsilon sweep needs a positive eps0");

    SweepReport report;
    report.n = config.n;
    for (int k = 0; k < levels; ++k) report.epsilons.push_back(eps0 * std::ldexp(1.0, -k));

    std::vector<DiscreteTrajectory> runs(levels);
    report.min_margins.assign(levels, 0.0);
    report.max_residuals.assign(levels, 0.0);
    run_indexed(levels, workers, [&](int k) {
        const double eps = report.epsilons[k];
        try {
            Problem p = problem;
            p.kernel = problem.kernel.with_epsilon(eps);
            const KernelSamples samples = sample_grid(p.kernel, config.n, p.T);
            auto ctx = init(p, samples, config);
            runs[k] = run(*ctx);
            const EnergyLedger ledger = discrete_energy_audit(runs[k], samples, p);
            report.min_margins[k] = ledger.min_relative_margin();
            report.max_residuals[k] = ledger.max_relative_residual();
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "epsilon sweep failed at eps = " << eps << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
    });

    const Operators ops = assemble_operators(*problem.mesh, problem.material,
                                             problem.material.viscous, config.assembly);
    const double tau = runs[0].tau;
    for (int k = 0; k + 1 < levels; ++k) {
        double linf = 0.0;
        double l2 = 0.0;
        for (int j = 0; j <= config.n; ++j) {
            const Eigen::VectorXd d = runs[k].at(j) - runs[k + 1].at(j);
            linf = std::max(linf, h_norm(ops, d));
            if (j > 0) l2 += tau * d.dot(ops.strain * d);
        }
        report.diff_linf_h.push_back(linf);
        report.diff_l2_strain.push_back(std::sqrt(std::max(0.0, l2)));
    }
    return report;
}

double kernel_identity_residual(const std::function<double(double)>& k,
                                const std::function<double(double)>& k_dot,
                                const std::function<double(double)>& path, int n, double T) {
    if (n < 2) throw DomainError("kernel identity check needs n >= 2");
    const double h = T / n;
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = path(i * h);

    auto trap = [h](const std::vector<double>& f, int upto) {
        if (upto == 0) return 0.0;
        double s = 0.5 * (f[0] + f[upto]);
        for (int i = 1; i < upto; ++i) s += f[i];
        return h * s;
    };

    std::vector<double> lhs_r(n + 1), lag_r(n + 1), origin_r(n + 1), double_r(n + 1);
    std::vector<double> inner1(n + 1), inner2(n + 1);
    for (int i = 0; i <= n; ++i) {
        for (int m = 0; m <= i; ++m) {
            const double kd = k_dot((i - m) * h);
            inner1[m] = kd * v[m];
            const double dv = v[i] - v[m];
            inner2[m] = kd * dv * dv;
        }
        const double rate = k(0.0) * v[i] + trap(inner1, i);
        lhs_r[i] = rate * v[i];
        lag_r[i] = k(T - i * h) * v[i] * v[i];
        origin_r[i] = k(i * h) * v[i] * v[i];
        double_r[i] = trap(inner2, i);
    }
    const double lhs = trap(lhs_r, n);
    const double rhs = 0.5 * trap(lag_r, n) + 0.5 * trap(origin_r, n) - 0.5 * trap(double_r, n);
    return std::abs(lhs - rhs);
}

std::function<double(double)> random_path(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(1.0, 6.0),
        phase(0.0, 2.0 * std::numbers::pi);
    std::array<double, 3> a{}, w{}, p{};
    for (int i = 0; i < 3; ++i) {
        a[i] = amp(rng);
        w[i] = freq(rng);
        p[i] = phase(rng);
    }
    const double c = amp(rng);
    return [=](double t) {
        double s = c;
        for (int i = 0; i < 3; ++i) s += a[i] * std::sin(w[i] * t + p[i]);
        return s;
    };
}

IdentityCheck kernel_identity_check(const std::function<double(double)>& k,
                                    const std::function<double(double)>& k_dot, int n_coarse,
                                    double T, std::uint64_t seed) {
    const auto path = random_path(seed);
    IdentityCheck c;
    c.n_coarse = n_coarse;
    c.residual_coarse = kernel_identity_residual(k, k_dot, path, n_coarse, T);
    c.residual_fine = kernel_identity_residual(k, k_dot, path, 2 * n_coarse, T);
    c.ratio = c.residual_fine > 0.0 ? c.residual_coarse / c.residual_fine
                                    : std::numeric_limits<double>::infinity();
    return c;
}

PositivityReport positivity_test(const RegularizedKernel& kernel, int n_max, double T,
                                 std::uint64_t seed) {
    if (n_max < 8) throw DomainError("positivity test needs n_max >= 8");
    if (!(T > 0.0)) throw DomainError("positivity test needs T > 0");
    PositivityReport report;
    report.pass = true;
    for (int n = 8; n <= n_max; n *= 2) {
        const Eigen::MatrixXd q = kernel_positivity_matrix(kernel, n, T / n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
        PositivityRow row;
        row.n = n;
        row.min_eigenvalue = eig.eigenvalues().minCoeff();
        row.norm = eig.eigenvalues().cwiseAbs().maxCoeff();
        row.pass = row.min_eigenvalue >= -1e-10 * row.norm;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    report.identity = kernel_identity_check([](double t) { return std::exp(-t); },
                                            [](double t) { return -std::exp(-t); }, 128, T,
                                            seed);
    report.pass = report.pass && report.identity.ratio >= 1.5;
    return report;
}

AssemblyOptions permuted_order(int num_elements, std::uint64_t seed) {
    AssemblyOptions opts;
    opts.element_order.resize(num_elements);
    std::iota(opts.element_order.begin(), opts.element_order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(opts.element_order.begin(), opts.element_order.end(), rng);
    return opts;
}

UniquenessReport uniqueness_check(const Problem& problem, const SolverConfig& config,
                                  const UniquenessVariant& a, const UniquenessVariant& b) {
    if (!problem.schedule.is_fixed(problem.T))
        throw PreconditionError("uniqueness check needs a crack that does not grow on (0, T]");
    auto run_variant = [&](const UniquenessVariant& v) {
        SolverConfig c = config;
        c.assembly = v.assembly;
        c.linear_tol = v.linear_tol;
        return solve(problem, c);
    };
    const DiscreteTrajectory ta = run_variant(a);
    const DiscreteTrajectory tb = run_variant(b);
    const Operators ops =
        assemble_operators(*problem.mesh, problem.material, problem.material.viscous);

    UniquenessReport r;
    for (int j = 0; j <= config.n; ++j) {
        r.max_diff = std::max(r.max_diff, h_norm(ops, ta.at(j) - tb.at(j)));
        r.scale = std::max(r.scale, h_norm(ops, ta.at(j)));
    }
    r.relative = r.scale > 0.0 ? r.max_diff / r.scale : r.max_diff;
    return r;
}

OracleCase parse_oracle_case(const std::string& name) {
    if (name == "wave") return OracleCase::Wave;
    if (name == "static") return OracleCase::Static;
    if (name == "translation") return OracleCase::Translation;
    throw ValidationError("unknown oracle case '" + name + "'");
}

const char* oracle_case_name(OracleCase c) {
    switch (c) {
    case OracleCase::Wave: return "wave";
    case OracleCase::Static: return "static";
    case OracleCase::Translation: return "translation";
    }
    return "?";
}

namespace {

constexpr double pi = std::numbers::pi;

Eigen::VectorXd vec1(double a) { return Eigen::VectorXd::Constant(1, a); }

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

SeparableTerm term(Eigen::VectorXd amp, TimeFactor time, SpaceFactor space = {}) {
    return {std::move(amp), time, space};
}

TimeFactor constant_time() { return {}; }
TimeFactor linear_time() { return {TimeFactor::Kind::Power, 1.0, 0.0}; }

// Exact displacement of each oracle case on the mesh nodes.
Eigen::VectorXd oracle_exact(OracleCase c, const CrackedMesh& mesh, double t) {
    Eigen::VectorXd u(mesh.ndof());
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const double x = mesh.nodes[i].x();
        switch (c) {
        case OracleCase::Wave: u[i] = std::sin(pi * x) * std::cos(pi * t); break;
        case OracleCase::Static: u[i] = 0.5 * x * (1.0 - x) + 0.1; break;
        case OracleCase::Translation:
            u[2 * i] = 0.2 + 0.3 * t;
            u[2 * i + 1] = 0.1 - 0.1 * t;
            break;
        }
    }
    return u;
}

} // namespace

Problem oracle_problem(OracleCase c) {
    switch (c) {
    case OracleCase::Wave: {
        GeometrySpec g;
        g.kind = GeometrySpec::Kind::Interval;
        g.elements = 256;
        g.dirichlet = {"left", "right"};
        auto mesh = std::make_shared<const CrackedMesh>(build_mesh(g));
        ProblemData d = ProblemData::zero(1);
        SpaceFactor s;
        s.kind = SpaceFactor::Kind::Trig;
        s.k = Eigen::Vector2d(pi, 0.0);
        s.phase = Eigen::Vector2d(0.0, pi / 2);
        d.u0 = SpaceTimeField::from_terms(1, {term(vec1(1.0), constant_time(), s)});
        d.z = SpaceTimeField::zero(1);
        Material m = Material::create(scalar_tensor(1, 1.0), scalar_tensor(1, 0.0));
        const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, scalar_tensor(1, 0.0)), 1e-2);
        return make_problem(mesh, {}, m, k, d, 1.0);
    }
    case OracleCase::Static: {
        GeometrySpec g;
        g.kind = GeometrySpec::Kind::Interval;
        g.elements = 32;
        g.dirichlet = {"left", "right"};
        auto mesh = std::make_shared<const CrackedMesh>(build_mesh(g));
        ProblemData d = ProblemData::zero(1);
        SpaceFactor x1, x2;
        x1.kind = x2.kind = SpaceFactor::Kind::Monomial;
        x1.k = Eigen::Vector2d(1.0, 0.0);
        x2.k = Eigen::Vector2d(2.0, 0.0);
        d.u0 = SpaceTimeField::from_terms(1, {term(vec1(0.1), constant_time()),
                                              term(vec1(0.5), constant_time(), x1),
                                              term(vec1(-0.5), constant_time(), x2)});
        d.z = SpaceTimeField::from_terms(1, {term(vec1(0.1), constant_time())});
        d.f = SpaceTimeField::from_terms(1, {term(vec1(1.0), constant_time())});
        Material m = Material::create(scalar_tensor(1, 1.0), scalar_tensor(1, 0.5));
        const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, scalar_tensor(1, 0.5)), 1e-2);
        return make_problem(mesh, {}, m, k, d, 1.0);
    }
    case OracleCase::Translation: {
        GeometrySpec g;
        g.kind = GeometrySpec::Kind::Rectangle;
        g.nx = g.ny = 8;
        g.dirichlet = {"left"};
        g.cracks.push_back({0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)}});
        auto mesh = std::make_shared<const CrackedMesh>(build_mesh(g));
        CrackSchedule sched;
        sched.release_time[0] = 0.0;
        ProblemData d = ProblemData::zero(2);
        d.u0 = SpaceTimeField::from_terms(2, {term(vec2(0.2, 0.1), constant_time())});
        d.u1 = SpaceTimeField::from_terms(2, {term(vec2(0.3, -0.1), constant_time())});
        d.z = SpaceTimeField::from_terms(2, {term(vec2(0.2, 0.1), constant_time()),
                                             term(vec2(0.3, -0.1), linear_time())});
        Material m = Material::create(isotropic_tensor(1.0, 1.0), isotropic_tensor(0.2, 0.3));
        const auto k =
            RegularizedKernel::shifted(FractionalKernel(0.5, isotropic_tensor(0.2, 0.3)), 1e-2);
        return make_problem(mesh, sched, m, k, d, 1.0);
    }
    }
    throw ValidationError("unknown oracle case");
}

ConvergenceReport manufactured_convergence(OracleCase c, const std::vector<int>& ns) {
    if (ns.empty()) throw DomainError("convergence study needs at least one n");
    const Problem problem = oracle_problem(c);
    const CrackedMesh& mesh = *problem.mesh;
    const Operators ops =
        assemble_operators(mesh, problem.material, problem.material.viscous);

    ConvergenceReport report;
    report.oracle = c;
    report.ns = ns;
    for (int n : ns) {
        SolverConfig config;
        config.n = n;
        const DiscreteTrajectory traj = solve(problem, config);
        double err = 0.0;
        if (c == OracleCase::Wave) {
            err = h_norm(ops, traj.at(n) - oracle_exact(c, mesh, problem.T));
        } else {
            for (int j = 0; j <= n; ++j)
                err = std::max(err, (traj.at(j) - oracle_exact(c, mesh, j * traj.tau))
                                        .lpNorm<Eigen::Infinity>());
        }
        report.errors.push_back(err);
    }
    for (std::size_t i = 0; i + 1 < ns.size(); ++i)
        report.rates.push_back(std::log(report.errors[i] / report.errors[i + 1]) /
                               std::log(static_cast<double>(ns[i + 1]) / ns[i]));
    return report;
}

BoundStudy uniform_bound_study(const Problem& problem, const std::vector<int>& ns,
                               const SolverConfig& base) {
    if (ns.empty()) throw DomainError("bound study needs at least one n");
    const Operators ops = assemble_operators(*problem.mesh, problem.material,
                                             problem.material.viscous, base.assembly);
    BoundStudy study;
    study.ns = ns;
    for (int n : ns) {
        SolverConfig config = base;
        config.n = n;
        const DiscreteTrajectory traj = solve(problem, config);
        double v = 0.0;
        for (int j = 1; j <= n; ++j)
            v = std::max(v, h_norm(ops, traj.du[j]) + strain_norm(ops, traj.at(j)));
        study.values.push_back(v);
    }
    const auto [lo, hi] = std::minmax_element(study.values.begin(), study.values.end());
    study.variation = *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
    return study;
}

} // namespace fkv
