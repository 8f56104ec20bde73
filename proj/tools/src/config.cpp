#include "fkv/app/config.hpp"

#include "fkv/errors.hpp"
#include "fkv/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace fkv::app {

using nlohmann::json;

Mode parse_mode(const std::string& name) {
    if (name == "run") return Mode::Run;
    if (name == "sweep") return Mode::Sweep;
    if (name == "convergence") return Mode::Convergence;
    if (name == "uniqueness") return Mode::Uniqueness;
    if (name == "positivity") return Mode::Positivity;
    throw ValidationError("unknown mode '" + name + "'");
}

const char* mode_name(Mode m) {
    switch (m) {
    case Mode::Run: return "run";
    case Mode::Sweep: return "sweep";
    case Mode::Convergence: return "convergence";
    case Mode::Uniqueness: return "uniqueness";
    case Mode::Positivity: return "positivity";
    }
    return "?";
}

Problem RunConfig::problem() const {
    RegularizedKernel k = [&] {
        if (kernel.type == "fractional")
            return RegularizedKernel::shifted(FractionalKernel(kernel.alpha, material.viscous, T),
                                              kernel.epsilon);
        if (kernel.type == "exponential")
            return RegularizedKernel::smooth(
                SmoothProfile::exponential(kernel.amplitude, kernel.time_constant),
                material.viscous, kernel.epsilon);
        return RegularizedKernel::smooth(SmoothProfile::constant(kernel.value), material.viscous,
                                         kernel.epsilon);
    }();
    return make_problem(mesh, schedule, material, k, data, T);
}

namespace {

// Walks one object of the tree, recording every problem under its path.
class Block {
public:
    Block(const json* node, std::string path, std::vector<std::string>& errors,
          std::vector<std::string>& warnings, bool strict)
        : node_(node), path_(std::move(path)), errors_(errors), warnings_(warnings),
          strict_(strict) {
        if (node_ && !node_->is_object()) {
            error("must be an object");
            node_ = nullptr;
        }
    }

    bool present() const { return node_ != nullptr; }
    const std::string& path() const { return path_; }

    void error(const std::string& msg) const { errors_.push_back(path_ + ": " + msg); }
    void error(const std::string& key, const std::string& msg) const {
        errors_.push_back(path_ + "." + key + ": " + msg);
    }
    void warn(const std::string& msg) const { warnings_.push_back(path_ + ": " + msg); }

    void allow(std::initializer_list<const char*> keys) const {
        if (!node_) return;
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : node_->items())
            if (!ok.count(k)) {
                if (strict_) error(k, "unknown key");
                else warn("ignoring unknown key '" + k + "'");
            }
    }

    const json* get(const std::string& key) const {
        if (!node_ || !node_->contains(key)) return nullptr;
        const json& v = (*node_)[key];
        return v.is_null() ? nullptr : &v;
    }

    Block sub(const json* node, std::string path) const {
        return Block(node, std::move(path), errors_, warnings_, strict_);
    }

    Block child(const std::string& key, bool required) const {
        const json* v = get(key);
        if (!v && required && node_) error(key, "required block is missing");
        return Block(v, path_ + "." + key, errors_, warnings_, strict_);
    }

    double number(const std::string& key, double fallback,
                  const std::function<bool(double)>& valid = {}, const char* constraint = "",
                  bool required = false) const {
        const json* v = get(key);
        if (!v) {
            if (required && node_) error(key, "required value is missing");
            return fallback;
        }
        if (!v->is_number()) {
            error(key, "must be a number");
            return fallback;
        }
        const double x = v->get<double>();
        if (valid && !valid(x)) {
            std::ostringstream msg;
            msg << "value " << x << " violates " << constraint;
            error(key, msg.str());
            return fallback;
        }
        return x;
    }

    long long integer(const std::string& key, long long fallback,
                      const std::function<bool(long long)>& valid = {},
                      const char* constraint = "", bool required = false) const {
        const json* v = get(key);
        if (!v) {
            if (required && node_) error(key, "required value is missing");
            return fallback;
        }
        if (!v->is_number_integer()) {
            error(key, "must be an integer");
            return fallback;
        }
        const long long x = v->get<long long>();
        if (valid && !valid(x)) {
            error(key, "value " + std::to_string(x) + " violates " + constraint);
            return fallback;
        }
        return x;
    }

    bool boolean(const std::string& key, bool fallback) const {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            error(key, "must be true or false");
            return fallback;
        }
        return v->get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> choices = {}) const {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) {
            error(key, "must be a string");
            return fallback;
        }
        std::string s = v->get<std::string>();
        if (choices.size() != 0) {
            bool found = false;
            std::string list;
            for (const char* c : choices) {
                found = found || s == c;
                list += list.empty() ? c : std::string(", ") + c;
            }
            if (!found) {
                error(key, "'" + s + "' is not one of {" + list + "}");
                return fallback;
            }
        }
        return s;
    }

    std::vector<double> numbers(const json& v, const std::string& where) const {
        std::vector<double> out;
        if (!v.is_array()) {
            errors_.push_back(where + ": must be an array of numbers");
            return out;
        }
        for (const auto& x : v) {
            if (!x.is_number()) {
                errors_.push_back(where + ": must be an array of numbers");
                return {};
            }
            out.push_back(x.get<double>());
        }
        return out;
    }

private:
    const json* node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::vector<std::string>& warnings_;
    bool strict_;
};

auto positive = [](double x) { return x > 0.0; };
auto nonnegative = [](double x) { return x >= 0.0; };

GeometrySpec read_geometry(const Block& g, const std::filesystem::path& base_dir,
                           std::shared_ptr<const CrackedMesh>& mesh, CrackSchedule& schedule,
                           double T) {
    g.allow({"kind", "length", "elements", "width", "height", "nx", "ny", "dirichlet",
             "mesh_file", "cracks"});
    GeometrySpec spec;
    const std::string kind = g.text("kind", "interval", {"interval", "rectangle", "file"});
    spec.kind = kind == "rectangle" ? GeometrySpec::Kind::Rectangle : GeometrySpec::Kind::Interval;
    spec.length = g.number("length", 1.0, positive, "> 0");
    spec.elements = static_cast<int>(
        g.integer("elements", 8, [](long long x) { return x >= 1 && x <= 1000000; }, "1..1e6"));
    spec.width = g.number("width", 1.0, positive, "> 0");
    spec.height = g.number("height", 1.0, positive, "> 0");
    spec.nx = static_cast<int>(
        g.integer("nx", 8, [](long long x) { return x >= 1 && x <= 4096; }, "1..4096"));
    spec.ny = static_cast<int>(
        g.integer("ny", 8, [](long long x) { return x >= 1 && x <= 4096; }, "1..4096"));

    if (const json* d = g.get("dirichlet")) {
        if (!d->is_array()) {
            g.error("dirichlet", "must be an array of side names");
        } else {
            for (const auto& s : *d) {
                const std::string side = s.is_string() ? s.get<std::string>() : "";
                const bool ok1 = side == "left" || side == "right";
                const bool ok2 = ok1 || side == "bottom" || side == "top";
                if ((kind == "interval" && !ok1) || !ok2)
                    g.error("dirichlet", "unknown side '" + (s.is_string() ? side : s.dump()) +
                                             "' for a " + kind);
                else
                    spec.dirichlet.push_back(side);
            }
        }
    }

    if (const json* cs = g.get("cracks")) {
        if (!cs->is_array()) {
            g.error("cracks", "must be an array");
        } else {
            for (std::size_t i = 0; i < cs->size(); ++i) {
                const Block c = g.sub(&(*cs)[i], g.path() + ".cracks[" + std::to_string(i) + "]");
                c.allow({"segment", "points", "release"});
                const int seg = static_cast<int>(c.integer(
                    "segment", static_cast<long long>(i), [](long long x) { return x >= 0; },
                    ">= 0"));
                double release = 0.0;
                if (const json* r = c.get("release")) {
                    if (r->is_string() && r->get<std::string>() == "never")
                        release = CrackSchedule::never;
                    else
                        release = c.number("release", 0.0, nonnegative, ">= 0 or \"never\"");
                }
                if (schedule.release_time.count(seg))
                    c.error("segment", "segment " + std::to_string(seg) + " is listed twice");
                schedule.release_time[seg] = release;
                if (std::isfinite(release) && release > T)
                    c.warn("segment " + std::to_string(seg) + " releases at t = " +
                           format_double(release) + " > T; it never opens within the horizon");
                if (kind == "file") {
                    if (c.get("points")) c.error("points", "cracks of a mesh file come from the file");
                    continue;
                }
                CrackPath path;
                path.segment = seg;
                if (const json* pts = c.get("points"); pts && pts->is_array()) {
                    for (const auto& p : *pts) {
                        const auto xy = c.numbers(p, c.path() + ".points");
                        if (xy.size() != 2) {
                            c.error("points", "each point needs two coordinates");
                            break;
                        }
                        path.points.emplace_back(xy[0], xy[1]);
                    }
                } else {
                    c.error("points", "required array of [x, y] points is missing");
                }
                if (path.points.size() == 1) c.error("points", "a crack path needs two points");
                spec.cracks.push_back(std::move(path));
            }
        }
    }

    if (kind == "file") {
        const json* f = g.get("mesh_file");
        if (!f || !f->is_string()) {
            g.error("mesh_file", "required path for kind 'file' is missing");
            return spec;
        }
        std::filesystem::path p = f->get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) {
            g.error("mesh_file", "cannot open '" + p.string() + "'");
            return spec;
        }
        try {
            mesh = std::make_shared<const CrackedMesh>(finalize_mesh(read_mesh(in)));
        } catch (const std::exception& e) {
            g.error("mesh_file", e.what());
        }
        return spec;
    }
    if (g.get("mesh_file")) g.error("mesh_file", "only allowed with kind 'file'");
    return spec;
}

SymTensor read_tensor(const Block& b, int dim) {
    b.allow({"lambda", "mu", "scalar", "matrix"});
    const int m = mandel_size(dim);
    if (b.get("matrix")) {
        const json& rows = *b.get("matrix");
        SymTensor t = SymTensor::Zero(m, m);
        if (!rows.is_array() || static_cast<int>(rows.size()) != m) {
            b.error("matrix", "must be a " + std::to_string(m) + "x" + std::to_string(m) + " array");
            return t;
        }
        for (int i = 0; i < m; ++i) {
            const auto r = b.numbers(rows[i], b.path() + ".matrix");
            if (static_cast<int>(r.size()) != m) {
                b.error("matrix", "row " + std::to_string(i) + " needs " + std::to_string(m) +
                                      " entries");
                return t;
            }
            for (int k = 0; k < m; ++k) t(i, k) = r[k];
        }
        if (!is_symmetric(t)) b.error("matrix", "must be symmetric");
        return t;
    }
    if (b.get("scalar")) return scalar_tensor(dim, b.number("scalar", 1.0));
    const double lambda = b.number("lambda", 0.0);
    const double mu = b.number("mu", 0.0, {}, "", true);
    // Uniaxial strain modulus on an interval.
    if (dim == 1) return scalar_tensor(1, lambda + 2.0 * mu);
    return isotropic_tensor(lambda, mu);
}

SpaceTimeField read_field(const Block& parent, const std::string& key, int components) {
    const json* v = parent.get(key);
    if (!v) return SpaceTimeField::zero(components);
    const std::string where = parent.path() + "." + key;
    if (!v->is_array()) {
        parent.error(key, "must be an array of terms");
        return SpaceTimeField::zero(components);
    }
    std::vector<SeparableTerm> terms;
    for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string tp = where + "[" + std::to_string(i) + "]";
        const Block t = parent.sub(&(*v)[i], tp);
        if (!t.present()) continue;
        t.allow({"amplitude", "time", "space"});
        SeparableTerm term;
        term.amplitude = Eigen::VectorXd::Zero(components);
        if (const json* a = t.get("amplitude")) {
            const auto amp = t.numbers(*a, tp + ".amplitude");
            if (static_cast<int>(amp.size()) != components)
                t.error("amplitude", "needs " + std::to_string(components) + " components");
            else
                for (int c = 0; c < components; ++c) term.amplitude[c] = amp[c];
        } else {
            t.error("amplitude", "required value is missing");
        }
        const Block time = t.child("time", false);
        time.allow({"kind", "a", "b"});
        const std::string tk =
            time.text("kind", "constant", {"constant", "power", "sine", "exponential"});
        term.time.kind = tk == "power"         ? TimeFactor::Kind::Power
                         : tk == "sine"        ? TimeFactor::Kind::Sine
                         : tk == "exponential" ? TimeFactor::Kind::Exponential
                                               : TimeFactor::Kind::Constant;
        term.time.a = time.number("a", 0.0);
        term.time.b = time.number("b", 0.0);
        if (term.time.kind == TimeFactor::Kind::Power && term.time.a != 0.0 && term.time.a < 2.0 &&
            term.time.a != 1.0)
            time.error("a", "power must be 0, 1 or >= 2 for two bounded derivatives");
        const Block space = t.child("space", false);
        space.allow({"kind", "k", "phase"});
        const std::string sk = space.text("kind", "constant", {"constant", "monomial", "trig"});
        term.space.kind = sk == "monomial" ? SpaceFactor::Kind::Monomial
                          : sk == "trig"   ? SpaceFactor::Kind::Trig
                                           : SpaceFactor::Kind::Constant;
        for (const char* name : {"k", "phase"}) {
            if (const json* kv = space.get(name)) {
                const auto xs = space.numbers(*kv, space.path() + "." + name);
                if (xs.empty() || xs.size() > 2) {
                    space.error(name, "needs one or two numbers");
                    continue;
                }
                Eigen::Vector2d w(xs[0], xs.size() > 1 ? xs[1] : 0.0);
                (std::string(name) == "k" ? term.space.k : term.space.phase) = w;
            }
        }
        if (term.space.kind == SpaceFactor::Kind::Monomial &&
            (term.space.k.minCoeff() < 0.0 || term.space.k != term.space.k.array().round().matrix()))
            space.error("k", "monomial exponents must be nonnegative integers");
        terms.push_back(std::move(term));
    }
    return SpaceTimeField::from_terms(components, std::move(terms));
}

} // namespace

ParseResult parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                              bool strict, const Overrides& overrides) {
    ParseResult result;
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        result.errors.push_back(std::string("config is not valid JSON: ") + e.what());
        return result;
    }
    if (!root.is_object()) {
        result.errors.push_back("config: top level must be an object");
        return result;
    }
    if (overrides.mode) root["mode"] = *overrides.mode;
    if (overrides.seed) root["seed"] = *overrides.seed;

    auto& errors = result.errors;
    auto& warnings = result.warnings;
    RunConfig cfg;
    Block top(&root, "config", errors, warnings, strict);
    top.allow({"mode", "seed", "geometry", "material", "kernel", "data", "discretization",
               "outputs", "sweep", "convergence", "uniqueness", "positivity"});

    const std::string mode =
        top.text("mode", "run", {"run", "sweep", "convergence", "uniqueness", "positivity"});
    cfg.mode = parse_mode(mode);
    if (const json* s = top.get("seed")) {
        if (s->is_number_unsigned()) cfg.seed = s->get<std::uint64_t>();
        else if (s->is_number_integer() && s->get<long long>() >= 0) cfg.seed = s->get<long long>();
        else top.error("seed", "must be a nonnegative integer");
    }

    const Block disc = top.child("discretization", true);
    disc.allow({"n", "T", "linear_tol", "deterministic"});
    cfg.solver.n = static_cast<int>(disc.integer(
        "n", 100, [](long long x) { return x >= 1 && x <= 10000000; }, "1 <= n <= 1e7", true));
    cfg.T = disc.number("T", 1.0, positive, "T > 0");
    if (disc.get("linear_tol"))
        cfg.solver.linear_tol =
            disc.number("linear_tol", 1e-12, [](double x) { return x > 0.0 && x < 1.0; },
                        "0 < linear_tol < 1");
    cfg.solver.deterministic = disc.boolean("deterministic", true);

    const Block geo = top.child("geometry", true);
    std::shared_ptr<const CrackedMesh> file_mesh;
    const GeometrySpec spec = read_geometry(geo, base_dir, file_mesh, cfg.schedule, cfg.T);
    const int dim = file_mesh ? file_mesh->dim
                              : (spec.kind == GeometrySpec::Kind::Rectangle ? 2 : 1);

    const Block mat = top.child("material", true);
    mat.allow({"elastic", "viscous", "gamma", "check_gamma"});
    SymTensor elastic = scalar_tensor(dim, 1.0);
    SymTensor viscous = scalar_tensor(dim, 0.0);
    if (mat.present()) {
        const Block e = mat.child("elastic", true);
        if (e.present()) elastic = read_tensor(e, dim);
        const Block v = mat.child("viscous", false);
        if (v.present()) viscous = read_tensor(v, dim);
    }
    std::optional<double> gamma;
    if (mat.get("gamma")) gamma = mat.number("gamma", 0.0, positive, "gamma > 0");
    const bool check_gamma = mat.boolean("check_gamma", true);

    const Block ker = top.child("kernel", true);
    ker.allow({"type", "alpha", "epsilon", "amplitude", "time_constant", "value"});
    cfg.kernel.type = ker.text("type", "fractional", {"fractional", "exponential", "constant"});
    if (cfg.kernel.type == "fractional") {
        cfg.kernel.alpha = ker.number("alpha", 0.5, [](double a) { return a > 0.0 && a < 1.0; },
                                      "the range (0, 1)", ker.present());
        cfg.kernel.epsilon = ker.number("epsilon", 1e-2, positive,
                                        "epsilon > 0 for a fractional kernel", ker.present());
    } else {
        cfg.kernel.epsilon = ker.number("epsilon", 0.0, nonnegative, "epsilon >= 0");
        cfg.kernel.amplitude = ker.number("amplitude", 1.0, nonnegative, "amplitude >= 0");
        cfg.kernel.time_constant =
            ker.number("time_constant", 1.0, positive, "time_constant > 0");
        cfg.kernel.value = ker.number("value", 1.0, nonnegative, "value >= 0");
    }

    const Block data = top.child("data", false);
    data.allow({"f", "N", "z", "u0", "u1"});
    cfg.data.f = read_field(data, "f", dim);
    cfg.data.N = read_field(data, "N", dim);
    cfg.data.z = read_field(data, "z", dim);
    cfg.data.u0 = read_field(data, "u0", dim);
    cfg.data.u1 = read_field(data, "u1", dim);

    const Block out = top.child("outputs", false);
    out.allow({"directory", "snapshot_stride", "snapshots", "ledger", "kernel_table",
               "continuous_energy", "generalized_residual", "checkpoint"});
    cfg.outputs.directory = out.text("directory", cfg.outputs.directory.string());
    cfg.outputs.snapshot_stride = static_cast<int>(
        out.integer("snapshot_stride", 10, [](long long x) { return x >= 1; }, ">= 1"));
    cfg.outputs.snapshots = out.boolean("snapshots", true);
    cfg.outputs.ledger = out.boolean("ledger", true);
    cfg.outputs.kernel_table = out.boolean("kernel_table", true);
    cfg.outputs.continuous_energy = out.boolean("continuous_energy", true);
    cfg.outputs.generalized_residual = out.boolean("generalized_residual", true);
    cfg.outputs.checkpoint = out.boolean("checkpoint", false);

    const Block sw = top.child("sweep", false);
    sw.allow({"eps0", "levels", "workers"});
    cfg.sweep.eps0 = sw.number("eps0", 0.1, positive, "eps0 > 0");
    cfg.sweep.levels = static_cast<int>(
        sw.integer("levels", 5, [](long long x) { return x >= 2 && x <= 40; }, "2..40"));
    cfg.sweep.workers = static_cast<int>(
        sw.integer("workers", 1, [](long long x) { return x >= 1 && x <= 256; }, "1..256"));
    if (overrides.workers) {
        if (*overrides.workers < 1) errors.push_back("--workers: must be >= 1");
        else cfg.sweep.workers = *overrides.workers;
    }
    if (cfg.mode == Mode::Sweep && cfg.kernel.type != "fractional")
        sw.error("the sweep shifts a fractional kernel; kernel.type must be 'fractional'");

    const Block cv = top.child("convergence", false);
    cv.allow({"case", "ns"});
    cfg.convergence.oracle =
        parse_oracle_case(cv.text("case", "wave", {"wave", "static", "translation"}));
    if (const json* ns = cv.get("ns")) {
        const auto xs = cv.numbers(*ns, cv.path() + ".ns");
        cfg.convergence.ns.clear();
        for (double x : xs) {
            if (x < 2 || x != std::floor(x)) {
                cv.error("ns", "entries must be integers >= 2");
                break;
            }
            cfg.convergence.ns.push_back(static_cast<int>(x));
        }
        if (cfg.convergence.ns.size() < 2) cv.error("ns", "needs at least two grid sizes");
    }

    const Block un = top.child("uniqueness", false);
    un.allow({"permute_seed", "linear_tol"});
    cfg.uniqueness.permute_seed = static_cast<std::uint64_t>(
        un.integer("permute_seed", 7, [](long long x) { return x >= 0; }, ">= 0"));
    cfg.uniqueness.linear_tol = un.number(
        "linear_tol", 1e-12, [](double x) { return x > 0.0 && x < 1.0; }, "0 < linear_tol < 1");

    const Block po = top.child("positivity", false);
    po.allow({"n_max"});
    cfg.positivity.n_max = static_cast<int>(
        po.integer("n_max", 256, [](long long x) { return x >= 8 && x <= 4096; }, "8..4096"));

    if (!errors.empty()) return result;

    try {
        cfg.mesh = file_mesh ? file_mesh : std::make_shared<const CrackedMesh>(build_mesh(spec));
    } catch (const std::exception& e) {
        errors.push_back(std::string("config.geometry: ") + e.what());
    }
    if (cfg.mesh) {
        for (int seg : cfg.mesh->segment_ids())
            if (!cfg.schedule.release_time.count(seg))
                errors.push_back("config.geometry.cracks: no release time for segment " +
                                 std::to_string(seg));
        if (cfg.mesh->dim != dim)
            errors.push_back("config.geometry: mesh dimension does not match the geometry kind");
    }
    try {
        cfg.material = Material::create(elastic, viscous, gamma, check_gamma);
    } catch (const std::exception& e) {
        errors.push_back(std::string("config.material: ") + e.what());
    }
    if (!errors.empty()) return result;
    try {
        (void)cfg.problem();
    } catch (const std::exception& e) {
        errors.push_back(std::string("config: ") + e.what());
        return result;
    }

    // Everything that changes the numbers goes into the hash; where the files
    // land and how many threads run does not.
    json hashed = root;
    if (hashed.contains("outputs")) hashed["outputs"].erase("directory");
    if (hashed.contains("sweep")) hashed["sweep"].erase("workers");
    if (!hashed.contains("mode")) hashed["mode"] = "run";
    cfg.canonical = hashed.dump();
    cfg.hash = hex64(fnv1a64(cfg.canonical));
    if (overrides.out_dir) cfg.outputs.directory = *overrides.out_dir;
    result.config = std::move(cfg);
    return result;
}

ParseResult parse_config(const std::filesystem::path& path, bool strict,
                         const Overrides& overrides) {
    std::ifstream in(path);
    if (!in) {
        ParseResult r;
        r.errors.push_back("cannot read config file '" + path.string() + "'");
        return r;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.parent_path(), strict, overrides);
}

} // namespace fkv::app
