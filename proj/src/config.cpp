#include "cdal/config.hpp"

#include "cdal/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace cdal {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) fail(where, "unknown key '" + key + "'");
    }
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

bool boolean(const json& j, const std::string& where) {
    if (!j.is_boolean()) fail(where, "expected true or false");
    return j.get<bool>();
}

// null entries map to `null_value` (used for infinite bounds)
Vector vector(const json& j, const std::string& where, double null_value = kInf, bool allow_null = false) {
    if (!j.is_array()) fail(where, "expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        if (j[i].is_null() && allow_null) {
            v[static_cast<Eigen::Index>(i)] = null_value;
        } else {
            v[static_cast<Eigen::Index>(i)] = number(j[i], at);
        }
    }
    return v;
}

Matrix matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string row = where + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != cols) fail(row, "rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c) {
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                number(j[r][c], row + "[" + std::to_string(c) + "]");
        }
    }
    return M;
}

// a flat array is read as a diagonal
Matrix weight(const json& j, const std::string& where) {
    if (j.is_array() && !j.empty() && !j[0].is_array()) return vector(j, where).asDiagonal();
    return matrix(j, where);
}

void read_solver(const json& j, SolverSettings& s) {
    only_keys(j, "solver", {"rho", "max_outer", "max_inner", "eps_out", "eps_in", "use_acceleration",
                            "use_reverse", "use_precond"});
    if (j.contains("rho")) s.rho = number(j["rho"], "solver.rho");
    if (j.contains("max_outer")) s.max_outer = integer(j["max_outer"], "solver.max_outer");
    if (j.contains("max_inner")) s.max_inner = integer(j["max_inner"], "solver.max_inner");
    if (j.contains("eps_out")) s.eps_out = number(j["eps_out"], "solver.eps_out");
    if (j.contains("eps_in")) s.eps_in = number(j["eps_in"], "solver.eps_in");
    if (j.contains("use_acceleration")) s.use_acceleration = boolean(j["use_acceleration"], "solver.use_acceleration");
    if (j.contains("use_reverse")) s.use_reverse = boolean(j["use_reverse"], "solver.use_reverse");
    if (j.contains("use_precond")) s.use_precond = boolean(j["use_precond"], "solver.use_precond");
    s.validate();
}

void read_bound_pair(const json& b, const char* lo_key, const char* hi_key, Vector& lo, Vector& hi) {
    const std::string where = std::string("bounds.");
    if (b.contains(lo_key)) {
        Vector v = vector(b[lo_key], where + lo_key, -kInf, true);
        if (v.size() != lo.size()) fail(where + lo_key, "expected " + std::to_string(lo.size()) + " entries");
        lo = v;
    }
    if (b.contains(hi_key)) {
        Vector v = vector(b[hi_key], where + hi_key, kInf, true);
        if (v.size() != hi.size()) fail(where + hi_key, "expected " + std::to_string(hi.size()) + " entries");
        hi = v;
    }
}

SimConfig read_lti(const json& root) {
    SimConfig cfg;
    cfg.kind = SimConfig::Kind::lti;
    const json& mj = root.at("model");
    only_keys(mj, "model", {"type", "Ts", "A", "B", "C", "e"});
    const std::string type = mj["type"].get<std::string>();

    Matrix A = matrix(mj.value("A", json()), "model.A");
    Matrix B = matrix(mj.value("B", json()), "model.B");
    Matrix C = matrix(mj.value("C", json()), "model.C");
    if (A.rows() != A.cols()) fail("model.A", "must be square");
    if (B.rows() != A.rows()) fail("model.B", "row count must match model.A");
    if (C.cols() != A.rows()) fail("model.C", "column count must match model.A");
    Vector e = Vector::Zero(A.rows());
    if (mj.contains("e")) {
        e = vector(mj["e"], "model.e");
        if (e.size() != A.rows()) fail("model.e", "length must match model.A");
    }

    double Ts = 1.0;
    if (type == "continuous") {
        if (!mj.contains("Ts")) fail("model.Ts", "required for a continuous model");
        Ts = number(mj["Ts"], "model.Ts");
        const DiscreteModel d = zoh_discretize(A, B, Ts);
        // constant offset held over the sample: same integral as B
        const DiscreteModel de = zoh_discretize(A, e, Ts);
        A = d.A;
        B = d.B;
        e = de.B.col(0);
    } else if (type == "discrete") {
        if (mj.contains("Ts")) Ts = number(mj["Ts"], "model.Ts");
    } else {
        fail("model.type", "expected 'continuous', 'discrete' or 'cstr'");
    }

    if (!root.contains("horizon")) fail("horizon", "required");
    const int horizon = integer(root["horizon"], "horizon");
    MpcProblem p = MpcProblem::unconstrained(static_cast<int>(A.rows()), static_cast<int>(B.cols()),
                                             static_cast<int>(C.rows()), horizon);
    p.A = A;
    p.B = B;
    p.C = C;
    p.e = e;

    if (root.contains("weights")) {
        const json& w = root["weights"];
        only_keys(w, "weights", {"W_y", "W_u", "W_du"});
        if (w.contains("W_y")) p.W_y = weight(w["W_y"], "weights.W_y");
        if (w.contains("W_u")) p.W_u = weight(w["W_u"], "weights.W_u");
        if (w.contains("W_du")) p.W_du = weight(w["W_du"], "weights.W_du");
    }

    if (root.contains("bounds")) {
        const json& b = root["bounds"];
        only_keys(b, "bounds", {"x_min", "x_max", "u_min", "u_max", "du_min", "du_max", "y_min", "y_max"});
        read_bound_pair(b, "x_min", "x_max", p.x_min, p.x_max);
        read_bound_pair(b, "u_min", "u_max", p.u_min, p.u_max);
        read_bound_pair(b, "du_min", "du_max", p.du_min, p.du_max);
        if (b.contains("y_min") || b.contains("y_max")) {
            Vector y_min = Vector::Constant(p.ny(), -kInf);
            Vector y_max = Vector::Constant(p.ny(), kInf);
            read_bound_pair(b, "y_min", "y_max", y_min, y_max);
            apply_output_bounds(p, y_min, y_max);
        }
    }

    Scenario sc;
    sc.sample_time = Ts;
    sc.x0 = Vector::Zero(p.nx());
    sc.u_prev = Vector::Zero(p.nu());
    sc.references.push_back({0, Vector::Zero(p.ny())});
    if (root.contains("scenario")) {
        const json& s = root["scenario"];
        only_keys(s, "scenario", {"steps", "x0", "u_prev", "u_ref", "references"});
        if (s.contains("steps")) sc.steps = integer(s["steps"], "scenario.steps");
        if (s.contains("x0")) sc.x0 = vector(s["x0"], "scenario.x0");
        if (s.contains("u_prev")) sc.u_prev = vector(s["u_prev"], "scenario.u_prev");
        if (s.contains("u_ref")) sc.u_ref = vector(s["u_ref"], "scenario.u_ref");
        if (s.contains("references")) {
            const json& refs = s["references"];
            if (!refs.is_array() || refs.empty()) fail("scenario.references", "expected a non-empty array");
            sc.references.clear();
            for (std::size_t i = 0; i < refs.size(); ++i) {
                const std::string at = "scenario.references[" + std::to_string(i) + "]";
                only_keys(refs[i], at, {"step", "r"});
                ReferenceChange change;
                change.step = integer(refs[i].value("step", json(0)), at + ".step");
                change.r = vector(refs[i].value("r", json()), at + ".r");
                if (change.r.size() != p.ny()) fail(at + ".r", "length must match the output count");
                sc.references.push_back(std::move(change));
            }
            if (sc.reference_at(0).size() == 0) fail("scenario.references", "no reference in force at step 0");
        }
    }
    if (sc.steps < 0) fail("scenario.steps", "must be non-negative");
    if (sc.x0.size() != p.nx()) fail("scenario.x0", "length must match model.A");
    if (sc.u_prev.size() != p.nu()) fail("scenario.u_prev", "length must match the input count");

    p.x0 = sc.x0;
    p.u_prev = sc.u_prev;
    p.r = sc.reference_at(0);
    p.u_ref = sc.u_ref;
    augment(p);  // full validation of shapes, weights and bounds

    cfg.problem = std::move(p);
    cfg.scenario = std::move(sc);
    return cfg;
}

SimConfig read_cstr(const json& root) {
    SimConfig cfg;
    cfg.kind = SimConfig::Kind::cstr;
    CstrModel& m = cfg.cstr;
    const json& mj = root.at("model");
    only_keys(mj, "model", {"type", "Ts", "k0", "EaR", "CAi", "Ti_mean", "Ti_amplitude", "Ti_frequency",
                            "CA0", "T0", "rk4_substeps"});
    if (mj.contains("Ts")) m.Ts = number(mj["Ts"], "model.Ts");
    if (mj.contains("k0")) m.k0 = number(mj["k0"], "model.k0");
    if (mj.contains("EaR")) m.EaR = number(mj["EaR"], "model.EaR");
    if (mj.contains("CAi")) m.CAi = number(mj["CAi"], "model.CAi");
    if (mj.contains("Ti_mean")) m.Ti_mean = number(mj["Ti_mean"], "model.Ti_mean");
    if (mj.contains("Ti_amplitude")) m.Ti_amplitude = number(mj["Ti_amplitude"], "model.Ti_amplitude");
    if (mj.contains("Ti_frequency")) m.Ti_frequency = number(mj["Ti_frequency"], "model.Ti_frequency");
    if (mj.contains("CA0")) m.CA0 = number(mj["CA0"], "model.CA0");
    if (mj.contains("T0")) m.T0 = number(mj["T0"], "model.T0");
    if (mj.contains("rk4_substeps")) m.rk4_substeps = integer(mj["rk4_substeps"], "model.rk4_substeps");
    if (!(m.Ts > 0.0)) fail("model.Ts", "must be positive");
    if (m.rk4_substeps < 1) fail("model.rk4_substeps", "must be at least 1");
    if (!(m.T0 > 0.0)) fail("model.T0", "must be positive");

    if (root.contains("horizon")) m.horizon = integer(root["horizon"], "horizon");
    if (m.horizon < 1) fail("horizon", "must be at least 1");

    auto scalar_weight = [](const json& j, const std::string& where) {
        const Matrix W = weight(j, where);
        if (W.rows() != 1 || W.cols() != 1) fail(where, "expected a 1x1 weight");
        return W(0, 0);
    };
    if (root.contains("weights")) {
        const json& w = root["weights"];
        only_keys(w, "weights", {"W_y", "W_u", "W_du"});
        if (w.contains("W_y")) m.W_y = scalar_weight(w["W_y"], "weights.W_y");
        if (w.contains("W_u")) m.W_u = scalar_weight(w["W_u"], "weights.W_u");
        if (w.contains("W_du")) m.W_du = scalar_weight(w["W_du"], "weights.W_du");
    }
    if (m.W_y < 0.0) fail("weights.W_y", "must be non-negative");
    if (m.W_u < 0.0) fail("weights.W_u", "must be non-negative");
    if (!(m.W_du > 0.0)) fail("weights.W_du", "must be positive");

    if (root.contains("bounds")) {
        const json& b = root["bounds"];
        only_keys(b, "bounds", {"du_min", "du_max"});
        Vector lo = Vector::Constant(1, -m.du_limit);
        Vector hi = Vector::Constant(1, m.du_limit);
        read_bound_pair(b, "du_min", "du_max", lo, hi);
        if (lo[0] != -hi[0]) fail("bounds.du_min", "the reactor increment box must be symmetric");
        if (!(hi[0] > 0.0)) fail("bounds.du_max", "must be positive");
        m.du_limit = hi[0];
    }

    if (root.contains("scenario")) {
        const json& s = root["scenario"];
        only_keys(s, "scenario", {"steps", "reference"});
        if (s.contains("steps")) cfg.cstr_scenario.steps = integer(s["steps"], "scenario.steps");
        if (s.contains("reference")) cfg.cstr_scenario.reference = number(s["reference"], "scenario.reference");
    }
    if (cfg.cstr_scenario.steps < 0) fail("scenario.steps", "must be non-negative");
    return cfg;
}

}  // namespace

SimConfig parse_config(std::string_view text, const std::string& source) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& err) {
        throw ConfigError(source + ": malformed JSON: " + err.what());
    }
    try {
        only_keys(root, "config", {"model", "weights", "bounds", "horizon", "solver", "scenario"});
        if (!root.contains("model")) fail("model", "required");
        only_keys(root["model"], "model", {"type", "Ts", "A", "B", "C", "e", "k0", "EaR", "CAi", "Ti_mean",
                                           "Ti_amplitude", "Ti_frequency", "CA0", "T0", "rk4_substeps"});
        if (!root["model"].contains("type") || !root["model"]["type"].is_string()) {
            fail("model.type", "required string");
        }
        SimConfig cfg = root["model"]["type"] == "cstr" ? read_cstr(root) : read_lti(root);
        if (root.contains("solver")) read_solver(root["solver"], cfg.solver);
        return cfg;
    } catch (const ConfigError& err) {
        throw ConfigError(source + ": " + err.what());
    } catch (const json::exception& err) {
        throw ConfigError(source + ": " + err.what());
    }
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

}  // namespace cdal
