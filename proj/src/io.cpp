#include "needlet/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace needlet {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw PreconditionError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw PreconditionError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
void read_into(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw PreconditionError(where + "." + key + " has the wrong type");
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

ExperimentConfig config_from_json(const Json& j) {
    reject_unknown(j,
                   {"d", "r", "design", "sigma", "method", "q", "lambda_rule", "c0", "m_grid", "trials", "seed",
                    "target", "window", "truncate", "lq"},
                   "config");
    ExperimentConfig cfg;
    read_into(j, "d", cfg.d, "config");
    read_into(j, "r", cfg.r, "config");
    read_into(j, "sigma", cfg.sigma, "config");
    read_into(j, "q", cfg.q, "config");
    read_into(j, "c0", cfg.c0, "config");
    read_into(j, "m_grid", cfg.m_grid, "config");
    read_into(j, "trials", cfg.trials, "config");
    read_into(j, "seed", cfg.seed, "config");
    read_into(j, "truncate", cfg.truncate, "config");
    if (j.contains("method")) cfg.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("window")) cfg.window = parse_window_profile(j.at("window").get<std::string>());
    if (j.contains("design")) {
        const auto& d = j.at("design");
        reject_unknown(d, {"kind", "kappa"}, "design");
        if (d.contains("kind")) cfg.design.kind = parse_design_kind(d.at("kind").get<std::string>());
        read_into(d, "kappa", cfg.design.kappa, "design");
    }
    if (j.contains("lambda_rule")) {
        const auto& l = j.at("lambda_rule");
        reject_unknown(l, {"kind", "c"}, "lambda_rule");
        const std::string kind = l.value("kind", std::string("scaled"));
        if (kind == "zero") {
            cfg.lambda_rule = LambdaRule::zero();
        } else if (kind == "scaled") {
            cfg.lambda_rule = LambdaRule::scaled(l.value("c", 1.0));
        } else {
            throw PreconditionError("lambda_rule.kind must be 'zero' or 'scaled'");
        }
    }
    if (j.contains("target")) {
        const auto& t = j.at("target");
        reject_unknown(t, {"shape", "band"}, "target");
        if (t.contains("shape")) cfg.target_shape = parse_target_shape(t.at("shape").get<std::string>());
        read_into(t, "band", cfg.target_band, "target");
    }
    if (j.contains("lq")) {
        const auto& l = j.at("lq");
        reject_unknown(l, {"max_iterations", "tolerance", "weight_floor", "reduce_support"}, "lq");
        read_into(l, "max_iterations", cfg.lq.max_iterations, "lq");
        read_into(l, "tolerance", cfg.lq.tolerance, "lq");
        read_into(l, "weight_floor", cfg.lq.weight_floor, "lq");
        read_into(l, "reduce_support", cfg.lq.reduce_support, "lq");
    }
    cfg.validate();
    return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
    Json j;
    j["d"] = cfg.d;
    j["r"] = cfg.r;
    j["design"] = {{"kind", std::string(to_string(cfg.design.kind))}, {"kappa", cfg.design.kappa}};
    j["sigma"] = cfg.sigma;
    j["method"] = std::string(to_string(cfg.method));
    j["q"] = cfg.q;
    j["lambda_rule"] = {{"kind", cfg.lambda_rule.kind == LambdaRule::Kind::zero ? "zero" : "scaled"},
                        {"c", cfg.lambda_rule.c}};
    j["c0"] = cfg.c0;
    j["m_grid"] = cfg.m_grid;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["target"] = {{"shape", std::string(to_string(cfg.target_shape))}, {"band", cfg.target_band}};
    j["window"] = std::string(to_string(cfg.window));
    j["truncate"] = cfg.truncate;
    j["lq"] = {{"max_iterations", cfg.lq.max_iterations},
               {"tolerance", cfg.lq.tolerance},
               {"weight_floor", cfg.lq.weight_floor},
               {"reduce_support", cfg.lq.reduce_support}};
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw PreconditionError("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

Json to_json(const CurveCell& c) {
    return {{"m", c.m},         {"n", c.n},
            {"n_clamped", c.n_clamped}, {"epsilon", c.epsilon},
            {"median", c.median}, {"q1", c.q1},
            {"q3", c.q3},       {"median_nonzero", c.median_nonzero},
            {"succeeded", c.succeeded}, {"attempted", c.attempted},
            {"valid", c.valid}};
}

Json to_json(const RateFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"half_width", f.half_width}, {"cells", f.cells}};
}

Json to_json(const ExperimentRecord& r) {
    return {{"m", r.m},
            {"trial", r.trial},
            {"seed", r.seed},
            {"n", r.n},
            {"lambda", r.lambda},
            {"q", r.q},
            {"error", r.error},
            {"error_untruncated", r.error_untruncated},
            {"nonzero", r.nonzero},
            {"iterations", r.iterations},
            {"ok", r.ok},
            {"message", r.message}};
}

void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records, bool timing) {
    os << "m,seed,n,lambda,q,error,wall_ms\n";
    for (const auto& r : records) {
        os << r.m << ',' << r.seed << ',' << r.n << ',' << format_double(r.lambda) << ',' << format_double(r.q) << ','
           << format_double(r.error) << ',' << format_double(timing ? r.wall_ms : 0.0) << '\n';
    }
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
    os << "# M=" << format_double(data.bound) << '\n';
    os << "x1,x2,x3,y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& p = data.x[i];
        os << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[2]) << ','
           << format_double(data.y[i]) << '\n';
    }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open dataset " + path.string());
    Dataset data;
    std::optional<double> bound;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("M=");
            if (pos != std::string::npos) bound = std::stod(line.substr(pos + 2));
            continue;
        }
        if (!header) {
            if (line != "x1,x2,x3,y") throw PreconditionError("dataset header must be x1,x2,x3,y");
            header = true;
            continue;
        }
        std::array<double, 4> v{};
        std::istringstream ls(line);
        std::string cell;
        int col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= 4) throw PreconditionError("too many columns on line " + std::to_string(lineno));
            try {
                v[static_cast<std::size_t>(col)] = std::stod(cell);
            } catch (const std::exception&) {
                throw PreconditionError("bad number on line " + std::to_string(lineno));
            }
            ++col;
        }
        if (col != 4) throw PreconditionError("expected 4 columns on line " + std::to_string(lineno));
        const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (std::abs(norm - 1.0) > 1e-9) throw PreconditionError("point off the sphere on line " + std::to_string(lineno));
        // Keep the stored coordinates bit-for-bit when they are already unit.
        const std::span<const double> xyz(v.data(), 3);
        data.x.push_back(std::abs(norm - 1.0) <= SpherePoint::kUnitTolerance ? SpherePoint::from_unit(xyz)
                                                                               : SpherePoint(xyz));
        data.y.push_back(v[3]);
    }
    if (data.x.empty()) throw PreconditionError("dataset has no rows");
    double ymax = 0.0;
    for (double y : data.y) ymax = std::max(ymax, std::abs(y));
    data.bound = bound.value_or(ymax > 0.0 ? ymax : 1.0);
    data.validate();
    return data;
}

Json to_json(const KernelExpansion& f) {
    Json centers = Json::array();
    for (const auto& c : f.centers()) centers.push_back({c[0], c[1], c[2]});
    Json j;
    j["n"] = f.kernel().n();
    j["d"] = f.kernel().d();
    j["window"] = f.kernel().window().name();
    j["centers"] = std::move(centers);
    j["coeffs"] = f.coeffs();
    j["M"] = f.truncation() ? Json(*f.truncation()) : Json(nullptr);
    j["solver"] = {{"solver", f.report().solver},
                   {"backend", f.report().backend},
                   {"iterations", f.report().iterations},
                   {"converged", f.report().converged},
                   {"warning", f.report().warning},
                   {"objective", f.report().objective},
                   {"support_removed", f.report().support_removed}};
    return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace needlet
