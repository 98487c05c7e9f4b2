#include "pseudomode/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pseudomode {

using json = nlohmann::ordered_json;

std::string fmt17(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

int line_of(const std::string& text, size_t offset)
{
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Schema errors carry the line of the offending key, found by walking the key path through the text.
struct Ctx {
    const std::string* text;
    std::string source;
    std::vector<std::string> path;

    int line() const
    {
        size_t pos = 0;
        for (const auto& k : path) {
            if (k.empty() || k[0] == '[') continue;
            size_t p = text->find("\"" + k + "\"", pos);
            if (p == std::string::npos) break;
            pos = p;
        }
        return line_of(*text, pos);
    }

    std::string where() const
    {
        std::string s;
        for (const auto& k : path) s += (k[0] == '[' ? "" : "/") + k;
        return s.empty() ? "/" : s;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw Error(ErrorKind::ConfigError,
                    source + ":" + std::to_string(line()) + ": " + where() + ": " + msg);
    }

    Ctx at(const std::string& key) const
    {
        Ctx c = *this;
        c.path.push_back(key);
        return c;
    }
    Ctx at(size_t i) const
    {
        Ctx c = *this;
        c.path.push_back("[" + std::to_string(i) + "]");
        return c;
    }
};

json parse_text(const std::string& text, const std::string& source)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        int line = line_of(text, e.byte > 0 ? e.byte - 1 : 0);
        throw Error(ErrorKind::ConfigError, source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
    }
}

double num(const Ctx& c, const json& j)
{
    if (!j.is_number()) c.fail("expected a number");
    return j.get<double>();
}

int integer(const Ctx& c, const json& j)
{
    if (!j.is_number_integer()) c.fail("expected an integer");
    return j.get<int>();
}

Eigen::VectorXd vec(const Ctx& c, const json& j, int n)
{
    if (!j.is_array()) c.fail("expected an array of numbers");
    if (n >= 0 && static_cast<int>(j.size()) != n) c.fail("expected " + std::to_string(n) + " entries");
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = num(c.at(i), j[i]);
    return v;
}

std::vector<int> multi(const Ctx& c, const json& j, int n)
{
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        c.fail("expected a multi-index with " + std::to_string(n) + " entries");
    std::vector<int> e(n);
    for (int i = 0; i < n; ++i) {
        e[i] = integer(c.at(i), j[i]);
        if (e[i] < 0) c.at(i).fail("multi-index entries must be non-negative");
    }
    return e;
}

TCoef parse_tag(const Ctx& c, const json& j)
{
    if (!j.is_string()) c.fail("expected a t-coefficient tag such as \"poly:t^2\" or \"sin:3\"");
    std::string s = j.get<std::string>();
    if (s.rfind("poly:", 0) == 0) s = s.substr(5);
    if (s == "1") return TCoef::pow(0);
    if (s.rfind("t^", 0) == 0) {
        try {
            size_t used = 0;
            int m = std::stoi(s.substr(2), &used);
            if (used == s.size() - 2 && m >= 0) return TCoef::pow(m);
        } catch (const std::exception&) {
        }
        c.fail("bad power tag '" + s + "'");
    }
    if (s == "t") return TCoef::pow(1);
    for (auto [name, kind] : {std::pair{"sin", TCoef::Kind::Sin}, std::pair{"cos", TCoef::Kind::Cos},
                              std::pair{"exp", TCoef::Kind::Exp}}) {
        std::string n = name;
        if (s == n) return {kind, 0, 1.0};
        if (s.rfind(n + ":", 0) == 0) {
            try {
                size_t used = 0;
                double a = std::stod(s.substr(n.size() + 1), &used);
                if (used == s.size() - n.size() - 1) return {kind, 0, a};
            } catch (const std::exception&) {
            }
            c.fail("bad scale factor in tag '" + s + "'");
        }
    }
    c.fail("unknown t-coefficient tag '" + s + "'");
}

// Rows [re, im, tag, xi, eta] or [re, im, tag, x, xi, eta, y].
std::vector<PolyTerm> symbol_terms(const Ctx& c, const json& j, int nx, int ny)
{
    if (!j.is_array()) c.fail("expected an array of coefficient rows");
    std::vector<PolyTerm> out;
    for (size_t i = 0; i < j.size(); ++i) {
        Ctx ci = c.at(i);
        const json& row = j[i];
        if (!row.is_array() || (row.size() != 5 && row.size() != 7))
            ci.fail("coefficient row must be [re, im, tag, xi, eta] or [re, im, tag, x, xi, eta, y]");
        PolyTerm t;
        t.coeff = cd(num(ci.at(0), row[0]), num(ci.at(1), row[1]));
        t.tc = parse_tag(ci.at(2), row[2]);
        t.e.assign(2 * nx + 2 * ny, 0);
        std::vector<int> x(nx, 0), xi, eta, y(ny, 0);
        if (row.size() == 5) {
            xi = multi(ci.at(3), row[3], nx);
            eta = multi(ci.at(4), row[4], ny);
        } else {
            x = multi(ci.at(3), row[3], nx);
            xi = multi(ci.at(4), row[4], nx);
            eta = multi(ci.at(5), row[5], ny);
            y = multi(ci.at(6), row[6], ny);
        }
        std::copy(x.begin(), x.end(), t.e.begin());
        std::copy(xi.begin(), xi.end(), t.e.begin() + nx);
        std::copy(eta.begin(), eta.end(), t.e.begin() + 2 * nx);
        std::copy(y.begin(), y.end(), t.e.begin() + 2 * nx + ny);
        out.push_back(std::move(t));
    }
    return out;
}

// Coefficient functions of (t, x, y): [re, im] or [re, im, tag, x, y] rows.
SymbolFunction coefficient(const Ctx& c, const json& j, int nx, int ny)
{
    std::vector<PolyTerm> terms;
    auto row_term = [&](const Ctx& ci, const json& row) {
        if (!row.is_array() || (row.size() != 2 && row.size() != 5))
            ci.fail("coefficient row must be [re, im] or [re, im, tag, x, y]");
        PolyTerm t;
        t.coeff = cd(num(ci.at(0), row[0]), num(ci.at(1), row[1]));
        t.tc = TCoef::pow(0);
        t.e.assign(2 * nx + 2 * ny, 0);
        if (row.size() == 5) {
            t.tc = parse_tag(ci.at(2), row[2]);
            auto x = multi(ci.at(3), row[3], nx);
            auto y = multi(ci.at(4), row[4], ny);
            std::copy(x.begin(), x.end(), t.e.begin());
            std::copy(y.begin(), y.end(), t.e.begin() + 2 * nx + ny);
        }
        terms.push_back(std::move(t));
    };
    if (!j.is_array() || j.empty()) c.fail("expected a coefficient row or an array of rows");
    if (j[0].is_number()) {
        row_term(c, j);
    } else {
        for (size_t i = 0; i < j.size(); ++i) row_term(c.at(i), j[i]);
    }
    return SymbolFunction::polynomial(nx, ny, terms);
}

void check_keys(const Ctx& c, const json& j, std::initializer_list<const char*> allowed)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) c.at(it.key()).fail("unknown key");
    }
}

ModelProblem model_from_json(const Ctx& c, const json& j)
{
    if (!j.is_object()) c.fail("model must be a JSON object");
    check_keys(c, j, {"name", "k", "dims", "eta0", "xi0", "x0", "y0", "interval", "t_start", "f_poly", "r_poly",
                      "F0_poly", "c_coupling", "diff_op"});
    ModelProblem m;
    m.label = j.value("name", std::string("custom"));
    if (!j.contains("k")) c.fail("missing key 'k'");
    const json& k = j["k"];
    if (k.is_string() && k.get<std::string>() == "inf")
        m.k = VanishingOrder::inf();
    else if (k.is_number_integer() && k.get<int>() >= 2)
        m.k = VanishingOrder::finite(k.get<int>());
    else
        c.at("k").fail("k must be an integer >= 2 or \"inf\"");

    if (!j.contains("dims")) c.fail("missing key 'dims'");
    const json& d = j["dims"];
    Ctx cd_ = c.at("dims");
    if (!d.is_object() || !d.contains("nx") || !d.contains("ny")) cd_.fail("dims needs nx and ny");
    m.nx = integer(cd_.at("nx"), d["nx"]);
    m.ny = integer(cd_.at("ny"), d["ny"]);
    if (m.nx < 1 || m.ny < 1) cd_.fail("nx and ny must be positive");

    auto opt_vec = [&](const char* key, int n, Eigen::VectorXd def) {
        return j.contains(key) ? vec(c.at(key), j[key], n) : def;
    };
    m.eta0 = opt_vec("eta0", m.ny, Eigen::VectorXd::Zero(m.ny));
    m.xi0 = opt_vec("xi0", m.nx, Eigen::VectorXd::Ones(m.nx));
    m.x0 = opt_vec("x0", m.nx, Eigen::VectorXd::Zero(m.nx));
    m.y0 = opt_vec("y0", m.ny, Eigen::VectorXd::Zero(m.ny));
    if (j.contains("interval")) {
        Eigen::VectorXd iv = vec(c.at("interval"), j["interval"], 2);
        m.t_lo = iv[0];
        m.t_hi = iv[1];
    }
    m.t_start = j.contains("t_start") ? num(c.at("t_start"), j["t_start"]) : std::clamp(0.0, m.t_lo, m.t_hi);

    if (!j.contains("f_poly")) c.fail("missing key 'f_poly'");
    m.f = SymbolFunction::polynomial(m.nx, m.ny, symbol_terms(c.at("f_poly"), j["f_poly"], m.nx, m.ny));
    if (j.contains("r_poly"))
        m.r = SymbolFunction::polynomial(m.nx, m.ny, symbol_terms(c.at("r_poly"), j["r_poly"], m.nx, m.ny));
    if (j.contains("F0_poly"))
        m.F0 = SymbolFunction::polynomial(m.nx, m.ny, symbol_terms(c.at("F0_poly"), j["F0_poly"], m.nx, m.ny));
    if (j.contains("c_coupling")) {
        Ctx cc = c.at("c_coupling");
        const json& a = j["c_coupling"];
        if (!a.is_array()) cc.fail("expected an array of coefficient tables");
        for (size_t i = 0; i < a.size(); ++i)
            m.c_coupling.push_back(
                SymbolFunction::polynomial(m.nx, m.ny, symbol_terms(cc.at(i), a[i], m.nx, m.ny)));
    }
    if (j.contains("diff_op")) {
        Ctx co = c.at("diff_op");
        const json& a = j["diff_op"];
        if (!a.is_array()) co.fail("expected an array of differential terms");
        for (size_t i = 0; i < a.size(); ++i) {
            Ctx ci = co.at(i);
            const json& t = a[i];
            if (!t.is_object()) ci.fail("differential term must be an object");
            check_keys(ci, t, {"coeff", "t_order", "x_order", "y_order"});
            DiffTerm dt;
            if (!t.contains("coeff")) ci.fail("missing key 'coeff'");
            dt.coeff = coefficient(ci.at("coeff"), t["coeff"], m.nx, m.ny);
            dt.t_order = t.contains("t_order") ? integer(ci.at("t_order"), t["t_order"]) : 0;
            if (dt.t_order < 0 || dt.t_order > 1) ci.at("t_order").fail("t_order must be 0 or 1");
            dt.x_order = t.contains("x_order") ? multi(ci.at("x_order"), t["x_order"], m.nx) : std::vector<int>(m.nx, 0);
            dt.y_order = t.contains("y_order") ? multi(ci.at("y_order"), t["y_order"], m.ny) : std::vector<int>(m.ny, 0);
            m.diff_op.push_back(std::move(dt));
        }
    } else {
        m.diff_op = derive_diff_op(m);
    }
    try {
        m.validate();
    } catch (const Error& e) {
        c.fail(e.what());
    }
    return m;
}

std::string dir_of(const std::string& path)
{
    auto p = std::filesystem::path(path).parent_path();
    return p.empty() ? std::string(".") : p.string();
}

RunConfig config_from_json(const Ctx& c, const json& j)
{
    if (!j.is_object()) c.fail("config must be a JSON object");
    check_keys(c, j, {"model", "lambdas", "K", "M_a", "L", "rho", "kappa_exp", "N", "nu", "grid", "cutoff",
                      "im_w02_init", "aperture", "slope_threshold", "r2_min", "seed", "output_dir", "verbosity",
                      "record_timing"});
    RunConfig cfg;
    if (j.contains("model")) {
        Ctx cm = c.at("model");
        const json& m = j["model"];
        ModelRef ref;
        if (m.is_string()) {
            ref.builtin = m.get<std::string>();
        } else if (m.is_object() && m.contains("builtin")) {
            check_keys(cm, m, {"builtin", "j"});
            if (!m["builtin"].is_string()) cm.at("builtin").fail("expected a model name");
            ref.builtin = m["builtin"].get<std::string>();
            if (m.contains("j")) ref.params.j = integer(cm.at("j"), m["j"]);
        } else if (m.is_object() && m.contains("file")) {
            check_keys(cm, m, {"file"});
            if (!m["file"].is_string()) cm.at("file").fail("expected a path");
            ref.builtin.clear();
            ref.file = m["file"].get<std::string>();
        } else if (m.is_object()) {
            ref.builtin.clear();
            ref.inline_model = model_from_json(cm, m);
        } else {
            cm.fail("model must be a builtin name, {\"builtin\": ...}, {\"file\": ...} or a model object");
        }
        if (!ref.builtin.empty()) {
            auto names = builtin_names();
            if (std::find(names.begin(), names.end(), ref.builtin) == names.end() || ref.builtin == "custom")
                cm.fail("unknown builtin model '" + ref.builtin + "'");
        }
        cfg.model = std::move(ref);
    }
    if (j.contains("lambdas")) {
        Eigen::VectorXd l = vec(c.at("lambdas"), j["lambdas"], -1);
        cfg.lambdas.assign(l.data(), l.data() + l.size());
    }
    auto get_int = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = integer(c.at(key), j[key]);
    };
    auto get_num = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = num(c.at(key), j[key]);
    };
    get_int("K", cfg.K);
    get_int("M_a", cfg.M_a);
    get_int("L", cfg.L);
    get_num("rho", cfg.rho);
    if (j.contains("kappa_exp") && !j["kappa_exp"].is_null()) cfg.kappa_exp = num(c.at("kappa_exp"), j["kappa_exp"]);
    get_num("N", cfg.N);
    get_num("nu", cfg.nu);
    get_num("im_w02_init", cfg.im_w02_init);
    get_num("aperture", cfg.aperture);
    get_num("slope_threshold", cfg.slope_threshold);
    get_num("r2_min", cfg.r2_min);
    get_int("verbosity", cfg.verbosity);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) c.at("seed").fail("seed must be a non-negative integer");
        cfg.seed = j["seed"].get<unsigned long long>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) c.at("output_dir").fail("expected a path");
        cfg.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("record_timing")) {
        if (!j["record_timing"].is_boolean()) c.at("record_timing").fail("expected true or false");
        cfg.record_timing = j["record_timing"].get<bool>();
    }
    if (j.contains("grid")) {
        Ctx cg = c.at("grid");
        const json& g = j["grid"];
        if (!g.is_object()) cg.fail("grid must be an object");
        check_keys(cg, g, {"n_t", "n_gx", "n_gy", "margin", "t_pad", "leak"});
        if (g.contains("n_t")) cfg.grid.n_t = integer(cg.at("n_t"), g["n_t"]);
        if (g.contains("n_gx")) cfg.grid.n_gx = integer(cg.at("n_gx"), g["n_gx"]);
        if (g.contains("n_gy")) cfg.grid.n_gy = integer(cg.at("n_gy"), g["n_gy"]);
        if (g.contains("margin")) cfg.grid.margin = num(cg.at("margin"), g["margin"]);
        if (g.contains("t_pad")) cfg.grid.t_pad = num(cg.at("t_pad"), g["t_pad"]);
        if (g.contains("leak")) cfg.grid.leak = num(cg.at("leak"), g["leak"]);
    }
    if (j.contains("cutoff")) {
        Ctx cc = c.at("cutoff");
        const json& g = j["cutoff"];
        if (!g.is_object()) cc.fail("cutoff must be an object");
        check_keys(cc, g, {"R_t", "R_x", "R_y"});
        if (g.contains("R_t")) cfg.cutoff.R_t = num(cc.at("R_t"), g["R_t"]);
        if (g.contains("R_x")) cfg.cutoff.R_x = num(cc.at("R_x"), g["R_x"]);
        if (g.contains("R_y")) cfg.cutoff.R_y = num(cc.at("R_y"), g["R_y"]);
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        std::string msg = e.what();
        const std::string prefix = "ConfigError: ";
        if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
        // point at the first key the message names
        for (const char* key : {"lambda", "rho", "K", "M_a", "L", "n_t", "aperture", "cutoff", "im_w02_init"})
            if (msg.find(key) != std::string::npos) {
                std::string k = key;
                if (k == "lambda") k = "lambdas";
                if (k == "n_t") c.at("grid").at("n_t").fail(msg);
                c.at(k).fail(msg);
            }
        c.fail(msg);
    }
    return cfg;
}

// JSON text with every float at 17 significant digits.
void emit(std::ostringstream& os, const json& j, int indent)
{
    const std::string pad(indent + 2, ' '), close(indent, ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        size_t i = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++i) {
            os << pad << json(it.key()).dump() << ": ";
            emit(os, it.value(), indent + 2);
            os << (i + 1 < j.size() ? ",\n" : "\n");
        }
        os << close << "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        bool nested = false;
        for (const auto& e : j) nested = nested || e.is_structured();
        if (!nested) {
            os << "[";
            for (size_t i = 0; i < j.size(); ++i) {
                if (i) os << ", ";
                emit(os, j[i], indent + 2);
            }
            os << "]";
            return;
        }
        os << "[\n";
        for (size_t i = 0; i < j.size(); ++i) {
            os << pad;
            emit(os, j[i], indent + 2);
            os << (i + 1 < j.size() ? ",\n" : "\n");
        }
        os << close << "]";
        return;
    }
    case json::value_t::number_float: {
        double v = j.get<double>();
        os << (std::isfinite(v) ? fmt17(v) : "null");
        return;
    }
    default: os << j.dump();
    }
}

std::string dump(const json& j)
{
    std::ostringstream os;
    emit(os, j, 0);
    os << "\n";
    return os.str();
}

double min_eig_real(const Eigen::MatrixXd& A)
{
    if (A.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

json cond_json(const CondResult& r)
{
    json j;
    j["holds"] = r.holds;
    j["worst_ratio"] = r.worst_ratio;
    j["epsilon_used"] = r.epsilon_used;
    j["growth"] = r.growth;
    json per = json::array();
    for (const auto& [eps, v] : r.per_epsilon) per.push_back({{"epsilon", eps}, {"worst_ratio", v.first}, {"growth", v.second}});
    j["per_epsilon"] = per;
    return j;
}

} // namespace

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ConfigError, path + ": cannot write file");
    out << text;
}

ModelProblem parse_model_json(const std::string& text, const std::string& source)
{
    json j = parse_text(text, source);
    return model_from_json(Ctx{&text, source, {}}, j);
}

ModelProblem load_model_file(const std::string& path) { return parse_model_json(read_text_file(path), path); }

RunConfig parse_config_json(const std::string& text, const std::string& source)
{
    json j = parse_text(text, source);
    return config_from_json(Ctx{&text, source, {}}, j);
}

RunConfig load_config_file(const std::string& path)
{
    RunConfig cfg = parse_config_json(read_text_file(path), path);
    if (!cfg.model.file.empty() && std::filesystem::path(cfg.model.file).is_relative())
        cfg.model.file = (std::filesystem::path(dir_of(path)) / cfg.model.file).string();
    return cfg;
}

ModelProblem resolve_model(const ModelRef& ref)
{
    if (ref.inline_model) return *ref.inline_model;
    if (!ref.file.empty()) return load_model_file(ref.file);
    return builtin_model(ref.builtin, ref.params);
}

std::string report_csv(const std::vector<NormReport>& rows)
{
    std::ostringstream os;
    os << "lambda,norm_u_minusN,norm_Pu_nu,norm_u_minusNn,norm_Au0,ratio,residual_expansion,residual_direct,"
          "min_im_w0,t0_anchor,usable_lo,usable_hi,wall_ms\n";
    for (const auto& r : rows) {
        const double v[] = {r.lambda,    r.u_minusN,           r.Pu_nu,           r.u_minusNn,  r.Au_zero,
                            r.ratio,     r.residual_expansion, r.residual_direct, r.min_im_w0, r.t0_anchor,
                            r.usable_lo, r.usable_hi,          r.wall_ms};
        for (size_t i = 0; i < std::size(v); ++i) os << (i ? "," : "") << fmt17(v[i]);
        os << "\n";
    }
    return os.str();
}

std::string summary_json(const ModelProblem& model, const RunConfig& cfg, const SweepResult& res)
{
    json j;
    j["model"] = model.label;
    j["verdict"] = to_string(res.verdict);
    j["reason"] = res.reason;
    auto fit = [](const SlopeFit& f) {
        json o;
        o["valid"] = f.valid;
        o["slope"] = f.valid ? json(f.slope) : json(nullptr);
        o["intercept"] = f.valid ? json(f.intercept) : json(nullptr);
        o["r2"] = f.valid ? json(f.r2) : json(nullptr);
        return o;
    };
    j["slope"] = res.ratio_fit.valid ? json(res.ratio_fit.slope) : json(nullptr);
    j["r2"] = res.ratio_fit.valid ? json(res.ratio_fit.r2) : json(nullptr);
    j["fits"] = {{"ratio", fit(res.ratio_fit)}, {"norm_u_minusN", fit(res.u_fit)}, {"norm_Pu_nu", fit(res.Pu_fit)}};
    json params;
    params["N"] = cfg.N;
    params["nu"] = cfg.nu;
    params["n"] = 1 + model.nx + model.ny;
    params["K"] = cfg.K;
    params["M_a"] = cfg.M_a;
    params["L"] = cfg.L;
    params["rho"] = cfg.rho;
    params["kappa_exp"] = cfg.kappa_exp;
    params["im_w02_init"] = cfg.im_w02_init;
    params["cutoff"] = {{"R_t", cfg.cutoff.R_t}, {"R_x", cfg.cutoff.R_x}, {"R_y", cfg.cutoff.R_y}};
    params["grid"] = {{"n_t", cfg.grid.n_t},       {"n_gx", cfg.grid.n_gx}, {"n_gy", cfg.grid.n_gy},
                      {"margin", cfg.grid.margin}, {"t_pad", cfg.grid.t_pad}, {"leak", cfg.grid.leak}};
    params["aperture"] = cfg.aperture;
    params["slope_threshold"] = cfg.slope_threshold;
    params["r2_min"] = cfg.r2_min;
    params["seed"] = cfg.seed;
    j["params"] = params;
    json lam = json::array();
    for (double l : cfg.lambdas) lam.push_back(l);
    j["lambdas"] = lam;
    json done = json::array();
    for (const auto& r : res.rows) done.push_back(r.lambda);
    j["completed"] = done;
    json fails = json::array();
    for (const auto& f : res.failures) fails.push_back({{"lambda", f.lambda}, {"error", f.kind}, {"message", f.message}});
    j["failures"] = fails;
    return dump(j);
}

std::string phase_csv(const PhaseTrajectory& traj)
{
    const auto& L = traj.layout;
    const bool ez = traj.scales.eta_zero;
    std::ostringstream os;
    os << "t,re_w0,im_w0";
    for (int a = 0; a < L.nx; ++a) os << ",x0_" << a;
    for (int a = 0; a < L.nx; ++a) os << ",xi0_" << a;
    for (int c = 0; c < L.ny; ++c) os << ",y0_" << c;
    for (int c = 0; c < L.ny; ++c) os << (ez ? ",eta0_" : ",zeta0_") << c;
    os << ",eigmin_im_w20,eigmin_im_w02\n";
    for (size_t i = 0; i < traj.samples.size(); ++i) {
        PhaseState s = traj.state(i);
        os << fmt17(traj.samples.t[i]) << "," << fmt17(s.w0.real()) << "," << fmt17(s.w0.imag());
        for (int a = 0; a < L.nx; ++a) os << "," << fmt17(s.x0[a]);
        for (int a = 0; a < L.nx; ++a) os << "," << fmt17(s.xi0[a]);
        for (int c = 0; c < L.ny; ++c) os << "," << fmt17(s.y0[c]);
        for (int c = 0; c < L.ny; ++c) os << "," << fmt17(s.zeta[c]);
        os << "," << fmt17(min_eig_real(s.w20(L).imag())) << "," << fmt17(min_eig_real(s.w02(L).imag())) << "\n";
    }
    return os.str();
}

std::string audit_json(const ModelProblem& model, const AuditOutcome& a)
{
    json j;
    j["model"] = model.label;
    j["licensed"] = a.licensed();
    j["verdict"] = a.licensed() ? "LICENSED" : to_string(a.refusal);
    json s;
    s["found"] = a.sign.found;
    if (a.sign.found) {
        s["t_cross"] = a.sign.t_cross;
        s["direction"] = to_string(a.sign.direction);
        s["order_estimate"] = a.sign.order_estimate;
        s["order_infinite"] = a.sign.order_infinite;
        s["I_prime"] = {a.sign.I_prime[0], a.sign.I_prime[1]};
        s["slope"] = a.sign.slope;
    }
    j["sign_change"] = s;
    if (a.audited) {
        json c;
        c["kcond"] = cond_json(a.audit.kcond);
        c["hessian_applies"] = a.audit.hessian_applies;
        c["hessian"] = cond_json(a.audit.hessian);
        c["leaf"] = cond_json(a.audit.leaf);
        json dq;
        dq["holds"] = a.audit.dq.holds;
        dq["residual"] = a.audit.dq.residual;
        json bl = json::array();
        for (const auto& [l, v] : a.audit.dq.by_lambda) bl.push_back({{"lambda", l}, {"value", v}});
        dq["by_lambda"] = bl;
        c["dq"] = dq;
        c["samples"] = a.audit.samples;
        j["conditions"] = c;
    }
    return dump(j);
}

} // namespace pseudomode
