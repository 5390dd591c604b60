#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "darboux/commute_double.hpp"
#include "darboux/commute_single.hpp"
#include "darboux/errors.hpp"
#include "darboux/gbdt.hpp"
#include "darboux/potential.hpp"
#include "darboux/system.hpp"

namespace darboux {

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw config_error("expected a number for " + what + ", got '" + s + "'");
    }
}

inline int to_int(const std::string& s, const std::string& what) {
    double v = to_double(s, what);
    int i = static_cast<int>(std::lround(v));
    if (std::abs(v - i) > 1e-9) throw config_error(what + " must be an integer, got '" + s + "'");
    return i;
}

/// complex literal "(re,im)"
inline complex to_complex(const std::string& s, const std::string& what) {
    std::string t = trim(s);
    if (t.size() < 5 || t.front() != '(' || t.back() != ')')
        throw config_error(what + ": expected complex literal (re,im), got '" + s + "'");
    size_t comma = t.find(',');
    if (comma == std::string::npos)
        throw config_error(what + ": expected complex literal (re,im), got '" + s + "'");
    return complex(to_double(trim(t.substr(1, comma - 1)), what),
                   to_double(trim(t.substr(comma + 1, t.size() - comma - 2)), what));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

/// Matrix literal: rows separated by ';', entries "(re,im)" separated by
/// whitespace.
inline MatrixXc to_matrix(const std::string& s, int rows, int cols, const std::string& what) {
    auto row_strs = split(s, ';');
    if (static_cast<int>(row_strs.size()) != rows)
        throw config_error(what + ": expected " + std::to_string(rows) + " rows");
    MatrixXc m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        std::string r = trim(row_strs[static_cast<size_t>(i)]);
        std::vector<std::string> entries;
        size_t p = 0;
        while (p < r.size()) {
            if (r[p] == '(') {
                size_t e = r.find(')', p);
                if (e == std::string::npos) throw config_error(what + ": unbalanced parentheses");
                entries.push_back(r.substr(p, e - p + 1));
                p = e + 1;
            } else if (std::isspace(static_cast<unsigned char>(r[p]))) {
                ++p;
            } else {
                throw config_error(what + ": expected (re,im) entries, got '" + r + "'");
            }
        }
        if (static_cast<int>(entries.size()) != cols)
            throw config_error(what + ": expected " + std::to_string(cols) + " entries per row");
        for (int j = 0; j < cols; ++j)
            m(i, j) = to_complex(entries[static_cast<size_t>(j)], what);
    }
    return m;
}

} // namespace detail

/// One parsed config section: name plus key/value pairs in file order.
struct config_section {
    std::string name;
    std::map<std::string, std::string> kv;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string get(const std::string& k, const std::string& fallback = "") const {
        auto it = kv.find(k);
        return it == kv.end() ? fallback : it->second;
    }
    std::string require(const std::string& k) const {
        auto it = kv.find(k);
        if (it == kv.end())
            throw config_error("section [" + name + "] is missing key '" + k + "'");
        return it->second;
    }
};

/// Flat structured text: '[section]' headers, 'key = value' lines, '#'
/// comments.  Sections repeat (one [transform] per chain step) and stay in
/// file order.
inline std::vector<config_section> parse_sections(const std::string& text) {
    std::vector<config_section> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("line " + std::to_string(lineno) + ": malformed section header");
            out.push_back({detail::trim(line.substr(1, line.size() - 2)), {}});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected 'key = value'");
        if (out.empty()) throw config_error("line " + std::to_string(lineno) +
                                            ": key/value outside any section");
        std::string k = detail::trim(line.substr(0, eq));
        std::string v = detail::trim(line.substr(eq + 1));
        if (k.empty()) throw config_error("line " + std::to_string(lineno) + ": empty key");
        if (!out.back().kv.emplace(k, v).second)
            throw config_error("line " + std::to_string(lineno) + ": duplicate key '" + k +
                               "' in section [" + out.back().name + "]");
    }
    return out;
}

// --------------------------------------------------------------------------

struct TransformStep {
    enum class type { single_phi, single_theta, double_finite, double_infinite, gbdt };
    type t = type::single_phi;
    double lambda = 0;
    double gamma = 0;
    GBDTSeed seed; // gbdt only
};

struct RunConfig {
    config_section potential_sec;
    std::vector<TransformStep> chain;
    std::vector<complex> z_grid;
    std::vector<double> x_grid;
    std::string out_dir = "out";
    bool json = false;
    double tolerance = 0; // 0: library defaults

    Potential build_potential() const;
    FundamentalSystem build_base_system() const;
};

inline GBDTSeed parse_gbdt_seed(const config_section& s) {
    GBDTSeed seed;
    seed.n = detail::to_int(s.require("n"), "n");
    if (seed.n < 1 || seed.n > 8) throw config_error("gbdt seed: n must lie in [1, 8]");
    seed.A = detail::to_matrix(s.require("A"), seed.n, seed.n, "A");
    seed.Lambda0 = detail::to_matrix(s.require("Lambda0"), seed.n, 2, "Lambda0");
    seed.S0 = detail::to_matrix(s.require("S0"), seed.n, seed.n, "S0");
    return seed;
}

/// Seed file: the same key/value lines, with or without a [seed] header.
inline GBDTSeed parse_gbdt_seed_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open seed file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    if (text.find('[') == std::string::npos) text = "[seed]\n" + text;
    auto secs = parse_sections(text);
    if (secs.empty()) throw config_error("seed file '" + path + "' is empty");
    return parse_gbdt_seed(secs.front());
}

inline std::vector<double> parse_x_grid_spec(const std::string& spec) {
    std::string s = detail::trim(spec);
    std::vector<double> out;
    auto linspace = [&](double a, double b, int n, bool geom) {
        if (n < 1) throw config_error("x grid: need at least one point");
        for (int i = 0; i < n; ++i) {
            double t = (n == 1) ? 0.0 : static_cast<double>(i) / (n - 1);
            out.push_back(geom ? a * std::pow(b / a, t) : a + (b - a) * t);
        }
    };
    if (s.rfind("lin:", 0) == 0 || s.rfind("geom:", 0) == 0) {
        bool geom = s.rfind("geom:", 0) == 0;
        auto parts = detail::split(s.substr(geom ? 5 : 4), ':');
        if (parts.size() != 3) throw config_error("x grid: expected lin:a:b:n or geom:a:b:n");
        double a = detail::to_double(detail::trim(parts[0]), "x grid");
        double b = detail::to_double(detail::trim(parts[1]), "x grid");
        int n = detail::to_int(detail::trim(parts[2]), "x grid count");
        if (geom && !(a > 0 && b > 0)) throw config_error("geometric x grid needs positive ends");
        linspace(a, b, n, geom);
        return out;
    }
    for (auto& p : detail::split(s, ','))
        if (!detail::trim(p).empty()) out.push_back(detail::to_double(detail::trim(p), "x grid"));
    if (out.empty()) throw config_error("empty x grid");
    return out;
}

/// z grids: "rect:s0:s1:ns:t0:t1:nt" (sigma + i tau rectangles) or a ';'
/// separated list of (re,im) literals.
inline std::vector<complex> parse_z_grid_spec(const std::string& spec) {
    std::string s = detail::trim(spec);
    std::vector<complex> out;
    if (s.rfind("rect:", 0) == 0) {
        auto parts = detail::split(s.substr(5), ':');
        if (parts.size() != 6) throw config_error("z grid: expected rect:s0:s1:ns:t0:t1:nt");
        double s0 = detail::to_double(parts[0], "z grid");
        double s1 = detail::to_double(parts[1], "z grid");
        int ns = detail::to_int(parts[2], "z grid");
        double t0 = detail::to_double(parts[3], "z grid");
        double t1 = detail::to_double(parts[4], "z grid");
        int nt = detail::to_int(parts[5], "z grid");
        if (ns < 1 || nt < 1) throw config_error("z grid: counts must be positive");
        for (int i = 0; i < ns; ++i)
            for (int j = 0; j < nt; ++j) {
                double sr = (ns == 1) ? s0 : s0 + (s1 - s0) * i / (ns - 1);
                double ti = (nt == 1) ? t0 : t0 + (t1 - t0) * j / (nt - 1);
                out.push_back(complex(sr, ti));
            }
        return out;
    }
    for (auto& p : detail::split(s, ';'))
        if (!detail::trim(p).empty()) out.push_back(detail::to_complex(detail::trim(p), "z grid"));
    if (out.empty()) throw config_error("empty z grid");
    return out;
}

inline RunConfig parse_run_config(const std::string& text) {
    RunConfig rc;
    bool have_pot = false;
    for (const auto& sec : parse_sections(text)) {
        if (sec.name == "potential") {
            if (have_pot) throw config_error("multiple [potential] sections");
            rc.potential_sec = sec;
            have_pot = true;
        } else if (sec.name == "transform") {
            TransformStep st;
            std::string type = sec.require("type");
            if (type == "single") {
                std::string kind = sec.get("kind", "phi");
                if (kind == "phi") st.t = TransformStep::type::single_phi;
                else if (kind == "theta") st.t = TransformStep::type::single_theta;
                else throw config_error("transform single: kind must be phi or theta");
                st.lambda = detail::to_double(sec.require("lambda"), "lambda");
            } else if (type == "double") {
                st.lambda = detail::to_double(sec.require("lambda"), "lambda");
                std::string g = sec.require("gamma");
                if (g == "inf" || g == "infinity") {
                    st.t = TransformStep::type::double_infinite;
                } else {
                    st.t = TransformStep::type::double_finite;
                    st.gamma = detail::to_double(g, "gamma");
                    if (!(st.gamma > 0)) throw config_error("transform double: gamma must be > 0");
                }
            } else if (type == "gbdt") {
                st.t = TransformStep::type::gbdt;
                st.seed = parse_gbdt_seed(sec);
            } else {
                throw config_error("transform type must be single, double or gbdt");
            }
            rc.chain.push_back(std::move(st));
        } else if (sec.name == "grid") {
            if (sec.has("z")) rc.z_grid = parse_z_grid_spec(sec.get("z"));
            if (sec.has("x")) rc.x_grid = parse_x_grid_spec(sec.get("x"));
        } else if (sec.name == "output") {
            rc.out_dir = sec.get("dir", rc.out_dir);
            std::string j = sec.get("json", "false");
            rc.json = (j == "true" || j == "1" || j == "yes");
        } else {
            throw config_error("unknown section [" + sec.name + "]");
        }
    }
    if (!have_pot) throw config_error("config needs a [potential] section");
    for (size_t i = 0; i < rc.chain.size(); ++i)
        if (rc.chain[i].t == TransformStep::type::gbdt && rc.chain.size() > 1)
            throw config_error("a gbdt step cannot be chained with other transforms");
    return rc;
}

inline RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

inline Potential RunConfig::build_potential() const {
    const config_section& s = potential_sec;
    std::string kind = s.require("kind");
    double x_max = s.has("x_max") ? detail::to_double(s.get("x_max"), "x_max") : 40.0;
    if (kind == "free") return Potential::free_particle().with_cutoff(x_max);
    if (kind == "bessel") {
        double l = detail::to_double(s.require("l"), "l");
        std::string pert = s.get("pert", "none");
        if (pert == "none") return Potential::bessel(l).with_cutoff(x_max);
        if (pert == "exp") {
            double amp = detail::to_double(s.get("pert_amplitude", "1"), "pert_amplitude");
            double rate = detail::to_double(s.get("pert_rate", "1"), "pert_rate");
            return Potential::bessel_exp(l, amp, rate).with_cutoff(x_max);
        }
        throw config_error("bessel pert must be none or exp");
    }
    if (kind == "coulomb") {
        int l = detail::to_int(s.require("l"), "l");
        double gamma = detail::to_double(s.require("gamma"), "gamma");
        return Potential::coulomb(l, gamma).with_cutoff(x_max);
    }
    if (kind == "tabulated") {
        std::vector<std::pair<double, double>> samples;
        for (auto& p : detail::split(s.require("samples"), ',')) {
            auto xy = detail::split(detail::trim(p), ':');
            if (xy.size() != 2) throw config_error("tabulated samples: expected x:q pairs");
            samples.emplace_back(detail::to_double(detail::trim(xy[0]), "sample x"),
                                 detail::to_double(detail::trim(xy[1]), "sample q"));
        }
        std::string interp = s.get("interp", "cubic");
        if (interp != "cubic" && interp != "linear")
            throw config_error("tabulated interp must be linear or cubic");
        return Potential::tabulated(samples, interp == "cubic"
                                                 ? Potential::interpolation::cubic
                                                 : Potential::interpolation::linear);
    }
    throw config_error("potential kind must be free, bessel, coulomb or tabulated");
}

inline FundamentalSystem RunConfig::build_base_system() const {
    Potential q = build_potential();
    std::string bp = potential_sec.get("basepoint", "auto");
    ode_options ode;
    if (tolerance > 0) {
        ode.rtol = tolerance;
        ode.atol = tolerance * 1e-2;
    }
    if (bp == "auto") bp = q.index_l() ? "singular" : "regular";
    if (bp == "singular") {
        bessel_system_options o;
        o.ode = ode;
        return make_bessel_system(q, o);
    }
    regular_system_options o;
    o.ode = ode;
    double c = q.lower();
    if (bp.rfind("regular:", 0) == 0)
        c = detail::to_double(bp.substr(8), "basepoint");
    else if (bp != "regular")
        throw config_error("basepoint must be auto, singular, regular or regular:<c>");
    return make_regular_system(q, c, o);
}

/// The single/double chain applied to the base system, with the cumulative
/// Weyl map.  gbdt steps are driven separately (see the CLI).
struct BuiltPipeline {
    FundamentalSystem base;
    std::vector<TransformResult> steps;
    FundamentalSystem final_system;
    WeylMap total_map;
};

inline BuiltPipeline build_pipeline(const RunConfig& rc) {
    BuiltPipeline pl;
    pl.base = rc.build_base_system();
    pl.final_system = pl.base;
    transform_options topt;
    for (const auto& st : rc.chain) {
        TransformResult tr;
        switch (st.t) {
        case TransformStep::type::single_phi:
            tr = commute_phi(pl.final_system, st.lambda, topt);
            break;
        case TransformStep::type::single_theta:
            tr = commute_theta(pl.final_system, st.lambda, topt);
            break;
        case TransformStep::type::double_finite:
            tr = commute_double(pl.final_system, st.lambda, st.gamma, topt);
            break;
        case TransformStep::type::double_infinite:
            tr = commute_double_infinite(pl.final_system, st.lambda, topt);
            break;
        case TransformStep::type::gbdt:
            throw config_error("gbdt steps are handled by the 'transform gbdt' subcommand");
        }
        for (auto& step : tr.weyl_map.steps) pl.total_map.steps.push_back(step);
        pl.final_system = tr.system;
        pl.steps.push_back(std::move(tr));
    }
    return pl;
}

} // namespace darboux
