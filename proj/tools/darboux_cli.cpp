// Command-line front end: sampling runs, transforms, Weyl/measure tables and
// the verification suites.  All numeric output is full double precision and
// byte-deterministic for a fixed config.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "darboux/config.hpp"
#include "darboux/gbdt_explicit.hpp"
#include "darboux/io.hpp"
#include "darboux/verify.hpp"
#include "darboux/weyl.hpp"

using namespace darboux;

namespace {

struct cli_state {
    std::string config_path;
    std::string out_dir;
    std::string z_spec, x_spec;
    double tol = 0;
    bool json = false;
    bool branch_check = false;

    RunConfig load() const {
        RunConfig rc = parse_run_config_file(config_path);
        if (!out_dir.empty()) rc.out_dir = out_dir;
        if (!z_spec.empty()) rc.z_grid = parse_z_grid_spec(z_spec);
        if (!x_spec.empty()) rc.x_grid = parse_x_grid_spec(x_spec);
        if (tol > 0) rc.tolerance = tol;
        if (json) rc.json = true;
        return rc;
    }
};

std::vector<double> default_x_grid(const Potential& q) {
    std::vector<double> xs;
    double lo = std::max(q.lower(), 0.0) + 1e-2;
    double hi = q.cutoff();
    for (int i = 0; i < 120; ++i) xs.push_back(lo * std::pow(hi / lo, i / 119.0));
    return xs;
}

void write_potential_table(const Potential& q, const std::vector<double>& xs,
                           const std::string& dir, const std::string& stem, bool json) {
    Table t;
    t.columns = {"x", "q"};
    for (double x : xs) t.add_row({x, q(x)});
    t.write(dir, stem, json);
}

void write_solution_tables(const FundamentalSystem& fs, const std::vector<complex>& zs,
                           const std::vector<double>& xs, const std::string& dir, bool json) {
    Table zt;
    zt.columns = {"index", "re_z", "im_z"};
    for (size_t i = 0; i < zs.size(); ++i)
        zt.add_row({static_cast<double>(i), zs[i].real(), zs[i].imag()});
    zt.write(dir, "zs", json);
    for (size_t i = 0; i < zs.size(); ++i) {
        auto pv = fs.phi(zs[i], xs);
        auto tv = fs.theta(zs[i], xs);
        Table tp, tt;
        tp.columns = {"x", "re_u", "im_u", "re_du", "im_du"};
        tt.columns = tp.columns;
        for (size_t k = 0; k < xs.size(); ++k) {
            tp.add_row({xs[k], pv[k].value.real(), pv[k].value.imag(), pv[k].deriv.real(),
                        pv[k].deriv.imag()});
            tt.add_row({xs[k], tv[k].value.real(), tv[k].value.imag(), tv[k].deriv.real(),
                        tv[k].deriv.imag()});
        }
        tp.write(dir, "solution_phi_" + std::to_string(i), json);
        tt.write(dir, "solution_theta_" + std::to_string(i), json);
    }
}

void write_text(const std::string& dir, const std::string& name, const std::string& body) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + name);
    out << body;
}

int run_sample(const cli_state& st) {
    RunConfig rc = st.load();
    auto pl = build_pipeline(rc);
    std::vector<double> xs = rc.x_grid.empty() ? default_x_grid(pl.base.q) : rc.x_grid;
    write_potential_table(pl.base.q, xs, rc.out_dir, "potential", rc.json);
    if (!pl.steps.empty())
        write_potential_table(pl.final_system.q, xs, rc.out_dir, "potential_final", rc.json);
    if (!rc.z_grid.empty()) write_solution_tables(pl.final_system, rc.z_grid, xs, rc.out_dir, rc.json);
    return 0;
}

int run_weyl(const cli_state& st) {
    RunConfig rc = st.load();
    auto pl = build_pipeline(rc);
    if (rc.z_grid.empty()) throw config_error("weyl: need a z grid (--z or [grid] z = ...)");
    weyl_options wopt;
    if (rc.tolerance > 0) {
        wopt.ode.rtol = rc.tolerance;
        wopt.ode.atol = rc.tolerance * 1e-2;
    }
    std::vector<complex> Ms(rc.z_grid.size());
    auto fsp = std::make_shared<FundamentalSystem>(pl.final_system);
    parallel_for(rc.z_grid.size(), [&](size_t i) {
        Ms[i] = singular_weyl(*fsp, rc.z_grid[i], wopt).M;
    });
    Table t;
    t.columns = {"re_z", "im_z", "re_M", "im_M"};
    for (size_t i = 0; i < rc.z_grid.size(); ++i)
        t.add_row({rc.z_grid[i].real(), rc.z_grid[i].imag(), Ms[i].real(), Ms[i].imag()});
    t.write(rc.out_dir, "weyl", rc.json);
    if (st.branch_check) {
        Table b;
        b.columns = {"re_z", "im_z", "re_sqrt", "im_sqrt"};
        for (complex z : rc.z_grid) {
            complex s = sqrt_upper(z);
            b.add_row({z.real(), z.imag(), s.real(), s.imag()});
        }
        b.write(rc.out_dir, "branch", rc.json);
    }
    if (!pl.total_map.steps.empty())
        write_text(rc.out_dir, "weyl_map.txt", pl.total_map.describe() + "\n");
    return 0;
}

int run_measure(const cli_state& st, const std::vector<std::string>& intervals,
                const std::string& eps_spec) {
    RunConfig rc = st.load();
    auto pl = build_pipeline(rc);
    std::vector<double> eps{1e-1, 1e-2, 1e-3};
    if (!eps_spec.empty()) {
        eps.clear();
        for (auto& p : detail::split(eps_spec, ','))
            eps.push_back(detail::to_double(detail::trim(p), "eps"));
    }
    auto fsp = std::make_shared<FundamentalSystem>(pl.final_system);
    auto M = [fsp](complex z) { return singular_weyl(*fsp, z).M; };
    Table t;
    t.columns = {"x0", "x1", "mass", "converged", "signed_mass"};
    for (size_t k = 0; k < eps.size(); ++k) {
        t.columns.push_back("eps_" + std::to_string(k));
        t.columns.push_back("mass_eps_" + std::to_string(k));
    }
    for (const auto& ivs : intervals) {
        auto ab = detail::split(ivs, ',');
        if (ab.size() != 2) throw config_error("--interval expects 'a,b'");
        double a = detail::to_double(detail::trim(ab[0]), "interval");
        double b = detail::to_double(detail::trim(ab[1]), "interval");
        auto est = spectral_measure(M, a, b, eps);
        std::vector<double> row{a, b, est.mass, est.converged ? 1.0 : 0.0,
                                est.signed_mass ? 1.0 : 0.0};
        for (size_t k = 0; k < eps.size(); ++k) {
            row.push_back(est.eps[k]);
            row.push_back(est.mass_at_eps[k]);
        }
        t.rows.push_back(row);
    }
    t.write(rc.out_dir, "measure", rc.json);
    return 0;
}

int run_transform_single(const cli_state& st, const std::string& kind, double lambda) {
    RunConfig rc = st.load();
    auto pl = build_pipeline(rc);
    transform_options topt;
    TransformResult tr = (kind == "theta") ? commute_theta(pl.final_system, lambda, topt)
                                           : commute_phi(pl.final_system, lambda, topt);
    std::vector<double> xs = rc.x_grid.empty() ? default_x_grid(tr.q_new) : rc.x_grid;
    write_potential_table(tr.q_new, xs, rc.out_dir, "q_new", rc.json);
    if (!rc.z_grid.empty()) write_solution_tables(tr.system, rc.z_grid, xs, rc.out_dir, rc.json);
    write_text(rc.out_dir, "weyl_map.txt",
               tr.weyl_map.describe() + "\n" + tr.measure_map.describe() + "\n");
    return 0;
}

int run_transform_double(const cli_state& st, const std::string& gamma_s, double lambda) {
    RunConfig rc = st.load();
    auto pl = build_pipeline(rc);
    transform_options topt;
    TransformResult tr;
    if (gamma_s == "inf" || gamma_s == "infinity") {
        tr = commute_double_infinite(pl.final_system, lambda, topt);
    } else {
        tr = commute_double(pl.final_system, lambda,
                            detail::to_double(gamma_s, "gamma"), topt);
    }
    std::vector<double> xs = rc.x_grid.empty() ? default_x_grid(tr.q_new) : rc.x_grid;
    write_potential_table(tr.q_new, xs, rc.out_dir, "q_new", rc.json);
    if (!rc.z_grid.empty()) write_solution_tables(tr.system, rc.z_grid, xs, rc.out_dir, rc.json);
    write_text(rc.out_dir, "weyl_map.txt",
               tr.weyl_map.describe() + "\n" + tr.measure_map.describe() + "\n");
    return 0;
}

int run_transform_gbdt(const cli_state& st, const std::string& seed_path,
                       const std::string& example, const std::string& par_a,
                       const std::string& par_mu, double v1, double d, double x_max) {
    std::string out = st.out_dir.empty() ? "out" : st.out_dir;
    std::vector<double> xs =
        st.x_spec.empty() ? parse_x_grid_spec("geom:0.05:" + std::to_string(x_max - 1) + ":80")
                          : parse_x_grid_spec(st.x_spec);
    std::vector<complex> zs =
        st.z_spec.empty() ? std::vector<complex>{complex(0, 1)} : parse_z_grid_spec(st.z_spec);

    auto write_wa = [&](const std::function<Matrix2c(complex, double)>& wa) {
        Table t;
        t.columns = {"re_z", "im_z", "x",      "re_w11", "im_w11", "re_w12", "im_w12",
                     "re_w21", "im_w21", "re_w22", "im_w22", "re_det", "im_det"};
        for (complex z : zs)
            for (double x : xs) {
                Matrix2c w = wa(z, x);
                complex det = w.determinant();
                t.add_row({z.real(), z.imag(), x, w(0, 0).real(), w(0, 0).imag(), w(0, 1).real(),
                           w(0, 1).imag(), w(1, 0).real(), w(1, 0).imag(), w(1, 1).real(),
                           w(1, 1).imag(), det.real(), det.imag()});
            }
        t.write(out, "wa", st.json);
    };

    if (!example.empty()) {
        ExplicitBundle b;
        if (example == "rank1") {
            b = explicit_rank_one(detail::to_complex(par_a, "--A"), v1, x_max);
        } else if (example == "jordan2") {
            b = explicit_jordan_pair(detail::to_complex(par_mu, "--mu"), d, x_max);
        } else {
            throw config_error("--example must be rank1 or jordan2");
        }
        write_potential_table(b.q_tilde, xs, out, "qtilde", st.json);
        write_wa(b.transfer);
        std::string desc = b.description + "\n";
        if (example == "rank1")
            desc += "M(z) = -(z - A)(z - conj A) / (i sqrt(z) + v1)\n"
                    "qtilde(x) = 2/x^2 (1 + O(x)) near 0\n";
        else
            desc += "M(z) = -(z - mu)^2 (z - conj mu)^2 / (i sqrt(z) + d)\n"
                    "qtilde(x) = 12/x^2 (1 + O(x)) near 0; det S(x) = x^6/45 (1 + O(x))\n";
        write_text(out, "weyl_closed.txt", desc);
        return 0;
    }

    if (seed_path.empty()) throw config_error("transform gbdt needs --seed <file> or --example");
    GBDTSeed seed = parse_gbdt_seed_file(seed_path);
    auto diag = validate_seed(seed);
    if (!diag.valid)
        throw numerical_error("gbdt", "seed rejected: compatibility residual " +
                                          std::to_string(diag.compat_residual));
    auto stt = propagate(seed, Potential::free_particle().with_cutoff(x_max), x_max + 2.0);
    auto qt = transformed_potential(stt);
    write_potential_table(qt, xs, out, "qtilde", st.json);
    write_wa([&](complex z, double x) { return transfer_matrix(stt, z, x); });
    return 0;
}

int run_verify(const std::string& suite, double tol_scale) {
    auto rep = run_verify_suite(suite.empty() ? "all" : suite,
                                tol_scale > 0 ? tol_scale : 1.0);
    int fails = 0;
    for (const auto& c : rep.checks) {
        std::printf("[%s] %-72s residual %.3e (tol %.1e)\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.residual, c.tolerance);
        if (!c.pass) ++fails;
    }
    std::printf("%zu checks, %d failures, %.2f s\n", rep.checks.size(), fails, rep.seconds);
    return fails ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"commutation methods for 1-D Schrodinger operators with strongly singular "
                 "potentials"};
    app.require_subcommand(1);

    cli_state st;
    std::string kind = "phi", gamma_s = "1", suite = "all";
    double lambda = 0, v1 = 0, dpar = 0, x_max = 40, tol_scale = 0;
    std::string seed_path, example, par_a = "(0,1)", par_mu = "(0,1)";
    std::vector<std::string> intervals;
    std::string eps_spec;

    auto add_common = [&](CLI::App* c, bool need_config) {
        auto* o = c->add_option("--config", st.config_path, "run configuration file");
        if (need_config) o->required();
        c->add_option("--out", st.out_dir, "output directory");
        c->add_option("--z", st.z_spec, "z grid: rect:s0:s1:ns:t0:t1:nt or (re,im);(re,im)");
        c->add_option("--x-grid", st.x_spec, "x grid: lin:a:b:n, geom:a:b:n or x1,x2,...");
        c->add_option("--tol", st.tol, "integrator relative tolerance override");
        c->add_flag("--json", st.json, "also write JSON mirrors of every table");
    };

    auto* sample = app.add_subcommand("sample", "sample potentials and solutions");
    add_common(sample, true);

    auto* transform = app.add_subcommand("transform", "apply a commutation transform");
    transform->require_subcommand(1);
    auto* tsingle = transform->add_subcommand("single", "single commutation");
    add_common(tsingle, true);
    tsingle->add_option("--kind", kind, "phi | theta")->check(CLI::IsMember({"phi", "theta"}));
    tsingle->add_option("--lambda", lambda, "factorization energy")->required();
    auto* tdouble = transform->add_subcommand("double", "double commutation");
    add_common(tdouble, true);
    tdouble->add_option("--lambda", lambda, "insertion energy")->required();
    tdouble->add_option("--gamma", gamma_s, "coupling (positive number or 'inf')")->required();
    auto* tgbdt = transform->add_subcommand("gbdt", "matrix-seeded transform");
    add_common(tgbdt, false);
    tgbdt->add_option("--seed", seed_path, "seed file (n, A, Lambda0, S0)");
    tgbdt->add_option("--example", example, "built-in explicit example: rank1 | jordan2");
    tgbdt->add_option("--A", par_a, "rank1 parameter A as (re,im)");
    tgbdt->add_option("--v1", v1, "rank1 boundary parameter");
    tgbdt->add_option("--mu", par_mu, "jordan2 parameter mu as (re,im)");
    tgbdt->add_option("--d", dpar, "jordan2 boundary parameter");
    tgbdt->add_option("--x-max", x_max, "propagation range");

    auto* weylc = app.add_subcommand("weyl", "evaluate the singular Weyl function");
    add_common(weylc, true);
    weylc->add_flag("--branch-check", st.branch_check, "dump sqrt(z) branch values for audit");

    auto* measurec = app.add_subcommand("measure", "interval masses by Stieltjes inversion");
    add_common(measurec, true);
    measurec->add_option("--interval", intervals, "interval 'a,b' (repeatable)")->required();
    measurec->add_option("--eps", eps_spec, "decreasing eps schedule, comma separated");

    auto* verifyc = app.add_subcommand("verify", "run invariant suites");
    verifyc->add_option("suite", suite, "wronskian|single|double|gbdt|measure|all");
    verifyc->add_option("--tol", tol_scale, "tolerance scale factor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (sample->parsed()) return run_sample(st);
        if (tsingle->parsed()) return run_transform_single(st, kind, lambda);
        if (tdouble->parsed()) return run_transform_double(st, gamma_s, lambda);
        if (tgbdt->parsed())
            return run_transform_gbdt(st, seed_path, example, par_a, par_mu, v1, dpar, x_max);
        if (weylc->parsed()) return run_weyl(st);
        if (measurec->parsed()) return run_measure(st, intervals, eps_spec);
        if (verifyc->parsed()) return run_verify(suite, tol_scale);
    } catch (const config_error& e) {
        std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\"}\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "{\"error\":\"numerical\",\"module\":\"" << e.module() << "\",\"message\":\""
                  << e.what() << "\"}\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"internal\",\"message\":\"" << e.what() << "\"}\n";
        return 3;
    }
    return 0;
}
