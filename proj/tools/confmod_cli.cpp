#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "confmod/acceptance.hpp"
#include "confmod/config.hpp"
#include "confmod/delgrid.hpp"
#include "confmod/errors.hpp"
#include "confmod/experiments.hpp"

namespace {

using namespace confmod;
using domains::DomainTag;
using std::numbers::pi;

enum Exit { ok = 0, invalid = 1, rejected = 2, numerical = 3 };

/// Accepts "a", "bi", "a+bi", "a-bi", "i", "-i".
std::complex<double> parse_complex(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    if (s.empty()) throw validation_error("empty complex number");
    auto number = [&](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size()) throw validation_error("bad complex number '" + s + "'");
        return v;
    };
    if (s.back() != 'i') return {number(s), 0.0};
    std::string body = s.substr(0, s.size() - 1);
    // split at the last sign that is not part of an exponent
    for (std::size_t k = body.size(); k-- > 1;)
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E')
            return {number(body.substr(0, k)), number(body.substr(k))};
    return {0.0, number(body)};
}

currents::GeodesicBox parse_box(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 4) throw validation_error("--box needs four comma-separated boundary points");
    std::array<currents::CirclePoint, 4> c;
    for (int k = 0; k < 4; ++k) {
        auto z = parse_complex(parts[k]);
        if (std::abs(std::abs(z) - 1.0) > 1e-9) throw validation_error("box point " + parts[k] + " is not on the unit circle");
        c[k] = currents::CirclePoint::from_angle(std::arg(z));
    }
    return {c[0], c[1], c[2], c[3]};
}

/// rect:WxH, annulus:r,R or disk:LAMBDA (symmetric disk quadrilateral).
delgrid::MeshDomain parse_grid(const std::string& spec, double h) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw validation_error("--grid expects kind:parameters, e.g. rect:2x1");
    std::string kind = spec.substr(0, colon), args = spec.substr(colon + 1);
    auto num = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size() || t.empty()) throw validation_error("bad number '" + t + "' in --grid " + spec);
        return v;
    };
    if (kind == "rect") {
        auto x = args.find('x');
        if (x == std::string::npos) throw validation_error("rect expects WxH");
        return delgrid::rectangle_domain(num(args.substr(0, x)), num(args.substr(x + 1)), h);
    }
    if (kind == "annulus") {
        auto c = args.find(',');
        if (c == std::string::npos) throw validation_error("annulus expects r,R");
        return delgrid::annulus_domain(num(args.substr(0, c)), num(args.substr(c + 1)), h);
    }
    if (kind == "disk") {
        double lambda = num(args);
        if (!(lambda > 1.0)) throw validation_error("disk expects a cross-ratio above 1");
        double a = std::acos(1.0 / std::sqrt(lambda));
        return delgrid::disk_quadrilateral_domain(currents::GeodesicBox::from_angles(-a, a, pi - a, pi + a), h);
    }
    throw validation_error("unknown grid kind '" + kind + "' (expected rect, annulus or disk)");
}

void print_modulus(const conformal::Modulus& m) {
    std::cout << std::setprecision(15) << "value " << m.value << "\nmethod " << conformal::to_string(m.method)
              << "\nerror_estimate " << std::setprecision(3) << m.error_estimate << '\n';
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / name);
    if (!f) throw validation_error("cannot write " + (dir / name).string());
    f.precision(17);
    return f;
}

struct LimitsFlags {
    std::string config;
    std::string out;
    std::string method;
    bool quick = false;
};

/// Runs scenarios concurrently; results come back in input order.
std::vector<experiments::RatioTable> run_scenarios(const std::vector<experiments::Scenario>& scenarios) {
    const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
    std::vector<experiments::RatioTable> out;
    for (std::size_t start = 0; start < scenarios.size(); start += width) {
        std::vector<std::future<experiments::RatioTable>> batch;
        for (std::size_t k = start; k < std::min(scenarios.size(), start + width); ++k)
            batch.push_back(std::async(std::launch::async, [&, k] { return experiments::ratio_table(scenarios[k]); }));
        for (auto& f : batch) out.push_back(f.get());
    }
    return out;
}

void print_rates(const std::string& label, const std::vector<experiments::ConvergenceSeries>& series) {
    if (series.empty()) return;
    if (series.front().t.size() < 4) {
        std::cout << "note: " << label << " schedule has " << series.front().t.size()
                  << " points; rate fit skipped\n";
        return;
    }
    for (const auto& f : experiments::rate_report(series))
        std::cout << "  rate " << (f.id == label ? label : label + " " + f.id) << ": slope " << std::setprecision(3) << f.slope << " from "
                  << f.points << " points\n";
}

int cmd_limits(DomainTag domain, const LimitsFlags& flags) {
    auto cfg = flags.config.empty() ? config::default_config(domain) : config::load_config(flags.config);
    if (cfg.domain != domain)
        throw validation_error("config describes a " + domains::to_string(cfg.domain) + " run, not a " +
                               domains::to_string(domain) + " run");
    if (!flags.method.empty())
        for (auto& s : cfg.scenarios) s.method = experiments::parse_method(flags.method);
    if (flags.quick)
        for (auto& s : cfg.scenarios) s.method = experiments::Method::elliptic;
    std::filesystem::path dir = flags.out.empty() ? cfg.output_dir : flags.out;

    auto tables = run_scenarios(cfg.scenarios);
    bool within = true;
    {
        auto f = open_out(dir, "ratios.csv");
        experiments::write_csv_header(f);
        for (const auto& t : tables) experiments::write_csv(f, t);
    }
    std::cout << "scenario                  expected  final-gap  limit      grid-gap   agreement\n";
    for (const auto& t : tables) {
        double gap = t.elliptic.empty() ? t.grid_final_gap : t.elliptic_final_gap;
        bool pass = gap <= cfg.tolerances.final_gap && !(t.agreement > cfg.tolerances.agreement);
        within = within && pass;
        std::cout << std::left << std::setw(26) << t.scenario_id << std::setw(10) << t.expected_limit
                  << std::setprecision(4) << std::setw(11) << gap << std::setw(11)
                  << (t.elliptic.empty() ? t.grid_limit : t.elliptic_limit) << std::setw(11) << t.grid_final_gap
                  << std::setw(11) << t.agreement << (pass ? "" : "  above tolerance") << '\n';
    }
    for (const auto& t : tables)
        if (!t.elliptic.empty()) print_rates(t.scenario_id, experiments::series_of(t));

    experiments::CurrentsOptions co;
    co.margin = cfg.tolerances.margin;
    co.tolerance = cfg.tolerances.fit;
    auto currents_run = [&](const std::string& name, const std::vector<currents::NamedBox>& boxes, auto pipeline) {
        if (boxes.empty()) return;
        auto t = pipeline(boxes, cfg.currents_schedule, co);
        auto f = open_out(dir, name + ".csv");
        experiments::write_csv_header(f);
        experiments::write_csv(f, t, name);
        std::cout << t.pipeline << ": constant " << std::setprecision(8) << t.constant << ", max residual "
                  << std::setprecision(3) << t.max_residual << (t.flagged ? "  FLAGGED" : "") << '\n';
        for (std::size_t k = 0; k < t.table.rows.size(); ++k)
            std::cout << "  " << std::left << std::setw(20) << t.table.rows[k].box_id << " limit "
                      << std::setprecision(8) << t.table.rows[k].limit << "  target " << t.table.rows[k].target
                      << '\n';
        print_rates(t.pipeline, experiments::series_of(t));
        within = within && !t.flagged;
    };
    if (domain == DomainTag::strip) {
        currents_run("shrink", cfg.shrink_boxes, experiments::strip_shrink_currents);
        currents_run("stretch", cfg.stretch_boxes, experiments::strip_stretch_currents);
    } else {
        currents_run("currents", cfg.chimney_boxes, experiments::chimney_currents);
    }

    if (!cfg.truncation_radii.empty() && !cfg.scenarios.empty()) {
        const auto& s = cfg.scenarios.front();
        double eps = s.grid_epsilons.empty() ? s.epsilons.back() : s.grid_epsilons.back();
        auto c = domains::canonical_arcs(domain);
        auto d = experiments::deformation(domain, eps);
        auto i = domains::deform_arc(d, c.i0), j = domains::deform_arc(d, c.j0);
        auto table = delgrid::truncation_study(
            [&](double r) {
                auto g = s.grid;
                g.radius = r;
                return delgrid::family_domain(i, j, g);
            },
            cfg.truncation_radii);
        auto f = open_out(dir, "truncation.csv");
        f << "radius,modulus,difference\n";
        for (const auto& row : table.rows)
            f << row.radius << ',' << row.modulus << ',' << (std::isnan(row.difference) ? "" : std::to_string(row.difference))
              << '\n';
        std::cout << "truncation study at eps=" << eps << (table.certified() ? ": certified\n" : ": not certified\n");
    }
    std::cout << "wrote " << dir.string() << '\n';
    return within ? ok : rejected;
}

int cmd_grid_solve(const std::string& grid, double h, const std::string& cfg_path, const std::string& scenario,
                   double epsilon, bool dual, const std::string& out) {
    std::optional<delgrid::MeshDomain> dom;
    if (!grid.empty()) {
        dom = parse_grid(grid, h);
    } else {
        if (cfg_path.empty() || scenario.empty())
            throw validation_error("grid-solve needs --grid, or --config with --scenario");
        auto cfg = config::load_config(cfg_path);
        auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(), [&](const auto& s) { return s.id == scenario; });
        if (it == cfg.scenarios.end()) throw validation_error("no scenario '" + scenario + "' in " + cfg_path);
        auto d = experiments::deformation(cfg.domain, epsilon);
        dom = delgrid::family_domain(domains::deform_arc(d, it->i), domains::deform_arc(d, it->j), it->grid);
    }
    auto lm = dom->build();
    auto s = delgrid::solve_potential(lm, dual);
    std::filesystem::path dir = out.empty() ? "out/grid" : out;
    auto f = open_out(dir, "solution.csv");
    delgrid::write_solution_csv(f, lm, s);
    std::cout << std::setprecision(12) << "nodes " << lm.mesh.nodes.size() << "\nenergy " << s.energy
              << "\nresidual " << s.residual << "\niterations " << s.iterations << "\nmax_principle_violation "
              << s.max_principle_violation << "\nwrote " << (dir / "solution.csv").string() << '\n';
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal moduli, currents and deformation limits"};
    app.require_subcommand(1);

    auto* modulus = app.add_subcommand("modulus", "Modulus of a quadrilateral");
    double lambda = 0.0;
    std::string box, grid;
    double h = 1.0 / 32;
    bool dual = false;
    auto* lambda_opt = modulus->add_option("--lambda", lambda, "Cross-ratio of a disk quadrilateral");
    auto* box_opt = modulus->add_option("--box", box, "Four boundary points a,b,c,d (e.g. 1,i,-1,-i)");
    auto* grid_opt = modulus->add_option("--grid", grid, "rect:WxH, annulus:r,R or disk:LAMBDA");
    modulus->add_option("--spacing", h, "Grid spacing for --grid");
    modulus->add_flag("--dual", dual, "Conjugate family (grid only)");
    lambda_opt->excludes(box_opt)->excludes(grid_opt);
    box_opt->excludes(grid_opt);

    LimitsFlags strip_flags, chimney_flags;
    auto add_limits = [&](const char* name, const char* help, LimitsFlags& f) {
        auto* sc = app.add_subcommand(name, help);
        sc->add_option("--config", f.config, "YAML configuration (built-in defaults when omitted)");
        sc->add_option("--out", f.out, "Output directory");
        sc->add_option("--method", f.method, "elliptic, grid or both")
            ->check(CLI::IsMember({"elliptic", "grid", "both"}));
        sc->add_flag("--quick", f.quick, "Elliptic path only");
        return sc;
    };
    auto* strip = add_limits("strip-limits", "Strip ratio tables and currents", strip_flags);
    auto* chimney = add_limits("chimney-limits", "Chimney ratio tables and currents", chimney_flags);

    auto* solve = app.add_subcommand("grid-solve", "Discrete potential of a grid family, written as CSV");
    std::string solve_grid, solve_config, solve_scenario, solve_out;
    double solve_h = 1.0 / 32, solve_eps = 1.0;
    bool solve_dual = false;
    solve->add_option("--grid", solve_grid, "rect:WxH, annulus:r,R or disk:LAMBDA");
    solve->add_option("--spacing", solve_h, "Grid spacing for --grid");
    solve->add_option("--config", solve_config, "YAML configuration holding the scenario");
    solve->add_option("--scenario", solve_scenario, "Scenario id");
    solve->add_option("--epsilon", solve_eps, "Deformation parameter");
    solve->add_flag("--dual", solve_dual, "Conjugate family");
    solve->add_option("--out", solve_out, "Output directory");

    auto* accept = app.add_subcommand("accept", "Run the acceptance suite");
    bool accept_quick = false;
    accept->add_flag("--quick", accept_quick, "Skip the chimney grid path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : invalid;
    }

    try {
        if (*modulus) {
            if (*lambda_opt) {
                print_modulus(conformal::quad_modulus(lambda));
            } else if (*box_opt) {
                print_modulus(conformal::quad_modulus_box(parse_box(box)));
            } else if (*grid_opt) {
                auto dom = parse_grid(grid, h);
                print_modulus(dual ? delgrid::grid_modulus_dual(dom) : delgrid::grid_modulus(dom));
            } else {
                throw validation_error("modulus needs one of --lambda, --box, --grid");
            }
            return ok;
        }
        if (*strip) return cmd_limits(DomainTag::strip, strip_flags);
        if (*chimney) return cmd_limits(DomainTag::chimney, chimney_flags);
        if (*solve) return cmd_grid_solve(solve_grid, solve_h, solve_config, solve_scenario, solve_eps, solve_dual, solve_out);
        if (*accept) {
            acceptance::Options o;
            o.quick = accept_quick;
            o.tolerance_scale = acceptance::tolerance_scale_from_env();
            auto results = acceptance::run_all(o);
            bool all = true;
            for (const auto& c : results) {
                std::cout << acceptance::format(c);
                all = all && c.passed;
            }
            std::cout << (all ? "all criteria passed\n" : "acceptance failed\n");
            return all ? ok : rejected;
        }
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return numerical;
    } catch (const currents::invalid_boundary_map& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid;
    }
    return ok;
}
