#include <cstdio>
#include <filesystem>
#include <list>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <elslab/experiment.hpp>

namespace {

using elslab::lab::ExperimentConfig;
using elslab::lab::ExperimentResult;

struct Globals {
    std::string out_dir = ".";
    double tol_scale = 1.0;
    double rmax = 0.0;
    bool json_summary = false;
    bool out_dir_set = false, tol_scale_set = false, rmax_set = false;
};

/// Per-subcommand option storage; CLI11 binds straight into kv values.
struct SubState {
    std::string kind;
    std::map<std::string, std::string> kv;
    std::string out;
};

struct OptSpec {
    const char* flag;
    const char* key;
    const char* help;
};

const std::vector<OptSpec> kShootKnobs = {
    {"--rel-tol", "rel_tol", "integrator relative tolerance"},
    {"--abs-tol", "abs_tol", "integrator absolute tolerance"},
    {"--r0", "r0", "start radius (negative: density's natural start)"},
    {"--blowup-threshold", "blowup_threshold", "push-confirmation threshold"},
    {"--probe-horizon", "probe_horizon", "initial classification horizon"},
    {"--probe-horizon-max", "probe_horizon_max", "horizon escalation cap"},
    {"--max-bisect", "max_bisect", "bisection iteration cap"},
};

/// Route `--out path.csv` into the artifact basename (and directory when the
/// path carries one and --out-dir was not given).
void apply_out(ExperimentConfig& cfg, const std::string& out,
               bool out_dir_explicit) {
    if (out.empty()) return;
    const std::filesystem::path p(out);
    if (p.has_parent_path() && !out_dir_explicit)
        cfg.out_dir = p.parent_path().string();
    const std::string ext = p.extension().string();
    cfg.name = (ext == ".csv" || ext == ".json") ? p.stem().string()
                                                 : p.filename().string();
}

ExperimentConfig make_config(const Globals& g, const SubState& s) {
    ExperimentConfig cfg;
    cfg.kind = s.kind;
    cfg.out_dir = g.out_dir;
    cfg.tol_scale = g.tol_scale;
    cfg.rmax = g.rmax;
    for (const auto& [k, v] : s.kv)
        if (!v.empty()) cfg.kv[k] = v;
    apply_out(cfg, s.out, g.out_dir_set);
    return cfg;
}

int report(const ExperimentResult& res, const ExperimentConfig& cfg,
           bool json_summary) {
    if (res.exit_code == 2 || res.exit_code == 3) {
        std::fprintf(stderr, "%s\n", res.summary_json.c_str());
        return res.exit_code;
    }
    if (json_summary) {
        std::printf("%s\n", res.summary_json.c_str());
        return res.exit_code;
    }
    std::printf("[%s] %s\n", cfg.kind.c_str(),
                res.exit_code == 0 ? "pass" : "FAIL");
    for (const auto& c : res.checks)
        std::printf("  %-32s %s  margin=%.6g tolerance=%.6g\n",
                    c.name.c_str(), c.pass ? "pass" : "FAIL", c.margin,
                    c.tolerance);
    for (const auto& a : res.artifacts)
        std::printf("  wrote %s\n", a.c_str());
    return res.exit_code;
}

int run_config_path(const Globals& g, const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (fs::is_directory(path))
        files = elslab::lab::list_config_files(path);
    else
        files.push_back(path);
    if (files.empty()) {
        std::fprintf(stderr, "{\"error\": \"no .cfg files in %s\"}\n",
                     path.c_str());
        return 2;
    }
    int worst = 0;
    std::string batch_json = "[";
    for (std::size_t i = 0; i < files.size(); ++i) {
        ExperimentConfig cfg;
        try {
            cfg = elslab::lab::parse_config_file(files[i]);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "{\"error\": \"%s\"}\n", e.what());
            worst = std::max(worst, 2);
            continue;
        }
        if (g.out_dir_set) cfg.out_dir = g.out_dir;
        if (g.tol_scale_set) cfg.tol_scale = g.tol_scale;
        if (g.rmax_set) cfg.rmax = g.rmax;
        const ExperimentResult res = elslab::lab::run_experiment(cfg);
        if (g.json_summary) {
            batch_json += (i ? ",\n" : "\n") + res.summary_json;
            if (res.exit_code == 2 || res.exit_code == 3)
                std::fprintf(stderr, "%s\n", res.summary_json.c_str());
        } else {
            std::printf("-- %s\n", files[i].c_str());
            report(res, cfg, false);
        }
        worst = std::max(worst, res.exit_code);
    }
    if (g.json_summary) std::printf("%s\n]\n", batch_json.c_str());
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for entire large solutions of "
                 "Laplace u = rho(x) f(u)"};
    app.require_subcommand(1);

    Globals g;
    auto* o1 = app.add_option("--out-dir", g.out_dir,
                              "directory for CSV/JSON artifacts");
    auto* o2 = app.add_option("--tol-scale", g.tol_scale,
                              "multiplies check tolerances");
    auto* o3 = app.add_option("--rmax", g.rmax,
                              "integration horizon override");
    app.add_flag("--json-summary", g.json_summary,
                 "print the machine-readable summary to stdout");

    std::list<SubState> states;
    int rc = 0;

    auto sync_globals = [&]() {
        g.out_dir_set = o1->count() > 0;
        g.tol_scale_set = o2->count() > 0;
        g.rmax_set = o3->count() > 0;
    };

    auto add_kind = [&](const char* cmd, const char* kind, const char* about,
                        const std::vector<OptSpec>& opts,
                        bool shoot_knobs = false) -> CLI::App* {
        CLI::App* sub = app.add_subcommand(cmd, about);
        sub->fallthrough();
        states.emplace_back();
        SubState& st = states.back();
        st.kind = kind;
        for (const auto& o : opts)
            sub->add_option(o.flag, st.kv[o.key], o.help);
        if (shoot_knobs)
            for (const auto& o : kShootKnobs)
                sub->add_option(o.flag, st.kv[o.key], o.help);
        sub->add_option("--out", st.out, "artifact path or basename");
        sub->callback([&g, &st, &rc, &sync_globals]() {
            sync_globals();
            const ExperimentConfig cfg = make_config(g, st);
            rc = report(elslab::lab::run_experiment(cfg), cfg,
                        g.json_summary);
        });
        return sub;
    };

    add_kind("shoot", "shoot", "integrate one radial trajectory and classify",
             {{"--nl", "nl", "nonlinearity key"},
              {"--pot", "pot", "density key"},
              {"--D", "D", "dimension (>= 3)"},
              {"--u0", "u0", "initial value"},
              {"--du0", "du0", "initial slope"}},
             true);

    add_kind("els-find", "els-find",
             "bisect the separatrix slope for an entire large solution",
             {{"--nl", "nl", "nonlinearity key"},
              {"--pot", "pot", "density key"},
              {"--D", "D", "dimension (>= 3)"},
              {"--u1", "u1", "boundary value at the start radius"}},
             true);

    add_kind("bbup", "bbup",
             "boundary blow-up solution on a ball (constant density)",
             {{"--f", "f", "nonlinearity key"},
              {"--m", "m", "constant density value"},
              {"--R", "R", "ball radius"},
              {"--D", "D", "dimension (>= 3)"}},
             true);

    add_kind("transform", "transform",
             "rewrite a trajectory in the (t, v, V) profile variables",
             {{"--in", "in", "solution CSV to transform"},
              {"--u1", "u1", "shoot in-process instead of reading --in"},
              {"--nl", "nl", "nonlinearity key (enables residual check)"},
              {"--pot", "pot", "density key (for --u1 or exact curvature)"},
              {"--alpha", "alpha", "tail exponent of the density"},
              {"--D", "D", "dimension (>= 3)"}},
             true);

    add_kind("uniq-gap", "uniq-gap",
             "pointwise gap between two solutions against its decay envelope",
             {{"--a", "a", "first solution CSV"},
              {"--b", "b", "second solution CSV"},
              {"--u1-a", "u1_a", "shoot the first solution from this value"},
              {"--u1-b", "u1_b", "shoot the second solution from this value"},
              {"--nl", "nl", "nonlinearity key"},
              {"--pot", "pot", "density key"},
              {"--alpha", "alpha", "tail exponent (default: density's)"},
              {"--D", "D", "dimension (>= 3)"}},
             true);

    {
        CLI::App* sub = app.add_subcommand(
            "bounds", "certify one bound report (wbeta|lower|gamma|energy|"
                      "fiddgr)");
        sub->fallthrough();
        states.emplace_back();
        SubState& st = states.back();
        static std::string op;
        sub->add_option("op", op, "wbeta|lower|gamma|energy|fiddgr")
            ->required();
        for (const auto& o : std::vector<OptSpec>{
                 {"--nl", "nl", "nonlinearity key"},
                 {"--pot", "pot", "density key"},
                 {"--D", "D", "dimension (>= 3)"},
                 {"--beta", "beta", "subsolution ceiling (number or inf)"},
                 {"--r-lo", "r_lo", "grid start (wbeta)"},
                 {"--r-hi", "r_hi", "grid end (wbeta)"},
                 {"--per-decade", "per_decade", "grid density (wbeta)"},
                 {"--u1", "u1", "shoot the test solution from this value"},
                 {"--in", "in", "solution CSV instead of --u1"},
                 {"--alpha", "alpha", "growth-ceiling exponent (gamma)"},
                 {"--c", "c", "growth-ceiling prefactor in (0,1) (gamma)"},
                 {"--R", "R", "energy anchor radius"},
                 {"--M", "M", "ratio-hypothesis threshold (fiddgr)"}})
            sub->add_option(o.flag, st.kv[o.key], o.help);
        for (const auto& o : kShootKnobs)
            sub->add_option(o.flag, st.kv[o.key], o.help);
        sub->add_option("--out", st.out, "artifact path or basename");
        sub->callback([&g, &st, &rc, &sync_globals]() {
            sync_globals();
            st.kind = "bounds:" + op;
            const ExperimentConfig cfg = make_config(g, st);
            rc = report(elslab::lab::run_experiment(cfg), cfg,
                        g.json_summary);
        });
    }

    add_kind("ko-check", "ko-check",
             "superlinearity integral int ds/sqrt(F) from a lower limit",
             {{"--nl", "nl", "nonlinearity key"},
              {"--lower", "lower", "lower integration limit"}});

    add_kind("hrho-check", "hrho-check",
             "tail mass integral int r rho(r) dr",
             {{"--pot", "pot", "density key"},
              {"--D", "D", "dimension (>= 3)"}});

    add_kind("ellipsoid-sweep", "ellipsoid-sweep",
             "curvature criterion margins over an (a, alpha) sweep",
             {{"--a", "a", "comma list of aspect ratios"},
              {"--alpha-lo", "alpha_lo", "sweep start"},
              {"--alpha-hi", "alpha_hi", "sweep end"},
              {"--steps", "steps", "sweep sample count"},
              {"--D", "D", "dimension (>= 3)"},
              {"--level", "level", "level-set value"},
              {"--samples", "samples", "points sampled per level set"}});

    add_kind("no-maximal-demo", "no-maximal-demo",
             "unbounded ladder of large solutions for shifted oscillating f",
             {{"--pot", "pot", "density key"},
              {"--D", "D", "dimension (>= 3)"},
              {"--u1", "u1", "boundary value above each shift"},
              {"--ks", "ks", "comma list of ladder indices"}},
             true);

    {
        CLI::App* sub = app.add_subcommand(
            "run", "run a config file, or every .cfg in a directory");
        static std::string path;
        sub->add_option("path", path, "config file or directory")->required();
        sub->callback([&g, &rc, &sync_globals]() {
            sync_globals();
            rc = run_config_path(g, path);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fprintf(stderr, "{\"error\": \"%s\"}\n", e.what());
        return 2;
    }
    return rc;
}
