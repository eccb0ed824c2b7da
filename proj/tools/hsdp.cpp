// hsdp: solve, fit, oracle and bench front end.
//
// Exit codes: 0 success (including runs that stop at the iteration cap), 2 invalid input,
// 3 numerical failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hsdp/alm.hpp"
#include "hsdp/oracle.hpp"
#include "hsdp/reference.hpp"

using json = nlohmann::json;
using namespace hsdp;

namespace {

struct SolveFlags {
    std::string model = "tfi";
    int         n     = 64;
    double      h     = 1.0;
    std::string algo  = "hier-dual";
    int         levels = 0;
    int         rank   = 20;
    double      sigma  = 0.0;
    int         max_outer   = 150;
    double      tol         = 1e-3;
    int         inner_iters = 100;
    int         fit_iters   = 100;
    std::string penalty     = "dual-raises";
    std::uint64_t seed      = 0;
    std::string trace, out, heatmap, config, save_m, save_s;
};

// Config file values fill in options the user did not pass on the command line.
void apply_config(const std::string &path, CLI::App &app, const std::map<std::string, std::function<void(const json &)>> &setters) {
    if(path.empty()) return;
    std::ifstream in(path);
    if(!in) throw InvalidInput("cannot open config file " + path);
    json cfg;
    try {
        in >> cfg;
    } catch(const json::exception &e) {
        throw InvalidInput(std::string("config file is not valid JSON: ") + e.what());
    }
    if(!cfg.is_object()) throw InvalidInput("config file must hold a flat JSON object");
    for(const auto &[key, value] : cfg.items()) {
        auto it = setters.find(key);
        if(it == setters.end()) throw InvalidInput("unknown config key '" + key + "'");
        if(app.count("--" + key) > 0) continue;
        try {
            it->second(value);
        } catch(const json::exception &) {
            throw InvalidInput("config key '" + key + "' has the wrong type");
        }
    }
}

template <class T> std::function<void(const json &)> setter(T &target) {
    return [&target](const json &v) { target = v.get<T>(); };
}

SolverConfig to_solver_config(const SolveFlags &f) {
    if(f.model != "tfi") throw InvalidInput("only the tfi model is supported");
    SolverConfig cfg;
    cfg.algorithm   = parse_algorithm(f.algo);
    cfg.sigma0      = f.sigma;
    cfg.levels      = f.levels;
    cfg.ranks       = {f.rank};
    cfg.tol         = f.tol;
    cfg.max_outer   = f.max_outer;
    cfg.inner_iters = f.inner_iters;
    cfg.fit_iters   = f.fit_iters;
    cfg.seed        = f.seed;
    if(f.penalty == "dual-raises") cfg.penalty_rule = PenaltyRule::DualRaises;
    else if(f.penalty == "primal-raises") cfg.penalty_rule = PenaltyRule::PrimalRaises;
    else throw InvalidInput("penalty rule must be dual-raises or primal-raises");
    return cfg;
}

json metrics_json(const Metrics &m) {
    return {{"eta_p", m.eta_p}, {"eta_d", m.eta_d}, {"eta_g", m.eta_g}, {"obj_primal", m.obj_primal},
            {"obj_dual", m.obj_dual}};
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream os(path);
    if(!os) throw InvalidInput("cannot write " + path);
    os << text;
}

void write_heatmap(const std::string &path, const CMat &S, int K) {
    const RMat         B = block_magnitudes(S, K);
    std::ostringstream os;
    os.precision(10);
    os << "i,j,magnitude\n";
    for(int i = 0; i < K; ++i)
        for(int j = 0; j < K; ++j) os << i + 1 << ',' << j + 1 << ',' << B(i, j) << '\n';
    write_text(path, os.str());
}

void emit(const json &j, const std::string &path) {
    if(path.empty()) std::cout << j.dump(2) << '\n';
    else write_text(path, j.dump(2) + "\n");
}

int cmd_solve(const SolveFlags &f) {
    const SolverConfig cfg = to_solver_config(f);
    cfg.validate(f.n);
    const SolveResult res = solve(f.n, f.h, cfg, [](const TraceRow &r) {
        std::cerr << "iter " << r.iter << "  eta_p " << r.eta_p << "  eta_d " << r.eta_d << "  eta_g " << r.eta_g
                  << "  obj " << r.obj_primal << "  sigma " << r.sigma << '\n';
        return true;
    });
    const double E0  = ff_ground_energy(f.n, f.h);
    json         out = {
        {"model", {{"name", f.model}, {"N", f.n}, {"h", f.h}}},
        {"algorithm", algorithm_name(cfg.algorithm)},
        {"config",
                 {{"levels", cfg.algorithm == Algorithm::Dense ? 0 : cfg.resolved_levels(f.n)},
                  {"rank", f.rank},
                  {"sigma0", cfg.resolved_sigma0(f.n)},
                  {"max_outer", cfg.max_outer},
                  {"tol", cfg.tol},
                  {"inner_iters", cfg.inner_iters},
                  {"fit_iters", cfg.fit_iters},
                  {"penalty", f.penalty},
                  {"seed", cfg.seed}}},
        {"final", metrics_json(res.final)},
        {"bound", res.bound()},
        {"exact_energy", E0},
        {"err_rel", (E0 - res.bound()) / std::abs(E0)},
        {"iterations", res.iterations},
        {"status", res.converged ? "converged" : "max_iters"},
        {"seconds", res.seconds},
        {"final_sigma", res.sigma},
    };
    emit(out, f.out);
    if(!f.trace.empty()) {
        std::ostringstream os;
        res.trace.write_csv(os);
        write_text(f.trace, os.str());
    }
    if(!f.heatmap.empty()) {
        const CMat S = res.S_hier ? hier_to_dense(*res.S_hier) : res.S_dense;
        write_heatmap(f.heatmap, S, f.n);
    }
    if(!f.save_s.empty()) {
        std::ofstream os(f.save_s, std::ios::binary);
        if(res.S_hier) write_hier(os, *res.S_hier);
        else write_dense(os, res.S_dense, f.n, kBasis);
    }
    if(!f.save_m.empty()) {
        std::ofstream os(f.save_m, std::ios::binary);
        if(res.M_hier) write_hier(os, *res.M_hier);
        else write_dense(os, res.M_dense, f.n, kBasis);
    }
    return 0;
}

struct FitFlags {
    int           n = 64;
    double        h = 1.0;
    double        accuracy = 1e-4;
    std::string   reference_s, reference_m;
    std::string   target = "both";
    int           levels = 0;
    int           rank   = 20;
    int           iters  = 100;
    std::uint64_t seed   = 0;
    std::string   out;
};

int cmd_fit(const FitFlags &f) {
    if(f.target != "dual" && f.target != "primal" && f.target != "both")
        throw InvalidInput("--target must be dual, primal or both");
    CMat S, M;
    int  K = f.n;
    json info;
    auto load = [&K](const std::string &path) {
        std::ifstream is(path, std::ios::binary);
        if(!is) throw InvalidInput("missing reference file " + path);
        int  k = 0, c = 0;
        CMat A = read_dense(is, &k, &c);
        if(c != kBasis) throw InvalidInput("reference file has basis size " + std::to_string(c));
        K = k;
        return A;
    };
    if(!f.reference_s.empty() || !f.reference_m.empty()) {
        if(!f.reference_s.empty()) S = load(f.reference_s);
        if(!f.reference_m.empty()) M = load(f.reference_m);
        info["reference"] = "file";
    } else {
        const auto ref = reference_solution(f.n, f.h, f.accuracy);
        S              = ref.S;
        M              = ref.M;
        info["reference"] = {{"N", f.n}, {"h", f.h}, {"accuracy", f.accuracy}, {"iterations", ref.run.iterations},
                             {"bound", ref.run.bound()}};
    }
    const int m = f.levels > 0 ? f.levels : default_levels(K);
    const std::vector<int> ranks{f.rank};
    json out = {{"N", K}, {"levels", m}, {"rank", f.rank}, {"iters", f.iters}, {"seed", f.seed}, {"source", info}};
    if(f.target != "primal") {
        if(S.size() == 0) throw InvalidInput("no dual reference to fit");
        out["err_S"] = fit_hier_to_dense(S, K, kBasis, m, ranks, f.iters, f.seed).err;
    }
    if(f.target != "dual") {
        if(M.size() == 0) throw InvalidInput("no primal reference to fit");
        out["err_M"] = fit_hier_to_dense(M, K, kBasis, m, ranks, f.iters, f.seed).err;
    }
    emit(out, f.out);
    return 0;
}

int cmd_oracle(int n, double h, const std::string &method, const std::string &path) {
    std::string used = method;
    if(used == "auto") used = n <= 12 ? "ed" : "ff";
    double e = 0.0;
    if(used == "ed") e = ed_ground_energy(n, h);
    else if(used == "ff") e = ff_ground_energy(n, h);
    else throw InvalidInput("--method must be ed, ff or auto");
    emit({{"N", n}, {"h", h}, {"method", used}, {"energy", e}, {"per_site", e / n}}, path);
    return 0;
}

int cmd_bench(const std::vector<std::string> &algos, const std::vector<int> &sizes, int iters, int inner_iters,
              double h, const std::string &path) {
    std::ostringstream os;
    os << "algo,N,iterations,ms_per_iter,ratio\n";
    for(const auto &a : algos) {
        double prev = 0.0;
        for(int n : sizes) {
            SolverConfig cfg;
            cfg.algorithm   = parse_algorithm(a);
            cfg.max_outer   = iters;
            cfg.inner_iters = inner_iters;
            cfg.fit_iters   = inner_iters;
            cfg.tol         = 1e-300;
            const auto   res = solve(n, h, cfg);
            double       ms  = 0.0;
            for(const auto &r : res.trace.rows) ms += r.wall_ms;
            ms /= static_cast<double>(res.trace.rows.size());
            os << a << ',' << n << ',' << res.trace.rows.size() << ',' << ms << ',';
            if(prev > 0.0) os << ms / prev;
            os << '\n';
            std::cerr << a << " N=" << n << " " << ms << " ms/iter\n";
            prev = ms;
        }
    }
    if(path.empty()) std::cout << os.str();
    else write_text(path, os.str());
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Hierarchical ALM solver for cluster moment relaxations"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);

    SolveFlags sf;
    auto      *solve_cmd = app.add_subcommand("solve", "run one of the ALM engines");
    solve_cmd->add_option("--model", sf.model, "model name (tfi)");
    solve_cmd->add_option("--n", sf.n, "number of sites");
    solve_cmd->add_option("--h", sf.h, "transverse field");
    solve_cmd->add_option("--algo", sf.algo, "dense | hier-dual | hier-both");
    solve_cmd->add_option("--levels", sf.levels, "hierarchy levels (0: log2(N/8), at least 1)");
    solve_cmd->add_option("--rank", sf.rank, "columns per level");
    solve_cmd->add_option("--sigma", sf.sigma, "initial penalty (0: 1 up to N=512, else 0.1)");
    solve_cmd->add_option("--max-outer", sf.max_outer, "outer iteration cap");
    solve_cmd->add_option("--tol", sf.tol, "stop when every relative residual is below this");
    solve_cmd->add_option("--inner-iters", sf.inner_iters, "quasi-Newton iterations per inner solve");
    solve_cmd->add_option("--fit-iters", sf.fit_iters, "quasi-Newton iterations per primal fit (hier-both)");
    solve_cmd->add_option("--penalty", sf.penalty, "dual-raises | primal-raises");
    solve_cmd->add_option("--seed", sf.seed, "factor initialization seed");
    solve_cmd->add_option("--trace", sf.trace, "convergence trace CSV path");
    solve_cmd->add_option("--out", sf.out, "result JSON path (stdout if omitted)");
    solve_cmd->add_option("--heatmap", sf.heatmap, "block magnitude grid of S as CSV");
    solve_cmd->add_option("--save-m", sf.save_m, "binary dump of the final M");
    solve_cmd->add_option("--save-s", sf.save_s, "binary dump of the final S");
    solve_cmd->add_option("--config", sf.config, "flat JSON file with defaults for the flags above");

    FitFlags ff;
    auto    *fit_cmd = app.add_subcommand("fit", "fit hierarchical factors to reference solutions");
    fit_cmd->add_option("--n", ff.n, "sites for a generated reference");
    fit_cmd->add_option("--h", ff.h, "field for a generated reference");
    fit_cmd->add_option("--accuracy", ff.accuracy, "accuracy of a generated reference");
    fit_cmd->add_option("--reference-s", ff.reference_s, "dense binary dual reference");
    fit_cmd->add_option("--reference-m", ff.reference_m, "dense binary primal reference");
    fit_cmd->add_option("--target", ff.target, "dual | primal | both");
    fit_cmd->add_option("--levels", ff.levels, "hierarchy levels (0: default for N)");
    fit_cmd->add_option("--rank", ff.rank, "columns per level");
    fit_cmd->add_option("--iters", ff.iters, "quasi-Newton iterations");
    fit_cmd->add_option("--seed", ff.seed, "initialization seed");
    fit_cmd->add_option("--out", ff.out, "report JSON path (stdout if omitted)");

    int         on = 8;
    double      oh = 1.0;
    std::string omethod = "auto", oout;
    auto       *oracle_cmd = app.add_subcommand("oracle", "exact ground energy");
    oracle_cmd->add_option("--n", on, "number of sites");
    oracle_cmd->add_option("--h", oh, "transverse field");
    oracle_cmd->add_option("--method", omethod, "ed | ff | auto");
    oracle_cmd->add_option("--out", oout, "JSON path (stdout if omitted)");

    std::vector<std::string> balgos{"hier-dual"};
    std::vector<int>         bsizes{256, 512, 1024};
    int                      biters = 3, binner = 5;
    double                   bh     = 1.0;
    std::string              bout;
    auto                    *bench_cmd = app.add_subcommand("bench", "per-iteration timing across sizes");
    bench_cmd->add_option("--algo", balgos, "engines to time")->delimiter(',');
    bench_cmd->add_option("--sizes", bsizes, "sizes to time")->delimiter(',');
    bench_cmd->add_option("--iters", biters, "outer iterations per size");
    bench_cmd->add_option("--inner-iters", binner, "inner iterations per outer iteration");
    bench_cmd->add_option("--h", bh, "transverse field");
    bench_cmd->add_option("--out", bout, "CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if(solve_cmd->parsed()) {
            const std::map<std::string, std::function<void(const json &)>> setters{
                {"model", setter(sf.model)},       {"n", setter(sf.n)},
                {"h", setter(sf.h)},               {"algo", setter(sf.algo)},
                {"levels", setter(sf.levels)},     {"rank", setter(sf.rank)},
                {"sigma", setter(sf.sigma)},       {"max-outer", setter(sf.max_outer)},
                {"tol", setter(sf.tol)},           {"inner-iters", setter(sf.inner_iters)},
                {"fit-iters", setter(sf.fit_iters)}, {"penalty", setter(sf.penalty)},
                {"seed", setter(sf.seed)},         {"trace", setter(sf.trace)},
                {"out", setter(sf.out)},           {"heatmap", setter(sf.heatmap)},
                {"save-m", setter(sf.save_m)},     {"save-s", setter(sf.save_s)},
            };
            apply_config(sf.config, *solve_cmd, setters);
            return cmd_solve(sf);
        }
        if(fit_cmd->parsed()) return cmd_fit(ff);
        if(oracle_cmd->parsed()) return cmd_oracle(on, oh, omethod, oout);
        if(bench_cmd->parsed()) return cmd_bench(balgos, bsizes, biters, binner, bh, bout);
    } catch(const InvalidInput &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch(const NumericalFailure &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch(const std::exception &e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
