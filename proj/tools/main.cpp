// riskplan: command-line runner for constrained risk-averse MDP/POMDP
// synthesis and Monte Carlo robustness evaluation.
//
// Subcommands: gen, solve-mdp, solve-pomdp, simulate, export-dcp.
// Exit codes: 0 success, 2 config error, 3 solver failure, 4 input mismatch.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskplan/gridworld.hpp"
#include "riskplan/mdp_solver.hpp"
#include "riskplan/model.hpp"
#include "riskplan/pomdp_solver.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/rng.hpp"
#include "riskplan/serialization.hpp"
#include "riskplan/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace riskplan;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitMismatch = 4;

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<std::string> measure;
    std::optional<std::string> out;
};

struct RunConfig {
    json raw;
    std::optional<GridSpec> grid;
    std::optional<std::string> model_path;
    RiskMeasure measure = RiskMeasure::expectation();
    Vec budgets;
    SolverParams solver;
    PiParams pi;
    int mc_runs = 100;
    int mc_horizon = 400;
    std::uint64_t mc_master_seed = 1;
    bool mc_per_run_csv = false;
    std::string output_dir = "out";
};

SolverParams solver_from_json(const json& j) {
    SolverParams p;
    p.vi_tol = j.value("vi_tol", p.vi_tol);
    p.vi_max_iters = j.value("vi_max_iters", p.vi_max_iters);
    p.dual_step0 = j.value("dual_step0", p.dual_step0);
    p.dual_iters = j.value("dual_iters", p.dual_iters);
    p.lambda_cap = j.value("lambda_cap", p.lambda_cap);
    if (j.contains("inner")) {
        const json& in = j["inner"];
        p.inner.zeta_max = in.value("zeta_max", p.inner.zeta_max);
        p.inner.tol = in.value("tol", p.inner.tol);
        p.inner.max_iters = in.value("max_iters", p.inner.max_iters);
    }
    return p;
}

RunConfig parse_config(const std::string& path, const CliOverrides& ov) {
    RunConfig cfg;
    cfg.raw = load_json_file(path);
    const json& j = cfg.raw;

    if (!j.contains("scenario")) throw IoError("config: missing 'scenario'");
    const json& sc = j["scenario"];
    const bool has_grid = sc.contains("grid");
    const bool has_model = sc.contains("model");
    if (has_grid == has_model) {
        throw IoError("config: scenario must hold exactly one of 'grid' or 'model'");
    }
    if (has_grid) cfg.grid = gridspec_from_json(sc["grid"]);
    if (has_model) {
        cfg.model_path = sc["model"].get<std::string>();
        if (!fs::exists(*cfg.model_path)) {
            throw IoError("config: model file does not exist: " + *cfg.model_path);
        }
    }
    if (j.contains("measure")) cfg.measure = measure_from_json(j["measure"]);
    cfg.budgets = j.value("budgets", Vec{});
    if (j.contains("solver")) cfg.solver = solver_from_json(j["solver"]);
    if (j.contains("pi")) {
        const json& p = j["pi"];
        cfg.pi.n_max = p.value("n_max", cfg.pi.n_max);
        cfg.pi.n_new = p.value("n_new", cfg.pi.n_new);
        cfg.pi.max_iterations = p.value("max_iterations", cfg.pi.max_iterations);
        cfg.pi.improvement_tol = p.value("improvement_tol", cfg.pi.improvement_tol);
        cfg.pi.pg_step = p.value("pg_step", cfg.pi.pg_step);
        cfg.pi.pg_iters = p.value("pg_iters", cfg.pi.pg_iters);
    }
    cfg.pi.solver = cfg.solver;
    if (j.contains("mc")) {
        const json& m = j["mc"];
        cfg.mc_runs = m.value("n_runs", cfg.mc_runs);
        cfg.mc_horizon = m.value("horizon", cfg.mc_horizon);
        cfg.mc_master_seed = m.value("master_seed", cfg.mc_master_seed);
        cfg.mc_per_run_csv = m.value("per_run_csv", cfg.mc_per_run_csv);
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);

    if (ov.seed && cfg.grid) cfg.grid->seed = *ov.seed;
    if (ov.measure) {
        cfg.measure = measure_from_json(
            json{{"kind", *ov.measure}, {"epsilon", cfg.measure.epsilon}});
    }
    if (ov.epsilon) cfg.measure.epsilon = *ov.epsilon;
    if (ov.out) cfg.output_dir = *ov.out;
    return cfg;
}

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Config echo plus content hashes of every artifact the command wrote.
void write_manifest(const RunConfig& cfg, const std::vector<std::string>& artifacts) {
    json manifest;
    manifest["config"] = cfg.raw;
    json hashes;
    for (const std::string& name : artifacts) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a_file(fs::path(cfg.output_dir) / name)));
        hashes[name] = buf;
    }
    manifest["artifacts"] = hashes;
    write_text_file((fs::path(cfg.output_dir) / "manifest.json").string(),
                    manifest.dump(2) + "\n");
}

Mdp make_mdp(const RunConfig& cfg, std::optional<GridLayout>* layout_out) {
    Mdp mdp;
    if (cfg.grid) {
        GridLayout layout = build_layout(*cfg.grid);
        mdp = build_mdp(*cfg.grid, layout);
        if (layout_out != nullptr) *layout_out = std::move(layout);
    } else {
        mdp = mdp_from_json(load_json_file(*cfg.model_path));
    }
    if (!cfg.budgets.empty()) {
        if (cfg.budgets.size() != mdp.constraint_costs.size()) {
            throw IoError("config: budgets length does not match constraint count");
        }
        mdp.budgets = cfg.budgets;
    }
    const auto report = validate(mdp);
    if (!report.empty()) throw ModelError("model invalid: " + report.front());
    return mdp;
}

Pomdp make_pomdp(const RunConfig& cfg, std::optional<GridLayout>* layout_out) {
    Pomdp pomdp;
    if (cfg.grid) {
        GridLayout layout = build_layout(*cfg.grid);
        pomdp = build_pomdp(*cfg.grid, layout);
        if (layout_out != nullptr) *layout_out = std::move(layout);
    } else {
        pomdp = pomdp_from_json(load_json_file(*cfg.model_path));
    }
    if (!cfg.budgets.empty()) {
        if (cfg.budgets.size() != pomdp.mdp.constraint_costs.size()) {
            throw IoError("config: budgets length does not match constraint count");
        }
        pomdp.mdp.budgets = cfg.budgets;
    }
    const auto report = validate(pomdp);
    if (!report.empty()) throw ModelError("model invalid: " + report.front());
    return pomdp;
}

void write_layout_csv(const GridLayout& layout, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw IoError("cannot open " + path);
    std::fprintf(f, "x,y,obstacle,uncertain,goal,start\n");
    for (int s = 0; s < layout.num_states(); ++s) {
        const bool unc =
            std::find(layout.uncertain.begin(), layout.uncertain.end(), s) !=
            layout.uncertain.end();
        std::fprintf(f, "%d,%d,%d,%d,%d,%d\n", s % layout.rows, s / layout.rows,
                     layout.obstacle[s] ? 1 : 0, unc ? 1 : 0,
                     s == layout.goal_state ? 1 : 0, s == layout.start_state ? 1 : 0);
    }
    std::fclose(f);
}

int cmd_gen(const RunConfig& cfg) {
    if (!cfg.grid) {
        std::cerr << "gen requires a grid scenario\n";
        return kExitConfig;
    }
    fs::create_directories(cfg.output_dir);
    const GridLayout layout = build_layout(*cfg.grid);
    const Mdp mdp = build_mdp(*cfg.grid, layout);
    const Pomdp pomdp = build_pomdp(*cfg.grid, layout);
    write_text_file((fs::path(cfg.output_dir) / "mdp.json").string(),
                    mdp_to_json(mdp).dump(2) + "\n");
    write_text_file((fs::path(cfg.output_dir) / "pomdp.json").string(),
                    pomdp_to_json(pomdp).dump(2) + "\n");
    write_layout_csv(layout, (fs::path(cfg.output_dir) / "layout.csv").string());
    write_manifest(cfg, {"mdp.json", "pomdp.json", "layout.csv"});

    int n_obstacles = 0;
    for (auto b : layout.obstacle) n_obstacles += b;
    std::cout << "grid " << cfg.grid->rows << "x" << cfg.grid->cols << ", " << mdp.num_states
              << " states, " << n_obstacles << " obstacles (" << layout.uncertain.size()
              << " uncertain), goal s=" << layout.goal_state
              << ", start s=" << layout.start_state << "\n";
    return 0;
}

int cmd_solve_mdp(const RunConfig& cfg) {
    std::optional<GridLayout> layout;
    const Mdp mdp = make_mdp(cfg, &layout);
    fs::create_directories(cfg.output_dir);

    const auto t0 = std::chrono::steady_clock::now();
    const MdpSolveResult res = solve_constrained(mdp, cfg.measure, cfg.solver);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_text_file((fs::path(cfg.output_dir) / "result.json").string(),
                    mdp_result_to_json(res).dump(2) + "\n");
    std::vector<std::string> artifacts{"result.json"};
    if (layout) {
        export_heatmap(res.value, &res.policy, *cfg.grid, *layout,
                       (fs::path(cfg.output_dir) / "heatmap.csv").string());
        artifacts.push_back("heatmap.csv");
    }
    write_manifest(cfg, artifacts);

    std::cout << "lower_bound " << res.lower_bound << "\nlambda [";
    for (std::size_t i = 0; i < res.multipliers.size(); ++i) {
        std::cout << (i ? " " : "") << res.multipliers[i];
    }
    std::cout << "]\nstatus " << status_to_string(res.status) << "\ntotal_time_s " << secs
              << "\n";
    return 0;
}

int cmd_solve_pomdp(const RunConfig& cfg) {
    std::optional<GridLayout> layout;
    const Pomdp pomdp = make_pomdp(cfg, &layout);
    fs::create_directories(cfg.output_dir);

    PiParams pi = cfg.pi;
    const auto t0 = std::chrono::steady_clock::now();
    const FscSolveResult res = policy_iteration(pomdp, cfg.measure, pi);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_text_file((fs::path(cfg.output_dir) / "result.json").string(),
                    fsc_result_to_json(res, pomdp.mdp.num_states).dump(2) + "\n");
    std::vector<std::string> artifacts{"result.json"};

    {
        std::string path = (fs::path(cfg.output_dir) / "trace.csv").string();
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (f == nullptr) throw IoError("cannot open " + path);
        std::fprintf(f, "iteration,num_istates,lower_bound,improved,evaluation\n");
        for (std::size_t i = 0; i < res.trace.size(); ++i) {
            std::fprintf(f, "%zu,%d,%.12g,%d,%.12g\n", i, res.trace[i].num_istates,
                         res.trace[i].lower_bound, res.trace[i].improved ? 1 : 0,
                         res.trace[i].evaluation);
        }
        std::fclose(f);
        artifacts.push_back("trace.csv");
    }
    if (layout) {
        const int S = pomdp.mdp.num_states;
        Vec marginal(res.value.begin() + static_cast<std::size_t>(res.g_init) * S,
                     res.value.begin() + static_cast<std::size_t>(res.g_init + 1) * S);
        export_heatmap(marginal, nullptr, *cfg.grid, *layout,
                       (fs::path(cfg.output_dir) / "heatmap.csv").string());
        artifacts.push_back("heatmap.csv");
    }
    write_manifest(cfg, artifacts);

    std::cout << "lower_bound " << res.lower_bound << "\nnum_istates "
              << res.fsc.num_istates << "\ng_init " << res.g_init << "\nstatus "
              << status_to_string(res.status) << "\ntotal_time_s " << secs
              << "\navg_iter_time_s " << secs / std::max<std::size_t>(1, res.trace.size())
              << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg, const std::string& result_path) {
    if (!cfg.grid) {
        std::cerr << "simulate requires a grid scenario (perturbation protocol)\n";
        return kExitConfig;
    }
    const json result = load_json_file(result_path);
    const GridLayout layout = build_layout(*cfg.grid);

    McSummary sum;
    if (result.contains("policy")) {
        const std::vector<int> policy = result["policy"].get<std::vector<int>>();
        if (static_cast<int>(policy.size()) != layout.num_states()) {
            std::cerr << "result policy length does not match the scenario\n";
            return kExitMismatch;
        }
        sum = monte_carlo_mdp(*cfg.grid, layout, policy, cfg.mc_runs, cfg.mc_horizon,
                              cfg.mc_master_seed, cfg.measure.epsilon);
    } else if (result.contains("fsc")) {
        const Fsc fsc = fsc_from_json(result["fsc"]);
        if (fsc.num_observations != layout.num_states() ||
            fsc.num_actions != kNumGridActions) {
            std::cerr << "result FSC alphabets do not match the scenario\n";
            return kExitMismatch;
        }
        sum = monte_carlo_fsc(*cfg.grid, layout, fsc, cfg.mc_runs, cfg.mc_horizon,
                              cfg.mc_master_seed, cfg.measure.epsilon);
    } else {
        std::cerr << "result file carries neither 'policy' nor 'fsc'\n";
        return kExitMismatch;
    }

    fs::create_directories(cfg.output_dir);
    write_text_file((fs::path(cfg.output_dir) / "mc_summary.json").string(),
                    mc_summary_to_json(sum).dump(2) + "\n");
    std::vector<std::string> artifacts{"mc_summary.json"};
    if (cfg.mc_per_run_csv) {
        // Per-run records, regenerated with the same counter-based seeds.
        std::string path = (fs::path(cfg.output_dir) / "runs.csv").string();
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (f == nullptr) throw IoError("cannot open " + path);
        std::fprintf(f, "trial,discounted_cost,collided\n");
        for (int i = 0; i < cfg.mc_runs; ++i) {
            const std::uint64_t trial_seed =
                hash_combine(cfg.mc_master_seed, static_cast<std::uint64_t>(i));
            const GridLayout world = perturb_layout(*cfg.grid, layout, trial_seed);
            RolloutRecord rec;
            if (result.contains("policy")) {
                const Mdp model = build_mdp(*cfg.grid, world);
                rec = rollout_mdp(model, result["policy"].get<std::vector<int>>(),
                                  cfg.mc_horizon, hash_combine(trial_seed, 0x726f6c6cULL),
                                  &world.obstacle);
            } else {
                const Pomdp model = build_pomdp(*cfg.grid, world);
                rec = rollout_fsc(model, fsc_from_json(result["fsc"]), cfg.mc_horizon,
                                  hash_combine(trial_seed, 0x726f6c6cULL), &world.obstacle);
            }
            std::fprintf(f, "%d,%.12g,%d\n", i, rec.discounted_cost, rec.collided ? 1 : 0);
        }
        std::fclose(f);
        artifacts.push_back("runs.csv");
    }
    write_manifest(cfg, artifacts);

    std::cout << "n_runs " << sum.n_runs << "\nfailure_rate " << sum.failure_rate
              << "\nmean_cost " << sum.mean_cost << "\ncvar_cost " << sum.cvar_cost
              << "\nevar_cost " << sum.evar_cost << "\n";
    return 0;
}

int cmd_export_dcp(const RunConfig& cfg) {
    const Mdp mdp = make_mdp(cfg, nullptr);
    fs::create_directories(cfg.output_dir);
    write_text_file((fs::path(cfg.output_dir) / "dcp.json").string(),
                    export_dcp(mdp, cfg.measure, cfg.budgets));
    write_manifest(cfg, {"dcp.json"});
    std::cout << "dcp.json written (" << mdp.num_states << " states, "
              << mdp.num_states * mdp.num_actions << " constraints)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-averse constrained MDP/POMDP planning toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string result_path;
    CliOverrides ov;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration JSON")->required();
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { ov.seed = v; },
            "override scenario seed");
        sub->add_option_function<double>(
            "--epsilon", [&](const double& v) { ov.epsilon = v; },
            "override measure confidence level");
        sub->add_option_function<std::string>(
            "--measure", [&](const std::string& v) { ov.measure = v; },
            "override measure kind (expectation|cvar|evar)");
        sub->add_option_function<std::string>(
            "--out", [&](const std::string& v) { ov.out = v; },
            "override output directory");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate grid-world model files");
    add_common(gen);
    CLI::App* smdp = app.add_subcommand("solve-mdp", "constrained risk-averse MDP synthesis");
    add_common(smdp);
    CLI::App* spomdp = app.add_subcommand("solve-pomdp", "risk-averse FSC policy iteration");
    add_common(spomdp);
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo robustness evaluation");
    add_common(sim);
    sim->add_option("--result", result_path, "solver result JSON")->required();
    CLI::App* dcp = app.add_subcommand("export-dcp", "structured DCP export");
    add_common(dcp);

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        cfg = parse_config(config_path, ov);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen(cfg);
        if (smdp->parsed()) return cmd_solve_mdp(cfg);
        if (spomdp->parsed()) return cmd_solve_pomdp(cfg);
        if (sim->parsed()) return cmd_simulate(cfg, result_path);
        if (dcp->parsed()) return cmd_export_dcp(cfg);
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NoFeasibleLayoutError& e) {
        std::cerr << "layout error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DimensionMismatchError& e) {
        std::cerr << "input mismatch: " << e.what() << "\n";
        return kExitMismatch;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return 0;
}
