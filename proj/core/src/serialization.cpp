#include "riskplan/serialization.hpp"

#include <fstream>

namespace riskplan {

using nlohmann::json;

namespace {

json tensor3(const Vec& flat, int d0, int d1, int d2) {
    json out = json::array();
    for (int i = 0; i < d0; ++i) {
        json mid = json::array();
        for (int j = 0; j < d1; ++j) {
            json inner = json::array();
            for (int k = 0; k < d2; ++k) {
                inner.push_back(flat[(static_cast<std::size_t>(i) * d1 + j) * d2 + k]);
            }
            mid.push_back(std::move(inner));
        }
        out.push_back(std::move(mid));
    }
    return out;
}

json tensor2(const Vec& flat, int d0, int d1) {
    json out = json::array();
    for (int i = 0; i < d0; ++i) {
        json inner = json::array();
        for (int j = 0; j < d1; ++j) inner.push_back(flat[static_cast<std::size_t>(i) * d1 + j]);
        out.push_back(std::move(inner));
    }
    return out;
}

Vec flatten3(const json& j, int d0, int d1, int d2, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != d0) {
        throw IoError(std::string("model file: bad shape for ") + what);
    }
    Vec flat(static_cast<std::size_t>(d0) * d1 * d2);
    for (int i = 0; i < d0; ++i) {
        const json& mid = j[i];
        if (static_cast<int>(mid.size()) != d1) {
            throw IoError(std::string("model file: bad shape for ") + what);
        }
        for (int jj = 0; jj < d1; ++jj) {
            const json& inner = mid[jj];
            if (static_cast<int>(inner.size()) != d2) {
                throw IoError(std::string("model file: bad shape for ") + what);
            }
            for (int k = 0; k < d2; ++k) {
                flat[(static_cast<std::size_t>(i) * d1 + jj) * d2 + k] =
                    inner[k].get<double>();
            }
        }
    }
    return flat;
}

Vec flatten2(const json& j, int d0, int d1, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != d0) {
        throw IoError(std::string("model file: bad shape for ") + what);
    }
    Vec flat(static_cast<std::size_t>(d0) * d1);
    for (int i = 0; i < d0; ++i) {
        const json& inner = j[i];
        if (static_cast<int>(inner.size()) != d1) {
            throw IoError(std::string("model file: bad shape for ") + what);
        }
        for (int k = 0; k < d1; ++k) {
            flat[static_cast<std::size_t>(i) * d1 + k] = inner[k].get<double>();
        }
    }
    return flat;
}

}  // namespace

json mdp_to_json(const Mdp& mdp) {
    json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["transition"] = tensor3(mdp.transition, mdp.num_states, mdp.num_actions, mdp.num_states);
    j["initial_dist"] = mdp.initial_dist;
    j["stage_cost"] = tensor2(mdp.stage_cost, mdp.num_states, mdp.num_actions);
    json cc = json::array();
    for (const Vec& d : mdp.constraint_costs) {
        cc.push_back(tensor2(d, mdp.num_states, mdp.num_actions));
    }
    j["constraint_costs"] = cc;
    j["budgets"] = mdp.budgets;
    j["discount"] = mdp.discount;
    return j;
}

Mdp mdp_from_json(const json& j) {
    Mdp mdp;
    mdp.num_states = j.at("num_states").get<int>();
    mdp.num_actions = j.at("num_actions").get<int>();
    mdp.transition = flatten3(j.at("transition"), mdp.num_states, mdp.num_actions,
                              mdp.num_states, "transition");
    mdp.initial_dist = j.at("initial_dist").get<Vec>();
    mdp.stage_cost = flatten2(j.at("stage_cost"), mdp.num_states, mdp.num_actions, "stage_cost");
    for (const json& d : j.value("constraint_costs", json::array())) {
        mdp.constraint_costs.push_back(
            flatten2(d, mdp.num_states, mdp.num_actions, "constraint_costs"));
    }
    mdp.budgets = j.value("budgets", Vec{});
    mdp.discount = j.at("discount").get<double>();
    return mdp;
}

json pomdp_to_json(const Pomdp& pomdp) {
    json j = mdp_to_json(pomdp.mdp);
    j["num_observations"] = pomdp.num_observations;
    j["observation"] = tensor2(pomdp.observation, pomdp.mdp.num_states, pomdp.num_observations);
    return j;
}

Pomdp pomdp_from_json(const json& j) {
    Pomdp pomdp;
    pomdp.mdp = mdp_from_json(j);
    pomdp.num_observations = j.at("num_observations").get<int>();
    pomdp.observation = flatten2(j.at("observation"), pomdp.mdp.num_states,
                                 pomdp.num_observations, "observation");
    return pomdp;
}

json fsc_to_json(const Fsc& fsc) {
    json j;
    j["num_istates"] = fsc.num_istates;
    j["num_actions"] = fsc.num_actions;
    j["num_observations"] = fsc.num_observations;
    j["omega"] = tensor3(fsc.omega, fsc.num_istates, fsc.num_observations,
                         fsc.num_istates * fsc.num_actions);
    j["kappa"] = fsc.kappa;
    return j;
}

Fsc fsc_from_json(const json& j) {
    Fsc fsc;
    fsc.num_istates = j.at("num_istates").get<int>();
    fsc.num_actions = j.at("num_actions").get<int>();
    fsc.num_observations = j.at("num_observations").get<int>();
    fsc.omega = flatten3(j.at("omega"), fsc.num_istates, fsc.num_observations,
                         fsc.num_istates * fsc.num_actions, "omega");
    fsc.kappa = j.at("kappa").get<Vec>();
    return fsc;
}

json measure_to_json(const RiskMeasure& m) {
    const char* kind = m.kind == RiskMeasure::Kind::Expectation ? "expectation"
                       : m.kind == RiskMeasure::Kind::Cvar      ? "cvar"
                                                                : "evar";
    return json{{"kind", kind}, {"epsilon", m.epsilon}};
}

RiskMeasure measure_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double eps = j.value("epsilon", 1.0);
    if (kind == "expectation") return RiskMeasure::expectation();
    if (kind == "cvar") return RiskMeasure::cvar(eps);
    if (kind == "evar") return RiskMeasure::evar(eps);
    throw IoError("measure: unknown kind '" + kind + "'");
}

json gridspec_to_json(const GridSpec& spec) {
    json j;
    j["rows"] = spec.rows;
    j["cols"] = spec.cols;
    j["obstacle_density"] = spec.obstacle_density;
    j["goal"] = {spec.goal.x, spec.goal.y};
    j["start"] = {spec.start.x, spec.start.y};
    j["intent_prob"] = spec.intent_prob;
    j["slip_prob"] = spec.slip_prob;
    j["obstacle_cost"] = spec.obstacle_cost;
    j["step_cost"] = spec.step_cost;
    j["goal_cost"] = spec.goal_cost;
    j["discount"] = spec.discount;
    j["detect_prob"] = spec.detect_prob;
    j["n_uncertain"] = spec.n_uncertain;
    j["perturb_prob"] = spec.perturb_prob;
    j["budget"] = spec.budget;
    j["seed"] = spec.seed;
    return j;
}

GridSpec gridspec_from_json(const json& j) {
    GridSpec spec;
    spec.rows = j.value("rows", spec.rows);
    spec.cols = j.value("cols", spec.cols);
    spec.obstacle_density = j.value("obstacle_density", spec.obstacle_density);
    if (j.contains("goal")) {
        spec.goal = {j["goal"][0].get<int>(), j["goal"][1].get<int>()};
    }
    if (j.contains("start")) {
        spec.start = {j["start"][0].get<int>(), j["start"][1].get<int>()};
    }
    spec.intent_prob = j.value("intent_prob", spec.intent_prob);
    spec.slip_prob = j.value("slip_prob", spec.slip_prob);
    spec.obstacle_cost = j.value("obstacle_cost", spec.obstacle_cost);
    spec.step_cost = j.value("step_cost", spec.step_cost);
    spec.goal_cost = j.value("goal_cost", spec.goal_cost);
    spec.discount = j.value("discount", spec.discount);
    spec.detect_prob = j.value("detect_prob", spec.detect_prob);
    spec.n_uncertain = j.value("n_uncertain", spec.n_uncertain);
    spec.perturb_prob = j.value("perturb_prob", spec.perturb_prob);
    spec.budget = j.value("budget", spec.budget);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

std::string status_to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::IterationCap: return "iteration_cap";
        case SolveStatus::InfeasibleSuspected: return "infeasible_suspected";
    }
    return "unknown";
}

json mdp_result_to_json(const MdpSolveResult& r) {
    json trace = json::array();
    for (const DualTraceEntry& e : r.trace) {
        trace.push_back({{"lambda", e.lambda},
                         {"lower_bound", e.lower_bound},
                         {"residuals", e.residuals}});
    }
    return json{{"value", r.value},
                {"multipliers", r.multipliers},
                {"policy", r.policy},
                {"lower_bound", r.lower_bound},
                {"constraint_values", r.constraint_values},
                {"status", status_to_string(r.status)},
                {"trace", trace}};
}

json fsc_result_to_json(const FscSolveResult& r, int num_states) {
    json trace = json::array();
    for (const FscTraceEntry& e : r.trace) {
        trace.push_back({{"num_istates", e.num_istates},
                         {"lower_bound", e.lower_bound},
                         {"improved", e.improved},
                         {"evaluation", e.evaluation}});
    }
    return json{{"fsc", fsc_to_json(r.fsc)},
                {"value", tensor2(r.value, r.fsc.num_istates, num_states)},
                {"multipliers", r.multipliers},
                {"g_init", r.g_init},
                {"lower_bound", r.lower_bound},
                {"status", status_to_string(r.status)},
                {"trace", trace}};
}

json mc_summary_to_json(const McSummary& s) {
    return json{{"n_runs", s.n_runs},
                {"failure_rate", s.failure_rate},
                {"mean_cost", s.mean_cost},
                {"cvar_cost", s.cvar_cost},
                {"evar_cost", s.evar_cost},
                {"epsilon", s.epsilon},
                {"constraint_satisfaction_rate", s.constraint_satisfaction_rate}};
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("cannot parse " + path + ": " + e.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace riskplan
