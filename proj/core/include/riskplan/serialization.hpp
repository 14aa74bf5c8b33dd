#pragma once

#include <string>

#include <json.hpp>

#include "riskplan/gridworld.hpp"
#include "riskplan/mdp_solver.hpp"
#include "riskplan/model.hpp"
#include "riskplan/pomdp_solver.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/sim.hpp"

namespace riskplan {

// Model files carry probabilities as nested decimal-float arrays:
// transition[s][a][s'], observation[s][o], omega[g][o][(g' * |Act|) + a].

nlohmann::json mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const nlohmann::json& j);

nlohmann::json pomdp_to_json(const Pomdp& pomdp);
Pomdp pomdp_from_json(const nlohmann::json& j);

nlohmann::json fsc_to_json(const Fsc& fsc);
Fsc fsc_from_json(const nlohmann::json& j);

nlohmann::json measure_to_json(const RiskMeasure& m);
RiskMeasure measure_from_json(const nlohmann::json& j);

nlohmann::json gridspec_to_json(const GridSpec& spec);
GridSpec gridspec_from_json(const nlohmann::json& j);

std::string status_to_string(SolveStatus s);

nlohmann::json mdp_result_to_json(const MdpSolveResult& r);
nlohmann::json fsc_result_to_json(const FscSolveResult& r, int num_states);

nlohmann::json mc_summary_to_json(const McSummary& s);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace riskplan
