#pragma once

#include "pseudomode/pipeline.hpp"

#include <string>

namespace pseudomode {

/// Shortest text that round-trips a double (17 significant digits).
std::string fmt17(double v);

/// Model definition file. `source` names the text in error messages.
ModelProblem parse_model_json(const std::string& text, const std::string& source);
ModelProblem load_model_file(const std::string& path);

RunConfig parse_config_json(const std::string& text, const std::string& source);
RunConfig load_config_file(const std::string& path);

/// Builtin, file or inline model named by a config.
ModelProblem resolve_model(const ModelRef& ref);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

std::string report_csv(const std::vector<NormReport>& rows);
std::string summary_json(const ModelProblem& model, const RunConfig& cfg, const SweepResult& res);
std::string phase_csv(const PhaseTrajectory& traj);
std::string audit_json(const ModelProblem& model, const AuditOutcome& a);

} // namespace pseudomode
