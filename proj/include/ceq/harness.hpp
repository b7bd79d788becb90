#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ceq/eqcomp.hpp"
#include "ceq/lowerbound.hpp"
#include "ceq/reductions.hpp"
#include "ceq/regret.hpp"

namespace ceq {

/// Outcome of one config-driven run: a JSON report plus named CSV traces.
/// status is 0 iff the run completed and every declared assertion passed.
struct RunArtifacts {
  int status = 0;
  std::string report;
  std::map<std::string, std::string> traces;
};

/// Dispatches a version-1 JSON config (see README for the schema) to the
/// fp / eq / regret / lb / reduce handlers. The report embeds the config
/// hash and the root seed; all randomness is derived from that seed via
/// split_seed with per-component tags, so identical configs reproduce
/// byte-identical traces.
RunArtifacts run_config_json(const std::string& config_json);

/// File wrapper: reads the config, runs it, writes the report to the
/// config's "out" path (stdout if absent) and each trace to "trace_out".
int run_config(const std::string& path);

/// FNV-1a hash of the canonical config serialization.
std::uint64_t config_hash(const std::string& canonical);

/// Shortest-exact decimal formatting used for every CSV cell.
std::string format_double(double v);

std::string regret_trace_csv(const RegretTrace& tr);
std::string lb_trace_csv(const LowerBoundReport& rep);
std::string distribution_trace_csv(const SupportDistribution& mu);

// Registered object specs, "name:key=val,key=val".
ConvexBody body_from_spec(const std::string& spec);
FeatureMap map_from_spec(const std::string& spec, const ConvexBody& body);
QuadraticGame game_from_spec(const std::string& spec);
/// "toward:gamma=...,seed=...": f(x) = x* + (1-gamma)(x - x*) with x*
/// drawn uniformly from the half-radius ball.
PointMap contraction_from_spec(const std::string& spec, const ConvexBody& body);

}  // namespace ceq
