#pragma once

#include <string>

#include <json.hpp>

#include "pamdp/bandit.hpp"
#include "pamdp/instances.hpp"
#include "pamdp/planner.hpp"
#include "pamdp/simplex_search.hpp"

namespace pamdp::harness {

using Json = nlohmann::ordered_json;

// Instance interchange schema. PAMDP: S, A, H, P (HxSxAxS), r, c (HxSxA),
// P0 (S), eta, plus optional iota (HxSxS), sigma and certificates. Bandit:
// P (AxS), iota (S), c (A), eta and the optional regularity fields.

Json pamdp_to_json(const Pamdp& env);
Pamdp pamdp_from_json(const Json& j);

Json bandit_to_json(const bandit::BanditInstance& inst);
bandit::BanditInstance bandit_from_json(const Json& j);

Json instance_to_json(const GeneratedInstance& inst);
GeneratedInstance instance_from_json(const Json& j);

Json plan_to_json(const planner::PlanResult& plan);

Json memory_to_json(const simplex::BoundaryMemory& memory);
Json diff_to_json(const simplex::DiffEstimate& est);

/// FNV-1a over the canonical serialization, hex-encoded.
std::string instance_hash(const Json& j);

std::string trace_csv(const bandit::RegretTrace& trace);
Json trace_meta(const bandit::RegretTrace& trace);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

Json load_json(const std::string& path);
void save_json(const std::string& path, const Json& j);

}  // namespace pamdp::harness
