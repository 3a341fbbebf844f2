#pragma once

#include "sbmh/ndiff/nets.hpp"
#include "sbmh/proposal/proposal.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace sbmh::cli {

using Json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

/// FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& config);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

// Parameters are stored row-major as shortest round-trip decimals, so a
// reload reproduces every double bit for bit.
Json to_json(const ndiff::ScoreNet& net);
Json to_json(const ndiff::AcceptanceNet& net);
ndiff::ScoreNet score_net_from_json(const Json& j);
ndiff::AcceptanceNet acceptance_net_from_json(const Json& j);

/// `training`: {config, config_hash, seed, epochs_completed, ...}.
struct ScoreCheckpoint {
  ndiff::ScoreNet net;
  Json training;
};

struct AcceptanceCheckpoint {
  ndiff::AcceptanceNet net;
  proposal::Kind proposal = proposal::Kind::rw;
  double proposal_parameter = 0.0;
  std::string score_checkpoint;  // path of the score used for training
  Json training;
};

void save_checkpoint(const std::filesystem::path& path, const ScoreCheckpoint& c);
void save_checkpoint(const std::filesystem::path& path, const AcceptanceCheckpoint& c);
ScoreCheckpoint load_score_checkpoint(const std::filesystem::path& path);
AcceptanceCheckpoint load_acceptance_checkpoint(const std::filesystem::path& path);

}  // namespace sbmh::cli
