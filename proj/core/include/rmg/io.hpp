#pragma once

#include <string>
#include <vector>

#include "rmg/harness.hpp"
#include "rmg/offline_data.hpp"
#include "rmg/types.hpp"

namespace rmg {

// Game file: JSON object {horizon, num_states, num_actions_p1,
// num_actions_p2, transitions, rewards, initial_dist} with transitions and
// rewards as nested arrays indexed [h][s][a1][a2].
std::string game_to_json(const MarkovGame& game);
MarkovGame game_from_json(const std::string& text, bool strict = true);
void save_game(const MarkovGame& game, const std::string& path);
MarkovGame load_game(const std::string& path, bool strict = true);

// Policy file: JSON {p1, p2} nested arrays [h][s][a].
std::string policy_to_json(const JointPolicy& policy);
JointPolicy policy_from_json(const std::string& text);
void save_policy(const JointPolicy& policy, const std::string& path);
JointPolicy load_policy(const std::string& path);

// Dataset file: JSON Lines, one record per line with 1-based step index:
//   {"traj": int, "h": int, "s": int, "a1": int, "a2": int, "r": float,
//    "s_next": int}
std::string dataset_to_jsonl(const OfflineDataset& dataset);
OfflineDataset dataset_from_jsonl(const std::string& text,
                                  const GameDims& dims);
void save_dataset(const OfflineDataset& dataset, const std::string& path);
OfflineDataset load_dataset(const std::string& path, const GameDims& dims);

// CSV with the fixed sweep schema; floats print shortest-round-trip.
std::string rows_to_csv(const std::vector<SweepRow>& rows);
void save_csv(const std::vector<SweepRow>& rows, const std::string& path);

// Experiment configuration, JSON mirror of ExperimentConfig; absent fields
// keep their defaults.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

// Verify report: JSON list of {check, status, margin, details}.
std::string verify_report_to_json(const std::vector<VerifyEntry>& report);
void save_verify_report(const std::vector<VerifyEntry>& report,
                        const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace rmg
