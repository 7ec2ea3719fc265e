#include "rmg/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rmg/errors.hpp"

namespace rmg {

namespace {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc())
    throw InternalError("format_double: to_chars failed");
  return std::string(buf, ptr);
}

json nested_policy(const PolicyTable& table) {
  json out = json::array();
  for (int h = 0; h < table.horizon(); ++h) {
    json per_state = json::array();
    for (int s = 0; s < table.num_states(); ++s) {
      const auto d = table.dist(h, s);
      per_state.push_back(json(std::vector<double>(d.begin(), d.end())));
    }
    out.push_back(std::move(per_state));
  }
  return out;
}

PolicyTable policy_from_nested(const json& arr, const char* what) {
  if (!arr.is_array() || arr.empty())
    throw DomainError(std::string(what) + ": expected nested policy array");
  const int H = static_cast<int>(arr.size());
  const int S = static_cast<int>(arr[0].size());
  if (S == 0) throw DomainError(std::string(what) + ": empty state axis");
  const int A = static_cast<int>(arr[0][0].size());
  PolicyTable table(H, S, A);
  for (int h = 0; h < H; ++h) {
    if (static_cast<int>(arr[h].size()) != S)
      throw DimensionError(std::string(what) + ": ragged state axis");
    for (int s = 0; s < S; ++s) {
      if (static_cast<int>(arr[h][s].size()) != A)
        throw DimensionError(std::string(what) + ": ragged action axis");
      auto d = table.dist(h, s);
      for (int a = 0; a < A; ++a) d[a] = arr[h][s][a].get<double>();
    }
  }
  return table;
}

}  // namespace

std::string game_to_json(const MarkovGame& game) {
  json out;
  out["horizon"] = game.horizon;
  out["num_states"] = game.num_states;
  out["num_actions_p1"] = game.num_actions_p1;
  out["num_actions_p2"] = game.num_actions_p2;

  json transitions = json::array();
  json rewards = json::array();
  for (int h = 0; h < game.horizon; ++h) {
    json t_h = json::array(), r_h = json::array();
    for (int s = 0; s < game.num_states; ++s) {
      json t_s = json::array(), r_s = json::array();
      for (int a1 = 0; a1 < game.num_actions_p1; ++a1) {
        json t_a1 = json::array(), r_a1 = json::array();
        for (int a2 = 0; a2 < game.num_actions_p2; ++a2) {
          const auto row = game.transition_row(h, s, a1, a2);
          t_a1.push_back(json(std::vector<double>(row.begin(), row.end())));
          r_a1.push_back(game.reward(h, s, a1, a2));
        }
        t_s.push_back(std::move(t_a1));
        r_s.push_back(std::move(r_a1));
      }
      t_h.push_back(std::move(t_s));
      r_h.push_back(std::move(r_s));
    }
    transitions.push_back(std::move(t_h));
    rewards.push_back(std::move(r_h));
  }
  out["transitions"] = std::move(transitions);
  out["rewards"] = std::move(rewards);
  out["initial_dist"] = game.initial_dist;
  return out.dump();
}

MarkovGame game_from_json(const std::string& text, bool strict) {
  const json in = json::parse(text);
  MarkovGame game;
  game.horizon = in.at("horizon").get<int>();
  game.num_states = in.at("num_states").get<int>();
  game.num_actions_p1 = in.at("num_actions_p1").get<int>();
  game.num_actions_p2 = in.at("num_actions_p2").get<int>();
  if (game.horizon < 1 || game.num_states < 1 || game.num_actions_p1 < 1 ||
      game.num_actions_p2 < 1)
    throw DimensionError("game_from_json: non-positive dimension");

  const std::size_t cells = static_cast<std::size_t>(game.horizon) *
                            game.num_states * game.num_actions_p1 *
                            game.num_actions_p2;
  game.rewards.resize(cells);
  game.transitions.resize(cells * game.num_states);
  const json& tr = in.at("transitions");
  const json& rw = in.at("rewards");
  for (int h = 0; h < game.horizon; ++h)
    for (int s = 0; s < game.num_states; ++s)
      for (int a1 = 0; a1 < game.num_actions_p1; ++a1)
        for (int a2 = 0; a2 < game.num_actions_p2; ++a2) {
          game.reward(h, s, a1, a2) =
              rw.at(h).at(s).at(a1).at(a2).get<double>();
          const json& row = tr.at(h).at(s).at(a1).at(a2);
          if (static_cast<int>(row.size()) != game.num_states)
            throw DimensionError("game_from_json: transition row length");
          auto dst = game.transition_row(h, s, a1, a2);
          for (int sn = 0; sn < game.num_states; ++sn)
            dst[sn] = row.at(sn).get<double>();
        }
  game.initial_dist = in.at("initial_dist").get<std::vector<double>>();
  validate_game(game, strict);
  return game;
}

std::string policy_to_json(const JointPolicy& policy) {
  json out;
  out["p1"] = nested_policy(policy.p1);
  out["p2"] = nested_policy(policy.p2);
  return out.dump();
}

JointPolicy policy_from_json(const std::string& text) {
  const json in = json::parse(text);
  JointPolicy policy;
  policy.p1 = policy_from_nested(in.at("p1"), "policy p1");
  policy.p2 = policy_from_nested(in.at("p2"), "policy p2");
  validate_policy(policy.p1);
  validate_policy(policy.p2);
  return policy;
}

std::string dataset_to_jsonl(const OfflineDataset& dataset) {
  std::string out;
  for (const Transition& r : dataset.records()) {
    json line;
    line["traj"] = r.traj;
    line["h"] = r.step + 1;  // steps are 1-based on disk
    line["s"] = r.s;
    line["a1"] = r.a1;
    line["a2"] = r.a2;
    line["r"] = r.reward;
    line["s_next"] = r.s_next;
    out += line.dump();
    out += '\n';
  }
  return out;
}

OfflineDataset dataset_from_jsonl(const std::string& text,
                                  const GameDims& dims) {
  std::vector<Transition> records;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    const json in = json::parse(line);
    Transition r;
    r.traj = in.at("traj").get<int>();
    r.step = in.at("h").get<int>() - 1;
    r.s = in.at("s").get<int>();
    r.a1 = in.at("a1").get<int>();
    r.a2 = in.at("a2").get<int>();
    r.reward = in.at("r").get<double>();
    r.s_next = in.at("s_next").get<int>();
    if (r.step < 0 || r.step >= dims.horizon)
      throw DimensionError("dataset_from_jsonl: step outside 1..H");
    records.push_back(r);
  }
  return OfflineDataset(dims, std::move(records));
}

std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "run_id,seed,n,T,eta,H,S,A1,A2,sigma,gap,sup_l1,sup_kl,wallclock_ms,"
      "flags\n";
  const auto opt_int = [](const auto& v) {
    return v ? std::to_string(*v) : std::string();
  };
  const auto opt_dbl = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const SweepRow& r : rows) {
    out += r.run_id;
    out += ',' + opt_int(r.seed);
    out += ',' + opt_int(r.n);
    out += ',' + opt_int(r.t);
    out += ',' + format_double(r.eta);
    out += ',' + std::to_string(r.horizon);
    out += ',' + std::to_string(r.num_states);
    out += ',' + std::to_string(r.num_actions_p1);
    out += ',' + std::to_string(r.num_actions_p2);
    out += ',' + format_double(r.sigma);
    out += ',' + opt_dbl(r.gap);
    out += ',' + opt_dbl(r.sup_l1);
    out += ',' + opt_dbl(r.sup_kl);
    out += ',' + opt_dbl(r.wallclock_ms);
    out += ',' + r.flags;
    out += '\n';
  }
  return out;
}

void save_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  write_text_file(path, rows_to_csv(rows));
}

namespace {

TransitionLaw transition_law_from_string(const std::string& s) {
  if (s == "dirichlet") return TransitionLaw::dirichlet;
  if (s == "deterministic") return TransitionLaw::deterministic;
  throw DomainError("config: unknown transition_law '" + s + "'");
}

std::string to_string(TransitionLaw law) {
  return law == TransitionLaw::dirichlet ? "dirichlet" : "deterministic";
}

RefsKind refs_kind_from_string(const std::string& s) {
  if (s == "uniform") return RefsKind::uniform;
  if (s == "dirichlet") return RefsKind::dirichlet;
  throw DomainError("config: unknown refs kind '" + s + "'");
}

BehaviorKind behavior_from_string(const std::string& s) {
  if (s == "uniform") return BehaviorKind::uniform;
  if (s == "refs") return BehaviorKind::refs;
  if (s == "custom") return BehaviorKind::custom;
  throw DomainError("config: unknown behavior kind '" + s + "'");
}

std::string to_string(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::uniform: return "uniform";
    case BehaviorKind::refs: return "refs";
    case BehaviorKind::custom: return "custom";
  }
  return "uniform";
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const json in = json::parse(text);
  ExperimentConfig config;
  if (in.contains("game")) {
    const json& g = in.at("game");
    if (g.contains("horizon")) config.game.horizon = g.at("horizon").get<int>();
    if (g.contains("num_states"))
      config.game.num_states = g.at("num_states").get<int>();
    if (g.contains("num_actions_p1"))
      config.game.num_actions_p1 = g.at("num_actions_p1").get<int>();
    if (g.contains("num_actions_p2"))
      config.game.num_actions_p2 = g.at("num_actions_p2").get<int>();
    if (g.contains("transition_law"))
      config.game.transition_law =
          transition_law_from_string(g.at("transition_law").get<std::string>());
    if (g.contains("dirichlet_concentration"))
      config.game.dirichlet_concentration =
          g.at("dirichlet_concentration").get<double>();
  }
  if (in.contains("game_seed"))
    config.game_seed = in.at("game_seed").get<std::uint64_t>();
  if (in.contains("eta")) config.eta = in.at("eta").get<double>();
  if (in.contains("refs")) {
    const json& r = in.at("refs");
    if (r.contains("kind"))
      config.refs.kind = refs_kind_from_string(r.at("kind").get<std::string>());
    if (r.contains("concentration"))
      config.refs.concentration = r.at("concentration").get<double>();
  }
  if (in.contains("behavior"))
    config.behavior = behavior_from_string(in.at("behavior").get<std::string>());
  if (in.contains("noise_sigma"))
    config.noise_sigma = in.at("noise_sigma").get<double>();
  if (in.contains("n_grid"))
    config.n_grid = in.at("n_grid").get<std::vector<long>>();
  if (in.contains("t_grid"))
    config.t_grid = in.at("t_grid").get<std::vector<long>>();
  if (in.contains("seeds"))
    config.seeds = in.at("seeds").get<std::vector<std::uint64_t>>();
  if (in.contains("fitter")) config.fitter = in.at("fitter").get<std::string>();
  if (in.contains("stage_tol"))
    config.stage_tol = in.at("stage_tol").get<double>();
  if (in.contains("sosmd_fixed_t"))
    config.sosmd_fixed_t = in.at("sosmd_fixed_t").get<long>();
  if (in.contains("strict")) config.strict = in.at("strict").get<bool>();
  if (in.contains("out")) config.out_path = in.at("out").get<std::string>();
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  json out;
  out["game"] = {{"horizon", config.game.horizon},
                 {"num_states", config.game.num_states},
                 {"num_actions_p1", config.game.num_actions_p1},
                 {"num_actions_p2", config.game.num_actions_p2},
                 {"transition_law", to_string(config.game.transition_law)},
                 {"dirichlet_concentration",
                  config.game.dirichlet_concentration}};
  out["game_seed"] = config.game_seed;
  out["eta"] = config.eta;
  out["refs"] = {
      {"kind", config.refs.kind == RefsKind::uniform ? "uniform" : "dirichlet"},
      {"concentration", config.refs.concentration}};
  out["behavior"] = to_string(config.behavior);
  out["noise_sigma"] = config.noise_sigma;
  out["n_grid"] = config.n_grid;
  out["t_grid"] = config.t_grid;
  out["seeds"] = config.seeds;
  out["fitter"] = config.fitter;
  out["stage_tol"] = config.stage_tol;
  out["sosmd_fixed_t"] = config.sosmd_fixed_t;
  out["strict"] = config.strict;
  out["out"] = config.out_path;
  return out.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_text_file(path));
}

std::string verify_report_to_json(const std::vector<VerifyEntry>& report) {
  json out = json::array();
  for (const VerifyEntry& e : report)
    out.push_back({{"check", e.check},
                   {"status", e.status},
                   {"margin", e.margin},
                   {"details", e.details}});
  return out.dump(2);
}

void save_verify_report(const std::vector<VerifyEntry>& report,
                        const std::string& path) {
  write_text_file(path, verify_report_to_json(report));
}

void save_game(const MarkovGame& game, const std::string& path) {
  write_text_file(path, game_to_json(game));
}

MarkovGame load_game(const std::string& path, bool strict) {
  return game_from_json(read_text_file(path), strict);
}

void save_policy(const JointPolicy& policy, const std::string& path) {
  write_text_file(path, policy_to_json(policy));
}

JointPolicy load_policy(const std::string& path) {
  return policy_from_json(read_text_file(path));
}

void save_dataset(const OfflineDataset& dataset, const std::string& path) {
  write_text_file(path, dataset_to_jsonl(dataset));
}

OfflineDataset load_dataset(const std::string& path, const GameDims& dims) {
  return dataset_from_jsonl(read_text_file(path), dims);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DomainError("cannot write file: " + path);
  out << text;
  if (!out) throw DomainError("write failed: " + path);
}

}  // namespace rmg
