// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mind/config.hpp"
#include "mind/error.hpp"
#include "mind/http_client.hpp"
#include "mind/metrics.hpp"
#include "mind/prb.hpp"
#include "mind/runner.hpp"
#include "mind/toy.hpp"

namespace mind::cli {

namespace {

using json = nlohmann::json;

/// Thrown to leave a command with a specific exit code.
struct ExitWith {
  int code;
  std::string message;
};

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Config:
    case ErrorCode::EmptyDims:
    case ErrorCode::UnknownEventKind:
    case ErrorCode::MissingPrior:
      return kConfigError;
    case ErrorCode::Transport:
    case ErrorCode::Timeout:
    case ErrorCode::BudgetExceeded:
      return kClient;
    case ErrorCode::Io:
      return kNoInput;
    case ErrorCode::Mismatch:
      return kData;
    default:
      return kSchema;
  }
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

GlobalConfig load_config(const std::string& path) {
  if (path.empty()) return GlobalConfig{};
  return GlobalConfig::load(path);
}

struct Clients {
  std::unique_ptr<Embedder> embed;
  std::unique_ptr<ChatClient> chat;   // policy / bank author
  std::unique_ptr<ChatClient> judge;  // rubric judge
  bool mock = true;
};

std::shared_ptr<HttpTransport> transport_for(const std::string& url, const ClientEnv& env, const ClientsConfig& c) {
  return std::make_shared<HttplibTransport>(url, env.api_key, std::chrono::milliseconds(c.timeout_ms));
}

/// `need_chat`: whether a chat backend is required in remote mode.
Clients make_clients(const GlobalConfig& cfg, bool force_mock, bool need_chat,
                     MockChat::Responder responder = {}) {
  Clients out;
  out.mock = force_mock || cfg.clients.mock;
  const auto& c = cfg.clients;
  if (out.mock) {
    out.embed = std::make_unique<HashEmbedder>(c.embed_dims);
    out.chat = std::make_unique<MockChat>(c.mock_seed, std::move(responder));
    return out;
  }
  const auto env = ClientEnv::from_env();
  const std::string chat_url = !c.chat_url.empty() ? c.chat_url : env.chat_url.value_or("");
  const std::string embed_url = !c.embed_url.empty() ? c.embed_url : env.embed_url.value_or("");
  if (need_chat && chat_url.empty()) {
    throw ExitWith{kConfigError, "remote mode needs a chat endpoint (MIND_CHAT_URL or clients.chat_url)"};
  }
  RetryPolicy retry;
  retry.max_retries = c.max_retries;
  const CallBudget budget{c.max_calls, c.max_tokens};
  if (!chat_url.empty()) {
    out.chat = std::make_unique<RemoteChatClient>(transport_for(chat_url, env, c), c.chat_model, retry, budget,
                                                  c.max_in_flight);
    out.judge = std::make_unique<RemoteChatClient>(transport_for(chat_url, env, c), c.judge_model, retry, budget,
                                                   c.max_in_flight);
  }
  if (!embed_url.empty()) {
    out.embed = std::make_unique<RemoteEmbedder>(transport_for(embed_url, env, c), c.embed_model, c.embed_dims, retry);
  } else {
    out.embed = std::make_unique<HashEmbedder>(c.embed_dims);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> knowledge_chunks(const std::string& text) {
  std::vector<std::string> chunks;
  std::string current;
  std::istringstream in(text);
  std::string line;
  auto flush = [&] {
    auto t = protocol::trim(current);
    if (!t.empty()) chunks.emplace_back(t);
    current.clear();
  };
  while (std::getline(in, line)) {
    if (protocol::trim(line).empty()) {
      flush();
    } else {
      current += (current.empty() ? "" : " ") + std::string(protocol::trim(line));
    }
  }
  flush();
  return chunks;
}

std::vector<prb::BuildInput> load_dialogues(const std::string& path, const std::vector<std::string>& chunks) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open dialogues");
  std::vector<prb::BuildInput> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (protocol::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      prb::BuildInput b;
      b.entry_id = j.value("dialogue_id", std::string{});
      b.dialogue_context = j.at("context").get<std::string>();
      b.next_question = j.at("next_question").get<std::string>();
      b.category = j.value("category", std::string(prb::kGeneralCategory));
      b.knowledge_chunks = chunks;
      out.push_back(std::move(b));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no), e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::Parse, path, "no dialogues");
  return out;
}

void print_histogram(const prb::QualityHistogram& h, std::ostream& out) {
  out << "quality  count  ratio(%)\n";
  for (int q = 0; q < 5; ++q) {
    char line[64];
    std::snprintf(line, sizeof line, "%7d  %5zu  %8.2f\n", q + 1, h.counts[static_cast<std::size_t>(q)],
                  100.0 * h.ratios[static_cast<std::size_t>(q)]);
    out << line;
  }
  out << "total    " << h.total << "\n";
}

// ---- commands ---------------------------------------------------------------------

struct BuildBankArgs {
  std::string cases, knowledge, out, config;
  bool mock = false;
};

int cmd_build_bank(const BuildBankArgs& a, std::ostream& out) {
  const auto cfg = load_config(a.config);
  auto clients = make_clients(cfg, a.mock, true, prb::offline_author_reply);
  const auto chunks = knowledge_chunks(read_file(a.knowledge));
  const auto inputs = load_dialogues(a.cases, chunks);
  const auto index = prb::build_bank(inputs, *clients.chat, *clients.embed);
  prb::save_index(index, a.out);
  out << "wrote " << index.size() << " entries to " << a.out << "\n";
  print_histogram(prb::quality_histogram(index), out);
  return kOk;
}

struct RunArgs {
  std::string config, cases, bank, out, policy = "scripted", sim = "std";
  std::optional<std::uint64_t> seed;
  bool mock = false;
  std::size_t workers = 0;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  auto cfg = load_config(a.config);
  if (a.seed) cfg.episode.seed = *a.seed;
  if (a.policy == "remote" && (a.mock || cfg.clients.mock)) {
    throw ExitWith{kConfigError, "--policy remote needs clients.mock=false and no --mock"};
  }
  const bool remote = a.policy == "remote";
  auto clients = make_clients(cfg, a.mock, remote);
  const std::string cases_path = !a.cases.empty() ? a.cases : cfg.paths.cases;
  const std::string bank_path = !a.bank.empty() ? a.bank : cfg.paths.bank;
  const std::string out_path = !a.out.empty() ? a.out : cfg.paths.output;
  if (cases_path.empty() || out_path.empty()) throw ExitWith{kUsage, "run needs --cases and --out"};

  const auto cases = load_cases(cases_path);
  std::optional<prb::PrbIndex> index;
  if (!bank_path.empty()) index = prb::load_index(bank_path, clients.embed->fingerprint());
  std::optional<PriorTable> priors;
  if (!cfg.paths.priors.empty()) priors = PriorTable::parse(read_file(cfg.paths.priors));

  Environment env;
  env.index = index ? &*index : nullptr;
  env.embed = clients.embed.get();
  if (priors) env.priors = &*priors;
  env.reward = cfg.reward;
  env.episode = cfg.episode;
  env.rectify = cfg.rectify;
  env.sim = a.sim == "adapt" ? SimMode::Kind::Adapt : SimMode::Kind::Std;
  ChatClient* judge_chat = clients.judge.get();
  const int s_max = cfg.reward.s_max;
  if (!clients.mock && judge_chat) {
    env.make_judge = [judge_chat, s_max] { return std::make_unique<ChatJudge>(*judge_chat, s_max); };
  }

  PolicyFactory factory;
  if (remote) {
    ChatClient* chat = clients.chat.get();
    const GenParams params = cfg.episode.doctor_gen;
    factory = [chat, params] { return std::make_unique<ChatPolicy>(*chat, params); };
  } else {
    factory = [] { return std::make_unique<RulePolicy>(); };
  }

  const auto trajectories = run_batch(cases, factory, env, a.workers ? a.workers : default_workers());
  std::ofstream log(out_path, std::ios::binary | std::ios::app);
  if (!log) throw Error(ErrorCode::Io, out_path, "cannot write trajectories");
  bool incomplete = false;
  for (const auto& t : trajectories) {
    log << to_jsonl_line(t) << '\n';
    if (t.complete) recompute_return(t, cfg.reward);
    incomplete = incomplete || !t.complete;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s turns=%2zu diagnosis=%-10s label=%-10s R=%.6f%s\n", t.case_id.c_str(),
                  t.turns.size(),
                  t.final_diagnosis ? std::string(to_string(*t.final_diagnosis)).c_str() : "none",
                  std::string(to_string(t.label)).c_str(), t.episode_return, t.complete ? "" : " INCOMPLETE");
    out << line;
  }
  if (incomplete) throw ExitWith{kClient, "transport failure; partial trajectories flagged incomplete"};
  return kOk;
}

struct EvalArgs {
  std::string trajectories, live_config, json_out;
  std::size_t workers = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  EvalReport report;
  if (!a.trajectories.empty()) {
    std::vector<Trajectory> ts;
    try {
      ts = read_trajectories(a.trajectories);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Parse) throw ExitWith{kData, e.what()};
      throw;
    }
    if (ts.empty()) throw ExitWith{kData, a.trajectories + ": no trajectories"};
    report = evaluate(ts);
  } else {
    const auto cfg = GlobalConfig::load(a.live_config);
    if (cfg.paths.cases.empty()) throw ExitWith{kConfigError, "live evaluation needs paths.cases"};
    auto clients = make_clients(cfg, false, false);
    const auto cases = load_cases(cfg.paths.cases);
    if (cases.empty()) throw ExitWith{kData, "no cases"};
    std::optional<prb::PrbIndex> index;
    if (!cfg.paths.bank.empty()) index = prb::load_index(cfg.paths.bank, clients.embed->fingerprint());
    Environment env;
    env.index = index ? &*index : nullptr;
    env.embed = clients.embed.get();
    env.reward = cfg.reward;
    env.episode = cfg.episode;
    env.rectify = cfg.rectify;
    report = evaluate(cases, [] { return std::make_unique<RulePolicy>(); }, env,
                      a.workers ? a.workers : default_workers());
  }
  out << format_report(report);
  if (!a.json_out.empty()) {
    std::ofstream js(a.json_out, std::ios::binary | std::ios::trunc);
    if (!js) throw Error(ErrorCode::Io, a.json_out, "cannot write report");
    js << report_to_json(report).dump(2) << '\n';
  }
  return kOk;
}

struct TrainArgs {
  std::string config, out_curve;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<int> group_size, iters;
};

int cmd_train_toy(const TrainArgs& a, std::ostream& out) {
  auto cfg = load_config(a.config);
  if (!cfg.clients.mock) throw ExitWith{kConfigError, "train-toy runs with mock clients only"};
  if (a.seed) cfg.trainer.seed = *a.seed;
  if (a.lr) cfg.trainer.lr = *a.lr;
  if (a.group_size) cfg.trainer.group_size = *a.group_size;
  if (a.iters) cfg.trainer.iters = *a.iters;
  cfg.trainer.validate();
  ToyPolicy policy;
  const auto cases = toy_cases(static_cast<std::size_t>(cfg.trainer.n_cases));
  const auto result =
      train_toy_grpo(cases, policy, cfg.trainer, cfg.reward, static_cast<std::size_t>(cfg.episode.max_turns));
  std::ofstream csv(a.out_curve, std::ios::binary | std::ios::trunc);
  if (!csv) throw Error(ErrorCode::Io, a.out_curve, "cannot write curve");
  csv << curve_csv(result.curve);
  char line[200];
  std::snprintf(line, sizeof line,
                "iterations=%zu first_accuracy=%.3f smoothed_accuracy=%.3f greedy_accuracy=%.3f threshold=%.2f %s\n",
                result.curve.size(), result.curve.front().accuracy, result.smoothed_accuracy, result.greedy_accuracy,
                cfg.trainer.accuracy_threshold, result.threshold_met ? "met" : "missed");
  out << line;
  return result.threshold_met ? kOk : kThreshold;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open");
  std::string first;
  std::getline(in, first);
  json head;
  try {
    head = json::parse(first);
  } catch (const json::exception&) {
    // A multi-line JSON document: try it as a config.
    const auto cfg = GlobalConfig::load(path);
    out << "config (valid)\n" << cfg.to_json().dump(2) << "\n";
    return kOk;
  }
  const auto schema = head.is_object() ? head.value("schema", std::string{}) : std::string{};
  if (schema == prb::kSchema) {
    const auto index = prb::load_index(path, {});
    out << "prb index: " << index.size() << " entries, dims " << index.dims() << ", fingerprint "
        << index.backend_fingerprint() << "\n";
    print_histogram(prb::quality_histogram(index), out);
    return kOk;
  }
  if (schema == kTrajectorySchema) {
    const auto ts = read_trajectories(path);
    for (const auto& t : ts) {
      out << t.case_id << ": turns=" << t.turns.size() << " diagnosis="
          << (t.final_diagnosis ? std::string(to_string(*t.final_diagnosis)) : "none")
          << " label=" << to_string(t.label) << " R=" << t.episode_return << (t.complete ? "" : " INCOMPLETE")
          << "\n";
    }
    out << format_report(evaluate(ts));
    return kOk;
  }
  if (head.is_object() && (head.contains("reward") || head.contains("episode"))) {
    const auto cfg = GlobalConfig::parse(head);
    out << "config (valid)\n" << cfg.to_json().dump(2) << "\n";
    return kOk;
  }
  throw ExitWith{kData, path + ": unrecognized file"};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval-grounded consultation environment", "mind"};
  app.require_subcommand(1);

  BuildBankArgs bb;
  auto* build = app.add_subcommand("build-bank", "Build a reasoning bank from dialogues and a knowledge file");
  build->add_option("--cases", bb.cases, "Dialogue JSONL")->required();
  build->add_option("--knowledge", bb.knowledge, "Knowledge text; chunks separated by blank lines")->required();
  build->add_option("--out", bb.out, "Output index")->required();
  build->add_option("--config", bb.config, "Config JSON");
  build->add_flag("--mock", bb.mock, "Use the deterministic offline backends");

  RunArgs ra;
  std::uint64_t run_seed = 0;
  auto* runc = app.add_subcommand("run", "Run one episode per case and append trajectories");
  runc->add_option("--config", ra.config, "Config JSON");
  runc->add_option("--cases", ra.cases, "Case JSONL");
  runc->add_option("--bank", ra.bank, "Reasoning bank index");
  runc->add_option("--out", ra.out, "Trajectory log (appended)");
  runc->add_option("--policy", ra.policy, "scripted | remote")->check(CLI::IsMember({"scripted", "remote"}));
  runc->add_option("--sim", ra.sim, "std | adapt")->check(CLI::IsMember({"std", "adapt"}));
  auto* seed_opt = runc->add_option("--seed", run_seed, "Episode seed");
  runc->add_option("--workers", ra.workers, "Worker threads");
  runc->add_flag("--mock", ra.mock, "Use the deterministic offline backends");

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Accuracy and per-class P/R/F1");
  auto* traj_opt = evalc->add_option("--trajectories", ea.trajectories, "Trajectory log");
  auto* live_opt = evalc->add_option("--live-config", ea.live_config, "Run the rule policy over paths.cases");
  traj_opt->excludes(live_opt);
  evalc->add_option("--json", ea.json_out, "Write the report as JSON");
  evalc->add_option("--workers", ea.workers, "Worker threads");

  TrainArgs ta;
  std::uint64_t t_seed = 0;
  double t_lr = 0.0;
  int t_group = 0;
  int t_iters = 0;
  auto* train = app.add_subcommand("train-toy", "Train the tabular policy with group-relative updates");
  train->add_option("--config", ta.config, "Config JSON");
  train->add_option("--out-curve", ta.out_curve, "Learning curve CSV")->required();
  auto* t_seed_opt = train->add_option("--seed", t_seed, "Trainer seed");
  auto* t_lr_opt = train->add_option("--lr", t_lr, "Learning rate");
  auto* t_group_opt = train->add_option("--group-size", t_group, "Samples per group");
  auto* t_iters_opt = train->add_option("--iters", t_iters, "Iterations");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Summarize a bank, trajectory log or config");
  inspect->add_option("path", inspect_path, "File to inspect")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  if (*evalc && ea.trajectories.empty() && ea.live_config.empty()) {
    err << "usage error: eval needs --trajectories or --live-config\n";
    return kUsage;
  }
  if (*seed_opt) ra.seed = run_seed;
  if (*t_seed_opt) ta.seed = t_seed;
  if (*t_lr_opt) ta.lr = t_lr;
  if (*t_group_opt) ta.group_size = t_group;
  if (*t_iters_opt) ta.iters = t_iters;

  try {
    if (*build) return cmd_build_bank(bb, out);
    if (*runc) return cmd_run(ra, out);
    if (*evalc) return cmd_eval(ea, out);
    if (*train) return cmd_train_toy(ta, out);
    if (*inspect) return cmd_inspect(inspect_path, out);
  } catch (const ExitWith& e) {
    err << e.message << "\n";
    return e.code;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << e.what() << "\n";
    return kSchema;
  }
  return kUsage;
}

}  // namespace mind::cli
