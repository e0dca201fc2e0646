// clickscale command-line front end.
//
//   clickscale clean --records R --detections D [--tau 0.3] [--out DIR]
//   clickscale train --config CFG
//   clickscale eval-grounding --grounder local|remote --records R [--checkpoint C]
//   clickscale run-task --scenario S (--stub | --endpoint URL) [--k 8] [--max-steps 100]
//   clickscale sweep-k (--stub | --endpoint URL) [--ks 1,8,16,32] [--episodes N] [--p P]
//
// Every subcommand takes --json and --seed. Exit codes: 0 ok, 1 usage,
// 2 operational error (diagnostic on stderr as one JSON object).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clickscale/bench.hpp"
#include "clickscale/dataset.hpp"
#include "clickscale/grpo.hpp"
#include "clickscale/http_endpoint.hpp"
#include "clickscale/orchestrator.hpp"
#include "clickscale/stubs.hpp"

namespace fs = std::filesystem;
using namespace clickscale;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitError = 2;
constexpr const char* kEndpointEnv = "CLICKSCALE_ENDPOINT_URL";

struct Common {
  bool json = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_flag("--json", c.json, "machine-readable output on stdout");
  sub->add_option("--seed", c.seed, "root seed")->capture_default_str();
}

void emit(const Common& c, const json& j, const std::string& text) {
  if (c.json) {
    std::cout << j.dump() << '\n';
  } else {
    std::cout << text;
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string endpoint_url(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kEndpointEnv); env && *env) return env;
  throw ContractError(std::string("no endpoint: pass --endpoint or set ") + kEndpointEnv);
}

// ---------------------------------------------------------------------------

struct CleanArgs {
  Common common;
  double tau = 0.3;
  std::string records, detections, out;
};

int cmd_clean(const CleanArgs& a) {
  const auto records = load_records(a.records);
  const auto detections = a.detections.empty() ? std::vector<DetectionSet>{} : load_detections(a.detections);
  const CleanResult res = clean_records(records, detections, {a.tau});
  const CleanReport rep = a.out.empty() ? make_report(records, res, a.tau)
                                        : write_partition(records, res, a.tau, a.out);
  std::string text = "input " + std::to_string(rep.input) + ", kept " + std::to_string(rep.kept) +
                     ", discarded " + std::to_string(rep.discarded) + " (tau " + fmt("%g", a.tau) + ")\n";
  if (!a.out.empty()) text += "wrote " + a.out + "\n";
  emit(a.common, report_to_json(rep), text);
  return 0;
}

// ---------------------------------------------------------------------------
// Train config: TrainConfig keys plus "data" (training JSONL) and "out"
// (directory for checkpoint.json and metrics.csv). Relative paths resolve
// against the config file's directory.

struct TrainArgs {
  Common common;
  std::string config;
  bool seed_given = false;
};

int cmd_train(const TrainArgs& a) {
  const fs::path cfg_path = a.config;
  const json doc = jsonio::parse_document(cfg_path);
  TrainConfig cfg = train_config_from_json(doc);
  if (a.seed_given) cfg.seed = a.common.seed;
  auto resolve = [&](const std::string& p) {
    const fs::path q = p;
    return q.is_absolute() ? q : cfg_path.parent_path() / q;
  };
  if (!doc.contains("data") || !doc["data"].is_string()) {
    throw FormatError(0, cfg_path.string() + ": config needs a \"data\" path");
  }
  const auto data = load_training_fixture(resolve(doc["data"].get<std::string>()));
  std::optional<GridPolicy> init;
  if (doc.contains("init")) init = checkpoint_from_json(jsonio::parse_document(resolve(doc["init"].get<std::string>())));
  const TrainResult r = train(cfg, data, init);

  const fs::path out = resolve(doc.value("out", std::string{"."}));
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError(out.string(), ec.message());
  jsonio::write_file(out / "checkpoint.json", checkpoint_to_json(r.policy, cfg.seed, cfg.iterations).dump() + "\n");
  jsonio::write_file(out / "metrics.csv", metrics_csv(r.metrics));

  const double acc = greedy_accuracy(r.policy, data, cfg.resize_multiple);
  const double last_reward = r.metrics.empty() ? 0.0 : r.metrics.back().mean_reward;
  json j{{"iterations", cfg.iterations},
         {"examples", data.size()},
         {"seed", cfg.seed},
         {"final_mean_reward", last_reward},
         {"greedy_accuracy", acc},
         {"checkpoint", (out / "checkpoint.json").string()},
         {"metrics", (out / "metrics.csv").string()}};
  emit(a.common, j,
       "trained " + std::to_string(cfg.iterations) + " iterations on " + std::to_string(data.size()) +
           " examples; greedy accuracy " + fmt("%.4f", acc) + "\ncheckpoint " + (out / "checkpoint.json").string() +
           "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string grounder = "remote";
  std::string records, checkpoint, endpoint;
};

// A line carrying "features" is a training example, anything else a record.
std::vector<EvalCase> load_eval_cases(const fs::path& path) {
  std::vector<EvalCase> out;
  jsonio::for_each_line(path, [&](const json& obj, std::size_t line) {
    if (obj.contains("features")) {
      TrainingExample ex;
      for (const auto& v : obj["features"]) ex.features.push_back(jsonio::as_number(v, "feature", line));
      ex.bbox = jsonio::box_from_json(jsonio::require(obj, "bbox", line), "bbox", line);
      ex.resolution = jsonio::resolution_from_json(jsonio::require(obj, "resolution", line), line);
      if (auto it = obj.find("category"); it != obj.end() && it->is_string()) ex.category = it->get<std::string>();
      out.push_back(eval_case(ex, obj.value("instruction", std::string{"target"})));
    } else {
      out.push_back(eval_case(record_from_json(obj, line)));
    }
  });
  return out;
}

int cmd_eval(const EvalArgs& a) {
  const auto cases = load_eval_cases(a.records);
  GroundingEvalReport rep;
  if (a.grounder == "local") {
    if (a.checkpoint.empty()) throw ContractError("--grounder local needs --checkpoint");
    PolicyGrounder g(checkpoint_from_json(jsonio::parse_document(a.checkpoint)));
    rep = eval_grounding(g, cases);
  } else {
    HttpEndpoint ep({endpoint_url(a.endpoint)});
    RemoteGrounder g(ep);
    rep = eval_grounding(g, cases);
  }
  std::string text = "accuracy " + fmt("%.4f", rep.accuracy()) + " (" + std::to_string(rep.correct) + "/" +
                     std::to_string(rep.total) + ")\n";
  for (const auto& [cat, c] : rep.per_category) {
    text += "  " + cat + ": " + std::to_string(c.correct) + "/" + std::to_string(c.total) + "\n";
  }
  if (!rep.failures.empty()) text += std::to_string(rep.failures.size()) + " grounder failures\n";
  emit(a.common, eval_report_to_json(rep), text);
  return 0;
}

// ---------------------------------------------------------------------------

struct AgentArgs {
  Common common;
  std::string scenario, endpoint, judge = "oracle", log;
  int k = 8, max_steps = 100;
  double p = 0.5;
  bool stub = false, timing = false;
};

JudgeModel judge_model(const std::string& s) {
  if (s == "oracle") return JudgeModel::oracle;
  if (s == "uniform") return JudgeModel::uniform;
  throw ContractError("unknown judge \"" + s + "\" (oracle|uniform)");
}

int cmd_run_task(const AgentArgs& a) {
  const Scenario sc = load_scenario(a.scenario);
  AgentConfig cfg;
  cfg.k = a.k;
  cfg.max_steps = a.max_steps;
  cfg.seed = a.common.seed;

  RunResult r;
  if (a.stub) {
    stub::ScriptedPlanner planner(sc.script, a.p);
    stub::OracleJudge oracle(sc.script);
    stub::RandomJudge uniform;
    stub::LabelGrounder label;
    RemoteGrounder grounder(label);
    ChatEndpoint& judge = judge_model(a.judge) == JudgeModel::oracle ? static_cast<ChatEndpoint&>(oracle)
                                                                     : static_cast<ChatEndpoint&>(uniform);
    Clients c{planner, judge, grounder};
    r = run_task(sc, c, cfg);
  } else {
    HttpEndpoint ep({endpoint_url(a.endpoint)});
    RemoteGrounder grounder(ep);
    Clients c{ep, ep, grounder};
    r = run_task(sc, c, cfg);
  }
  const std::string log = trajectory_log(r, a.timing);
  if (!a.log.empty()) jsonio::write_file(a.log, log);
  if (a.common.json) {
    json steps = json::array();
    for (const auto& s : r.steps) steps.push_back(step_to_json(s, a.timing));
    std::cout << json{{"result", result_summary_json(r)}, {"steps", steps}}.dump() << '\n';
  } else {
    std::cout << log;
  }
  return 0;
}

struct SweepArgs {
  AgentArgs agent;
  std::string ks = "1,8,16,32";
  int episodes = 100, jobs = 1, length = 10;
};

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ContractError("bad --ks entry \"" + tok + "\"");
    }
    pos = comma + 1;
  }
  return out;
}

int cmd_sweep(const SweepArgs& a) {
  SweepConfig cfg;
  cfg.ks = parse_ks(a.ks);
  cfg.episodes = a.episodes;
  cfg.seed = a.agent.common.seed;
  cfg.jobs = a.jobs;
  cfg.max_steps = a.agent.max_steps;

  SweepReport rep;
  if (a.agent.stub) {
    StubSweep s;
    if (a.agent.scenario.empty()) {
      s.scenario = chain_scenario(a.length);
      s.horizon = a.length;
    } else {
      s.scenario = load_scenario(a.agent.scenario);
    }
    s.p = a.agent.p;
    s.judge = judge_model(a.agent.judge);
    rep = sweep_k_stub(cfg, s);
  } else {
    if (a.agent.scenario.empty()) throw ContractError("sweep-k with an endpoint needs --scenario");
    const Scenario sc = load_scenario(a.agent.scenario);
    HttpEndpoint ep({endpoint_url(a.agent.endpoint)});
    RemoteGrounder grounder(ep);
    rep = sweep_k(cfg, [&](const AgentConfig& ac) {
      Clients c{ep, ep, grounder};
      return run_task(sc, c, ac).success;
    });
    rep.judge = "endpoint";
  }
  std::string text = "   K  episodes  successes  rate     95% CI             analytic\n";
  for (const auto& e : rep.entries) {
    char line[160];
    std::snprintf(line, sizeof line, "%4d  %8zu  %9zu  %.4f  [%.4f, %.4f]  %s\n", e.k, e.episodes, e.successes,
                  e.success_rate, e.ci.lo, e.ci.hi, e.analytic ? fmt("%.6f", *e.analytic).c_str() : "-");
    text += line;
  }
  emit(a.agent.common, sweep_report_to_json(rep), text);
  return 0;
}

void agent_flags(CLI::App* sub, AgentArgs& a) {
  sub->add_option("--scenario", a.scenario, "scenario JSON");
  sub->add_option("--max-steps", a.max_steps)->capture_default_str()->check(CLI::PositiveNumber);
  auto* st = sub->add_flag("--stub", a.stub, "scripted planner, stub judge, label grounder");
  auto* ep = sub->add_option("--endpoint", a.endpoint, std::string("chat endpoint URL (else $") + kEndpointEnv + ")");
  st->excludes(ep);
  sub->add_option("--p", a.p, "stub planner success probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sub->add_option("--judge", a.judge, "stub judge: oracle|uniform")->capture_default_str();
  add_common(sub, a.common);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clickscale: grounding training and test-time scaling harness"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  CleanArgs clean;
  auto* c = app.add_subcommand("clean", "filter grounding records by detector overlap");
  c->add_option("--records", clean.records, "records JSONL")->required();
  c->add_option("--detections", clean.detections, "detections JSONL");
  c->add_option("--tau", clean.tau, "IoU threshold")->capture_default_str();
  c->add_option("--out", clean.out, "output directory for kept/discarded/report");
  add_common(c, clean.common);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "GRPO training of the grid policy");
  t->add_option("--config", tr.config, "train config JSON")->required();
  add_common(t, tr.common);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval-grounding", "grounding accuracy over records");
  e->add_option("--grounder", ev.grounder, "local|remote")->capture_default_str()->check(
      CLI::IsMember({"local", "remote"}));
  e->add_option("--records", ev.records, "records JSONL")->required();
  e->add_option("--checkpoint", ev.checkpoint, "policy checkpoint for --grounder local");
  e->add_option("--endpoint", ev.endpoint, "grounder endpoint URL for --grounder remote");
  add_common(e, ev.common);

  AgentArgs run;
  auto* r = app.add_subcommand("run-task", "run one agent episode");
  r->add_option("--k", run.k, "proposals per step")->capture_default_str()->check(CLI::PositiveNumber);
  r->add_option("--log", run.log, "also write the trajectory log here");
  r->add_flag("--timing", run.timing, "include per-phase latency in the log");
  agent_flags(r, run);

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep-k", "success rate as a function of K");
  s->add_option("--ks", sw.ks, "comma-separated K values")->capture_default_str();
  s->add_option("--episodes", sw.episodes, "episodes per K")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--jobs", sw.jobs, "parallel episodes")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--length", sw.length, "decisions in the built-in chain scenario")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  agent_flags(s, sw.agent);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  std::string sub = "clickscale";
  try {
    if (*c) {
      sub = "clean";
      return cmd_clean(clean);
    }
    if (*t) {
      sub = "train";
      tr.seed_given = t->count("--seed") > 0;
      return cmd_train(tr);
    }
    if (*e) {
      sub = "eval-grounding";
      return cmd_eval(ev);
    }
    if (*r) {
      sub = "run-task";
      if (run.scenario.empty()) throw ContractError("run-task needs --scenario");
      return cmd_run_task(run);
    }
    if (*s) {
      sub = "sweep-k";
      return cmd_sweep(sw);
    }
  } catch (const std::exception& ex) {
    std::cerr << json{{"error", sub}, {"message", ex.what()}}.dump() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
