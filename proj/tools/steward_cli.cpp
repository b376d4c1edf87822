// Command-line entry point: generate, run, evolve, report, replay.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "steward/bench.hpp"
#include "steward/error.hpp"
#include "steward/layout.hpp"
#include "steward/llm.hpp"
#include "steward/oracle.hpp"
#include "steward/text.hpp"

namespace fs = std::filesystem;
using namespace steward;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(int code, std::string_view kind, const std::string& msg) {
  std::string one_line = msg;
  for (auto& c : one_line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: kind=" << kind << " msg=" << text::quote(one_line) << "\n";
  return code;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << content;
}

struct Common {
  std::string data_dir;
  std::shared_ptr<const AppRegistry> registry() const {
    fs::path d = data_dir.empty() ? default_data_dir() : fs::path(data_dir);
    return AppRegistry::load_dir(d / "apps");
  }
};

struct GenerateArgs {
  std::optional<int> n;
  std::string mix;
  int single = 0;
  std::uint64_t seed = 7;
  std::string prefix = "i";
  std::string out;
};

struct RunArgs {
  std::string suite;
  std::string instruction;
  std::string backend = "oracle";
  std::string fault = "none";
  int fault_task = 1;
  int fault_step = 2;
  std::uint64_t seed = 0;
  int n_try = 3;
  int n_step = 20;
  std::string memory;
  std::string expertise;
  std::string trace;
  std::string out;
  bool no_update = false;
  bool verbose = false;
};

struct ReportArgs {
  std::vector<std::string> traces;
  std::string suite;
  std::string out;
};

struct ReplayArgs {
  std::string trace;
};

int cmd_generate(const Common& c, const GenerateArgs& a) {
  GenerateOptions o;
  if (!a.mix.empty()) {
    try {
      o.counts = parse_mix(a.mix);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  int mixed = 0;
  for (const auto& [k, n] : o.counts) mixed += n;
  if (a.n) {
    if (*a.n < 0) throw UsageError("--n must be non-negative");
    if (a.mix.empty()) {
      int rem = *a.n - a.single;
      if (rem < 0) throw UsageError("--single exceeds --n");
      for (int k = 2; k <= 4; ++k) o.counts[k] = rem / 3 + ((k - 2) < rem % 3 ? 1 : 0);
      mixed = rem;
    } else if (mixed + a.single != *a.n) {
      throw UsageError("--n " + std::to_string(*a.n) + " does not match the mix total " +
                       std::to_string(mixed + a.single));
    }
  }
  if (a.single < 0) throw UsageError("--single must be non-negative");
  if (a.single > 0) o.counts[1] = a.single;
  if (mixed + a.single == 0) throw UsageError("nothing to generate: give --n, --mix or --single");
  o.seed = a.seed;
  o.id_prefix = a.prefix;
  auto suite = generate_suite(c.registry(), o);
  save_suite(a.out, suite);
  std::cout << "wrote " << suite.size() << " instructions to " << a.out << "\n";
  return 0;
}

std::unique_ptr<AgentBackend> make_backend(const RunArgs& a, const std::vector<GeneratedInstruction>& suite,
                                           const std::shared_ptr<const AppRegistry>& reg) {
  if (a.backend == "oracle") {
    auto mode = parse_fault_mode(a.fault);
    if (!mode) throw UsageError("unknown fault mode: " + a.fault);
    if (a.fault_task < 0 || a.fault_step < 0) throw UsageError("fault ordinals must be non-negative");
    FaultPolicy fp{*mode, a.fault_task, a.fault_step, a.seed};
    return std::make_unique<OracleBackend>(std::make_shared<ScriptDb>(suite), fp);
  }
  if (a.backend == "llm") {
    if (a.fault != "none") throw UsageError("fault injection needs the oracle backend");
    LlmConfig cfg = LlmConfig::from_env();
    std::string key = cfg.api_key();
    auto transport = std::make_unique<HttpTransport>(cfg.endpoint, key, std::chrono::seconds(cfg.timeout_s));
    return std::make_unique<LlmBackend>(std::move(transport), cfg, reg);
  }
  throw UsageError("unknown backend: " + a.backend);
}

void prepare_memory(MemoryStore& mem, const RunArgs& a) {
  if (!a.memory.empty() && fs::exists(a.memory)) mem.load(a.memory);
  if (!a.expertise.empty()) {
    if (!fs::exists(a.expertise)) throw Error(ErrorKind::kIo, "no such expertise file: " + a.expertise);
    mem.load_expertise_file(a.expertise);
  }
}

RunConfig run_config(const RunArgs& a, bool update) {
  RunConfig cfg;
  cfg.n_try = a.n_try;
  cfg.n_step = a.n_step;
  cfg.update_memory = update;
  cfg.verbose = a.verbose;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int cmd_run(const Common& c, const RunArgs& a) {
  RunConfig cfg = run_config(a, !a.no_update);
  if (a.suite.empty() == a.instruction.empty()) throw UsageError("give exactly one of --suite or --instruction");
  auto reg = c.registry();
  std::vector<GeneratedInstruction> suite;
  if (!a.suite.empty()) suite = load_suite(a.suite);
  if (!a.instruction.empty() && a.backend == "oracle") {
    throw UsageError("the oracle backend needs a generated --suite");
  }
  auto backend = make_backend(a, suite, reg);
  MemoryStore mem(*reg);
  prepare_memory(mem, a);

  std::unique_ptr<TraceWriter> trace;
  if (!a.trace.empty()) trace = TraceWriter::open(a.trace);

  if (!a.instruction.empty()) {
    Instruction instr{"live-001", a.instruction, {}, 0};
    DeviceEnv env(reg);
    RunReport r = run_instruction(instr, env, cfg, mem, *backend, trace.get());
    json j = r;
    std::cout << j.dump(2) << "\n";
    if (!a.memory.empty()) mem.save(a.memory);
    return r.success ? 0 : kExitRuntime;
  }

  if (suite.empty()) throw Error(ErrorKind::kMisalignedInputs, "suite is empty");
  SuiteResult res = run_suite(suite, reg, cfg, mem, *backend, trace.get());
  std::cout << metrics_table(res.metrics);
  if (!a.out.empty()) write_file(a.out, metrics_json(res.metrics));
  if (!a.memory.empty()) mem.save(a.memory);
  return 0;
}

int cmd_evolve(const Common& c, const RunArgs& a) {
  if (a.suite.empty()) throw UsageError("--suite is required");
  if (a.memory.empty()) throw UsageError("--memory is required");
  RunConfig cfg = run_config(a, true);
  auto reg = c.registry();
  auto suite = load_suite(a.suite);
  if (suite.empty()) throw Error(ErrorKind::kMisalignedInputs, "suite is empty");
  auto backend = make_backend(a, suite, reg);
  MemoryStore mem(*reg);
  prepare_memory(mem, a);
  std::unique_ptr<TraceWriter> trace;
  if (!a.trace.empty()) trace = TraceWriter::open(a.trace);
  SuiteResult res = run_suite(suite, reg, cfg, mem, *backend, trace.get());
  mem.save(a.memory);
  std::size_t caps = 0;
  for (const auto& e : mem.expertise()) caps += e.expertise.size();
  std::cout << "evolved on " << suite.size() << " instructions: " << caps << " capabilities, "
            << mem.guidelines().size() << " guidelines written to " << a.memory << "\n";
  std::cout << metrics_table(res.metrics);
  return 0;
}

int cmd_report(const ReportArgs& a) {
  if (a.traces.empty()) throw UsageError("--trace is required");
  if (a.suite.empty()) throw UsageError("--suite is required");
  auto suite = load_suite(a.suite);
  std::map<std::string, RunReport> by_id;
  for (const auto& path : a.traces) {
    for (const auto& rec : read_trace(path)) {
      if (rec.value("kind", "") != "report") continue;
      RunReport r = rec.get<RunReport>();
      if (!by_id.emplace(r.instruction_id, r).second) {
        throw Error(ErrorKind::kMisalignedInputs, "instruction " + r.instruction_id + " reported twice");
      }
    }
  }
  // Suite order, so a merged report matches the one written by `run`.
  std::vector<RunReport> reports;
  for (const auto& gi : suite) {
    auto it = by_id.find(gi.instruction.id);
    if (it == by_id.end()) throw Error(ErrorKind::kMisalignedInputs, "no report for " + gi.instruction.id);
    reports.push_back(it->second);
    by_id.erase(it);
  }
  if (!by_id.empty()) throw Error(ErrorKind::kMisalignedInputs, "trace has runs outside the suite: " + by_id.begin()->first);
  MetricsReport m = compute_metrics(reports, suite);
  std::cout << metrics_table(m);
  if (!a.out.empty()) write_file(a.out, metrics_json(m));
  return 0;
}

int cmd_replay(const Common& c, const ReplayArgs& a) {
  auto reg = c.registry();
  auto records = read_trace(a.trace);
  std::unique_ptr<DeviceEnv> env;
  std::string run;
  long steps = 0, runs = 0, mismatches = 0;
  for (const auto& rec : records) {
    std::string r = rec.value("run", "");
    if (!env || r != run) {
      env = std::make_unique<DeviceEnv>(reg);
      run = r;
      ++runs;
    }
    std::string kind = rec.value("kind", "");
    if (kind == "attempt_start") {
      env->go_home();
    } else if (kind == "step") {
      ++steps;
      std::string where = run + " seq " + std::to_string(rec.value("seq", 0L));
      if (layout_digest(env->get_state()) != rec.value("layout_digest", "")) {
        ++mismatches;
        std::cout << "mismatch: " << where << ": screen differs before " << rec.value("action", "") << "\n";
      }
      auto action = Action::parse(rec.value("action", ""));
      if (!action) throw Error(ErrorKind::kParse, where + ": unreadable action");
      StepOutcome o = env->apply_action(*action);
      if (o.changed != rec.value("changed", false)) {
        ++mismatches;
        std::cout << "mismatch: " << where << ": changed flag differs\n";
      }
    }
  }
  std::cout << "replayed " << steps << " steps over " << runs << " runs, " << mismatches << " mismatches\n";
  return mismatches == 0 ? 0 : kExitRuntime;
}

void add_run_flags(CLI::App* sub, RunArgs& a, bool with_instruction) {
  sub->add_option("--suite", a.suite, "Suite file written by generate");
  if (with_instruction) sub->add_option("--instruction", a.instruction, "Free-form instruction (llm backend)");
  sub->add_option("--backend", a.backend, "oracle or llm")->check(CLI::IsMember({"oracle", "llm"}));
  sub->add_option("--fault", a.fault, "none, wrong_action_once or drop_result_once");
  sub->add_option("--fault-task", a.fault_task, "1-based task ordinal to fault (0: every task)");
  sub->add_option("--fault-step", a.fault_step, "1-based step position to fault (0: drawn from --seed)");
  sub->add_option("--seed", a.seed, "Fault seed");
  sub->add_option("--n-try", a.n_try, "Attempts per task");
  sub->add_option("--n-step", a.n_step, "Actions per attempt");
  sub->add_option("--memory", a.memory, "Memory directory (loaded if present, saved after the run)");
  sub->add_option("--expertise", a.expertise, "Expertise file overriding the loaded expertise");
  sub->add_option("--trace", a.trace, "JSON-lines trace output");
  sub->add_flag("--verbose", a.verbose, "Record backend exchanges in the trace");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steward: cross-app mobile task orchestration on a simulated phone"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--data", common.data_dir, "Data directory holding apps/");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a benchmark suite");
  g->add_option("--n", gen.n, "Total instructions");
  g->add_option("--mix", gen.mix, "Counts of 2-, 3- and 4-app instructions, e.g. 20,20,20");
  g->add_option("--single", gen.single, "Number of single-app instructions");
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--prefix", gen.prefix, "Instruction id prefix");
  g->add_option("--out", gen.out, "Suite file")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run a suite or a single instruction");
  add_run_flags(r, run, true);
  r->add_option("--out", run.out, "Metrics JSON output");
  r->add_flag("--no-memory-update", run.no_update, "Keep memories fixed during the run");

  RunArgs evo;
  auto* e = app.add_subcommand("evolve", "Populate memories from a training suite");
  add_run_flags(e, evo, false);

  ReportArgs rep;
  auto* p = app.add_subcommand("report", "Compute metrics from traces");
  p->add_option("--trace", rep.traces, "Trace file (repeat for shards)")->required();
  p->add_option("--suite", rep.suite, "Suite the traces were run on")->required();
  p->add_option("--out", rep.out, "Metrics JSON output");

  ReplayArgs rp;
  auto* y = app.add_subcommand("replay", "Replay a trace against a fresh device");
  y->add_option("--trace", rp.trace, "Trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    return fail(kExitUsage, "usage", ex.what());
  }

  try {
    if (*g) return cmd_generate(common, gen);
    if (*r) return cmd_run(common, run);
    if (*e) return cmd_evolve(common, evo);
    if (*p) return cmd_report(rep);
    if (*y) return cmd_replay(common, rp);
  } catch (const UsageError& ex) {
    return fail(kExitUsage, "usage", ex.what());
  } catch (const Error& ex) {
    return fail(ex.kind() == ErrorKind::kConfig ? kExitUsage : kExitRuntime, to_string(ex.kind()), ex.what());
  } catch (const std::exception& ex) {
    return fail(kExitRuntime, "internal", ex.what());
  }
  return kExitUsage;
}
