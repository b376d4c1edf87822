#include "steward/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "steward/error.hpp"
#include "steward/text.hpp"

namespace steward {

using nlohmann::json;

std::map<int, int> parse_mix(const std::string& mix) {
  auto parts = text::split(mix, ',');
  if (parts.size() != 3) throw Error(ErrorKind::kConfig, "mix must be three comma-separated counts: " + mix);
  std::map<int, int> out;
  for (std::size_t i = 0; i < 3; ++i) {
    std::string p = text::trim(parts[i]);
    if (p.empty() || !std::all_of(p.begin(), p.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw Error(ErrorKind::kConfig, "mix count is not a non-negative integer: " + parts[i]);
    }
    int n = std::stoi(p);
    if (n > 0) out[static_cast<int>(i) + 2] = n;
  }
  if (out.empty()) throw Error(ErrorKind::kConfig, "mix requests no instructions: " + mix);
  return out;
}

namespace {

struct Feed {
  std::size_t producer = 0;
  std::string output;  // producer output label == edge label
  std::string slot;
};

struct Node {
  const MockApp* app = nullptr;
  const TaskTemplate* tmpl = nullptr;
  std::string task_id;
  std::map<std::string, std::string> bindings;  // literals for params and unfed slots
  std::optional<Feed> feed;
};

struct ConsumerChoice {
  const MockApp* app;
  const TaskTemplate* tmpl;
  const SlotDef* slot;
  std::size_t producer;
  const OutputDef* output;
};

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::map<std::string, std::string> draw_bindings(std::mt19937_64& rng, const MockApp& app,
                                                 const TaskTemplate& tmpl) {
  std::map<std::string, std::string> b;
  const TableRow* row = nullptr;
  if (!tmpl.row_table.empty()) {
    const auto& rows = app.tables.at(tmpl.row_table);
    if (!rows.empty()) row = &rows[pick(rng, rows.size())];
  }
  for (const auto& p : tmpl.params) {
    if (!p.column.empty()) {
      if (row && row->count(p.column)) b[p.name] = row->at(p.column);
    } else if (!p.pool.empty()) {
      b[p.name] = p.pool[pick(rng, p.pool.size())];
    }
  }
  for (const auto& s : tmpl.slots) {
    if (!s.pool.empty()) b[s.name] = s.pool[pick(rng, s.pool.size())];
  }
  return b;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string join_pieces(const std::vector<std::string>& pieces) {
  if (pieces.size() == 1) return pieces[0];
  if (pieces.size() == 2) return pieces[0] + " and " + pieces[1];
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) out += (i + 1 == pieces.size()) ? ", and " : ", ";
    out += pieces[i];
  }
  return out;
}

std::optional<std::vector<Node>> draw_nodes(std::mt19937_64& rng, const AppRegistry& reg, int k) {
  std::vector<Node> nodes;
  std::vector<std::pair<const MockApp*, const TaskTemplate*>> roots;
  for (const auto& app : reg.apps()) {
    for (const auto& t : app.templates) {
      if (k == 1 || !t.outputs.empty()) roots.emplace_back(&app, &t);
    }
  }
  if (roots.empty()) return std::nullopt;
  auto [ra, rt] = roots[pick(rng, roots.size())];
  nodes.push_back({ra, rt, "t1", draw_bindings(rng, *ra, *rt), std::nullopt});

  for (int i = 1; i < k; ++i) {
    std::set<std::string> used;
    for (const auto& n : nodes) used.insert(n.app->app_id);
    std::vector<ConsumerChoice> choices;
    for (const auto& app : reg.apps()) {
      if (used.count(app.app_id)) continue;
      for (const auto& t : app.templates) {
        for (const auto& s : t.slots) {
          for (std::size_t p = 0; p < nodes.size(); ++p) {
            for (const auto& o : nodes[p].tmpl->outputs) {
              if (s.accepts_type(o.type)) choices.push_back({&app, &t, &s, p, &o});
            }
          }
        }
      }
    }
    if (choices.empty()) return std::nullopt;
    const auto& c = choices[pick(rng, choices.size())];
    Node n{c.app, c.tmpl, "t" + std::to_string(i + 1), draw_bindings(rng, *c.app, *c.tmpl),
           Feed{c.producer, c.output->label, c.slot->name}};
    nodes.push_back(std::move(n));
  }
  return nodes;
}

// Replays the drawn nodes in order on one fresh device and assembles the
// instruction with its ground truth. Returns nullopt if any replay fails.
std::optional<GeneratedInstruction> realize(const std::shared_ptr<const AppRegistry>& registry,
                                            const std::vector<Node>& nodes, const std::string& id) {
  DeviceEnv env(registry);
  std::vector<std::map<std::string, std::string>> outputs(nodes.size());
  GeneratedInstruction gi;
  std::vector<std::string> pieces;

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    auto concrete = n.bindings;
    auto with_placeholder = n.bindings;
    auto with_phrase = n.bindings;
    if (n.feed) {
      const auto& prod = outputs[n.feed->producer];
      auto it = prod.find(n.feed->output);
      if (it == prod.end()) return std::nullopt;
      concrete[n.feed->slot] = it->second;
      with_placeholder[n.feed->slot] = "{" + n.feed->output + "}";
      const OutputDef* od = nullptr;
      for (const auto& o : nodes[n.feed->producer].tmpl->outputs) {
        if (o.label == n.feed->output) od = &o;
      }
      with_phrase[n.feed->slot] = od && !od->phrase.empty() ? od->phrase : it->second;
    }

    TemplateReplay replay;
    try {
      replay = replay_template(env, *n.app, *n.tmpl, concrete);
    } catch (const Error&) {
      return std::nullopt;
    }
    outputs[i] = replay.outputs;

    Task task;
    task.task_id = n.task_id;
    task.app_id = n.app->app_id;
    task.description = text::interpolate(n.tmpl->text, with_placeholder);
    task.placeholders = placeholders_in(task.description);
    gi.truth.graph.nodes.push_back({task, task.app_id});
    if (n.feed) gi.truth.graph.edges.push_back({nodes[n.feed->producer].task_id, n.task_id, n.feed->output});

    TaskTruth tt;
    tt.task_id = n.task_id;
    tt.app_id = n.app->app_id;
    tt.app_name = n.app->name;
    tt.template_id = n.tmpl->id;
    tt.capability = n.tmpl->capability;
    tt.script = replay.steps;
    for (const auto& def : n.tmpl->script) {
      tt.input_templates.push_back(def.type == ActionType::kInput ? text::interpolate(def.text, with_placeholder)
                                                                  : std::string());
    }
    tt.goal = replay.goal;
    gi.truth.tasks.push_back(std::move(tt));

    pieces.push_back(text::interpolate(n.tmpl->text, with_phrase));
  }

  // Expected results per outbound edge label.
  for (const auto& e : gi.truth.graph.edges) {
    std::size_t p = 0;
    while (nodes[p].task_id != e.from) ++p;
    gi.truth.tasks[p].results[e.label] = outputs[p].at(e.label);
  }

  for (const auto& t : gi.truth.tasks) {
    if (!env.check_goal(t.app_id, t.goal)) return std::nullopt;
  }

  gi.instruction.id = id;
  gi.instruction.text = capitalize(join_pieces(pieces));
  gi.instruction.complexity = static_cast<int>(nodes.size());
  for (const auto& n : nodes) gi.instruction.labeled_apps.push_back(n.app->app_id);
  std::sort(gi.instruction.labeled_apps.begin(), gi.instruction.labeled_apps.end());
  return gi;
}

}  // namespace

GeneratedInstruction compose_instruction(const std::shared_ptr<const AppRegistry>& registry, const std::string& id,
                                         const std::vector<NodeSpec>& specs) {
  if (!registry) throw Error(ErrorKind::kConfig, "no app registry");
  if (specs.empty()) throw Error(ErrorKind::kRegistry, id + ": no tasks");
  std::vector<Node> nodes;
  std::set<std::string> apps;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const NodeSpec& s = specs[i];
    const MockApp* app = registry->find(s.app_id);
    if (!app) throw Error(ErrorKind::kRegistry, id + ": unknown app " + s.app_id);
    if (!apps.insert(s.app_id).second) throw Error(ErrorKind::kRegistry, id + ": app used twice: " + s.app_id);
    const TaskTemplate* tmpl = app->task_template(s.template_id);
    if (!tmpl) throw Error(ErrorKind::kRegistry, id + ": unknown template " + s.app_id + "/" + s.template_id);
    auto bindings = sample_bindings(*app, *tmpl);
    for (const auto& [k, v] : s.bindings) bindings[k] = v;
    Node n{app, tmpl, "t" + std::to_string(i + 1), bindings, std::nullopt};
    if (s.producer >= 0) {
      if (static_cast<std::size_t>(s.producer) >= i) throw Error(ErrorKind::kRegistry, id + ": producer must come first");
      const auto& prod = *nodes[static_cast<std::size_t>(s.producer)].tmpl;
      auto out = std::find_if(prod.outputs.begin(), prod.outputs.end(), [&](const auto& o) { return o.label == s.output; });
      const SlotDef* slot = tmpl->slot(s.slot);
      if (out == prod.outputs.end() || !slot || !slot->accepts_type(out->type)) {
        throw Error(ErrorKind::kRegistry, id + ": output " + s.output + " cannot feed slot " + s.slot);
      }
      n.feed = Feed{static_cast<std::size_t>(s.producer), s.output, s.slot};
    }
    nodes.push_back(std::move(n));
  }
  auto gi = realize(registry, nodes, id);
  if (!gi) throw Error(ErrorKind::kRegistry, id + ": ground truth does not replay");
  return *gi;
}

std::vector<GeneratedInstruction> generate_suite(const std::shared_ptr<const AppRegistry>& registry,
                                                 const GenerateOptions& options) {
  if (!registry) throw Error(ErrorKind::kConfig, "no app registry");
  if (options.max_attempts < 1) throw Error(ErrorKind::kConfig, "max_attempts must be positive");
  for (const auto& [k, n] : options.counts) {
    if (k < 1) throw Error(ErrorKind::kConfig, "complexity must be at least 1");
    if (n < 0) throw Error(ErrorKind::kConfig, "instruction count must be non-negative");
    if (k > static_cast<int>(registry->apps().size())) {
      throw Error(ErrorKind::kInfeasibleMix,
                  std::to_string(k) + "-app instructions need more apps than are installed");
    }
  }

  std::mt19937_64 rng(options.seed);
  std::vector<GeneratedInstruction> suite;
  std::set<std::string> texts;
  int serial = 0;
  for (const auto& [k, n] : options.counts) {
    for (int made = 0; made < n; ++made) {
      char idbuf[32];
      std::snprintf(idbuf, sizeof idbuf, "%03d", serial + 1);
      std::string id = options.id_prefix + "-" + idbuf;
      std::optional<GeneratedInstruction> got;
      std::optional<GeneratedInstruction> fallback;  // a valid draw whose text repeats
      for (int attempt = 0; attempt < options.max_attempts && !got; ++attempt) {
        auto nodes = draw_nodes(rng, *registry, k);
        if (!nodes) continue;
        auto gi = realize(registry, *nodes, id);
        if (!gi) continue;
        if (texts.count(gi->instruction.text)) {
          if (!fallback) fallback = std::move(gi);
          continue;
        }
        got = std::move(gi);
      }
      if (!got) got = std::move(fallback);
      if (!got) {
        throw Error(ErrorKind::kInfeasibleMix, "could not realize a " + std::to_string(k) + "-app instruction after " +
                                                   std::to_string(options.max_attempts) + " attempts");
      }
      texts.insert(got->instruction.text);
      suite.push_back(std::move(*got));
      ++serial;
    }
  }
  return suite;
}

std::string suite_document(const std::vector<GeneratedInstruction>& suite) {
  json items = json::array();
  for (const auto& gi : suite) {
    json j = gi.instruction;
    j["ground_truth"] = gi.truth;
    items.push_back(std::move(j));
  }
  json doc = {{"format", 1}, {"instructions", items}};
  return doc.dump(2) + "\n";
}

void save_suite(const std::filesystem::path& path, const std::vector<GeneratedInstruction>& suite) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << suite_document(suite);
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

std::vector<GeneratedInstruction> load_suite(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  if (doc.value("format", 0) != 1) throw Error(ErrorKind::kParse, path.string() + ": unsupported suite format");
  std::vector<GeneratedInstruction> suite;
  try {
    for (const auto& j : doc.at("instructions")) {
      GeneratedInstruction gi;
      gi.instruction = j.get<Instruction>();
      gi.truth = j.at("ground_truth").get<GroundTruth>();
      suite.push_back(std::move(gi));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return suite;
}

namespace {

struct Tally {
  int n = 0;
  double success = 0, task = 0, app = 0;
  double step_sum = 0;
  int step_runs = 0;
  long actions = 0, tasks = 0, tokens = 0;

  BucketMetrics finish() const {
    BucketMetrics m;
    m.instructions = n;
    if (n == 0) return m;
    m.success_rate = success / n;
    m.task_rate = task / n;
    m.app_rate = app / n;
    m.step_rate = step_runs ? step_sum / step_runs : 0.0;
    m.actions_per_task = tasks ? static_cast<double>(actions) / static_cast<double>(tasks) : 0.0;
    m.tokens_per_action = actions ? static_cast<double>(tokens) / static_cast<double>(actions) : 0.0;
    return m;
  }
};

// Correct steps advance a cursor along the expected keys; anything else is
// counted as taken but not correct. The cursor restarts every attempt.
void count_steps(const RunReport& r, const GroundTruth& truth, long& correct, long& total) {
  for (const auto& t : r.tasks) {
    const TaskTruth* tt = truth.task(t.task_id);
    if (!tt || tt->app_id != t.app_id) tt = truth.task_for_app(t.app_id);
    std::vector<std::string> expected;
    if (tt) {
      expected = tt->expected_keys();
      expected.push_back("finish");
    }
    for (const auto& a : t.log) {
      std::size_t cursor = 0;
      for (const auto& k : a.keys) {
        ++total;
        if (cursor < expected.size() && k == expected[cursor]) {
          ++correct;
          ++cursor;
        }
      }
    }
  }
}

}  // namespace

MetricsReport compute_metrics(const std::vector<RunReport>& reports,
                              const std::vector<GeneratedInstruction>& truths) {
  if (reports.empty() || truths.empty()) throw Error(ErrorKind::kMisalignedInputs, "no runs to score");
  if (reports.size() != truths.size()) {
    throw Error(ErrorKind::kMisalignedInputs, std::to_string(reports.size()) + " reports for " +
                                                  std::to_string(truths.size()) + " instructions");
  }
  std::map<std::string, const GeneratedInstruction*> by_id;
  for (const auto& g : truths) {
    if (!by_id.emplace(g.instruction.id, &g).second) {
      throw Error(ErrorKind::kMisalignedInputs, "duplicate instruction id " + g.instruction.id);
    }
  }
  std::set<std::string> seen;
  Tally all;
  std::map<int, Tally> buckets;
  for (const auto& r : reports) {
    auto it = by_id.find(r.instruction_id);
    if (it == by_id.end()) throw Error(ErrorKind::kMisalignedInputs, "no ground truth for " + r.instruction_id);
    if (!seen.insert(r.instruction_id).second) {
      throw Error(ErrorKind::kMisalignedInputs, "duplicate report for " + r.instruction_id);
    }
    const GeneratedInstruction& g = *it->second;
    const auto n_tasks = g.truth.tasks.size();
    if (n_tasks == 0 || r.goals_met.size() != n_tasks) {
      throw Error(ErrorKind::kMisalignedInputs, r.instruction_id + ": goal flags do not match the task count");
    }

    long met = std::count(r.goals_met.begin(), r.goals_met.end(), true);
    double task_rate = static_cast<double>(met) / static_cast<double>(n_tasks);
    double success = met == static_cast<long>(n_tasks) ? 1.0 : 0.0;

    std::set<std::string> labeled(g.instruction.labeled_apps.begin(), g.instruction.labeled_apps.end());
    if (labeled.empty()) {
      for (const auto& t : g.truth.tasks) labeled.insert(t.app_id);
    }
    std::size_t hit = 0;
    for (const auto& a : labeled) {
      if (std::find(r.apps_touched.begin(), r.apps_touched.end(), a) != r.apps_touched.end()) ++hit;
    }
    double app_rate = static_cast<double>(hit) / static_cast<double>(labeled.size());

    long correct = 0, total = 0;
    count_steps(r, g.truth, correct, total);

    int complexity = g.instruction.complexity > 0 ? g.instruction.complexity : static_cast<int>(n_tasks);
    for (Tally* t : {&all, &buckets[complexity]}) {
      t->n += 1;
      t->success += success;
      t->task += task_rate;
      t->app += app_rate;
      if (total > 0) {
        t->step_sum += static_cast<double>(correct) / static_cast<double>(total);
        t->step_runs += 1;
      }
      t->actions += r.total_actions;
      t->tasks += static_cast<long>(n_tasks);
      t->tokens += r.tokens;
    }
  }

  MetricsReport m;
  m.overall = all.finish();
  for (const auto& [k, t] : buckets) m.by_complexity[k] = t.finish();
  return m;
}

namespace {

json bucket_json(const BucketMetrics& b) {
  json j = json::object();
  j["instructions"] = b.instructions;
  j["success_rate"] = b.success_rate;
  j["task_rate"] = b.task_rate;
  j["app_rate"] = b.app_rate;
  j["step_rate"] = b.step_rate;
  j["actions_per_task"] = b.actions_per_task;
  j["tokens_per_action"] = b.tokens_per_action;
  return j;
}

}  // namespace

std::string metrics_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["overall"] = bucket_json(m.overall);
  nlohmann::ordered_json by = nlohmann::ordered_json::object();
  for (const auto& [k, b] : m.by_complexity) by[std::to_string(k)] = bucket_json(b);
  j["by_complexity"] = by;
  return j.dump(2) + "\n";
}

std::string metrics_table(const MetricsReport& m) {
  std::ostringstream os;
  auto row = [&](const std::string& name, const BucketMetrics& b) {
    os << std::left << std::setw(10) << name << std::right << std::setw(6) << b.instructions << std::fixed
       << std::setprecision(3) << std::setw(9) << b.success_rate << std::setw(9) << b.task_rate << std::setw(9)
       << b.app_rate << std::setw(9) << b.step_rate << std::setprecision(2) << std::setw(9) << b.actions_per_task
       << std::setw(10) << b.tokens_per_action << "\n";
  };
  os << std::left << std::setw(10) << "bucket" << std::right << std::setw(6) << "n" << std::setw(9) << "success"
     << std::setw(9) << "task" << std::setw(9) << "app" << std::setw(9) << "step" << std::setw(9) << "A/T"
     << std::setw(10) << "T/A" << "\n";
  for (const auto& [k, b] : m.by_complexity) row(std::to_string(k) + "-app", b);
  row("all", m.overall);
  return os.str();
}

std::vector<bool> check_goals(const DeviceEnv& env, const GroundTruth& truth) {
  std::vector<bool> out;
  out.reserve(truth.tasks.size());
  for (const auto& t : truth.tasks) out.push_back(env.check_goal(t.app_id, t.goal));
  return out;
}

SuiteResult run_suite(const std::vector<GeneratedInstruction>& suite, const std::shared_ptr<const AppRegistry>& registry,
                      const RunConfig& cfg, MemoryStore& memory, AgentBackend& backend, TraceWriter* trace) {
  cfg.validate();
  SuiteResult out;
  for (const auto& gi : suite) {
    DeviceEnv env(registry);
    const GroundTruth* truth = &gi.truth;
    GoalProbe probe = [truth](const DeviceEnv& e) { return check_goals(e, *truth); };
    RunReport r;
    try {
      r = run_instruction(gi.instruction, env, cfg, memory, backend, trace, probe);
    } catch (const Error& e) {
      r.instruction_id = gi.instruction.id;
      r.error = std::string(to_string(e.kind())) + ": " + e.what();
      r.goals_met = check_goals(env, gi.truth);
    }
    if (r.goals_met.size() != gi.truth.tasks.size()) r.goals_met = check_goals(env, gi.truth);
    out.reports.push_back(std::move(r));
  }
  if (!out.reports.empty()) out.metrics = compute_metrics(out.reports, suite);
  return out;
}

}  // namespace steward
