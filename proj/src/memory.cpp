#include "steward/memory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "steward/app.hpp"
#include "steward/backend.hpp"
#include "steward/error.hpp"
#include "steward/text.hpp"

namespace steward {

using nlohmann::json;

namespace {

constexpr const char* kExpertiseHeader = "# steward-memory expertise v1";
constexpr const char* kGuidelinesHeader = "# steward-memory guidelines v1";

std::vector<std::string> read_document(const std::filesystem::path& path, const char* header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != header) {
    throw Error(ErrorKind::kConfig, path.string() + ": missing or unsupported header (want '" + header + "')");
  }
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void Bm25Index::add(const std::string& doc_id, const std::vector<std::string>& tokens) {
  if (docs_.count(doc_id)) return;
  Doc d;
  for (const auto& t : tokens) ++d.tf[t];
  d.length = tokens.size();
  for (const auto& [t, _] : d.tf) ++df_[t];
  total_length_ += d.length;
  docs_.emplace(doc_id, std::move(d));
}

double Bm25Index::idf(const std::string& term) const {
  double n = static_cast<double>(docs_.size());
  double df = static_cast<double>(doc_freq(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::size_t Bm25Index::doc_freq(const std::string& term) const {
  auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

double Bm25Index::avg_length() const {
  return docs_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(docs_.size());
}

std::vector<std::string> Bm25Index::doc_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : docs_) ids.push_back(id);
  return ids;
}

double Bm25Index::score(const std::vector<std::string>& query, const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  if (it == docs_.end()) return 0.0;
  const Doc& d = it->second;
  double avg = avg_length();
  double norm = params_.k1 * (1.0 - params_.b + params_.b * (avg > 0 ? d.length / avg : 0.0));
  double s = 0.0;
  for (const auto& term : query) {
    auto tf_it = d.tf.find(term);
    if (tf_it == d.tf.end()) continue;
    double tf = tf_it->second;
    s += idf(term) * (tf * (params_.k1 + 1.0)) / (tf + norm);
  }
  return s;
}

std::vector<ScoredId> bm25_top_k(const Bm25Index& index, const std::vector<std::string>& query,
                                 std::size_t k) {
  std::vector<ScoredId> scored;
  for (const auto& id : index.doc_ids()) {
    double s = index.score(query, id);
    if (s > 0.0) scored.push_back({id, s});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

std::vector<ScoredId> rank_apps(const std::string& task_text, const std::vector<ExpertiseEntry>& expertise) {
  Bm25Index idx;
  for (const auto& e : expertise) {
    auto tokens = text::tokenize(e.description);
    for (const auto& c : e.expertise) {
      auto more = text::tokenize(c);
      tokens.insert(tokens.end(), more.begin(), more.end());
    }
    idx.add(e.app_id, tokens);
  }
  std::string stripped = task_text;
  for (const auto& name : text::slot_names(task_text)) {
    std::string token = "{" + name + "}";
    for (auto pos = stripped.find(token); pos != std::string::npos; pos = stripped.find(token)) {
      stripped.replace(pos, token.size(), " ");
    }
  }
  return bm25_top_k(idx, text::tokenize(stripped), expertise.size());
}

MemoryStore::MemoryStore(const AppRegistry& registry) {
  for (const auto& app : registry.apps()) {
    known_apps_.push_back(app.app_id);
    expertise_.push_back({app.app_id, app.description, {}});
    indexes_.emplace(app.app_id, Bm25Index());
  }
}

const ExpertiseEntry* MemoryStore::expertise_for(const std::string& app_id) const {
  for (const auto& e : expertise_) {
    if (e.app_id == app_id) return &e;
  }
  return nullptr;
}

ExpertiseEntry* MemoryStore::mutable_expertise(const std::string& app_id) {
  return const_cast<ExpertiseEntry*>(expertise_for(app_id));
}

std::size_t MemoryStore::guideline_count(const std::string& app_id) const {
  return static_cast<std::size_t>(std::count_if(guidelines_.begin(), guidelines_.end(),
                                                [&](const GuidelineEntry& g) { return g.app_id == app_id; }));
}

const Bm25Index& MemoryStore::index(const std::string& app_id) const {
  auto it = indexes_.find(app_id);
  if (it == indexes_.end()) throw Error(ErrorKind::kUnknownApp, "unknown app '" + app_id + "'");
  return it->second;
}

Bm25Index MemoryStore::rebuild_index(const std::string& app_id) const {
  Bm25Index idx;
  for (const auto& g : guidelines_) {
    if (g.app_id == app_id) idx.add(g.entry_id, text::tokenize(g.task_text));
  }
  return idx;
}

std::vector<GuidelineEntry> MemoryStore::retrieve_guidelines(const std::string& app_id,
                                                             const std::string& task_text,
                                                             std::size_t k) const {
  auto it = indexes_.find(app_id);
  if (it == indexes_.end()) return {};
  std::vector<GuidelineEntry> out;
  for (const auto& hit : bm25_top_k(it->second, text::tokenize(task_text), k)) {
    for (const auto& g : guidelines_) {
      if (g.entry_id == hit.id) {
        out.push_back(g);
        break;
      }
    }
  }
  return out;
}

UpdateDecision MemoryStore::add_expertise(const ExpertiseCandidate& candidate) {
  ExpertiseEntry* e = mutable_expertise(candidate.app_id);
  if (!e) throw Error(ErrorKind::kUnknownApp, "unknown app '" + candidate.app_id + "'");
  std::string phrase = text::trim(candidate.capability);
  if (phrase.empty()) return {false, "empty"};
  for (const auto& have : e->expertise) {
    if (text::iequals(text::trim(have), phrase)) return {false, "duplicate"};
  }
  e->expertise.push_back(phrase);
  return {true, "novel"};
}

UpdateDecision MemoryStore::update_expertise(const ExpertiseCandidate& candidate, AgentBackend& backend) {
  const ExpertiseEntry* e = expertise_for(candidate.app_id);
  if (!e) throw Error(ErrorKind::kUnknownApp, "unknown app '" + candidate.app_id + "'");
  ExpertiseVerdict v = backend.expertise_decision({*e, candidate});
  if (!v.novel) return {false, v.reason.empty() ? "not novel" : v.reason};
  return add_expertise(candidate);
}

void MemoryStore::insert_guideline(GuidelineEntry entry) {
  indexes_[entry.app_id].add(entry.entry_id, text::tokenize(entry.task_text));
  guidelines_.push_back(std::move(entry));
}

std::string MemoryStore::update_guidelines(const std::string& task_text, const GuidelineCandidate& candidate) {
  if (std::find(known_apps_.begin(), known_apps_.end(), candidate.app_id) == known_apps_.end()) {
    throw Error(ErrorKind::kUnknownApp, "unknown app '" + candidate.app_id + "'");
  }
  if (candidate.steps.empty()) throw Error(ErrorKind::kConfig, "guideline candidate has no steps");
  for (const auto& g : guidelines_) {
    if (g.app_id == candidate.app_id && g.task_text == task_text && g.steps == candidate.steps) return g.entry_id;
  }
  int ordinal = ++next_ordinal_[candidate.app_id];
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", ordinal);
  GuidelineEntry entry{candidate.app_id + "-" + buf, candidate.app_id, task_text, candidate.steps};
  std::string id = entry.entry_id;
  insert_guideline(std::move(entry));
  return id;
}

std::string MemoryStore::expertise_document() const {
  std::string out = std::string(kExpertiseHeader) + "\n";
  for (const auto& e : expertise_) out += json(e).dump() + "\n";
  return out;
}

std::string MemoryStore::guidelines_document() const {
  std::vector<const GuidelineEntry*> sorted;
  for (const auto& g : guidelines_) sorted.push_back(&g);
  std::sort(sorted.begin(), sorted.end(),
            [](const GuidelineEntry* a, const GuidelineEntry* b) { return a->entry_id < b->entry_id; });
  std::string out = std::string(kGuidelinesHeader) + "\n";
  for (const auto* g : sorted) out += json(*g).dump() + "\n";
  return out;
}

void MemoryStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir / kExpertiseFile, expertise_document());
  write_file(dir / kGuidelinesFile, guidelines_document());
}

void MemoryStore::load_expertise_file(const std::filesystem::path& path) {
  for (const auto& line : read_document(path, kExpertiseHeader)) {
    ExpertiseEntry e;
    try {
      e = json::parse(line).get<ExpertiseEntry>();
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::kConfig, path.string() + ": " + ex.what());
    }
    ExpertiseEntry* have = mutable_expertise(e.app_id);
    if (!have) throw Error(ErrorKind::kUnknownApp, path.string() + ": unknown app '" + e.app_id + "'");
    if (e.description.empty()) e.description = have->description;
    *have = std::move(e);
  }
}

void MemoryStore::load(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir / kExpertiseFile)) load_expertise_file(dir / kExpertiseFile);
  std::filesystem::path gpath = dir / kGuidelinesFile;
  if (!std::filesystem::exists(gpath)) return;
  guidelines_.clear();
  next_ordinal_.clear();
  for (auto& [app, idx] : indexes_) idx = Bm25Index();
  for (const auto& line : read_document(gpath, kGuidelinesHeader)) {
    GuidelineEntry g;
    try {
      g = json::parse(line).get<GuidelineEntry>();
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::kConfig, gpath.string() + ": " + ex.what());
    }
    if (!indexes_.count(g.app_id)) throw Error(ErrorKind::kUnknownApp, gpath.string() + ": unknown app '" + g.app_id + "'");
    if (g.steps.empty()) throw Error(ErrorKind::kConfig, gpath.string() + ": entry " + g.entry_id + " has no steps");
    auto dash = g.entry_id.rfind('-');
    int ord = dash == std::string::npos ? 0 : std::atoi(g.entry_id.c_str() + dash + 1);
    next_ordinal_[g.app_id] = std::max(next_ordinal_[g.app_id], ord);
    insert_guideline(std::move(g));
  }
}

}  // namespace steward
