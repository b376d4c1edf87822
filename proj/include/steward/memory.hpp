#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "steward/model.hpp"

namespace steward {

class AppRegistry;
class AgentBackend;

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 over an incrementally grown document set. The corpus
/// statistics are kept exactly (integer counts), so an index built by
/// repeated add() compares equal to one rebuilt from scratch.
class Bm25Index {
 public:
  explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

  void add(const std::string& doc_id, const std::vector<std::string>& tokens);
  bool contains(const std::string& doc_id) const { return docs_.count(doc_id) > 0; }

  /// idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1); never negative.
  double idf(const std::string& term) const;
  double score(const std::vector<std::string>& query, const std::string& doc_id) const;

  std::size_t size() const { return docs_.size(); }
  double avg_length() const;
  std::size_t doc_freq(const std::string& term) const;
  const Bm25Params& params() const { return params_; }
  std::vector<std::string> doc_ids() const;

  bool operator==(const Bm25Index& o) const {
    return docs_ == o.docs_ && df_ == o.df_ && total_length_ == o.total_length_;
  }

 private:
  struct Doc {
    std::map<std::string, int> tf;
    std::size_t length = 0;
    bool operator==(const Doc&) const = default;
  };
  Bm25Params params_;
  std::map<std::string, Doc> docs_;
  std::map<std::string, std::size_t> df_;
  std::size_t total_length_ = 0;
};

struct ScoredId {
  std::string id;
  double score = 0;
};

/// Scores every document, drops zero scores, sorts by descending score with
/// ties broken by ascending id, and keeps the first k.
std::vector<ScoredId> bm25_top_k(const Bm25Index& index, const std::vector<std::string>& query,
                                 std::size_t k);

/// Ranks apps for a task text by BM25 over their expertise documents
/// (description plus capability phrases). "{label}" placeholders in the query
/// are ignored.
std::vector<ScoredId> rank_apps(const std::string& task_text, const std::vector<ExpertiseEntry>& expertise);

struct UpdateDecision {
  bool applied = false;
  std::string reason;
};

/// Staff Expertise Memory plus per-app Task Guideline Memory.
class MemoryStore {
 public:
  /// An unevolved store: every registered app with its description and an
  /// empty capability list, and no guidelines.
  explicit MemoryStore(const AppRegistry& registry);

  const std::vector<ExpertiseEntry>& expertise() const { return expertise_; }
  const ExpertiseEntry* expertise_for(const std::string& app_id) const;
  const std::vector<GuidelineEntry>& guidelines() const { return guidelines_; }
  std::size_t guideline_count(const std::string& app_id) const;

  /// Up to k guidelines of `app_id`, most relevant to `task_text` first.
  std::vector<GuidelineEntry> retrieve_guidelines(const std::string& app_id, const std::string& task_text,
                                                  std::size_t k = 3) const;

  /// Applies the candidate iff the backend deems it novel and it is not a
  /// case-insensitive duplicate of an existing phrase for the app.
  UpdateDecision update_expertise(const ExpertiseCandidate& candidate, AgentBackend& backend);
  /// Backend-free variant used by the duplicate rule alone.
  UpdateDecision add_expertise(const ExpertiseCandidate& candidate);

  /// Returns the id of the new entry, or of the identical existing one.
  std::string update_guidelines(const std::string& task_text, const GuidelineCandidate& candidate);

  const Bm25Index& index(const std::string& app_id) const;
  /// A from-scratch index over the current entries of `app_id`.
  Bm25Index rebuild_index(const std::string& app_id) const;

  /// Replaces the expertise entries with those read from `path` (same format
  /// as the persisted expertise file). Apps missing from the file keep their
  /// current entries.
  void load_expertise_file(const std::filesystem::path& path);

  void save(const std::filesystem::path& dir) const;
  /// Loads whatever memory files exist in `dir`; missing files leave the
  /// corresponding memory at its unevolved state.
  void load(const std::filesystem::path& dir);

  std::string expertise_document() const;
  std::string guidelines_document() const;

 private:
  std::vector<std::string> known_apps_;
  std::vector<ExpertiseEntry> expertise_;  // sorted by app_id
  std::vector<GuidelineEntry> guidelines_;
  std::map<std::string, Bm25Index> indexes_;
  std::map<std::string, int> next_ordinal_;

  ExpertiseEntry* mutable_expertise(const std::string& app_id);
  void insert_guideline(GuidelineEntry entry);
};

inline constexpr const char* kExpertiseFile = "expertise.jsonl";
inline constexpr const char* kGuidelinesFile = "guidelines.jsonl";

}  // namespace steward
