#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "bm25_reference.hpp"
#include "helpers.hpp"
#include "steward/error.hpp"
#include "steward/memory.hpp"
#include "steward/text.hpp"

namespace steward {
namespace {

using testing::FakeBackend;
using testing::registry;

Bm25Index index_of(const reference::Corpus& c) {
  Bm25Index idx;
  for (const auto& [id, toks] : c) idx.add(id, toks);
  return idx;
}

TEST(Bm25, DisjointQueryScoresZero) {
  Bm25Index idx;
  idx.add("a", {"set", "alarm"});
  idx.add("b", {"create", "note"});
  EXPECT_EQ(idx.score({"flight"}, "a"), 0.0);
  EXPECT_TRUE(bm25_top_k(idx, {"flight"}, 3).empty());
}

TEST(Bm25, SingleDocMatchesHandComputation) {
  // N=1, df=1: idf = ln(1 + 0.5/1.5); len == avg so norm = k1.
  Bm25Index idx;
  idx.add("only", {"set", "an", "alarm"});
  double idf = std::log(1.0 + 0.5 / 1.5);
  double per_term = idf * (1 * 2.2) / (1 + 1.2);
  EXPECT_NEAR(idx.score({"set", "an", "alarm"}, "only"), 3 * per_term, 1e-12);
}

TEST(Bm25, IdfIsNeverNegative) {
  Bm25Index idx;
  for (int i = 0; i < 10; ++i) idx.add("d" + std::to_string(i), {"common"});
  EXPECT_GT(idx.idf("common"), 0.0);
  EXPECT_GT(idx.idf("absent"), idx.idf("common"));
}

TEST(Bm25, TopKTiesBreakByAscendingId) {
  Bm25Index idx;
  idx.add("e3", {"alarm"});
  idx.add("e1", {"alarm"});
  idx.add("e2", {"alarm"});
  idx.add("e4", {"note"});
  auto top = bm25_top_k(idx, {"alarm"}, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].id, "e1");
  EXPECT_EQ(top[1].id, "e2");
}

TEST(Bm25Property, RandomCorporaMatchReference) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    auto corpus = reference::random_corpus(rng);
    Bm25Index idx = index_of(corpus);
    for (int q = 0; q < 5; ++q) {
      auto query = reference::random_query(rng);
      for (const auto& [id, _] : corpus) {
        ASSERT_NEAR(idx.score(query, id), reference::bm25(corpus, query, id), 1e-9);
      }
      auto ours = bm25_top_k(idx, query, 3);
      auto ref = reference::top_k(corpus, query, 3);
      ASSERT_EQ(ours.size(), ref.size());
      for (std::size_t i = 0; i < ours.size(); ++i) EXPECT_EQ(ours[i].id, ref[i].first);
    }
  }
}

TEST(Bm25Property, IncrementalEqualsRebuild) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    auto corpus = reference::random_corpus(rng, 100, 12);
    Bm25Index inc;
    reference::Corpus so_far;
    for (const auto& [id, toks] : corpus) {
      inc.add(id, toks);
      so_far[id] = toks;
      ASSERT_TRUE(inc == index_of(so_far));
    }
    inc.add(corpus.begin()->first, {"ignored"});  // re-adding an id is a no-op
    EXPECT_TRUE(inc == index_of(corpus));
  }
}

TEST(RankApps, PlaceholdersAreIgnored) {
  std::vector<ExpertiseEntry> ex = {{"clock", "set an alarm", {}}, {"notes", "create a note", {}}};
  auto r = rank_apps("set an alarm for {note}", ex);
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r[0].id, "clock");
  EXPECT_EQ(r.size(), 1u);  // "{note}" must not pull in notes
}

TEST(MemoryStore, StartsWithDescriptionsOnly) {
  MemoryStore m(*registry());
  ASSERT_EQ(m.expertise().size(), registry()->apps().size());
  for (const auto& e : m.expertise()) {
    EXPECT_FALSE(e.description.empty());
    EXPECT_TRUE(e.expertise.empty());
  }
  EXPECT_TRUE(m.guidelines().empty());
  EXPECT_TRUE(m.retrieve_guidelines("clock", "set an alarm").empty());
}

TEST(MemoryStore, ExpertiseDuplicatesRejectedCaseInsensitively) {
  MemoryStore m(*registry());
  FakeBackend be;
  auto d1 = m.update_expertise({"expedia", "search one-way flights"}, be);
  EXPECT_TRUE(d1.applied);
  auto d2 = m.update_expertise({"expedia", "Search One-Way Flights "}, be);
  EXPECT_FALSE(d2.applied);
  EXPECT_EQ(d2.reason, "duplicate");
  EXPECT_EQ(m.expertise_for("expedia")->expertise.size(), 1u);
}

TEST(MemoryStore, BackendCanRejectAsNotNovel) {
  MemoryStore m(*registry());
  FakeBackend be;
  be.on_expertise = [](const ExpertiseQuery&) { return ExpertiseVerdict{false, "covered"}; };
  auto d = m.update_expertise({"clock", "set alarms"}, be);
  EXPECT_FALSE(d.applied);
  EXPECT_EQ(d.reason, "covered");
  EXPECT_TRUE(m.expertise_for("clock")->expertise.empty());
}

TEST(MemoryStore, UnknownAppIsAnError) {
  MemoryStore m(*registry());
  EXPECT_THROW(m.add_expertise({"nope", "x"}), Error);
  EXPECT_THROW(m.update_guidelines("x", {"nope", {"Tap \"A\""}}), Error);
}

TEST(MemoryStore, GuidelinesDedupAndIds) {
  MemoryStore m(*registry());
  auto id1 = m.update_guidelines("set an alarm for 7:00 a.m.", {"clock", {"Tap \"Add alarm\"", "Tap \"Save\""}});
  auto id2 = m.update_guidelines("set an alarm for 7:00 a.m.", {"clock", {"Tap \"Add alarm\"", "Tap \"Save\""}});
  EXPECT_EQ(id1, "clock-0001");
  EXPECT_EQ(id1, id2);
  EXPECT_EQ(m.guideline_count("clock"), 1u);
  auto id3 = m.update_guidelines("set an alarm for 7:00 a.m.", {"clock", {"Tap \"Add alarm\""}});
  EXPECT_EQ(id3, "clock-0002");
  EXPECT_THROW(m.update_guidelines("empty", {"clock", {}}), Error);
}

TEST(MemoryStore, RetrievalIsScopedAndRanked) {
  MemoryStore m(*registry());
  m.update_guidelines("set an alarm for 7:00 a.m.", {"clock", {"Tap \"Add alarm\""}});
  m.update_guidelines("start a timer for 5 minutes", {"clock", {"Tap \"Timer\""}});
  m.update_guidelines("set an alarm reminder note", {"notes", {"Tap \"New note\""}});
  auto got = m.retrieve_guidelines("clock", "set an alarm for 6:30 p.m.");
  ASSERT_FALSE(got.empty());
  EXPECT_EQ(got[0].entry_id, "clock-0001");
  for (const auto& g : got) EXPECT_EQ(g.app_id, "clock");
}

TEST(MemoryStore, RetrieveMatchesReferenceTopThree) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    MemoryStore m(*registry());
    reference::Corpus corpus;
    for (int i = 0; i < 5 + trial; ++i) {
      auto toks = reference::random_query(rng);
      std::string task = text::join(toks, " ");
      std::string id = m.update_guidelines(task, {"notes", {"step " + std::to_string(i)}});
      corpus[id] = text::tokenize(task);
      m.update_guidelines(task, {"clock", {"other " + std::to_string(i)}});
    }
    auto query = reference::random_query(rng);
    auto got = m.retrieve_guidelines("notes", text::join(query, " "));
    auto ref = reference::top_k(corpus, query, 3);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].entry_id, ref[i].first);
  }
}

TEST(MemoryStoreProperty, IndexConsistentAndMonotoneUnderRandomOps) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> apps = {"clock", "notes", "gmail"};
  for (int trial = 0; trial < 10; ++trial) {
    MemoryStore m(*registry());
    FakeBackend be;
    for (int op = 0; op < 100; ++op) {
      auto before = m.guidelines();
      auto before_ex = m.expertise();
      const std::string& app = apps[rng() % apps.size()];
      auto toks = reference::random_query(rng);
      if (rng() % 2) {
        m.update_guidelines(text::join(toks, " "), {app, {"Tap \"" + toks[0] + "\""}});
      } else {
        m.update_expertise({app, toks[0]}, be);
      }
      // Nothing existing is removed or mutated.
      ASSERT_GE(m.guidelines().size(), before.size());
      for (std::size_t i = 0; i < before.size(); ++i) ASSERT_EQ(m.guidelines()[i], before[i]);
      for (std::size_t i = 0; i < before_ex.size(); ++i) {
        const auto& now = m.expertise()[i].expertise;
        ASSERT_GE(now.size(), before_ex[i].expertise.size());
        ASSERT_TRUE(std::equal(before_ex[i].expertise.begin(), before_ex[i].expertise.end(), now.begin()));
      }
      for (const auto& a : apps) ASSERT_TRUE(m.index(a) == m.rebuild_index(a));
    }
  }
}

TEST(MemoryStore, SaveLoadRoundTripIsByteIdentical) {
  auto dir = std::filesystem::temp_directory_path() / "steward_memory_roundtrip";
  std::filesystem::remove_all(dir);
  MemoryStore m(*registry());
  m.add_expertise({"clock", "set an alarm for a time"});
  m.update_guidelines("set an alarm", {"clock", {"Tap \"Add alarm\""}});
  m.update_guidelines("create a note", {"notes", {"Tap \"New note\"", "Type \"x\""}});
  m.save(dir);

  MemoryStore back(*registry());
  back.load(dir);
  EXPECT_EQ(back.expertise_document(), m.expertise_document());
  EXPECT_EQ(back.guidelines_document(), m.guidelines_document());
  EXPECT_TRUE(back.index("clock") == m.index("clock"));
  // Ids continue after the loaded ones.
  EXPECT_EQ(back.update_guidelines("set an alarm again", {"clock", {"Tap \"Save\""}}), "clock-0002");
  std::filesystem::remove_all(dir);
}

TEST(MemoryStore, IdenticalUpdatesGiveIdenticalDocuments) {
  auto build = [] {
    MemoryStore m(*registry());
    m.add_expertise({"maps", "get directions"});
    m.update_guidelines("search a place", {"maps", {"Tap \"Search\""}});
    m.update_guidelines("send a message", {"messages", {"Tap \"Bob\""}});
    return m.expertise_document() + m.guidelines_document();
  };
  EXPECT_EQ(build(), build());
}

TEST(MemoryStore, BadHeaderIsRejected) {
  auto path = std::filesystem::temp_directory_path() / "steward_bad_expertise.jsonl";
  std::ofstream(path) << "{\"app_id\":\"clock\"}\n";
  MemoryStore m(*registry());
  EXPECT_THROW(m.load_expertise_file(path), Error);
  std::filesystem::remove(path);
}

TEST(MemoryStore, HandcraftedExpertiseLoads) {
  MemoryStore m(*registry());
  m.load_expertise_file(default_data_dir() / "expertise_handcrafted.jsonl");
  for (const auto& app : registry()->apps()) {
    const ExpertiseEntry* e = m.expertise_for(app.app_id);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->expertise.size(), app.templates.size()) << app.app_id;
  }
}

}  // namespace
}  // namespace steward
