#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "steward/device.hpp"
#include "steward/error.hpp"
#include "steward/layout.hpp"

namespace steward {
namespace {

using testing::registry;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path golden(const std::string& name) { return default_data_dir() / "golden" / name; }

TEST(DeviceEnv, FreshEnvShowsLauncherForEveryApp) {
  DeviceEnv env(registry());
  ScreenState s = env.get_state();
  EXPECT_EQ(s.app_id, "home");
  EXPECT_EQ(s.screen_id, "launcher");
  ASSERT_EQ(s.widgets.size(), registry()->apps().size());
  for (std::size_t i = 0; i < s.widgets.size(); ++i) {
    EXPECT_EQ(s.widgets[i].text, registry()->apps()[i].name);
    EXPECT_TRUE(s.widgets[i].interactive);
  }
  EXPECT_EQ(serialize_layout(s), read_file(golden("home_launcher.txt")));
}

TEST(DeviceEnv, ClockAlarmScreenMatchesGolden) {
  DeviceEnv env(registry());
  env.apply_action(Action::click(env.launcher_id("clock")));
  std::string text = serialize_layout(env.get_state());
  EXPECT_EQ(text, read_file(golden("clock_alarms.txt")));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(DeviceEnv, GetStateIsPure) {
  DeviceEnv env(registry());
  env.apply_action(Action::click(env.launcher_id("expedia")));
  DeviceEnv before = env;
  EXPECT_EQ(serialize_layout(env.get_state()), serialize_layout(env.get_state()));
  EXPECT_TRUE(env == before);
}

TEST(DeviceEnv, LaunchExpediaLandsOnSearchHome) {
  DeviceEnv env(registry());
  StepOutcome o = env.apply_action(Action::click(env.launcher_id("expedia")));
  EXPECT_TRUE(o.changed);
  ScreenState s = env.get_state();
  EXPECT_EQ(s.app_id, "expedia");
  EXPECT_EQ(s.screen_id, "search_home");
}

TEST(DeviceEnv, InputGoesIntoFocusedField) {
  DeviceEnv env(registry());
  env.apply_action(Action::click(env.launcher_id("expedia")));
  int from = env.element_for_key("from");
  ASSERT_NE(from, 0);
  env.apply_action(Action::click(from));
  StepOutcome o = env.apply_action(Action::input("Shanghai"));
  EXPECT_FALSE(o.is_error());
  EXPECT_EQ(env.get_state().screen_id, "search_home");
  const auto& vars = env.app_state("expedia").vars;
  bool found = std::any_of(vars.begin(), vars.end(), [](const auto& kv) { return kv.second == "Shanghai"; });
  EXPECT_TRUE(found);
}

TEST(DeviceEnv, InputWithoutFocusIsAnErrorNoop) {
  DeviceEnv env(registry());
  env.apply_action(Action::click(env.launcher_id("clock")));
  DeviceEnv before = env;
  StepOutcome o = env.apply_action(Action::input("hello"));
  EXPECT_EQ(o.error, StepError::kInputWithoutField);
  EXPECT_FALSE(o.changed);
  EXPECT_TRUE(env == before);
}

TEST(DeviceEnv, UnknownElementIsAnErrorNoop) {
  DeviceEnv env(registry());
  StepOutcome o = env.apply_action(Action::click(999));
  EXPECT_EQ(o.error, StepError::kUnknownElement);
  EXPECT_FALSE(o.changed);
}

TEST(DeviceEnv, ClickOnLabelIsNotInteractive) {
  DeviceEnv env(registry());
  env.apply_action(Action::click(env.launcher_id("clock")));
  StepOutcome o = env.apply_action(Action::click(1));  // "Alarms" title label
  EXPECT_EQ(o.error, StepError::kNotInteractive);
  EXPECT_FALSE(o.changed);
}

TEST(DeviceEnv, FinishLeavesEnvUnchanged) {
  DeviceEnv env(registry());
  env.apply_action(Action::click(env.launcher_id("notes")));
  DeviceEnv before = env;
  StepOutcome o = env.apply_action(Action::finish());
  EXPECT_FALSE(o.changed);
  EXPECT_FALSE(o.note.empty());
  EXPECT_TRUE(env == before);
}

TEST(DeviceEnv, BackOnRootReturnsHome) {
  for (const auto& app : registry()->apps()) {
    DeviceEnv env(registry());
    env.apply_action(Action::click(env.launcher_id(app.app_id)));
    ASSERT_EQ(env.get_state().screen_id, app.root);
    env.apply_action(Action::back());
    EXPECT_TRUE(env.at_home()) << app.app_id;
  }
}

TEST(DeviceEnv, GoHomeReportsWhetherForegroundChanged) {
  DeviceEnv env(registry());
  EXPECT_FALSE(env.go_home());
  env.apply_action(Action::click(env.launcher_id("maps")));
  EXPECT_TRUE(env.go_home());
  EXPECT_TRUE(env.at_home());
}

TEST(DeviceEnv, CheckGoalOnFreshEnvIsFalse) {
  DeviceEnv env(registry());
  EXPECT_FALSE(env.check_goal("clock", {"alarm_set", {"18:30"}}));
}

TEST(DeviceEnv, CheckGoalErrors) {
  DeviceEnv env(registry());
  try {
    env.check_goal("clock", {"no_such_predicate", {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownPredicate);
  }
  EXPECT_THROW(env.check_goal("clock", {"alarm_set", {}}), Error);
  EXPECT_THROW(env.check_goal("nope", {"alarm_set", {"1"}}), Error);
}

TEST(DeviceEnv, SetAlarmScriptSatisfiesGoal) {
  auto reg = registry();
  const MockApp& clock = reg->at("clock");
  const TaskTemplate* t = clock.task_template("set_alarm");
  ASSERT_NE(t, nullptr);
  DeviceEnv env(reg);
  auto replay = replay_template(env, clock, *t, {{"time", "6:30 p.m."}});
  EXPECT_TRUE(env.check_goal("clock", replay.goal));
  EXPECT_TRUE(env.check_goal("clock", {"alarm_set", {"18:30"}}));
}

TEST(DeviceEnv, EveryPredicateReachable) { EXPECT_TRUE(check_goal_reachability(registry()).empty()); }

TEST(DeviceEnv, AppsHaveScreenAndPredicateCounts) {
  std::set<std::string> categories;
  for (const auto& app : registry()->apps()) {
    EXPECT_GE(app.screens.size(), 3u) << app.app_id;
    EXPECT_LE(app.screens.size(), 8u) << app.app_id;
    EXPECT_GE(app.predicates.size(), 2u) << app.app_id;
    EXPECT_LE(app.predicates.size(), 5u) << app.app_id;
    categories.insert(app.category);
  }
  EXPECT_EQ(registry()->apps().size(), 14u);
  EXPECT_EQ(categories.size(), 6u);
}

// Random action over the current screen, including invalid ids.
Action random_action(std::mt19937_64& rng, const ScreenState& s) {
  static const std::vector<std::string> words = {"London", "6:30 p.m.", "hello", "", "Tokyo"};
  switch (rng() % 6) {
    case 0:
    case 1:
    case 2: return Action::click(static_cast<int>(rng() % (s.widgets.size() + 2)));
    case 3: return Action::input(words[rng() % words.size()]);
    case 4: return Action::swipe(static_cast<SwipeDirection>(rng() % 4));
    default: return rng() % 3 == 0 ? Action::back() : Action::finish();
  }
}

bool screen_declared(const DeviceEnv& env) {
  ScreenState s = env.get_state();
  if (s.app_id == "home") return s.screen_id == "launcher";
  const MockApp* app = env.registry().find(s.app_id);
  return app && app->screen(s.screen_id) != nullptr;
}

TEST(DeviceEnvProperty, RandomWalksStayOnDeclaredScreens) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    DeviceEnv env(registry());
    for (int i = 0; i < 1000; ++i) {
      ScreenState s = env.get_state();
      for (std::size_t w = 0; w < s.widgets.size(); ++w) ASSERT_EQ(s.widgets[w].element_id, static_cast<int>(w) + 1);
      env.apply_action(random_action(rng, s));
      ASSERT_TRUE(screen_declared(env)) << "seed " << seed << " step " << i;
    }
  }
}

TEST(DeviceEnvProperty, IdenticalActionSequencesGiveIdenticalStates) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 ra(seed), rb(seed);
    DeviceEnv a(registry()), b(registry());
    for (int i = 0; i < 300; ++i) {
      Action x = random_action(ra, a.get_state());
      Action y = random_action(rb, b.get_state());
      ASSERT_EQ(x, y);
      a.apply_action(x);
      b.apply_action(y);
      ASSERT_EQ(serialize_layout(a.get_state()), serialize_layout(b.get_state()));
    }
    EXPECT_TRUE(a == b);
  }
}

TEST(DeviceEnvProperty, BackAlwaysReachesHome) {
  std::size_t max_depth = 0;
  for (const auto& app : registry()->apps()) max_depth += app.screens.size();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    DeviceEnv env(registry());
    for (int i = 0; i < 200; ++i) env.apply_action(random_action(rng, env.get_state()));
    std::size_t presses = 0;
    while (!env.at_home() && presses <= max_depth + 1) {
      env.apply_action(Action::back());
      ++presses;
    }
    EXPECT_TRUE(env.at_home()) << "seed " << seed;
  }
}

TEST(DeviceEnvProperty, ActionsInOneAppLeaveOthersUntouched) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    DeviceEnv env(registry());
    env.apply_action(Action::click(env.launcher_id("clock")));
    DeviceEnv start = env;
    for (int i = 0; i < 200; ++i) {
      Action a = random_action(rng, env.get_state());
      if (a.type() == ActionType::kBack && env.get_state().screen_id == "alarms") continue;
      env.apply_action(a);
      if (env.at_home()) break;  // left the app
    }
    for (const auto& app : registry()->apps()) {
      if (app.app_id == "clock") continue;
      EXPECT_EQ(env.app_state(app.app_id), start.app_state(app.app_id)) << app.app_id;
    }
  }
}

TEST(Layout, EmptyScreenIsHeaderOnly) {
  ScreenState s{"x", "empty", {}, 0};
  EXPECT_EQ(serialize_layout(s), "# app=x screen=empty scroll=0\n");
}

TEST(Layout, WidgetLineFormat) {
  ScreenState s{"a", "b", {{1, WidgetKind::kButton, "Go", true}, {2, WidgetKind::kLabel, "Say \"hi\"", false}}, 1};
  EXPECT_EQ(serialize_layout(s), "# app=a screen=b scroll=1\n[1] button \"Go\" interactive\n[2] label \"Say \\\"hi\\\"\" static\n");
}

TEST(ActionType, RoundTripsThroughText) {
  std::vector<Action> all = {Action::click(3), Action::input("Shanghai"), Action::input("a \"q\""),
                             Action::swipe(SwipeDirection::kLeft), Action::back(), Action::finish()};
  for (const auto& a : all) {
    auto parsed = Action::parse(a.to_string());
    ASSERT_TRUE(parsed) << a.to_string();
    EXPECT_EQ(*parsed, a);
  }
  EXPECT_FALSE(Action::parse("tap 3"));
  EXPECT_FALSE(Action::parse("click"));
  EXPECT_FALSE(Action::parse("swipe sideways"));
}

TEST(ActionType, OnlyTheTypesParametersAreAccessible) {
  Action c = Action::click(4);
  EXPECT_EQ(c.element_id(), 4);
  EXPECT_THROW((void)c.text(), std::bad_variant_access);
  Action i = Action::input("x");
  EXPECT_THROW((void)i.element_id(), std::bad_variant_access);
  EXPECT_THROW((void)Action::back().direction(), std::bad_variant_access);
}

TEST(ActionType, KeysUseLabels) {
  ScreenState s{"clock", "alarms", {{1, WidgetKind::kButton, "Add alarm", true}}, 0};
  EXPECT_EQ(action_key(Action::click(1), s), "click:Add alarm");
  EXPECT_EQ(action_key(Action::input("7:00"), s), "input:7:00");
  EXPECT_EQ(action_key(Action::swipe(SwipeDirection::kDown), s), "swipe:down");
  EXPECT_EQ(action_key(Action::finish(), s), "finish");
}

}  // namespace
}  // namespace steward
