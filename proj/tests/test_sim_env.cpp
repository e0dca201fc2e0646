#include <filesystem>

#include <gtest/gtest.h>

#include "clickscale/sim_env.hpp"

using namespace clickscale;

namespace {

const std::filesystem::path kFixtures = CLICKSCALE_FIXTURES;

Point centre_of(const Scenario& sc, const std::string& state, const std::string& id) {
  return screen(sc, state).find(id)->bbox.center();
}

json minimal() {
  return json::parse(R"({
    "resolution": {"width": 100, "height": 100},
    "initial": "a",
    "states": {
      "a": {"elements": [{"id": "go", "bbox": [0, 0, 10, 10]}, {"id": "f", "kind": "field", "bbox": [20, 0, 60, 10]}]},
      "b": {"elements": []}
    },
    "transitions": [{"from": "a", "trigger": {"click": "go"}, "to": "b"}],
    "success": ["b"]
  })");
}

}  // namespace

TEST(SimEnv, LoginHappyPath) {
  const Scenario sc = load_scenario(kFixtures / "login.json");
  EnvState st = reset(sc);
  EXPECT_EQ(st.state_id, "home");

  auto r = step(sc, st, action::Click{centre_of(sc, "home", "login_btn")});
  EXPECT_EQ(r.event.kind, EventKind::transition);
  EXPECT_EQ(r.state.state_id, "form");

  r = step(sc, r.state, action::Type{centre_of(sc, "form", "user"), "alice", true, false});
  EXPECT_EQ(r.event.kind, EventKind::typed);
  EXPECT_EQ(r.state.buffers.at("user"), "alice");

  r = step(sc, r.state, action::Done{});
  EXPECT_EQ(r.event.kind, EventKind::success);
  EXPECT_TRUE(r.event.terminal());
}

TEST(SimEnv, DoneTooEarlyIsUnsatisfied) {
  const Scenario sc = load_scenario(kFixtures / "login.json");
  const auto r = step(sc, reset(sc), action::Done{});
  EXPECT_EQ(r.event.kind, EventKind::done_unsatisfied);
  EXPECT_TRUE(r.event.terminal());
}

TEST(SimEnv, BackgroundClickIsNoop) {
  const Scenario sc = load_scenario(kFixtures / "login.json");
  const EnvState st = reset(sc);
  const auto r = step(sc, st, action::Click{{640, 400}});
  EXPECT_EQ(r.event.kind, EventKind::noop);
  EXPECT_EQ(r.state, st);
}

TEST(SimEnv, OutOfBoundsPointIsEnvError) {
  const Scenario sc = load_scenario(kFixtures / "login.json");
  EXPECT_THROW(step(sc, reset(sc), action::Click{{5000, 10}}), EnvError);
}

TEST(SimEnv, TrapIsAbsorbing) {
  const Scenario sc = load_scenario(kFixtures / "login.json");
  auto r = step(sc, reset(sc), action::Click{centre_of(sc, "home", "delete_btn")});
  EXPECT_EQ(r.state.state_id, "locked");
  EXPECT_TRUE(traps_absorbing(sc));
  r = step(sc, r.state, action::Hotkey{{"ctrl", "z"}});
  EXPECT_EQ(r.state.state_id, "locked");
  r = step(sc, r.state, action::Fail{});
  EXPECT_EQ(r.event.kind, EventKind::failure);
}

TEST(SimEnv, TypeIntoFocusedField) {
  Scenario sc = scenario_from_json(minimal());
  auto r = step(sc, reset(sc), action::Click{{30, 5}});
  EXPECT_EQ(r.state.focus, "f");
  r = step(sc, r.state, action::Type{std::nullopt, "ab", false, false});
  r = step(sc, r.state, action::Type{std::nullopt, "c", false, false});
  EXPECT_EQ(r.state.buffers.at("f"), "abc");
  r = step(sc, r.state, action::Type{std::nullopt, "z", true, false});
  EXPECT_EQ(r.state.buffers.at("f"), "z");
}

TEST(SimEnv, TypeWithoutFocusIsNoop) {
  Scenario sc = scenario_from_json(minimal());
  const auto r = step(sc, reset(sc), action::Type{std::nullopt, "x", false, false});
  EXPECT_EQ(r.event.kind, EventKind::noop);
  EXPECT_TRUE(r.state.buffers.empty());
}

TEST(SimEnv, HotkeyNormalization) {
  json j = minimal();
  j["transitions"].push_back({{"from", "a"}, {"trigger", {{"hotkey", {"Ctrl", "S"}}}}, {"to", "b"}});
  Scenario sc = scenario_from_json(j);
  EXPECT_EQ(step(sc, reset(sc), action::Hotkey{{"ctrl", "s"}}).state.state_id, "b");
  EXPECT_EQ(step(sc, reset(sc), action::Hotkey{{"ctrl", "x"}}).event.kind, EventKind::noop);
}

TEST(SimEnv, TopmostElementWins) {
  json j = minimal();
  j["states"]["a"]["elements"].push_back({{"id", "overlay"}, {"bbox", {0, 0, 5, 5}}});
  Scenario sc = scenario_from_json(j);
  const auto* hit = hit_test(screen(sc, "a"), {2, 2});
  ASSERT_NE(hit, nullptr);
  EXPECT_EQ(hit->id, "overlay");
}

TEST(SimEnv, AutoSuccessOnEntry) {
  json j = minimal();
  j["auto_success"] = true;
  Scenario sc = scenario_from_json(j);
  EXPECT_EQ(step(sc, reset(sc), action::Click{{5, 5}}).event.kind, EventKind::success);
}

TEST(SimEnv, ValidationNamesTheProblem) {
  json j = minimal();
  j["transitions"].push_back({{"from", "a"}, {"trigger", {{"click", "f"}}}, {"to", "nowhere"}});
  try {
    scenario_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("nowhere"), std::string::npos);
  }
  j = minimal();
  j["initial"] = "zz";
  EXPECT_THROW(scenario_from_json(j), ValidationError);
  j = minimal();
  j["transitions"].push_back({{"from", "a"}, {"trigger", {{"type", "go"}}}, {"to", "b"}});
  EXPECT_THROW(scenario_from_json(j), ValidationError);
  j = minimal();
  j["transitions"].push_back(j["transitions"][0]);
  EXPECT_THROW(scenario_from_json(j), ValidationError);
  j = minimal();
  j["states"]["a"]["elements"][0]["bbox"] = {0, 0, 500, 10};
  EXPECT_THROW(scenario_from_json(j), ValidationError);
}

TEST(SimEnv, TrapThatReachesSuccessIsRejected) {
  json j = minimal();
  j["traps"] = {"a"};
  EXPECT_THROW(scenario_from_json(j), ValidationError);
}

TEST(SimEnv, DescriptorIsDeterministic) {
  const Scenario sc = load_scenario(kFixtures / "login.json");
  const std::string a = render_descriptor(sc, "home");
  EXPECT_EQ(a, render_descriptor(sc, reset(sc)));
  const json j = json::parse(a);
  EXPECT_EQ(j["elements"][0]["id"], "delete_btn");  // sorted by id
  EXPECT_EQ(a.find('\n'), std::string::npos);
}

TEST(SimEnv, StepDoesNotMutateInput) {
  const Scenario sc = load_scenario(kFixtures / "login.json");
  const EnvState st = reset(sc);
  const EnvState copy = st;
  (void)step(sc, st, action::Click{centre_of(sc, "home", "login_btn")});
  EXPECT_EQ(st, copy);
}
