#include <set>

#include <gtest/gtest.h>

#include "clickscale/action_dsl.hpp"
#include "conformance.hpp"

using namespace clickscale;

TEST(ActionDsl, CorpusParsesToCanonicalForm) {
  for (const auto& c : corpus::actions()) {
    try {
      EXPECT_EQ(dsl::to_source(dsl::parse_action(c.text)), c.canonical) << c.text;
    } catch (const ParseError& e) {
      ADD_FAILURE() << c.text << ": " << e.what();
    }
  }
}

TEST(ActionDsl, CanonicalFormIsAFixedPoint) {
  for (const auto& c : corpus::actions()) {
    const auto a = dsl::parse_action(c.text);
    EXPECT_EQ(dsl::parse_action(dsl::to_source(a)), a) << c.text;
  }
}

TEST(ActionDsl, CorpusCoversEveryActionName) {
  std::set<std::string_view> seen;
  for (const auto& c : corpus::actions()) seen.insert(dsl::call_name(dsl::parse_action(c.text)));
  for (auto name : dsl::kActionNames) EXPECT_TRUE(seen.count(name)) << name;
}

TEST(ActionDsl, MalformedCasesGiveSpecificErrors) {
  for (const auto& c : corpus::bad_actions()) {
    try {
      dsl::parse_action(c.text);
      ADD_FAILURE() << "accepted: " << c.text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(c.error), std::string::npos)
          << c.text << " -> " << e.what();
    }
  }
}

TEST(ActionDsl, ErrorPositionPointsAtOffendingArgument) {
  try {
    dsl::parse_call("agent.click('OK', 'two')");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 18u);
  }
}

TEST(ActionDsl, GroundingTargets) {
  EXPECT_EQ(dsl::grounding_targets(dsl::parse_call("agent.click('A')")).size(), 1u);
  EXPECT_EQ(dsl::grounding_targets(dsl::parse_call("agent.scroll('A', 1)")).size(), 1u);
  EXPECT_EQ(dsl::grounding_targets(dsl::parse_call("agent.type('A', 'x')")).size(), 1u);
  EXPECT_EQ(dsl::grounding_targets(dsl::parse_call("agent.drag_and_drop('A', 'B')")),
            (std::vector<std::string>{"A", "B"}));
  for (const char* s : {"agent.type(text='x')", "agent.hotkey(['a'])", "agent.wait(1)", "agent.done()",
                        "agent.fail()", "agent.open('x')", "agent.hold_and_press(['a'], ['b'])",
                        "agent.switch_applications('x')", "agent.highlight_text_span('a', 'b')",
                        "agent.set_cell_values({}, 'a', 'b')"}) {
    EXPECT_FALSE(dsl::requires_grounding(dsl::parse_call(s))) << s;
  }
}

TEST(ActionDsl, EnvActionMapping) {
  const std::vector<Point> one{{5, 6}};
  auto a = dsl::to_env_action(dsl::parse_call("agent.click('A', 2, 'right')"), one);
  const auto& c = std::get<action::Click>(a);
  EXPECT_EQ(c.point, (Point{5, 6}));
  EXPECT_EQ(c.count, 2);
  EXPECT_EQ(c.button, "right");

  a = dsl::to_env_action(dsl::parse_call("agent.hold_and_press(['ctrl'], ['s'])"), {});
  EXPECT_EQ(std::get<action::Hotkey>(a).keys, (std::vector<std::string>{"ctrl", "s"}));

  a = dsl::to_env_action(dsl::parse_call("agent.type(text='x', enter=True)"), {});
  EXPECT_FALSE(std::get<action::Type>(a).target.has_value());
  EXPECT_TRUE(std::get<action::Type>(a).enter);

  EXPECT_THROW(dsl::to_env_action(dsl::parse_call("agent.click('A')"), {}), ContractError);
}

TEST(ActionDsl, TerminalActions) {
  EXPECT_TRUE(dsl::is_terminal(dsl::parse_call("agent.done()")));
  EXPECT_TRUE(dsl::is_terminal(dsl::parse_call("agent.fail()")));
  EXPECT_FALSE(dsl::is_terminal(dsl::parse_call("agent.wait(1)")));
}
