#include <atomic>
#include <mutex>
#include <set>

#include <gtest/gtest.h>

#include "clickscale/gateway.hpp"
#include "clickscale/stubs.hpp"

using namespace clickscale;

namespace {

PlanningContext ctx() {
  return {"do the thing", "", R"({"state":"s","elements":[],"buffers":{}})", {800, 600}, 0, 100};
}

ChatResponse reply(std::string s) { return {{std::move(s)}}; }

ActionProposal proposal(int i, const std::string& text) {
  ActionProposal p;
  p.candidate_index = i;
  p.raw_text = text;
  p.parsed = dsl::parse_action(text);
  return p;
}

}  // namespace

TEST(Wire, RequestRoundTrip) {
  ChatRequest r = planner_request(ctx(), {}, 0.7, 42, 3);
  const ChatRequest back = request_from_json(request_to_json(r));
  EXPECT_EQ(request_to_json(back), request_to_json(r));
  EXPECT_FALSE(request_to_json(r).contains("slot"));
  EXPECT_EQ(request_to_json(r)["seed"], 42u);
}

TEST(Wire, ResponseErrors) {
  EXPECT_THROW(response_from_json(json::object()), EndpointError);
  EXPECT_THROW(response_from_json(json{{"choices", {{{"txt", "x"}}}}}), EndpointError);
  EXPECT_EQ(response_from_json(response_to_json({{"a", "b"}})).choices.size(), 2u);
}

TEST(Templates, Fill) {
  EXPECT_EQ(fill_template("{a}x{a}{b}", {{"a", "1"}, {"b", "{a}"}}), "1x1{a}");
}

TEST(FanOut, KeepsIndexOrderAndUsesDistinctSeeds) {
  std::mutex mu;
  std::set<std::uint64_t> seeds;
  FunctionEndpoint ep([&](const ChatRequest& r) {
    {
      std::lock_guard lock(mu);
      seeds.insert(*r.seed);
    }
    return reply("agent.wait(" + std::to_string(r.slot) + ")");
  });
  const auto props = request_proposals(ep, ctx(), 8, {1.0, 0, 7});
  ASSERT_EQ(props.size(), 8u);
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(props[i].candidate_index, i);
    EXPECT_EQ(std::get<dsl::WaitCall>(*props[i].parsed).time, double(i));
  }
  EXPECT_EQ(seeds.size(), 8u);
}

TEST(FanOut, RetriesThenMarksSlotFailed) {
  std::atomic<int> calls{0};
  FunctionEndpoint ep([&](const ChatRequest& r) -> ChatResponse {
    ++calls;
    if (r.slot == 1) throw EndpointError("boom");
    return reply("agent.fail()");
  });
  const auto props = request_proposals(ep, ctx(), 3, {1.0, 2, 0});
  EXPECT_EQ(props[1].status, ActionProposal::Status::request_failed);
  EXPECT_EQ(props[1].attempts, 3);
  EXPECT_TRUE(props[0].usable());
  EXPECT_EQ(calls.load(), 5);
}

TEST(FanOut, ParseFailureIsRecordedNotThrown) {
  FunctionEndpoint ep([](const ChatRequest&) { return reply("I am not sure."); });
  const auto props = request_proposals(ep, ctx(), 2, {});
  EXPECT_EQ(props[0].status, ActionProposal::Status::parse_failed);
  EXPECT_FALSE(props[0].usable());
}

TEST(FanOut, AllSlotsFailingIsEndpointError) {
  FunctionEndpoint ep([](const ChatRequest&) -> ChatResponse { throw EndpointError("down"); });
  EXPECT_THROW(request_proposals(ep, ctx(), 4, {1.0, 1, 0}), EndpointError);
}

TEST(Judge, SingleCandidateSkipsEndpoint) {
  std::atomic<int> calls{0};
  FunctionEndpoint ep([&](const ChatRequest&) {
    ++calls;
    return reply("{}");
  });
  const std::vector<ActionProposal> one{proposal(0, "agent.fail()")};
  const JudgeResult r = judge_select(ep, one, ctx(), 1);
  EXPECT_EQ(r.position, 0);
  EXPECT_EQ(r.calls, 0);
  EXPECT_EQ(calls.load(), 0);
}

TEST(Judge, PicksParsedIndex) {
  FunctionEndpoint ep([](const ChatRequest&) { return reply(R"({"explaining":"b","index":1})"); });
  const std::vector<ActionProposal> c{proposal(0, "agent.fail()"), proposal(1, "agent.done()")};
  const JudgeResult r = judge_select(ep, c, ctx(), 1);
  EXPECT_EQ(r.position, 1);
  EXPECT_EQ(r.calls, 1);
  EXPECT_FALSE(r.verdict.fallback);
}

TEST(Judge, RepromptsOnceThenSucceeds) {
  std::atomic<int> calls{0};
  FunctionEndpoint ep([&](const ChatRequest& r) {
    if (calls++ == 0) return reply("candidate 1 looks best");
    EXPECT_EQ(r.messages.back().role, "user");
    EXPECT_EQ(r.messages[r.messages.size() - 2].role, "assistant");
    return reply(R"({"explaining":"ok","index":1})");
  });
  const std::vector<ActionProposal> c{proposal(0, "agent.fail()"), proposal(1, "agent.done()")};
  const JudgeResult r = judge_select(ep, c, ctx(), 1, {}, 1);
  EXPECT_EQ(r.position, 1);
  EXPECT_EQ(r.calls, 2);
}

TEST(Judge, FallsBackToFirstCandidate) {
  FunctionEndpoint ep([](const ChatRequest&) { return reply(R"({"explaining":"x","index":9})"); });
  const std::vector<ActionProposal> c{proposal(0, "agent.fail()"), proposal(1, "agent.done()")};
  const JudgeResult r = judge_select(ep, c, ctx(), 1, {}, 1);
  EXPECT_EQ(r.position, 0);
  EXPECT_TRUE(r.verdict.fallback);
  EXPECT_EQ(r.calls, 2);
}

TEST(Judge, EndpointErrorAlsoFallsBack) {
  FunctionEndpoint ep([](const ChatRequest&) -> ChatResponse { throw EndpointError("timeout"); });
  const std::vector<ActionProposal> c{proposal(0, "agent.fail()"), proposal(1, "agent.done()")};
  const JudgeResult r = judge_select(ep, c, ctx(), 1, {}, 0);
  EXPECT_EQ(r.position, 0);
  EXPECT_TRUE(r.verdict.fallback);
}

TEST(Grounding, RemoteParsesCoordinate) {
  FunctionEndpoint ep([](const ChatRequest&) { return reply("(10,20)"); });
  RemoteGrounder g(ep);
  EXPECT_EQ(ground(g, "OK button", {"{}", {100, 100}, {}}), (Point{10, 20}));
}

TEST(Grounding, ErrorsAreGroundingErrors) {
  FunctionEndpoint bad([](const ChatRequest&) { return reply("somewhere top left"); });
  FunctionEndpoint outside([](const ChatRequest&) { return reply("(500,20)"); });
  FunctionEndpoint two([](const ChatRequest&) { return ChatResponse{{"(1,1)", "(2,2)"}}; });
  FunctionEndpoint down([](const ChatRequest&) -> ChatResponse { throw EndpointError("down"); });
  const ScreenInput s{"{}", {100, 100}, {}};
  for (ChatEndpoint* ep : std::vector<ChatEndpoint*>{&bad, &outside, &two, &down}) {
    RemoteGrounder g(*ep);
    EXPECT_THROW(ground(g, "OK", s), GroundingError);
  }
  RemoteGrounder g(bad);
  EXPECT_THROW(ground(g, "", s), GroundingError);
}

TEST(Grounding, PolicyGrounderMapsBackToOriginalPixels) {
  GridPolicy p(4, 1);
  p.weight(0, 5) = 1.0;  // row 1, col 1
  PolicyGrounder g(p);
  const Point pt = g.locate("x", {"{}", {1000, 700}, {1.0}});
  EXPECT_NEAR(pt.x, 375.0, 1e-9);
  EXPECT_NEAR(pt.y, 262.5, 1e-9);
}

TEST(Stubs, LabelGrounderFindsElementCentre) {
  stub::LabelGrounder ep;
  RemoteGrounder g(ep);
  const std::string screen =
      R"({"state":"s","elements":[{"id":"a","label":"Save button","bbox":[10,10,30,20],"kind":"button"}],"buffers":{}})";
  EXPECT_EQ(ground(g, "save button", {screen, {100, 100}, {}}), (Point{20, 15}));
  EXPECT_EQ(ground(g, "Save", {screen, {100, 100}, {}}), (Point{20, 15}));
}

TEST(Stubs, ScriptedPlannerIsBernoulli) {
  const json script = {{"s", {{"correct", "agent.done()"}, {"wrong", "agent.fail()"}}}};
  stub::ScriptedPlanner planner(script, 0.3);
  int correct = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    ChatRequest r = planner_request(ctx(), {}, 1.0, derive_seed(1, {std::uint64_t(i)}), 0);
    correct += planner.complete(r).choices[0].find("done") != std::string::npos;
  }
  EXPECT_NEAR(correct / double(n), 0.3, 0.03);
}
