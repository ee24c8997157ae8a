#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sso/core.hpp"
#include "sso/errors.hpp"
#include "sso/text.hpp"
#include "sso/trajectory_store.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sso;
using sso::testing::make_trajectory;

TEST(SkillIdTest, RoundTripsThroughText) {
    EXPECT_EQ(SkillId{42}.str(), "s42");
    EXPECT_EQ(SkillId::parse("s42"), SkillId{42});
    EXPECT_FALSE(SkillId::parse("42"));
    EXPECT_FALSE(SkillId::parse("s"));
    EXPECT_FALSE(SkillId::parse("s4x"));
}

TEST(TrajectoryTest, ScoreIsSumOfRewards) {
    auto t = make_trajectory("t", {"a", "b", "c"}, {1.5, 0.0, 2.25});
    EXPECT_DOUBLE_EQ(t.episode_score(), 3.75);
    EXPECT_NO_THROW(t.validate());
}

TEST(TrajectoryTest, ValidateRejectsBadSteps) {
    Trajectory empty{"e", {}, "end"};
    EXPECT_THROW(empty.validate(), ContractError);

    auto t = make_trajectory("t", {"a"});
    t.steps[0].action.clear();
    EXPECT_THROW(t.validate(), ContractError);

    auto u = make_trajectory("u", {"a"});
    u.steps[0].reward = std::numeric_limits<double>::infinity();
    EXPECT_THROW(u.validate(), ContractError);
}

TEST(DiscountedReturnTest, HandValues) {
    auto t = make_trajectory("t", {"a", "b", "c"}, {0, 0, 10});
    EXPECT_NEAR(discounted_return(t, 0, 0.9), 8.1, 1e-12);
    EXPECT_NEAR(discounted_return(t, 1, 0.9), 9.0, 1e-12);
    EXPECT_NEAR(discounted_return(t, 2, 0.9), 10.0, 1e-12);
    auto u = make_trajectory("u", {"a", "b"}, {5, 5});
    EXPECT_NEAR(discounted_return(u, 0, 1.0), 10.0, 1e-12);
}

TEST(DiscountedReturnTest, ErrorsOnBadInput) {
    auto t = make_trajectory("t", {"a"}, {1});
    EXPECT_THROW(discounted_return(t, 1, 0.9), LookupError);
    EXPECT_THROW(discounted_return(t, 0, 0.0), ContractError);
    EXPECT_THROW(discounted_return(t, 0, 1.5), ContractError);
}

TEST(DiscountedReturnTest, MatchesSummationOnRandomRewards) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> r(-20, 50);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        std::vector<std::string> actions(n, "act");
        std::vector<double> rewards(n);
        for (auto& x : rewards) x = r(rng);
        auto t = make_trajectory("t", actions, rewards);
        const double gamma = 0.05 + 0.95 * (rng() % 1000) / 1000.0;
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(discounted_return(t, i, gamma), oracle::discounted_return(rewards, i, gamma), 1e-12);
    }
}

TEST(DiscountedReturnTest, RecurrenceHolds) {
    // G_t = r_t + gamma * G_{t+1}
    auto t = make_trajectory("t", {"a", "b", "c", "d"}, {1, -2, 3.5, 7});
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)
        EXPECT_NEAR(discounted_return(t, i, 0.9), t.steps[i].reward + 0.9 * discounted_return(t, i + 1, 0.9), 1e-12);
}

TEST(OverlapTest, RefsInSameTrajectory) {
    SubtrajRef a{"t", 0, 2};
    SubtrajRef b{"t", 2, 2};
    SubtrajRef c{"t", 1, 3};
    SubtrajRef d{"u", 0, 5};
    EXPECT_FALSE(overlaps(a, b));  // adjacent windows share only a state, not an action
    EXPECT_TRUE(overlaps(a, c));
    EXPECT_TRUE(overlaps(b, c));
    EXPECT_FALSE(overlaps(a, d));
}

TEST(OverlapTest, PairsCompareEveryMember) {
    CandidatePair p{{"t", 0, 2}, {"u", 0, 2}};
    CandidatePair q{{"t", 4, 2}, {"u", 1, 2}};
    CandidatePair r{{"v", 0, 2}, {"w", 0, 2}};
    EXPECT_TRUE(overlaps(p, q));
    EXPECT_TRUE(overlaps(q, p));
    EXPECT_FALSE(overlaps(p, r));
}

TEST(OverlapTest, AgreesWithCellOracle) {
    std::mt19937_64 rng(5);
    auto ref = [&] {
        return SubtrajRef{std::string(1, static_cast<char>('a' + rng() % 3)), rng() % 8, 1 + rng() % 4};
    };
    for (int i = 0; i < 2000; ++i) {
        CandidatePair p{ref(), ref()};
        CandidatePair q{ref(), ref()};
        EXPECT_EQ(overlaps(p, q), oracle::cells_overlap(p, q));
    }
}

TEST(PairKeyTest, OrderInsensitive) {
    CandidatePair p{{"t", 0, 2}, {"u", 3, 2}, 0.1, 0.2, 0.3, 0.4};
    CandidatePair q{{"u", 3, 2}, {"t", 0, 2}, 0.9, 0.9, 0.9, 0.9};
    EXPECT_EQ(PairKey::of(p), PairKey::of(q));
}

TEST(SSOConfigTest, DefaultsMatchPublishedTable) {
    SSOConfig c;
    EXPECT_EQ(c.min_len, 2u);
    EXPECT_EQ(c.max_len, 5u);
    EXPECT_EQ(c.n_past, 10u);
    EXPECT_DOUBLE_EQ(c.gamma, 0.9);
    EXPECT_DOUBLE_EQ(c.epsilon, 0.0);
    EXPECT_DOUBLE_EQ(c.w_state, 1.0);
    EXPECT_DOUBLE_EQ(c.w_action, 1.0);
    EXPECT_DOUBLE_EQ(c.w_reward, 0.1);
    EXPECT_DOUBLE_EQ(c.w_length, 0.01);
    EXPECT_EQ(c.max_retrieved, 3u);
    EXPECT_DOUBLE_EQ(c.temp_test, 0.0);
    EXPECT_NO_THROW(c.validate());
}

TEST(SSOConfigTest, ValidateRejectsBadBounds) {
    auto bad = [](auto mutate) {
        SSOConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), ConfigError);
    };
    bad([](SSOConfig& c) { c.min_len = 1; });
    bad([](SSOConfig& c) { c.max_len = 1; });
    bad([](SSOConfig& c) { c.gamma = 0.0; });
    bad([](SSOConfig& c) { c.gamma = 1.01; });
    bad([](SSOConfig& c) { c.w_reward = -0.1; });
    bad([](SSOConfig& c) { c.max_retrieved = 0; });
    bad([](SSOConfig& c) { c.beam_width = 0; });
    bad([](SSOConfig& c) { c.temp_train = -1; });
}

TEST(SSOConfigTest, JsonRoundTripAndUnknownKeys) {
    SSOConfig c;
    c.gamma = 0.5;
    c.beam_width = 3;
    nlohmann::json j = c;
    EXPECT_EQ(j.get<SSOConfig>(), c);

    auto partial = nlohmann::json{{"max_len", 4}}.get<SSOConfig>();
    EXPECT_EQ(partial.max_len, 4u);
    EXPECT_EQ(partial.min_len, 2u);

    EXPECT_THROW((nlohmann::json{{"gama", 0.5}}.get<SSOConfig>()), ConfigError);
    EXPECT_THROW((nlohmann::json{{"gamma", "high"}}.get<SSOConfig>()), ConfigError);
}

TEST(TextTest, Normalization) {
    EXPECT_EQ(text::collapse_whitespace("  a \t b\n c  "), "a b c");
    EXPECT_EQ(text::normalize_subgoal("The  [solid] Gallium melts"), text::normalize_subgoal("the [liquid] gallium melts"));
    EXPECT_EQ(text::normalize_reported("The stove is on."), "the stove is on");
    EXPECT_TRUE(text::starts_with_ci("Next Action: go", "next action:"));
    EXPECT_EQ(text::split_lines("a\r\nb\n").size(), 3u);
}

TEST(TextTest, Sha256KnownVector) {
    EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(TrajectoryStoreTest, AppendOnlyAndWindowed) {
    TrajectoryStore store;
    for (int i = 0; i < 5; ++i) store.add(make_trajectory("t" + std::to_string(i), {"a", "b"}));
    EXPECT_EQ(store.size(), 5u);
    auto last = store.last(2);
    ASSERT_EQ(last.size(), 2u);
    EXPECT_EQ(last[0]->id, "t3");
    EXPECT_EQ(last[1]->id, "t4");
    EXPECT_EQ(store.last(10).size(), 5u);
    EXPECT_THROW(store.add(make_trajectory("t1", {"x"})), ContractError);
    EXPECT_THROW(store.get("missing"), LookupError);
}

TEST(TrajectoryStoreTest, ReferencesSurviveAppends) {
    TrajectoryStore store;
    const auto& first = store.add(make_trajectory("t0", {"a"}));
    for (int i = 1; i < 100; ++i) store.add(make_trajectory("t" + std::to_string(i), {"a"}));
    EXPECT_EQ(first.id, "t0");
}

TEST(TrajectoryStoreTest, SubtrajViewShape) {
    TrajectoryStore store;
    store.add(make_trajectory("t", {"a0", "a1", "a2"}));
    SubtrajRef r{"t", 1, 2};
    auto states = subtraj_states(r, store);
    auto actions = subtraj_actions(r, store);
    ASSERT_EQ(states.size(), 3u);
    ASSERT_EQ(actions.size(), 2u);
    EXPECT_EQ(states.front(), "t state 1");
    EXPECT_EQ(states.back(), "t state 3");  // the terminal observation
    EXPECT_EQ(actions, (std::vector<std::string>{"a1", "a2"}));

    SSOConfig c;
    EXPECT_NO_THROW(validate_ref(r, store.get("t"), c));
    EXPECT_THROW(validate_ref({"t", 2, 2}, store.get("t"), c), ContractError);
    EXPECT_THROW(validate_ref({"t", 0, 1}, store.get("t"), c), ContractError);
}

TEST(TrajectoryStoreTest, JsonlRoundTrip) {
    sso::testing::TempDir dir;
    std::mt19937_64 rng(3);
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 4; ++i) trajs.push_back(sso::testing::random_trajectory(rng, "t" + std::to_string(i), 6));
    trajs[1].steps[2].self_reported_skill = SkillId{7};
    std::vector<const Trajectory*> ptrs;
    for (const auto& t : trajs) ptrs.push_back(&t);
    write_trajectories_jsonl(dir / "a.jsonl", ptrs);
    EXPECT_EQ(read_trajectories_jsonl(dir / "a.jsonl"), trajs);
}
