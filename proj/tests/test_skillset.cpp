#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sso/errors.hpp"
#include "sso/skillset.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sso;
using sso::testing::make_trajectory;
using sso::testing::random_skill_set;
using sso::testing::TempDir;

namespace {

Skill bare_skill(std::uint64_t id, std::string subgoal, std::vector<std::string> states, std::size_t created = 0) {
    Skill s;
    s.id = SkillId{id};
    s.name = "n" + std::to_string(id);
    s.subgoal = std::move(subgoal);
    s.instructions = {"do it"};
    s.source_pair = CandidatePair{{"a", id, 2}, {"b", id, 2}};
    for (const auto& st : states) s.initial_state_embeddings.push_back(test_embed(st));
    s.created_iteration = created;
    return s;
}

std::vector<SkillId> ids_of(const std::vector<RetrievedSkill>& r) {
    std::vector<SkillId> out;
    for (const auto& x : r) out.push_back(x.skill->id);
    return out;
}

}  // namespace

TEST(SkillSetTest, AddFromDraftEmbedsFirstStates) {
    SkillSet set;
    set.archive(make_trajectory("a", {"x", "y", "z"}));
    set.archive(make_trajectory("b", {"x", "y", "z"}));
    TestEmbedder te;
    EmbeddingCache cache(te);
    SkillDraft d{"heat", {"x", "y"}, "b state 3", CandidatePair{{"a", 1, 2}, {"b", 0, 2}}};
    auto id = set.add_skill(d, cache, 4);
    const auto* s = set.find(id);
    ASSERT_NE(s, nullptr);
    ASSERT_EQ(s->initial_state_embeddings.size(), 2u);
    EXPECT_TRUE(s->initial_state_embeddings[0] == test_embed("a state 1"));
    EXPECT_TRUE(s->initial_state_embeddings[1] == test_embed("b state 0"));
    EXPECT_EQ(s->created_iteration, 4u);
    EXPECT_TRUE(set.was_sampled(d.source_pair));

    SkillDraft dup = d;
    dup.subgoal = "B  STATE 3";
    EXPECT_THROW(set.add_skill(dup, cache, 5), ContractError);
    SkillDraft empty = d;
    empty.subgoal = "other";
    empty.instructions.clear();
    EXPECT_THROW(set.add_skill(empty, cache, 5), ContractError);
}

TEST(SkillSetTest, EpochBumpsOnMutation) {
    SkillSet set;
    auto e0 = set.epoch();
    set.add_skill(bare_skill(1, "g", {"s"}));
    EXPECT_GT(set.epoch(), e0);
    auto e1 = set.epoch();
    set.remove(SkillId{99});
    EXPECT_EQ(set.epoch(), e1);
    set.remove(SkillId{1});
    EXPECT_GT(set.epoch(), e1);
    EXPECT_TRUE(set.was_sampled(CandidatePair{{"a", 1, 2}, {"b", 1, 2}}));  // sampled pairs outlive skills
}

TEST(RetrieveTest, RanksByBestInitialState) {
    SkillSet set;
    set.add_skill(bare_skill(1, "g1", {"open the door", "north corridor"}));
    set.add_skill(bare_skill(2, "g2", {"heat the water in the kitchen"}));
    set.add_skill(bare_skill(3, "g3", {"a red key"}));
    TestEmbedder te;
    EmbeddingCache cache(te);
    auto r = set.retrieve("heat the water in the kitchen", 2, cache);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].skill->id, SkillId{2});
    EXPECT_NEAR(r[0].relevance, 1.0, 1e-12);
    EXPECT_TRUE(set.retrieve("x", 0, cache).empty());
    EXPECT_EQ(set.retrieve("x", 10, cache).size(), 3u);
}

TEST(RetrieveTest, TiesPreferOlderThenSmallerId) {
    SkillSet set;
    set.add_skill(bare_skill(5, "g5", {"same"}, 1));
    set.add_skill(bare_skill(3, "g3", {"same"}, 2));
    set.add_skill(bare_skill(4, "g4", {"same"}, 1));
    TestEmbedder te;
    EmbeddingCache cache(te);
    EXPECT_EQ(ids_of(set.retrieve("same", 3, cache)), (std::vector<SkillId>{SkillId{4}, SkillId{5}, SkillId{3}}));
}

TEST(RetrieveTest, MatchesSortOracleOnFuzzedSets) {
    std::mt19937_64 rng(51);
    TestEmbedder te;
    EmbeddingCache cache(te);
    const std::vector<std::string> queries{"You are in the kitchen.", "The stove is off.", "north", "thermometer"};
    for (int trial = 0; trial < 50; ++trial) {
        auto set = random_skill_set(rng, rng() % 10);
        const auto& q = queries[rng() % queries.size()];
        const std::size_t k = 1 + rng() % 4;
        auto got = set.retrieve(q, k, cache);
        EXPECT_EQ(ids_of(got), oracle::retrieve(set, test_embed(q), k));
        EXPECT_LE(got.size(), k);
    }
}

TEST(RetrieveTest, InvariantUnderScaling) {
    std::mt19937_64 rng(52);
    TestEmbedder te;
    EmbeddingCache cache(te);
    for (int trial = 0; trial < 30; ++trial) {
        auto set = random_skill_set(rng, 1 + rng() % 8);
        SkillSet scaled;
        for (auto [id, s] : set.skills()) {
            for (auto& e : s.initial_state_embeddings) {
                // Powers of two keep every cosine bit-identical, so exact ties stay ties.
                auto v = std::vector<double>(e.values().begin(), e.values().end());
                const double f = std::ldexp(1.0, static_cast<int>(rng() % 20) - 10);
                for (auto& x : v) x *= f;
                e = Embedding(std::move(v));
            }
            scaled.add_skill(s);
        }
        EXPECT_EQ(ids_of(set.retrieve("The stove is on.", 3, cache)), ids_of(scaled.retrieve("The stove is on.", 3, cache)));
    }
}

TEST(RefineTest, CreditsAndPrunes) {
    SkillSet set;  // epsilon 0
    set.add_skill(bare_skill(1, "good", {"s"}));
    set.add_skill(bare_skill(2, "bad", {"s"}));
    auto t = make_trajectory("t", {"a", "b", "c"}, {0, 0, 10});
    t.steps[0].self_reported_skill = SkillId{1};
    t.steps[1].self_reported_skill = SkillId{9};  // unknown, ignored
    t.steps[2].self_reported_skill = SkillId{1};
    auto u = make_trajectory("u", {"a"}, {-1});
    u.steps[0].self_reported_skill = SkillId{2};

    auto r = set.refine(t);
    EXPECT_TRUE(r.pruned.empty());
    ASSERT_EQ(r.executions.size(), 2u);
    EXPECT_NEAR(set.find(SkillId{1})->observed_value, 8.1 + 10.0, 1e-12);
    EXPECT_EQ(set.find(SkillId{1})->executed_count, 2u);

    auto r2 = set.refine(u);
    EXPECT_EQ(r2.pruned, (std::vector<SkillId>{SkillId{2}}));
    EXPECT_EQ(set.find(SkillId{2}), nullptr);
}

TEST(RefineTest, ZeroValueIsPrunedAtDefaultEpsilon) {
    SkillSet set;
    set.add_skill(bare_skill(1, "g", {"s"}));
    auto t = make_trajectory("t", {"a"}, {0});
    t.steps[0].self_reported_skill = SkillId{1};
    EXPECT_EQ(set.refine(t).pruned.size(), 1u);
}

TEST(RefineTest, MatchesReplayOracle) {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> reward(-10, 10);
    for (int trial = 0; trial < 100; ++trial) {
        SSOConfig c;
        c.epsilon = (rng() % 3 == 0) ? 2.5 : 0.0;
        SkillSet set(c);
        oracle::RefineReplay replay;
        const std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 1; i <= n; ++i) {
            auto s = bare_skill(i, "g" + std::to_string(i), {"s"});
            s.observed_value = reward(rng) + 5;
            replay.values[SkillId{i}] = s.observed_value;
            set.add_skill(s);
        }
        for (int ep = 0; ep < 3; ++ep) {
            Trajectory t{"t" + std::to_string(ep), {}, "end"};
            for (std::size_t k = 0, steps = 1 + rng() % 12; k < steps; ++k) {
                Step s{"obs", "act", reward(rng), {}};
                if (rng() % 2) s.self_reported_skill = SkillId{1 + rng() % (n + 2)};
                t.steps.push_back(s);
            }
            set.refine(t);
            replay.run(t, c.gamma, c.epsilon);
            ASSERT_EQ(set.size(), replay.values.size());
            for (const auto& [id, v] : replay.values) {
                ASSERT_NE(set.find(id), nullptr);
                EXPECT_NEAR(set.find(id)->observed_value, v, 1e-12);
            }
        }
    }
}

TEST(PersistenceTest, RoundTrip) {
    std::mt19937_64 rng(54);
    TempDir dir;
    for (int trial = 0; trial < 10; ++trial) {
        auto set = random_skill_set(rng, rng() % 8);
        set.save(dir / "set.json");
        EXPECT_TRUE(std::filesystem::exists(dir / "set.trajectories.jsonl"));
        auto back = SkillSet::load(dir / "set.json");
        EXPECT_TRUE(back == set);
        EXPECT_EQ(back.iteration(), set.iteration());
        // Loaded sets hand out fresh ids above every stored one.
        TestEmbedder te;
        EmbeddingCache cache(te);
        back.archive(make_trajectory("new", {"a", "b"}));
        auto id = back.add_skill(SkillDraft{"x", {"a"}, "fresh goal", CandidatePair{{"new", 0, 2}, {"t0", 0, 2}}}, cache, 9);
        EXPECT_EQ(set.find(id), nullptr);
    }
}

TEST(PersistenceTest, RejectsBadFiles) {
    TempDir dir;
    EXPECT_THROW(SkillSet::load(dir / "missing.json"), LoadError);
    {
        std::ofstream(dir / "bad.json") << "{not json";
    }
    EXPECT_THROW(SkillSet::load(dir / "bad.json"), LoadError);
    {
        std::ofstream(dir / "v.json") << R"({"schema_version": 99})";
    }
    EXPECT_THROW(SkillSet::load(dir / "v.json"), LoadError);
}

TEST(MarkdownTest, ListsSkills) {
    SkillSet set;
    auto s = bare_skill(2, "The stove is on.", {"s"}, 3);
    s.instructions = {"go kitchen", "activate stove"};
    set.add_skill(s);
    set.set_iteration(7);
    EXPECT_EQ(set.export_markdown(),
              "# Skill set (iteration 7, 1 skills)\n"
              "\n## s2: The stove is on.\n\n"
              "- name: n2\n"
              "- created at iteration 3, executed 0 times, observed value 0\n\n"
              "1. go kitchen\n2. activate stove\n");
}
