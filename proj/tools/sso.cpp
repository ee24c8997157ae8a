#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "sso/env.hpp"
#include "sso/errors.hpp"
#include "sso/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;

// Flags shared by train, eval and mine. Only flags given on the command line
// override the config file.
struct RunFlags {
    std::string config_path;
    std::string env;
    std::vector<std::string> env_command;
    std::vector<std::uint64_t> variant_seeds;
    std::vector<std::uint64_t> test_seeds;
    std::string skills;
    std::string cassette;
    bool record = false;
    bool replay = false;
    std::string out;
    std::uint64_t seed = 0;
    std::string actor;
    std::string generator;
    std::string chat_backend;
    std::string embedder;
    std::string chat_model;
    std::string embedding_model;
    std::string base_url;
    std::string embedding_cache;
    std::size_t episodes = 0;
    std::size_t attempts = 0;
    bool no_transcripts = false;
    std::string mode;
    std::string archive;

    std::size_t min_len = 0, max_len = 0, n_past = 0, max_retrieved = 0, beam_width = 0, generation_retries = 0;
    double gamma = 0, epsilon = 0, w_state = 0, w_action = 0, w_reward = 0, w_length = 0, temp_train = 0,
           temp_test = 0;

    std::map<std::string, CLI::Option*> opts;
};

void add_run_flags(CLI::App& app, RunFlags& f) {
    auto& o = f.opts;
    o["config"] = app.add_option("--config", f.config_path, "JSON config document");
    o["env"] = app.add_option("--env", f.env, "environment family (minilab, minivault)");
    o["env-command"] = app.add_option("--env-command", f.env_command, "run the environment as this subprocess");
    o["variant-seeds"] = app.add_option("--variant-seeds", f.variant_seeds, "comma-separated variant seeds")
                             ->delimiter(',');
    o["test-seeds"] =
        app.add_option("--test-seeds", f.test_seeds, "held-out variant seeds for transfer evaluation")->delimiter(',');
    o["skills"] = app.add_option("--skills", f.skills, "skill-set file");
    o["cassette"] = app.add_option("--cassette", f.cassette, "JSONL chat cassette");
    auto* rec = app.add_flag("--record", f.record, "record missing chat responses into the cassette");
    auto* rep = app.add_flag("--replay", f.replay, "serve chat only from the cassette (default with --cassette)");
    rec->excludes(rep);
    o["record"] = rec;
    o["replay"] = rep;
    o["out"] = app.add_option("--out", f.out, "output directory");
    o["seed"] = app.add_option("--seed", f.seed, "actor seed");
    o["actor"] = app.add_option("--actor", f.actor, "scripted or chat");
    o["generator"] = app.add_option("--generator", f.generator, "offline or llm");
    o["chat-backend"] = app.add_option("--chat-backend", f.chat_backend, "http or offline");
    o["embedder"] = app.add_option("--embedder", f.embedder, "test or http");
    o["chat-model"] = app.add_option("--chat-model", f.chat_model);
    o["embedding-model"] = app.add_option("--embedding-model", f.embedding_model);
    o["base-url"] = app.add_option("--base-url", f.base_url, "OpenAI-compatible server");
    o["embedding-cache"] = app.add_option("--embedding-cache", f.embedding_cache, "embedding sidecar file");
    o["episodes"] = app.add_option("--episodes", f.episodes, "adapt: per variant; transfer: total");
    o["attempts"] = app.add_option("--attempts", f.attempts, "evaluation attempts per variant");
    o["no-transcripts"] = app.add_flag("--no-transcripts", f.no_transcripts, "skip per-iteration transcripts");

    o["min-len"] = app.add_option("--min-len", f.min_len);
    o["max-len"] = app.add_option("--max-len", f.max_len);
    o["n-past"] = app.add_option("--n-past", f.n_past);
    o["gamma"] = app.add_option("--gamma", f.gamma);
    o["epsilon"] = app.add_option("--epsilon", f.epsilon);
    o["w-state"] = app.add_option("--w-state", f.w_state);
    o["w-action"] = app.add_option("--w-action", f.w_action);
    o["w-reward"] = app.add_option("--w-reward", f.w_reward);
    o["w-length"] = app.add_option("--w-length", f.w_length);
    o["max-retrieved"] = app.add_option("--max-retrieved", f.max_retrieved);
    o["beam-width"] = app.add_option("--beam-width", f.beam_width);
    o["temp-train"] = app.add_option("--temp-train", f.temp_train);
    o["temp-test"] = app.add_option("--temp-test", f.temp_test);
    o["generation-retries"] = app.add_option("--generation-retries", f.generation_retries);
}

sso::RunConfig build_config(const RunFlags& f) {
    auto given = [&](const char* name) {
        auto it = f.opts.find(name);
        return it != f.opts.end() && it->second->count() > 0;
    };
    sso::RunConfig c = given("config") ? sso::load_run_config(f.config_path) : sso::RunConfig{};
    if (given("env")) c.env_family = f.env;
    if (given("env-command")) c.env_command = f.env_command;
    if (given("variant-seeds")) c.variant_seeds = f.variant_seeds;
    if (given("test-seeds")) c.test_seeds = f.test_seeds;
    if (given("skills")) c.skills_path = f.skills;
    if (given("cassette")) c.cassette_path = f.cassette;
    if (f.record) c.cassette_mode = sso::CassetteMode::record;
    if (f.replay) c.cassette_mode = sso::CassetteMode::replay;
    if ((f.record || f.replay) && c.cassette_path.empty()) throw sso::ConfigError("--record/--replay need --cassette");
    if (given("out")) c.out_dir = f.out;
    if (given("seed")) c.seed = f.seed;
    if (given("actor")) c.actor = sso::parse_actor_kind(f.actor);
    if (given("generator")) c.generator = sso::parse_generator_kind(f.generator);
    if (given("chat-backend")) c.chat_backend = sso::parse_chat_backend(f.chat_backend);
    if (given("embedder")) c.embedder = sso::parse_embedder_kind(f.embedder);
    if (given("chat-model")) c.chat_model = f.chat_model;
    if (given("embedding-model")) c.embedding_model = f.embedding_model;
    if (given("base-url")) c.endpoint.base_url = f.base_url;
    if (given("embedding-cache")) c.embedding_cache_path = f.embedding_cache;
    if (given("episodes")) c.episodes = f.episodes;
    if (given("attempts")) c.eval_attempts = f.attempts;
    if (f.no_transcripts) c.transcripts = false;
    if (given("archive")) c.archive_path = f.archive;
    if (given("mode")) c.mode = sso::parse_train_mode(f.mode);

    if (given("min-len")) c.sso.min_len = f.min_len;
    if (given("max-len")) c.sso.max_len = f.max_len;
    if (given("n-past")) c.sso.n_past = f.n_past;
    if (given("gamma")) c.sso.gamma = f.gamma;
    if (given("epsilon")) c.sso.epsilon = f.epsilon;
    if (given("w-state")) c.sso.w_state = f.w_state;
    if (given("w-action")) c.sso.w_action = f.w_action;
    if (given("w-reward")) c.sso.w_reward = f.w_reward;
    if (given("w-length")) c.sso.w_length = f.w_length;
    if (given("max-retrieved")) c.sso.max_retrieved = f.max_retrieved;
    if (given("beam-width")) c.sso.beam_width = f.beam_width;
    if (given("temp-train")) c.sso.temp_train = f.temp_train;
    if (given("temp-test")) c.sso.temp_test = f.temp_test;
    if (given("generation-retries")) c.sso.generation_retries = f.generation_retries;
    c.validate();
    return c;
}

int finish(const sso::DriverResult& r, const char* what) {
    std::printf("%s: mean score %.4f\n", what, r.mean_score);
    if (r.transport_failures > 0) {
        spdlog::error("{} transport failure(s) during the run", r.transport_failures);
        return kExitTransport;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skill mining, refinement and evaluation for language-model actors"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    RunFlags train_flags, eval_flags, mine_flags;
    auto* train = app.add_subcommand("train", "run the learning loop (adapt or transfer protocol)");
    add_run_flags(*train, train_flags);
    train_flags.opts["mode"] = train->add_option("--mode", train_flags.mode, "adapt or transfer");

    auto* eval = app.add_subcommand("eval", "evaluate a frozen skill set");
    add_run_flags(*eval, eval_flags);

    auto* mine = app.add_subcommand("mine", "mine skills from a trajectory archive without an actor");
    add_run_flags(*mine, mine_flags);
    mine_flags.opts["archive"] = mine->add_option("--archive", mine_flags.archive, "trajectory JSONL archive");

    auto* stats = app.add_subcommand("stats", "summarize a skill-set file and export markdown");
    std::string stats_skills, stats_out = ".";
    stats->add_option("--skills", stats_skills, "skill-set file")->required();
    stats->add_option("--out", stats_out, "directory for skills.md");

    auto* serve = app.add_subcommand("serve-env", "serve a bundled environment over stdin/stdout");
    serve->group("");
    std::string serve_family = "minilab";
    serve->add_option("--env", serve_family);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    spdlog::set_default_logger(spdlog::default_logger()->clone("sso"));
    spdlog::set_level(spdlog::level::from_str(log_level));
    if (*serve) {
        // stdout carries the protocol.
        spdlog::set_level(spdlog::level::off);
    }

    try {
        if (*train) {
            sso::Session session(build_config(train_flags));
            const auto r = session.config().mode == sso::TrainMode::adapt ? sso::run_adapt(session)
                                                                           : sso::run_transfer(session);
            return finish(r, "train");
        }
        if (*eval) {
            sso::Session session(build_config(eval_flags));
            return finish(sso::run_eval(session), "eval");
        }
        if (*mine) {
            sso::Session session(build_config(mine_flags));
            return finish(sso::run_mine(session), "mine");
        }
        if (*stats) {
            sso::RunConfig c;
            c.skills_path = stats_skills;
            c.out_dir = stats_out;
            sso::run_stats(c, std::cout);
            return kExitOk;
        }
        if (*serve) {
            auto env = sso::make_environment(serve_family);
            sso::serve_environment(*env, std::cin, std::cout);
            return kExitOk;
        }
    } catch (const sso::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const sso::LoadError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const sso::TransportError& e) {
        std::fprintf(stderr, "transport error: %s\n", e.what());
        return kExitTransport;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}
