#include "sso/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sso/errors.hpp"
#include "sso/extract.hpp"
#include "sso/select.hpp"
#include "sso/text.hpp"

namespace sso {

namespace fs = std::filesystem;

TrainMode parse_train_mode(const std::string& s) {
    if (s == "adapt") return TrainMode::adapt;
    if (s == "transfer") return TrainMode::transfer;
    throw ConfigError("unknown mode: " + s + " (expected adapt or transfer)");
}

ActorKind parse_actor_kind(const std::string& s) {
    if (s == "scripted") return ActorKind::scripted;
    if (s == "chat") return ActorKind::chat;
    throw ConfigError("unknown actor: " + s);
}

GeneratorKind parse_generator_kind(const std::string& s) {
    if (s == "offline") return GeneratorKind::offline;
    if (s == "llm") return GeneratorKind::llm;
    throw ConfigError("unknown generator: " + s);
}

ChatBackend parse_chat_backend(const std::string& s) {
    if (s == "http") return ChatBackend::http;
    if (s == "offline") return ChatBackend::offline;
    throw ConfigError("unknown chat backend: " + s);
}

EmbedderKind parse_embedder_kind(const std::string& s) {
    if (s == "test") return EmbedderKind::test;
    if (s == "http") return EmbedderKind::http;
    throw ConfigError("unknown embedder: " + s);
}

std::size_t RunConfig::episode_count() const {
    if (episodes) return *episodes;
    return mode == TrainMode::adapt ? kAdaptEpisodes : kTransferEpisodes;
}

void RunConfig::validate() const {
    sso.validate();
    if (env_command.empty()) make_environment(env_family);
    if (variant_seeds.empty()) throw ConfigError("variant_seeds is empty");
    if (eval_attempts == 0) throw ConfigError("eval_attempts must be >= 1");
    if (endpoint.max_in_flight == 0) throw ConfigError("max_in_flight must be >= 1");
}

namespace {

template <class T>
T field(const nlohmann::json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field ") + key + ": " + e.what());
    }
}

}  // namespace

void apply_config_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config document must be a JSON object");
    static const std::set<std::string> sso_keys{
        "min_len",  "max_len",       "n_past",     "gamma",     "epsilon",   "w_state",   "w_action",
        "w_reward", "w_length",      "max_retrieved", "beam_width", "temp_train", "temp_test", "generation_retries"};
    nlohmann::json sso_part = nlohmann::json::object();
    to_json(sso_part, c.sso);
    for (const auto& [key, value] : j.items()) {
        const char* k = key.c_str();
        if (sso_keys.contains(key)) {
            sso_part[key] = value;
        } else if (key == "sso") {
            if (!value.is_object()) throw ConfigError("config field sso must be an object");
            for (const auto& [sk, sv] : value.items()) {
                if (!sso_keys.contains(sk)) throw ConfigError("unknown config field sso." + sk);
                sso_part[sk] = sv;
            }
        } else if (key == "env") {
            c.env_family = field<std::string>(value, k);
        } else if (key == "env_command") {
            c.env_command = field<std::vector<std::string>>(value, k);
        } else if (key == "variant_seeds") {
            c.variant_seeds = field<std::vector<std::uint64_t>>(value, k);
        } else if (key == "test_seeds") {
            c.test_seeds = field<std::vector<std::uint64_t>>(value, k);
        } else if (key == "mode") {
            c.mode = parse_train_mode(field<std::string>(value, k));
        } else if (key == "actor") {
            c.actor = parse_actor_kind(field<std::string>(value, k));
        } else if (key == "generator") {
            c.generator = parse_generator_kind(field<std::string>(value, k));
        } else if (key == "chat_backend") {
            c.chat_backend = parse_chat_backend(field<std::string>(value, k));
        } else if (key == "embedder") {
            c.embedder = parse_embedder_kind(field<std::string>(value, k));
        } else if (key == "chat_model") {
            c.chat_model = field<std::string>(value, k);
        } else if (key == "embedding_model") {
            c.embedding_model = field<std::string>(value, k);
        } else if (key == "base_url") {
            c.endpoint.base_url = field<std::string>(value, k);
        } else if (key == "api_key_env") {
            c.endpoint.api_key_env = field<std::string>(value, k);
        } else if (key == "max_in_flight") {
            c.endpoint.max_in_flight = field<std::size_t>(value, k);
        } else if (key == "seed") {
            c.seed = field<std::uint64_t>(value, k);
        } else if (key == "episodes") {
            c.episodes = field<std::size_t>(value, k);
        } else if (key == "eval_attempts") {
            c.eval_attempts = field<std::size_t>(value, k);
        } else if (key == "out") {
            c.out_dir = field<std::string>(value, k);
        } else if (key == "skills") {
            c.skills_path = field<std::string>(value, k);
        } else if (key == "cassette") {
            c.cassette_path = field<std::string>(value, k);
        } else if (key == "cassette_mode") {
            c.cassette_mode = parse_cassette_mode(field<std::string>(value, k));
        } else if (key == "archive") {
            c.archive_path = field<std::string>(value, k);
        } else if (key == "embedding_cache") {
            c.embedding_cache_path = field<std::string>(value, k);
        } else if (key == "transcripts") {
            c.transcripts = field<bool>(value, k);
        } else {
            throw ConfigError("unknown config field " + key);
        }
    }
    try {
        from_json(sso_part, c.sso);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    RunConfig c;
    apply_config_json(c, j);
    return c;
}

LifecycleRecord& Lifecycle::at(SkillId id) {
    auto& r = records_[id];
    r.id = id;
    return r;
}

void Lifecycle::created(SkillId id, std::size_t iteration) { at(id).created_iteration = iteration; }
void Lifecycle::executed(SkillId id, std::size_t iteration) { at(id).executions.push_back(iteration); }
void Lifecycle::pruned(SkillId id, std::size_t iteration) { at(id).pruned_iteration = iteration; }

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::string padded(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", n);
    return buf;
}

}  // namespace

void emit_stats(std::span<const IterationStats> series, const Lifecycle& lifecycle, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());

    auto stats = open_out(out_dir / "stats.csv");
    stats << "iteration,skill_set_size,skills_created,skills_pruned,executed_unique_skills,episode_score,"
             "mean_skill_length\n";
    for (const auto& s : series)
        stats << s.iteration << ',' << s.skill_set_size << ',' << s.skills_created << ',' << s.skills_pruned << ','
              << s.executed_unique_skills << ',' << num(s.episode_score) << ',' << num(s.mean_skill_length) << '\n';

    auto life = open_out(out_dir / "lifecycle.csv");
    life << "skill_id,created_iteration,executions,pruned_iteration\n";
    for (const auto& [id, r] : lifecycle.records()) {
        std::vector<std::string> its;
        for (auto i : r.executions) its.push_back(std::to_string(i));
        life << id.str() << ',' << r.created_iteration << ',' << text::join(its, ";") << ','
             << (r.pruned_iteration ? std::to_string(*r.pruned_iteration) : std::string()) << '\n';
    }
    if (!stats || !life) throw Error("write failed in " + out_dir.string());
}

EpisodeResult run_episode(Environment& env, Actor& actor, const SkillSet& skills, EmbeddingCache& cache,
                          const VariantSpec& variant, std::string trajectory_id) {
    const auto epoch = skills.epoch();
    EpisodeResult result;
    result.trajectory.id = std::move(trajectory_id);
    auto obs = env.reset(variant);
    result.action_templates = obs.admissible_action_templates;
    const auto task = env.task_description();
    const auto noop = env.noop_action();
    actor.begin_episode();
    while (!obs.done) {
        const auto retrieved = skills.retrieve(obs.text, skills.config().max_retrieved, cache);
        const auto offered = offer(retrieved);
        auto decision = actor.act({task, obs, offered, noop});
        auto next = env.step(decision.action);
        result.trajectory.steps.push_back(
            {obs.text, std::move(decision.action), next.reward, decision.targeted_subgoal});
        obs = std::move(next);
        if (skills.epoch() != epoch) throw ContractError("skill set mutated during an episode");
    }
    result.trajectory.terminal_observation = obs.text;
    result.score = obs.score;
    return result;
}

ConstructReport construct(SkillSet& skills, Trajectory latest, const ConstructContext& ctx, std::size_t iteration) {
    const auto& config = skills.config();
    const auto& stored = skills.archive(std::move(latest));
    auto window = skills.trajectories().last(config.n_past + 1);
    window.pop_back();

    ConstructReport report;
    auto candidates = extract_candidates(stored, window, config, skills.trajectories(), ctx.cache, iteration);
    score_all(candidates.pairs, config);
    report.candidates = candidates.pairs.size();

    // Carryover pairs whose trajectories left the window are rescored.
    std::set<std::string> in_window{stored.id};
    for (const auto* t : window) in_window.insert(t->id);
    std::vector<CandidatePair> carryover = skills.sampled_pairs();
    for (auto& p : carryover) {
        if (in_window.contains(p.a.trajectory_id) && in_window.contains(p.b.trajectory_id)) continue;
        const auto sim = subtraj_similarity(p.a, p.b, skills.trajectories(), ctx.cache);
        p.state_sim = sim.state;
        p.action_sim = sim.action;
        p.reward_value = 0.5 * (discounted_return(skills.trajectories().get(p.a.trajectory_id), p.a.start, config.gamma) +
                                discounted_return(skills.trajectories().get(p.b.trajectory_id), p.b.start, config.gamma));
        p.score = score_pair(p, config);
    }

    const auto selection = sample_skill_pairs(candidates.pairs, carryover, config);
    report.selected = selection.chosen.size();

    std::vector<CandidatePair> to_generate;
    for (const auto& p : partition_selection(selection, skills.live_pair_index()).new_pairs)
        if (!skills.was_sampled(p)) to_generate.push_back(p);

    std::vector<SkillDraft> drafts;
    for (const auto& p : to_generate) {
        auto g = ctx.generator.generate(p, skills.trajectories(), ctx.action_templates);
        if (g.draft && !g.draft->instructions.empty()) {
            drafts.push_back(std::move(*g.draft));
        } else {
            ++report.discarded;
        }
    }
    const auto existing = skills.live_subgoals();
    const auto before = drafts.size();
    drafts = dedup_skills(std::move(drafts), existing, ctx.dedup_chat, ctx.dedup_model, ctx.dedup_temperature);
    report.discarded += before - drafts.size();
    for (auto& d : drafts) report.created.push_back(skills.add_skill(std::move(d), ctx.cache, iteration));
    skills.add_sampled_pairs(selection.chosen);
    return report;
}

Trainer::Trainer(SkillSet& skills, Environment& env, Actor& actor, SkillGenerator& generator, EmbeddingCache& cache,
                 TranscriptLog* transcript, fs::path transcript_dir)
    : skills_(&skills), env_(&env), actor_(&actor), generator_(&generator), cache_(&cache), transcript_(transcript),
      transcript_dir_(std::move(transcript_dir)) {
    for (const auto& [id, s] : skills.skills()) lifecycle_.created(id, s.created_iteration);
}

void Trainer::set_dedup_chat(ChatClient* chat, std::string model, double temperature) {
    dedup_chat_ = chat;
    dedup_model_ = std::move(model);
    dedup_temperature_ = temperature;
}

std::optional<IterationStats> Trainer::iterate(const VariantSpec& variant) {
    const auto iteration = skills_->iteration() + 1;
    skills_->set_iteration(iteration);
    if (transcript_ && !transcript_dir_.empty()) {
        fs::create_directories(transcript_dir_);
        transcript_->open(transcript_dir_ / ("iter-" + padded(iteration) + ".jsonl"));
    }
    struct CloseLog {
        TranscriptLog* log;
        ~CloseLog() {
            if (log) log->close();
        }
    } close_log{transcript_dir_.empty() ? nullptr : transcript_};

    const auto size_before = skills_->size();
    EpisodeResult episode;
    try {
        episode = run_episode(*env_, *actor_, *skills_, *cache_, variant,
                              "ep" + padded(iteration) + "-" + variant.family + "-" + std::to_string(variant.seed));
    } catch (const TransportError& e) {
        spdlog::error("iteration {} aborted: {}", iteration, e.what());
        ++aborted_;
        ++transport_failures_;
        return std::nullopt;
    } catch (const EmbeddingError& e) {
        spdlog::error("iteration {} aborted: {}", iteration, e.what());
        ++aborted_;
        ++transport_failures_;
        return std::nullopt;
    }

    std::set<SkillId> executed;
    for (const auto& s : episode.trajectory.steps)
        if (s.self_reported_skill && skills_->find(*s.self_reported_skill)) executed.insert(*s.self_reported_skill);

    IterationStats st;
    st.iteration = iteration;
    st.episode_score = episode.score;
    st.executed_unique_skills = executed.size();

    const Trajectory trajectory = episode.trajectory;
    try {
        const ConstructContext ctx{*generator_, *cache_, episode.action_templates, dedup_chat_, dedup_model_,
                                   dedup_temperature_};
        const auto report = construct(*skills_, episode.trajectory, ctx, iteration);
        for (auto id : report.created) lifecycle_.created(id, iteration);
        st.skills_created = report.created.size();
    } catch (const TransportError& e) {
        spdlog::error("iteration {}: skill construction failed: {}", iteration, e.what());
        ++transport_failures_;
        if (!skills_->trajectories().contains(trajectory.id)) skills_->archive(trajectory);
    }

    const auto refined = skills_->refine(trajectory);
    for (const auto& [id, t] : refined.executions) lifecycle_.executed(id, iteration);
    for (auto id : refined.pruned) lifecycle_.pruned(id, iteration);
    st.skills_pruned = refined.pruned.size();
    st.skill_set_size = skills_->size();
    if (st.skill_set_size != size_before + st.skills_created - st.skills_pruned)
        throw ContractError("skill accounting mismatch at iteration " + std::to_string(iteration));

    std::size_t total_len = 0;
    for (const auto& [id, s] : skills_->skills()) total_len += s.instructions.size();
    st.mean_skill_length =
        skills_->size() ? static_cast<double>(total_len) / static_cast<double>(skills_->size()) : 0.0;

    spdlog::info("iteration {}: score {} skills {} (+{} -{})", iteration, st.episode_score, st.skill_set_size,
                 st.skills_created, st.skills_pruned);
    stats_.push_back(st);
    scores_.push_back(st.episode_score);
    return st;
}

std::vector<IterationStats> train(Trainer& trainer, std::span<const VariantSpec> variants, std::size_t iterations) {
    std::vector<IterationStats> out;
    if (variants.empty() && iterations > 0) throw ConfigError("train needs at least one variant");
    for (std::size_t i = 0; i < iterations; ++i)
        if (auto st = trainer.iterate(variants[i % variants.size()])) out.push_back(*st);
    return out;
}

EvalTable evaluate(Environment& env, Actor& actor, const SkillSet& skills, EmbeddingCache& cache,
                   std::span<const VariantSpec> variants, std::size_t attempts) {
    EvalTable table;
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& v : variants) {
        double sum = 0.0;
        std::size_t done = 0;
        for (std::size_t a = 1; a <= attempts; ++a) {
            try {
                const auto ep = run_episode(env, actor, skills, cache, v,
                                            "eval-" + v.family + "-" + std::to_string(v.seed) + "-" + padded(a));
                table.rows.push_back({v.seed, a, ep.score});
                sum += ep.score;
                ++done;
            } catch (const TransportError& e) {
                spdlog::error("evaluation episode {}#{} failed: {}", v.seed, a, e.what());
                ++table.failures;
            }
        }
        if (done) table.variant_mean[v.seed] = sum / static_cast<double>(done);
        total += sum;
        n += done;
    }
    table.overall_mean = n ? total / static_cast<double>(n) : 0.0;
    return table;
}

void write_eval_csv(const EvalTable& table, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto out = open_out(path);
    out << "variant_seed,attempt,score\n";
    for (const auto& r : table.rows) out << r.seed << ',' << r.attempt << ',' << num(r.score) << '\n';
    for (const auto& [seed, mean] : table.variant_mean) out << seed << ",mean," << num(mean) << '\n';
    out << "all,mean," << num(table.overall_mean) << '\n';
}

Session::Session(RunConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.embedder == EmbedderKind::http) {
        provider_ = std::make_unique<HttpEmbeddingProvider>(config_.endpoint, config_.embedding_model);
        if (config_.embedding_cache_path.empty()) config_.embedding_cache_path = config_.out_dir / "embeddings.bin";
    } else {
        provider_ = std::make_unique<TestEmbedder>();
    }
    cache_ = std::make_unique<EmbeddingCache>(*provider_);
    if (!config_.embedding_cache_path.empty() && fs::exists(config_.embedding_cache_path))
        cache_->load(config_.embedding_cache_path);

    const bool needs_chat = config_.actor == ActorKind::chat || config_.generator == GeneratorKind::llm;
    if (needs_chat) {
        const bool replay = !config_.cassette_path.empty() && config_.cassette_mode == CassetteMode::replay;
        if (!replay) {
            if (config_.chat_backend == ChatBackend::offline)
                inner_chat_ = std::make_unique<OfflineSkillModel>();
            else
                inner_chat_ = std::make_unique<HttpChatClient>(config_.endpoint);
        }
        if (!config_.cassette_path.empty()) {
            if (config_.cassette_path.has_parent_path()) fs::create_directories(config_.cassette_path.parent_path());
            cassette_ = std::make_unique<CassetteChatClient>(config_.cassette_path, config_.cassette_mode,
                                                             inner_chat_.get());
            chat_ = cassette_.get();
        } else {
            chat_ = inner_chat_.get();
        }
    }

    if (config_.env_command.empty())
        env_ = make_environment(config_.env_family);
    else
        env_ = std::make_unique<SubprocessEnvironment>(config_.env_command, config_.env_family);

    if (config_.generator == GeneratorKind::llm)
        generator_ = std::make_unique<LlmSkillGenerator>(require_chat(), config_.chat_model, config_.sso,
                                                         config_.transcripts ? &transcript_ : nullptr);
    else
        generator_ = std::make_unique<OfflineSkillGenerator>();
}

Session::~Session() = default;

ChatClient& Session::require_chat() {
    if (!chat_) throw ConfigError("no chat client configured");
    return *chat_;
}

std::unique_ptr<Actor> Session::make_actor(double temperature, std::uint64_t seed) {
    if (config_.actor == ActorKind::chat)
        return std::make_unique<ChatActor>(require_chat(), config_.chat_model, temperature,
                                           config_.transcripts ? &transcript_ : nullptr);
    return std::make_unique<ScriptedActor>(seed);
}

std::vector<std::string> Session::action_templates(const VariantSpec& probe) {
    return env_->reset(probe).admissible_action_templates;
}

void Session::flush() {
    if (!config_.embedding_cache_path.empty()) cache_->save(config_.embedding_cache_path);
}

namespace {

std::vector<VariantSpec> variants_of(const std::string& family, std::span<const std::uint64_t> seeds, Split split) {
    std::vector<VariantSpec> out;
    for (auto s : seeds) out.push_back({family, s, split});
    return out;
}

fs::path skills_file(const RunConfig& c) { return c.skills_path.empty() ? c.out_dir / "skills.json" : c.skills_path; }

void configure_dedup(Trainer& trainer, Session& session) {
    if (session.config().generator == GeneratorKind::llm)
        trainer.set_dedup_chat(session.chat(), session.config().chat_model, session.config().sso.temp_train);
}

double mean_of(std::span<const double> xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

DriverResult run_adapt(Session& session) {
    const auto& c = session.config();
    DriverResult result;
    std::vector<double> finals;
    fs::create_directories(c.out_dir);
    auto summary = open_out(c.out_dir / "adapt_summary.csv");
    summary << "variant_seed,episodes,mean_score,final_score,skill_set_size\n";
    for (auto seed : c.variant_seeds) {
        SkillSet skills(c.sso);
        auto actor = session.make_actor(c.sso.temp_train, c.seed);
        const auto dir = c.out_dir / ("variant-" + std::to_string(seed));
        Trainer trainer(skills, session.env(), *actor, session.generator(), session.cache(),
                        c.transcripts ? &session.transcript() : nullptr,
                        c.transcripts ? dir / "transcripts" : fs::path{});
        configure_dedup(trainer, session);
        const VariantSpec v{c.env_family, seed, Split::test};
        train(trainer, std::span(&v, 1), c.episode_count());
        emit_stats(trainer.stats(), trainer.lifecycle(), dir);
        skills.save(dir / "skills.json");
        result.aborted += trainer.aborted();
        result.transport_failures += trainer.transport_failures();
        const auto& sc = trainer.scores();
        summary << seed << ',' << sc.size() << ',' << num(mean_of(sc)) << ','
                << (sc.empty() ? std::string() : num(sc.back())) << ',' << skills.size() << '\n';
        if (!sc.empty()) finals.push_back(sc.back());
    }
    session.flush();
    result.mean_score = mean_of(finals);
    return result;
}

DriverResult run_transfer(Session& session) {
    const auto& c = session.config();
    DriverResult result;
    SkillSet skills(c.sso);
    {
        auto actor = session.make_actor(c.sso.temp_train, c.seed);
        Trainer trainer(skills, session.env(), *actor, session.generator(), session.cache(),
                        c.transcripts ? &session.transcript() : nullptr,
                        c.transcripts ? c.out_dir / "transcripts" : fs::path{});
        configure_dedup(trainer, session);
        const auto train_variants = variants_of(c.env_family, c.variant_seeds, Split::train);
        train(trainer, train_variants, c.episode_count());
        emit_stats(trainer.stats(), trainer.lifecycle(), c.out_dir);
        result.aborted = trainer.aborted();
        result.transport_failures = trainer.transport_failures();
    }
    const auto path = skills_file(c);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    skills.save(path);

    const SkillSet& frozen = skills;
    auto eval_actor = session.make_actor(c.sso.temp_test, c.seed);
    const auto test_variants = variants_of(c.env_family, c.test_seeds, Split::test);
    const auto table = evaluate(session.env(), *eval_actor, frozen, session.cache(), test_variants, c.eval_attempts);
    write_eval_csv(table, c.out_dir / "eval.csv");
    result.transport_failures += table.failures;
    result.mean_score = table.overall_mean;
    session.flush();
    return result;
}

DriverResult run_eval(Session& session) {
    const auto& c = session.config();
    if (c.skills_path.empty()) throw ConfigError("eval needs --skills");
    const auto skills = SkillSet::load(c.skills_path);
    auto actor = session.make_actor(c.sso.temp_test, c.seed);
    const auto variants = variants_of(c.env_family, c.variant_seeds, Split::test);
    const auto table = evaluate(session.env(), *actor, skills, session.cache(), variants, c.eval_attempts);
    write_eval_csv(table, c.out_dir / "eval.csv");
    session.flush();
    return {0, table.failures, table.overall_mean};
}

DriverResult run_mine(Session& session) {
    const auto& c = session.config();
    if (c.archive_path.empty()) throw ConfigError("mine needs --archive");
    const auto path = skills_file(c);
    SkillSet skills = fs::exists(path) ? SkillSet::load(path) : SkillSet(c.sso);
    const auto templates = session.action_templates({c.env_family, c.variant_seeds.front(), Split::train});
    DriverResult result;
    for (auto& traj : read_trajectories_jsonl(c.archive_path)) {
        if (skills.trajectories().contains(traj.id)) continue;
        const auto iteration = skills.iteration() + 1;
        skills.set_iteration(iteration);
        ConstructContext ctx{session.generator(), session.cache(), templates};
        if (c.generator == GeneratorKind::llm) {
            ctx.dedup_chat = session.chat();
            ctx.dedup_model = c.chat_model;
            ctx.dedup_temperature = c.sso.temp_train;
        }
        try {
            const auto report = construct(skills, traj, ctx, iteration);
            spdlog::info("mined {}: {} candidates, {} selected, {} new skills", traj.id, report.candidates,
                         report.selected, report.created.size());
        } catch (const TransportError& e) {
            spdlog::error("mining {} failed: {}", traj.id, e.what());
            ++result.transport_failures;
            if (!skills.trajectories().contains(traj.id)) skills.archive(traj);
        }
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    skills.save(path);
    session.flush();
    return result;
}

void run_stats(const RunConfig& config, std::ostream& out) {
    if (config.skills_path.empty()) throw ConfigError("stats needs --skills");
    const auto skills = SkillSet::load(config.skills_path);
    out << "skills: " << skills.size() << "\n";
    out << "trajectories: " << skills.trajectories().size() << "\n";
    out << "sampled pairs: " << skills.sampled_pairs().size() << "\n";
    out << "iteration: " << skills.iteration() << "\n";
    std::vector<const Skill*> ranked;
    for (const auto& [id, s] : skills.skills()) ranked.push_back(&s);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Skill* a, const Skill* b) { return a->observed_value > b->observed_value; });
    for (const auto* s : ranked)
        out << s->id.str() << "  value " << num(s->observed_value) << "  executed " << s->executed_count
            << "  created " << s->created_iteration << "  " << s->subgoal << "\n";
    fs::create_directories(config.out_dir);
    auto md = open_out(config.out_dir / "skills.md");
    md << skills.export_markdown();
}

}  // namespace sso
