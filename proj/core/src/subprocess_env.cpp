#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "sso/env.hpp"
#include "sso/errors.hpp"

namespace sso {

namespace {

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("environment pipe write failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

}  // namespace

SubprocessEnvironment::SubprocessEnvironment(std::vector<std::string> argv, std::string family)
    : family_(std::move(family)) {
    if (argv.empty()) throw ConfigError("environment command is empty");
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) throw TransportError("pipe() failed");
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw TransportError("pipe() failed");
    }
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) throw TransportError("fork() failed");
    if (pid_ == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
    std::signal(SIGPIPE, SIG_IGN);
}

SubprocessEnvironment::~SubprocessEnvironment() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
}

EnvObservation SubprocessEnvironment::reset(const VariantSpec& variant) {
    const nlohmann::json req{{"type", "reset"}, {"family", variant.family}, {"seed", variant.seed},
                             {"split", to_string(variant.split)}};
    return exchange(req.dump());
}

EnvObservation SubprocessEnvironment::step(const std::string& action) {
    const nlohmann::json req{{"type", "step"}, {"action", action}};
    return exchange(req.dump());
}

EnvObservation SubprocessEnvironment::exchange(const std::string& request_line) {
    write_all(to_child_, request_line + "\n");
    std::size_t nl;
    while ((nl = buffer_.find('\n')) == std::string::npos) {
        char chunk[4096];
        const auto n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw TransportError("environment process closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
    const auto line = buffer_.substr(0, nl);
    buffer_.erase(0, nl + 1);

    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed environment reply: ") + e.what());
    }
    if (reply.contains("error")) {
        const auto msg = reply["error"].get<std::string>();
        const auto kind = reply.value("kind", std::string("other"));
        if (kind == "contract") throw ContractError(msg);
        if (kind == "config") throw ConfigError(msg);
        throw TransportError("environment error: " + msg);
    }
    EnvObservation obs;
    obs.text = reply.at("text").get<std::string>();
    obs.admissible_action_templates = reply.value("templates", std::vector<std::string>{});
    obs.valid_actions = reply.value("actions", std::vector<std::string>{});
    obs.reward = reply.value("reward", 0.0);
    obs.done = reply.value("done", false);
    obs.score = reply.value("score", 0.0);
    task_ = reply.value("task", task_);
    noop_ = reply.value("noop", noop_);
    return obs;
}

}  // namespace sso
