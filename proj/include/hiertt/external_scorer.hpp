#pragma once

// Line protocol for out-of-process fact scorers (POSIX).
//
//   request : {"id": <int>, "question": <text>, "facts": [{"fact_id": ..., "text": ...}, ...]}
//   response: {"id": <same>, "scores": [<real>, ...]}   one score per fact, same order
//
// One JSON object per line, UTF-8, one request in flight per connection. The
// scorer is either a child process speaking on stdin/stdout or a TCP server.

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiertt/error.hpp"
#include "hiertt/facts.hpp"
#include "hiertt/retrieval.hpp"

extern char** environ;

namespace hiertt {

// Bidirectional byte stream carrying newline-terminated messages.
class LineChannel {
 public:
  explicit LineChannel(int fd) : fd_(fd) {}
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;
  ~LineChannel() {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_line(std::string_view line) {
    std::string data(line);
    data.push_back('\n');
    std::size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("scorer write failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw ProtocolError("scorer timed out");
      pollfd p{fd_, POLLIN, 0};
      int ready = ::poll(&p, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) throw ProtocolError("scorer timed out");
      char chunk[4096];
      ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("scorer read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw ProtocolError("scorer closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

class ScorerEndpoint {
 public:
  virtual ~ScorerEndpoint() = default;
  // Sends one request line and returns the reply line.
  virtual std::string exchange(const std::string& request, std::chrono::milliseconds timeout) = 0;
};

// Spawns `/bin/sh -c command` with stdin/stdout on a socket pair, in its own
// process group so teardown reaches whatever the shell started.
class ProcessEndpoint : public ScorerEndpoint {
 public:
  explicit ProcessEndpoint(const std::string& command) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
      throw ProtocolError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    posix_spawn_file_actions_addclose(&actions, fds[1]);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);
    std::string sh = "/bin/sh", flag = "-c", cmd = command;
    char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
    int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr, argv, environ);
    posix_spawnattr_destroy(&attr);
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    if (rc != 0) {
      ::close(fds[0]);
      throw ProtocolError("cannot start scorer '" + command + "': " + std::strerror(rc));
    }
    channel_ = std::make_unique<LineChannel>(fds[0]);
  }

  ~ProcessEndpoint() override {
    channel_.reset();  // child sees EOF
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) != 0) return;
        ::usleep(10000);
      }
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  std::string exchange(const std::string& request, std::chrono::milliseconds timeout) override {
    std::lock_guard lock(mutex_);
    channel_->write_line(request);
    return channel_->read_line(timeout);
  }

 private:
  pid_t pid_ = -1;
  std::unique_ptr<LineChannel> channel_;
  std::mutex mutex_;
};

// Connects to "host:port".
class TcpEndpoint : public ScorerEndpoint {
 public:
  explicit TcpEndpoint(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos) throw ProtocolError("scorer address must be host:port, got '" + address + "'");
    std::string host = address.substr(0, colon);
    std::string port = address.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
      throw ProtocolError("cannot resolve '" + address + "': " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw ProtocolError("cannot connect to scorer at '" + address + "'");
    channel_ = std::make_unique<LineChannel>(fd);
  }

  std::string exchange(const std::string& request, std::chrono::milliseconds timeout) override {
    std::lock_guard lock(mutex_);
    channel_->write_line(request);
    return channel_->read_line(timeout);
  }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::mutex mutex_;
};

class ExternalScorer {
 public:
  explicit ExternalScorer(std::unique_ptr<ScorerEndpoint> endpoint,
                          std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  std::vector<double> raw_scores(std::string_view question, const std::vector<Fact>& facts) {
    if (facts.empty()) throw ProtocolError("refusing to send a request without facts");
    const long id = next_id_++;
    nlohmann::json request{{"id", id}, {"question", std::string(question)}, {"facts", nlohmann::json::array()}};
    for (const auto& f : facts) request["facts"].push_back({{"fact_id", f.fact_id}, {"text", f.text}});
    std::string reply = endpoint_->exchange(request.dump(), timeout_);
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError("malformed scorer reply: " + reply.substr(0, 200));
    }
    if (!response.is_object() || !response.contains("id") || !response.contains("scores")) {
      throw ProtocolError("scorer reply lacks id or scores");
    }
    if (!response["id"].is_number_integer() || response["id"].get<long>() != id) {
      throw ProtocolError("scorer reply id does not match request " + std::to_string(id));
    }
    const auto& scores = response["scores"];
    if (!scores.is_array()) throw ProtocolError("scorer reply 'scores' is not an array");
    if (scores.size() != facts.size()) {
      throw ProtocolError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(facts.size()) + " facts");
    }
    std::vector<double> out;
    for (const auto& s : scores) {
      if (!s.is_number()) throw ProtocolError("non-numeric score in scorer reply");
      double v = s.get<double>();
      if (!std::isfinite(v)) throw ProtocolError("non-finite score in scorer reply");
      out.push_back(v);
    }
    return out;
  }

 private:
  std::unique_ptr<ScorerEndpoint> endpoint_;
  std::chrono::milliseconds timeout_;
  long next_id_ = 0;
};

inline std::vector<ScoredFact> score_external(std::string_view question, const std::vector<Fact>& facts,
                                              ExternalScorer& scorer) {
  return rank_facts(facts, scorer.raw_scores(question, facts));
}

}  // namespace hiertt
