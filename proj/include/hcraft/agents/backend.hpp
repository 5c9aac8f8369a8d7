#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hcraft::agents {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
  friend bool operator==(const Message&, const Message&) = default;
};

/// Transport or availability failure. The driver checkpoints and stops when it sees one.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Message list in, completion text out.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const std::vector<Message>& messages) = 0;
  virtual std::string name() const = 0;
  /// Replay position, persisted in run checkpoints. Stateless backends return null.
  virtual nlohmann::json save_state() const { return nullptr; }
  virtual void restore_state(const nlohmann::json&) {}
};

/// Agent tag carried on the first line of every system prompt: `[agent:<name>]`.
std::string agent_tag(const std::vector<Message>& messages);

/// Replays responses from a fixture. A rule answers for one agent when every `when` substring
/// occurs in the user messages and no `unless` substring does; the first matching rule
/// wins. Each rule walks through its responses and then repeats the last one.
///
/// Fixture layout (JSON):
///   {"rules": [{"agent": "slow", "when": ["Round: 1"], "unless": [], "responses": ["..."]}]}
class ScriptedBackend : public Backend {
 public:
  struct Rule {
    std::string agent;
    std::vector<std::string> when;
    std::vector<std::string> unless;
    std::vector<std::string> responses;
  };

  explicit ScriptedBackend(std::vector<Rule> rules);
  /// Throws ConfigError on unreadable or malformed fixtures.
  static ScriptedBackend from_file(const std::filesystem::path& path);
  static ScriptedBackend from_json(const nlohmann::json& doc);

  std::string complete(const std::vector<Message>& messages) override;
  std::string name() const override { return "scripted"; }
  nlohmann::json save_state() const override;
  void restore_state(const nlohmann::json& state) override;

  /// Simulated outage: every call after the first `calls` ones throws BackendError.
  void fail_after(int calls) { fail_after_ = calls; }
  int calls() const { return calls_; }

 private:
  std::vector<Rule> rules_;
  std::vector<std::size_t> cursor_;
  int calls_ = 0;
  std::optional<int> fail_after_;
};

/// OpenAI-style chat completion endpoint. The API key is read from an environment variable
/// whose name is configured; the key itself is never stored.
class HttpBackend : public Backend {
 public:
  struct Options {
    std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
    std::string model;
    std::string key_env;   // environment variable holding the key; empty for no auth
    double temperature = 0.0;
    int timeout_seconds = 60;
    int retries = 2;
  };

  /// Throws ConfigError when the endpoint is not an http(s) URL or key_env names an unset variable.
  explicit HttpBackend(Options options);

  std::string complete(const std::vector<Message>& messages) override;
  std::string name() const override { return "http:" + options_.model; }

  /// Request body sent for these messages.
  nlohmann::json request_body(const std::vector<Message>& messages) const;
  /// Extracts choices[0].message.content; throws BackendError on any other shape.
  static std::string parse_response(const std::string& body);

 private:
  Options options_;
  std::string scheme_host_;
  std::string path_;
  std::string key_;
};

}  // namespace hcraft::agents
