#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "hcraft/agents/backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hcraft/common/errors.hpp"

namespace hcraft::agents {

std::string agent_tag(const std::vector<Message>& messages) {
  for (const auto& m : messages) {
    if (m.role != "system") continue;
    const auto open = m.content.find("[agent:");
    if (open == std::string::npos) continue;
    const auto close = m.content.find(']', open);
    if (close == std::string::npos) continue;
    return m.content.substr(open + 7, close - open - 7);
  }
  return "";
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
    return out;
  }
  if (!v.is_array()) throw ConfigError(std::string("fixture rule field '") + key + "' must be a string or a list");
  for (const auto& s : v) out.push_back(s.get<std::string>());
  return out;
}

std::string user_text(const std::vector<Message>& messages) {
  std::string out;
  for (const auto& m : messages) {
    if (m.role == "user") out += m.content + "\n";
  }
  return out;
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<Rule> rules) : rules_(std::move(rules)), cursor_(rules_.size(), 0) {
  for (const auto& r : rules_) {
    if (r.responses.empty()) throw ConfigError("scripted rule for agent '" + r.agent + "' has no responses");
  }
}

ScriptedBackend ScriptedBackend::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("rules") || !doc.at("rules").is_array()) {
    throw ConfigError("scripted fixture needs a top-level \"rules\" list");
  }
  std::vector<Rule> rules;
  try {
    for (const auto& j : doc.at("rules")) {
      Rule r;
      r.agent = j.at("agent").get<std::string>();
      r.when = string_list(j, "when");
      r.unless = string_list(j, "unless");
      r.responses = string_list(j, "responses");
      rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scripted fixture: ") + e.what());
  }
  return ScriptedBackend(std::move(rules));
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scripted fixture " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scripted fixture " + path.string() + ": " + e.what());
  }
}

std::string ScriptedBackend::complete(const std::vector<Message>& messages) {
  if (fail_after_ && calls_ >= *fail_after_) throw BackendError("scripted backend outage after " + std::to_string(calls_) + " calls");
  ++calls_;
  const std::string agent = agent_tag(messages);
  const std::string prompt = user_text(messages);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    if (r.agent != agent) continue;
    bool ok = true;
    for (const auto& w : r.when) ok = ok && prompt.find(w) != std::string::npos;
    for (const auto& u : r.unless) ok = ok && prompt.find(u) == std::string::npos;
    if (!ok) continue;
    const std::size_t k = std::min(cursor_[i], r.responses.size() - 1);
    ++cursor_[i];
    return r.responses[k];
  }
  throw BackendError("scripted backend has no rule for agent '" + agent + "'");
}

nlohmann::json ScriptedBackend::save_state() const { return {{"cursor", cursor_}, {"calls", calls_}}; }

void ScriptedBackend::restore_state(const nlohmann::json& state) {
  if (state.is_null()) return;
  auto c = state.at("cursor").get<std::vector<std::size_t>>();
  if (c.size() != rules_.size()) throw ConfigError("checkpoint does not match the scripted fixture");
  cursor_ = std::move(c);
  calls_ = state.at("calls").get<int>();
}

HttpBackend::HttpBackend(Options options) : options_(std::move(options)) {
  const auto& url = options_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || (url.compare(0, scheme_end, "http") != 0 && url.compare(0, scheme_end, "https") != 0)) {
    throw ConfigError("backend endpoint must be an http(s) URL: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (options_.model.empty()) throw ConfigError("backend model name is empty");
  if (!options_.key_env.empty()) {
    const char* key = std::getenv(options_.key_env.c_str());
    if (key == nullptr) throw ConfigError("environment variable " + options_.key_env + " is not set");
    key_ = key;
  }
}

nlohmann::json HttpBackend::request_body(const std::vector<Message>& messages) const {
  nlohmann::json body{{"model", options_.model}, {"temperature", options_.temperature}};
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return body;
}

std::string HttpBackend::parse_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("unexpected completion payload: ") + e.what());
  }
}

std::string HttpBackend::complete(const std::vector<Message>& messages) {
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(options_.timeout_seconds);
  client.set_read_timeout(options_.timeout_seconds);
  httplib::Headers headers;
  if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
  const std::string body = request_body(messages).dump();
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return parse_response(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status < 500 && res->status != 429) break;
  }
  throw BackendError("backend " + scheme_host_ + path_ + " failed: " + last_error);
}

}  // namespace hcraft::agents
