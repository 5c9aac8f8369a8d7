#pragma once

// Control-flow checker for two-loop event logs.
//
// Each event maps to one letter:
//   S run_start   R round_start  Y plan_retry  P slow_plan  F plan_failed
//   B inner_begin A attempt      C critique    E inner_end  L rl_training
//   V code_eval   U prompt_append D round_end  X backend_error  Z run_end
//
// A finished round is   R Y* P (B A+ C E)* (L|V) C U D
// and a run is          S <round>* [R Y* F | R Y* (P (B A+ C E)* B?)? X] Z
// On top of the shape: one inner loop per coded sub-action in plan order, learning only when the
// plan learns something, and a prompt append carrying exactly the round's critiques.

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "hcraft/agents/two_loop.hpp"

namespace hcraft::testgen {

inline char trace_letter(const std::string& kind) {
  static const std::map<std::string, char> letters = {
      {"run_start", 'S'},   {"round_start", 'R'}, {"plan_retry", 'Y'},    {"slow_plan", 'P'},
      {"plan_failed", 'F'}, {"inner_begin", 'B'}, {"attempt", 'A'},       {"critique", 'C'},
      {"inner_end", 'E'},   {"rl_training", 'L'}, {"code_eval", 'V'},     {"prompt_append", 'U'},
      {"round_end", 'D'},   {"backend_error", 'X'}, {"run_end", 'Z'}};
  const auto it = letters.find(kind);
  return it == letters.end() ? '?' : it->second;
}

inline std::string trace_word(const std::vector<agents::Event>& events) {
  std::string w;
  for (const auto& e : events) w += trace_letter(e.kind);
  return w;
}

/// Empty when the log is well formed, otherwise the first problem found.
inline std::optional<std::string> check_trace(const std::vector<agents::Event>& events) {
  const std::string word = trace_word(events);
  static const std::regex shape(
      "S(RY*P(BA+CE)*(L|V)CUD)*(RY*F|RY*(P(BA+CE)*B?)?X)?Z");
  if (!std::regex_match(word, shape)) return "trace " + word + " does not match the two-loop grammar";

  int expected_round = 0;
  std::size_t i = 1;
  while (i < events.size() && events[i].kind == "round_start") {
    const int round = events[i].round;
    if (round != ++expected_round) return "round " + std::to_string(round) + " out of order";
    std::size_t j = i;
    while (j < events.size() && events[j].kind != "round_end" && events[j].kind != "run_end") {
      if (events[j].round != round) return "event " + events[j].kind + " tagged with the wrong round";
      ++j;
    }
    if (j == events.size() || events[j].kind != "round_end") break;  // last, unfinished round

    std::vector<std::size_t> coded;
    bool learns = false;
    int critiques = 0;
    std::vector<std::size_t> inner;
    bool trained = false;
    for (std::size_t k = i; k <= j; ++k) {
      const auto& e = events[k];
      if (e.kind == "slow_plan") {
        const auto& actions = e.data.at("actions");
        for (std::size_t a = 0; a < actions.size(); ++a) {
          if (actions[a].at("mode") == "code") coded.push_back(a);
          else learns = true;
        }
      } else if (e.kind == "inner_begin") {
        inner.push_back(e.data.at("index").get<std::size_t>());
      } else if (e.kind == "critique") {
        ++critiques;
      } else if (e.kind == "rl_training") {
        trained = true;
      } else if (e.kind == "prompt_append") {
        if (e.data.at("count").get<int>() != critiques) return "prompt append does not carry the round's critiques";
        if (e.data.at("lines").size() != static_cast<std::size_t>(critiques)) return "prompt append line count differs";
      }
    }
    if (inner != coded) return "round " + std::to_string(round) + " does not run one inner loop per coded sub-action";
    if (trained && !learns) return "round " + std::to_string(round) + " trained without a learned sub-action";
    i = j + 1;
  }
  return std::nullopt;
}

}  // namespace hcraft::testgen
