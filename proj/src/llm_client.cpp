#include "potlab/synthesis/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "potlab/dsl/parse.hpp"
#include "potlab/dsl/print.hpp"

namespace potlab::synthesis {
namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

const char* const kSystemPrompt =
    R"(You write reward-potential programs for robot manipulation demonstrations.

A program is a list of parameter declarations followed by ordered stages:

  param <name> = <default> in [<lo>, <hi>]
  stage <name> when <guard>:
    progress = <expr>

Rules:
- The first stage's guard must be the literal `true`; later guards are boolean
  expressions. The active stage is the highest-index satisfied guard.
- progress is a scalar expression, clamped to [0, 1]; the frame potential is
  (stage_index + progress) / stage_count.
- Scalar features over named clusters: dist(a, b), disp(a), x(a), y(a), z(a),
  dx(a), dy(a), dz(a), spread(a). disp and the d* deltas compare against the
  first frame of the episode.
- Builtins: min(a, b), max(a, b), abs(x), clamp(x, lo, hi), exp(x), tanh(x),
  sigmoid(x, k). Arithmetic + - * /, comparisons < <= > >=, boolean and/or/not.
- Declare every tunable constant as a param with sensible bounds.
- Use only the cluster names listed in the task summary.

Reply with exactly one program inside a fenced code block.
)";

}  // namespace

LlmConfig LlmConfig::from_env() {
  LlmConfig config;
  config.base_url = env_or("POTLAB_LLM_BASE_URL", "");
  config.model = env_or("POTLAB_LLM_MODEL", config.model);
  config.api_key = env_or("POTLAB_LLM_API_KEY", "");
  return config;
}

LlmClient::LlmClient(LlmConfig config) : config_(std::move(config)) {}

std::string LlmClient::complete(const std::string& system_prompt,
                                const std::string& user_prompt) const {
  if (config_.base_url.empty())
    throw ProposerBackendError("llm backend not configured: set POTLAB_LLM_BASE_URL");

  nlohmann::json body = {
      {"model", config_.model},
      {"messages",
       {{{"role", "system"}, {"content", system_prompt}},
        {{"role", "user"}, {"content", user_prompt}}}},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_tokens},
  };
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100) * attempt);
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "status " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProposerBackendError(std::string("llm: malformed response: ") + e.what());
    }
  }
  throw ProposerBackendError("llm: request failed after " +
                             std::to_string(config_.retries + 1) + " attempts (" + last_error +
                             ")");
}

const std::string& llm_system_prompt() {
  static const std::string prompt = kSystemPrompt;
  return prompt;
}

std::string llm_user_prompt(const ProposalRequest& request, const std::string& feedback,
                            int proposal_index) {
  const TaskStats stats = infer_task_stats(request.train);
  std::string prompt;
  if (!request.task_description.empty()) prompt += "Task: " + request.task_description + "\n\n";
  prompt += "Task summary (training demonstrations):\n";
  prompt += "- demonstrations: " + std::to_string(request.train.size()) + "\n";
  prompt += "- clusters:";
  for (const auto& roi : stats.rois) prompt += " " + roi;
  prompt += "\n- role guesses: effector=" + stats.effector + " object=" + stats.object +
            " goal=" + stats.goal + "\n";
  prompt += "- max initial effector-object distance: " + format_double(stats.reach_span) + "\n";
  prompt += "- effector spread range: [" + format_double(stats.spread_close) + ", " +
            format_double(stats.spread_open) + "]\n";
  prompt += "- max object height: " + format_double(stats.z_high) + "\n";
  prompt += "- max object-goal distance: " + format_double(stats.place_span) + "\n";

  if (!feedback.empty()) prompt += feedback;

  prompt += "\nPropose program " + std::to_string(proposal_index + 1) + " of " +
            std::to_string(request.count) + " for refinement round " +
            std::to_string(request.iteration + 1) +
            ". Aim for staged structure whose potential increases along the "
            "demonstrations, and do not repeat an earlier program verbatim.\n";
  return prompt;
}

std::string llm_feedback_block(const std::vector<ReflectionEntry>& top) {
  std::string block = "\nFeedback — best programs so far, best first:\n";
  for (const auto& entry : top) {
    const Candidate& c = entry.candidate;
    block += "### score = " + format_double(c.j_full) +
             " (train stage/progress/shaping-positivity = " + format_double(c.train_stage) + "/" +
             format_double(c.train_prog) + "/" + format_double(c.train_pbrs) + ")\n";
    if (c.train_prog < 0.0)
      block += "WARNING: non-monotone potential — it decreases along the demonstrations.\n";
    block += "```\n" + c.source + "```\n";
    for (std::size_t i = 0; i < entry.traces.size(); ++i)
      block += "potential trace, demo " + std::to_string(i) + ": " + entry.traces[i] + "\n";
  }
  return block;
}

std::string extract_program_block(const std::string& reply) {
  const auto fence = reply.find("```");
  if (fence == std::string::npos) return reply;
  auto start = reply.find('\n', fence);
  if (start == std::string::npos) return reply;
  ++start;
  const auto end = reply.find("```", start);
  if (end == std::string::npos) return reply.substr(start);
  return reply.substr(start, end - start);
}

std::vector<Proposal> LlmProposer::propose(const ProposalRequest& request) {
  std::vector<Proposal> out;
  out.reserve(static_cast<std::size_t>(request.count));
  int fallbacks = 0;
  for (int i = 0; i < request.count; ++i) {
    bool accepted = false;
    for (int attempt = 0; attempt < 3 && !accepted; ++attempt) {
      const std::string reply =
          client_.complete(llm_system_prompt(), llm_user_prompt(request, feedback_, i));
      std::string source = extract_program_block(reply);
      try {
        source = dsl::print(dsl::parse(source));
      } catch (const Error&) {
        continue;  // ungrammatical reply; ask again
      }
      out.push_back({std::move(source), "llm"});
      accepted = true;
    }
    if (!accepted) ++fallbacks;
  }
  if (fallbacks > 0) {
    // Slots the backend never filled grammatically fall back to templates.
    TemplateProposer templates;
    ProposalRequest fill = request;
    std::set<std::string> seen;
    for (const auto& p : out) seen.insert(p.source);
    for (auto& p : templates.propose(fill)) {
      if (fallbacks == 0) break;
      if (!seen.insert(p.source).second) continue;
      out.push_back({std::move(p.source), "llm-fallback:" + p.origin});
      --fallbacks;
    }
  }
  return out;
}

void LlmProposer::reflect(const std::vector<ReflectionEntry>& top) {
  feedback_ += llm_feedback_block(top);
}

}  // namespace potlab::synthesis
