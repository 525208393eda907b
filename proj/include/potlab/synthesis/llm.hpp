#pragma once

#include <string>

#include "potlab/synthesis/proposers.hpp"

namespace potlab::synthesis {

// OpenAI-style chat-completions backend. base_url covers scheme, host and
// port (e.g. http://127.0.0.1:8931); an empty base_url means unconfigured.
struct LlmConfig {
  std::string base_url;
  std::string model = "default";
  std::string api_key;
  double temperature = 0.7;
  int max_tokens = 1024;
  int retries = 2;
  int timeout_seconds = 30;

  // POTLAB_LLM_BASE_URL / POTLAB_LLM_MODEL / POTLAB_LLM_API_KEY.
  static LlmConfig from_env();
};

class LlmClient {
public:
  explicit LlmClient(LlmConfig config);

  // One chat completion; throws ProposerBackendError on transport errors,
  // non-200 statuses, and malformed response payloads.
  std::string complete(const std::string& system_prompt, const std::string& user_prompt) const;

  const LlmConfig& config() const { return config_; }

private:
  LlmConfig config_;
};

// System prompt describing the program grammar and the reply format.
const std::string& llm_system_prompt();

// Builds the per-request user prompt: task description, training-split
// summary, the accumulated feedback blocks, and the proposal index.
std::string llm_user_prompt(const ProposalRequest& request, const std::string& feedback,
                            int proposal_index);

// Renders one feedback block for a reflection set: program sources, scores on
// both splits, potential traces, and a non-monotone flag when progress
// correlation is negative.
std::string llm_feedback_block(const std::vector<ReflectionEntry>& top);

// Pulls the first fenced code block out of a chat reply (whole reply when
// there is no fence).
std::string extract_program_block(const std::string& reply);

// Asks the backend for one program per proposal. Transport failures
// propagate. Ungrammatical replies are retried up to three times, then the
// slot falls back to a template-library candidate. Feedback accumulates in a
// prompt that grows by one block per reflection and survives checkpoints via
// state()/restore().
class LlmProposer : public Proposer {
public:
  explicit LlmProposer(LlmConfig config) : client_(std::move(config)) {}
  std::string name() const override { return "llm"; }
  std::vector<Proposal> propose(const ProposalRequest& request) override;
  void reflect(const std::vector<ReflectionEntry>& top) override;
  std::string state() const override { return feedback_; }
  void restore(const std::string& saved) override { feedback_ = saved; }

private:
  LlmClient client_;
  std::string feedback_;
};

}  // namespace potlab::synthesis
