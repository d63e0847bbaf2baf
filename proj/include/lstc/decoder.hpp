// SPDX-License-Identifier: Apache-2.0
//
// Reconstruction side: prompt templates, the decoder transport, the length
// window retry loop and deterministic mock decoders.

#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "lstc/text.hpp"

namespace lstc {

// What a decoder endpoint sees for one attempt. Mocks use the skeleton and
// target directly; the HTTP endpoint only forwards prompt and max_chars.
struct DecoderCall {
  std::string prompt;
  UnitString source;          // skeleton (reconstruct) or original text (summarize)
  std::size_t target_len = 0;
  std::size_t max_chars = 0;
};

class DecoderEndpoint {
 public:
  virtual ~DecoderEndpoint() = default;
  // Throws TransportError on transport failure.
  virtual std::string complete(const DecoderCall& call) = 0;
  virtual std::string name() const = 0;
};

struct HttpEndpointConfig {
  std::string url;                        // http(s)://host[:port]/path
  std::string api_key_header = "Authorization";
  std::string api_key;                    // sent verbatim when non-empty
  std::chrono::milliseconds timeout{60000};
};

// POST {"prompt": str, "max_chars": int} -> {"text": str}
std::unique_ptr<DecoderEndpoint> make_http_endpoint(const HttpEndpointConfig& config);

enum class MockKind { echo, pad_to_estimate, truncating, repeat_loop };

MockKind parse_mock_kind(std::string_view name);
std::unique_ptr<DecoderEndpoint> mock_decoder(MockKind kind);

inline constexpr char32_t kPadUnit = U'_';

class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string text) : text_(std::move(text)) {}

  static PromptTemplate load(const std::string& path);
  // Built-in ids: reconstruct_en, reconstruct_zh, summarize_en, summarize_zh.
  static PromptTemplate builtin(std::string_view id);

  // Substitutes every {SKELETON} and {TARGET_LEN}.
  std::string render(std::string_view skeleton_utf8, std::size_t target_len) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

std::string default_template_id(bool summarize, Lang lang);

struct ReconstructionRequest {
  std::string chunk_id;
  UnitString skeleton;
  std::size_t original_len_estimate = 1;
  Lang lang = Lang::english;
  std::string template_id;  // empty: default for lang
  std::string strategy;
};

struct ReconstructionResult {
  std::string chunk_id;
  UnitString text;
  std::size_t attempts = 0;
  bool accepted = false;
  std::vector<double> latency_ms;
};

// |produced| / estimate within [0.85, 1.15], both ends inclusive (exact integer test).
bool within_length_window(std::size_t produced, std::size_t estimate);

struct RetryPolicy {
  std::size_t max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};
};

class ReconstructionClient {
 public:
  ReconstructionClient(std::shared_ptr<DecoderEndpoint> endpoint, RetryPolicy policy = {},
                       std::ptrdiff_t max_in_flight = 4);

  // Register a template override; otherwise built-ins are used.
  void set_template(const std::string& id, PromptTemplate tmpl);
  const PromptTemplate& prompt_template(const std::string& id) const;

  std::string render_prompt(const ReconstructionRequest& req) const;
  ReconstructionResult reconstruct(const ReconstructionRequest& req);

  // Compress-to-length baseline: the decoder output is the compressed artifact.
  ReconstructionResult summarize_to_length(const Chunk& chunk, double r_keep);
  static std::size_t summary_target(const Chunk& chunk, double r_keep);

  const RetryPolicy& policy() const { return policy_; }
  std::string endpoint_name() const { return endpoint_->name(); }

 private:
  ReconstructionResult run(const std::string& chunk_id, const DecoderCall& call,
                           std::size_t estimate);

  std::shared_ptr<DecoderEndpoint> endpoint_;
  RetryPolicy policy_;
  std::counting_semaphore<1024> in_flight_;
  std::vector<std::pair<std::string, PromptTemplate>> templates_;
};

}  // namespace lstc
