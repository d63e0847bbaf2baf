// SPDX-License-Identifier: Apache-2.0

#include "lstc/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "builtin_templates.hpp"
#include "json.hpp"
#include "lstc/error.hpp"

namespace lstc {

namespace {

class EchoDecoder final : public DecoderEndpoint {
 public:
  std::string complete(const DecoderCall& call) override { return units_to_utf8(call.source); }
  std::string name() const override { return "mock:echo"; }
};

class PadToEstimateDecoder final : public DecoderEndpoint {
 public:
  std::string complete(const DecoderCall& call) override {
    UnitString out = call.source.substr(0, call.target_len);
    out.resize(call.target_len, kPadUnit);
    return units_to_utf8(out);
  }
  std::string name() const override { return "mock:pad_to_estimate"; }
};

class TruncatingDecoder final : public DecoderEndpoint {
 public:
  std::string complete(const DecoderCall& call) override {
    return units_to_utf8(call.source.substr(0, call.target_len / 2));
  }
  std::string name() const override { return "mock:truncating"; }
};

class RepeatLoopDecoder final : public DecoderEndpoint {
 public:
  std::string complete(const DecoderCall& call) override {
    UnitString seed = call.source.substr(0, 10);
    if (seed.empty()) seed = UnitString(1, kPadUnit);
    UnitString out;
    const std::size_t want = 3 * call.target_len;
    while (out.size() < want) out += seed;
    out.resize(want);
    return units_to_utf8(out);
  }
  std::string name() const override { return "mock:repeat_loop"; }
};

}  // namespace

MockKind parse_mock_kind(std::string_view name) {
  if (name == "echo") return MockKind::echo;
  if (name == "pad_to_estimate") return MockKind::pad_to_estimate;
  if (name == "truncating") return MockKind::truncating;
  if (name == "repeat_loop") return MockKind::repeat_loop;
  throw ConfigError("unknown mock decoder '" + std::string(name) + "'");
}

std::unique_ptr<DecoderEndpoint> mock_decoder(MockKind kind) {
  switch (kind) {
    case MockKind::echo: return std::make_unique<EchoDecoder>();
    case MockKind::pad_to_estimate: return std::make_unique<PadToEstimateDecoder>();
    case MockKind::truncating: return std::make_unique<TruncatingDecoder>();
    case MockKind::repeat_loop: return std::make_unique<RepeatLoopDecoder>();
  }
  throw ConfigError("unknown mock decoder");
}

PromptTemplate PromptTemplate::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open prompt template '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(buf.str());
}

PromptTemplate PromptTemplate::builtin(std::string_view id) {
  for (const auto& t : builtin_templates::kAll)
    if (t.id == id) return PromptTemplate(std::string(t.text));
  throw ConfigError("unknown prompt template '" + std::string(id) + "'");
}

std::string PromptTemplate::render(std::string_view skeleton_utf8, std::size_t target_len) const {
  static constexpr std::string_view kSkeleton = "{SKELETON}";
  static constexpr std::string_view kTarget = "{TARGET_LEN}";
  const std::string target = std::to_string(target_len);
  std::string out;
  out.reserve(text_.size() + skeleton_utf8.size());
  std::size_t i = 0;
  while (i < text_.size()) {
    const std::string_view rest = std::string_view(text_).substr(i);
    if (rest.starts_with(kSkeleton)) {
      out += skeleton_utf8;
      i += kSkeleton.size();
    } else if (rest.starts_with(kTarget)) {
      out += target;
      i += kTarget.size();
    } else {
      out += text_[i++];
    }
  }
  return out;
}

std::string default_template_id(bool summarize, Lang lang) {
  return std::string(summarize ? "summarize_" : "reconstruct_") +
         (lang == Lang::presegmented ? "zh" : "en");
}

bool within_length_window(std::size_t produced, std::size_t estimate) {
  // 0.85 <= produced / estimate <= 1.15, evaluated exactly in integers
  return produced * 100 >= estimate * 85 && produced * 100 <= estimate * 115;
}

ReconstructionClient::ReconstructionClient(std::shared_ptr<DecoderEndpoint> endpoint,
                                           RetryPolicy policy, std::ptrdiff_t max_in_flight)
    : endpoint_(std::move(endpoint)),
      policy_(policy),
      in_flight_(std::clamp<std::ptrdiff_t>(max_in_flight, 1, 1024)) {
  if (!endpoint_) throw ConfigError("reconstruction client needs an endpoint");
  for (const auto& t : builtin_templates::kAll)
    templates_.emplace_back(std::string(t.id), PromptTemplate(std::string(t.text)));
}

void ReconstructionClient::set_template(const std::string& id, PromptTemplate tmpl) {
  for (auto& [k, v] : templates_)
    if (k == id) {
      v = std::move(tmpl);
      return;
    }
  templates_.emplace_back(id, std::move(tmpl));
}

const PromptTemplate& ReconstructionClient::prompt_template(const std::string& id) const {
  for (const auto& [k, v] : templates_)
    if (k == id) return v;
  throw ConfigError("unknown prompt template '" + id + "'");
}

std::string ReconstructionClient::render_prompt(const ReconstructionRequest& req) const {
  const std::string id = req.template_id.empty() ? default_template_id(false, req.lang) : req.template_id;
  return prompt_template(id).render(units_to_utf8(req.skeleton), req.original_len_estimate);
}

namespace {

std::size_t max_chars_for(std::size_t estimate) { return (estimate * 115 + 99) / 100; }

double length_distance(std::size_t produced, std::size_t estimate) {
  return std::abs(static_cast<double>(produced) / static_cast<double>(estimate) - 1.0);
}

}  // namespace

ReconstructionResult ReconstructionClient::run(const std::string& chunk_id, const DecoderCall& call,
                                               std::size_t estimate) {
  ReconstructionResult best;
  best.chunk_id = chunk_id;
  bool have_response = false;
  double best_distance = 0.0;
  std::string last_error;
  auto backoff = policy_.initial_backoff;

  for (std::size_t attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    std::optional<std::string> reply;
    in_flight_.acquire();
    try {
      reply = endpoint_->complete(call);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    in_flight_.release();
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    best.latency_ms.push_back(ms);
    best.attempts = attempt + 1;

    if (!reply) {
      if (attempt < policy_.max_retries && backoff.count() > 0) {
        std::this_thread::sleep_for(backoff);
        backoff = std::min(policy_.max_backoff,
                           std::chrono::milliseconds(static_cast<long long>(
                               static_cast<double>(backoff.count()) * policy_.backoff_multiplier)));
      }
      continue;
    }

    UnitString text;
    try {
      text = utf8_to_units(*reply);
    } catch (const Error&) {
      text.clear();  // unusable output counts as a length violation
    }
    const double distance = text.empty() ? 1.0 : length_distance(text.size(), estimate);
    const bool ok = !text.empty() && within_length_window(text.size(), estimate);
    if (!have_response || distance < best_distance) {
      best.text = std::move(text);
      best_distance = distance;
      have_response = true;
    }
    if (ok) {
      best.accepted = true;
      return best;
    }
  }
  if (!have_response)
    throw TransportError("decoder failed for chunk '" + chunk_id + "' after " +
                         std::to_string(best.attempts) + " attempts: " + last_error);
  return best;
}

ReconstructionResult ReconstructionClient::reconstruct(const ReconstructionRequest& req) {
  if (req.original_len_estimate == 0) throw Error("original length estimate must be >= 1");
  DecoderCall call;
  call.prompt = render_prompt(req);
  call.source = req.skeleton;
  call.target_len = req.original_len_estimate;
  call.max_chars = max_chars_for(req.original_len_estimate);
  return run(req.chunk_id, call, req.original_len_estimate);
}

std::size_t ReconstructionClient::summary_target(const Chunk& chunk, double r_keep) {
  return std::max<std::size_t>(1, round_half_up_units(r_keep, chunk.length()));
}

ReconstructionResult ReconstructionClient::summarize_to_length(const Chunk& chunk, double r_keep) {
  const std::size_t target = summary_target(chunk, r_keep);
  DecoderCall call;
  call.prompt = prompt_template(default_template_id(true, chunk.lang)).render(chunk.text_utf8(), target);
  call.source = chunk.text;
  call.target_len = target;
  call.max_chars = max_chars_for(target);
  return run(chunk.id, call, target);
}

}  // namespace lstc
