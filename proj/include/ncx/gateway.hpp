#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncx/error.hpp"

namespace ncx {

enum class TemplateId {
  MathQuery,
  ConvexQuery,
  CodeQuery,
  ExecuteCodeQuery,
  FeasibilityCheckQuery,
  RepairQuery,
  ConsistencyQuery,
};

/// What a reply must look like before it is handed back to the caller.
enum class ReplyContract {
  /// A fenced block holding a modeling-language problem or canonical JSON.
  Dsl,
  /// A fenced or bare JSON object.
  Json,
  FreeText,
  /// "0" or "1" after trimming.
  Binary01,
};

std::string_view to_string(TemplateId id);
std::optional<TemplateId> template_from_string(std::string_view s);

class MissingPlaceholder : public Error {
 public:
  MissingPlaceholder(TemplateId id, std::size_t count);
};

class GatewayError : public Error {
 public:
  using Error::Error;
};

class FixtureMiss : public GatewayError {
 public:
  FixtureMiss(TemplateId id, std::string hash);
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::string hash_;
};

class ContractViolation : public GatewayError {
 public:
  ContractViolation(ReplyContract contract, std::string_view reply);
};

inline constexpr std::string_view kInputPlaceholder = "$input$";

struct PromptTemplate {
  TemplateId id;
  std::string system;
  std::string user;
  ReplyContract contract;

  /// Throws MissingPlaceholder unless `user` holds exactly one placeholder.
  static PromptTemplate make(TemplateId id, std::string system, std::string user,
                             ReplyContract contract);
};

/// Built-in prompt texts.
const PromptTemplate& builtin_template(TemplateId id);

/// Instruction appended to the rendered formulation prompt.
extern const std::string_view kOptimizationFlagInstruction;

struct RenderedPrompt {
  std::string text;
  std::vector<std::string> warnings;
};

/// Replaces the single placeholder; nothing else in the template changes.
RenderedPrompt render_prompt(const PromptTemplate& t, std::string_view input);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Key used for fixtures: hash of system text and rendered user text.
std::string prompt_hash(const PromptTemplate& t, std::string_view rendered_user);

/// Checks `reply` against `contract`. Binary01 replies come back as "0" or "1";
/// other replies are returned unchanged. Throws ContractViolation.
std::string enforce_contract(ReplyContract contract, const std::string& reply);

/// Body of the first ``` fenced block, if any.
std::optional<std::string> fenced_block(std::string_view reply);

enum class GatewayMode { Live, Replay, Record };

struct GatewayConfig {
  std::string endpoint;
  /// Name of the environment variable holding the key. The key itself is
  /// read at request time and never stored.
  std::string api_key_env = "NC2C_API_KEY";
  std::string model;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  GatewayMode mode = GatewayMode::Replay;
  std::string fixture_path;

  /// Throws Error when the mode's requirements are unmet.
  void validate() const;

  /// Reads {endpoint, api_key_env, model, timeout_ms, max_retries, mode,
  /// fixtures}; NC2C_API_URL and NC2C_MODEL override the file.
  static GatewayConfig load(const std::string& path);
};

struct TranscriptEntry {
  TemplateId template_id;
  std::string prompt_hash;
  std::string reply;
  std::chrono::microseconds latency{0};
};

using Transcript = std::vector<TranscriptEntry>;

/// Model-completion client. Implementations must allow concurrent calls.
class ModelGateway {
 public:
  virtual ~ModelGateway() = default;

  /// Renders `t` with `input`, obtains a reply, and enforces the template's
  /// reply contract.
  std::string complete(const PromptTemplate& t, std::string_view input);

  Transcript transcript() const;

 protected:
  /// Raw reply for an already rendered prompt.
  virtual std::string fetch(const PromptTemplate& t, const std::string& rendered_user,
                            const std::string& hash) = 0;

 private:
  mutable std::mutex mu_;
  Transcript transcript_;
};

/// Live HTTP, replay-from-fixture, or record-while-live gateway.
class ConfiguredGateway : public ModelGateway {
 public:
  explicit ConfiguredGateway(GatewayConfig cfg);

  const GatewayConfig& config() const noexcept { return cfg_; }
  std::size_t fixture_count() const;

 protected:
  std::string fetch(const PromptTemplate& t, const std::string& rendered_user,
                    const std::string& hash) override;

 private:
  std::string live_call(const PromptTemplate& t, const std::string& rendered_user);

  GatewayConfig cfg_;
  std::map<std::pair<std::string, std::string>, std::string> fixtures_;
  mutable std::mutex record_mu_;
};

/// One fixture line: {"template", "prompt_sha256", "reply"}.
std::string fixture_line(TemplateId id, const std::string& hash, const std::string& reply);

}  // namespace ncx
