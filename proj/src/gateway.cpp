#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ncx/gateway.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <toml.hpp>

namespace ncx {

using nlohmann::json;

namespace {

std::string_view contract_name(ReplyContract c) {
  switch (c) {
    case ReplyContract::Dsl: return "dsl";
    case ReplyContract::Json: return "json";
    case ReplyContract::FreeText: return "free-text";
    case ReplyContract::Binary01: return "binary01";
  }
  return "?";
}

std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 80;
  if (s.size() <= kMax) return std::string(s);
  return std::string(s.substr(0, kMax)) + "...";
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<GatewayMode> mode_from_string(std::string_view s) {
  if (s == "live") return GatewayMode::Live;
  if (s == "replay") return GatewayMode::Replay;
  if (s == "record") return GatewayMode::Record;
  return std::nullopt;
}

std::optional<std::string> env(const char* name) {
  if (const char* v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

}  // namespace

FixtureMiss::FixtureMiss(TemplateId id, std::string hash)
    : GatewayError("no fixture for " + std::string(to_string(id)) + " with prompt hash " + hash),
      hash_(std::move(hash)) {}

ContractViolation::ContractViolation(ReplyContract contract, std::string_view reply)
    : GatewayError("reply violates " + std::string(contract_name(contract)) +
                   " contract: " + excerpt(reply)) {}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string prompt_hash(const PromptTemplate& t, std::string_view rendered_user) {
  std::string buf = t.system;
  buf.push_back('\n');
  buf.append(rendered_user);
  return sha256_hex(buf);
}

std::optional<std::string> fenced_block(std::string_view reply) {
  auto open = reply.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body = reply.find('\n', open + 3);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  auto close = reply.find("```", body);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(reply.substr(body, close - body));
}

std::string enforce_contract(ReplyContract contract, const std::string& reply) {
  switch (contract) {
    case ReplyContract::FreeText:
      return reply;
    case ReplyContract::Dsl: {
      auto block = fenced_block(reply);
      if (!block || trim(*block).empty()) throw ContractViolation(contract, reply);
      return reply;
    }
    case ReplyContract::Json: {
      auto block = fenced_block(reply);
      auto body = block ? std::string(trim(*block)) : std::string(trim(reply));
      auto j = json::parse(body, nullptr, false);
      if (j.is_discarded() || !j.is_object()) throw ContractViolation(contract, reply);
      return reply;
    }
    case ReplyContract::Binary01: {
      auto t = trim(reply);
      if (t == "0" || t == "1") return std::string(t);
      throw ContractViolation(contract, reply);
    }
  }
  return reply;
}

void GatewayConfig::validate() const {
  if (mode != GatewayMode::Replay) {
    if (endpoint.empty()) throw Error("gateway endpoint is required outside replay mode");
    if (api_key_env.empty()) throw Error("gateway key variable name is required outside replay mode");
  }
  if (mode != GatewayMode::Live && fixture_path.empty())
    throw Error("gateway fixture path is required in replay and record modes");
  if (timeout.count() <= 0) throw Error("gateway timeout must be positive");
  if (max_retries < 0) throw Error("gateway retries must be non-negative");
}

GatewayConfig GatewayConfig::load(const std::string& path) {
  toml::table tbl;
  try {
    tbl = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw Error("cannot read gateway config " + path + ": " + std::string(e.description()));
  }
  GatewayConfig cfg;
  cfg.endpoint = tbl["endpoint"].value_or(std::string{});
  cfg.api_key_env = tbl["api_key_env"].value_or(cfg.api_key_env);
  cfg.model = tbl["model"].value_or(std::string{});
  cfg.timeout = std::chrono::milliseconds(tbl["timeout_ms"].value_or<std::int64_t>(cfg.timeout.count()));
  cfg.max_retries = static_cast<int>(tbl["max_retries"].value_or<std::int64_t>(cfg.max_retries));
  auto mode = tbl["mode"].value_or(std::string("replay"));
  auto m = mode_from_string(mode);
  if (!m) throw Error("unknown gateway mode '" + mode + "'");
  cfg.mode = *m;
  if (auto f = tbl["fixtures"].value<std::string>()) {
    std::filesystem::path p(*f);
    if (p.is_relative()) p = std::filesystem::path(path).parent_path() / p;
    cfg.fixture_path = p.string();
  }
  if (auto v = env("NC2C_API_URL")) cfg.endpoint = *v;
  if (auto v = env("NC2C_MODEL")) cfg.model = *v;
  cfg.validate();
  return cfg;
}

std::string fixture_line(TemplateId id, const std::string& hash, const std::string& reply) {
  json j = {{"template", to_string(id)}, {"prompt_sha256", hash}, {"reply", reply}};
  return j.dump();
}

std::string ModelGateway::complete(const PromptTemplate& t, std::string_view input) {
  auto rendered = render_prompt(t, input);
  auto hash = prompt_hash(t, rendered.text);
  auto start = std::chrono::steady_clock::now();
  auto reply = fetch(t, rendered.text, hash);
  auto latency = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - start);
  {
    std::lock_guard lock(mu_);
    transcript_.push_back({t.id, hash, reply, latency});
  }
  return enforce_contract(t.contract, reply);
}

Transcript ModelGateway::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

ConfiguredGateway::ConfiguredGateway(GatewayConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.mode != GatewayMode::Replay) return;
  std::ifstream in(cfg_.fixture_path);
  if (!in) throw GatewayError("cannot open fixture file " + cfg_.fixture_path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("template") ||
        !j.contains("prompt_sha256") || !j.contains("reply") || !j["template"].is_string() ||
        !j["prompt_sha256"].is_string() || !j["reply"].is_string())
      throw GatewayError("malformed fixture at " + cfg_.fixture_path + ":" + std::to_string(lineno));
    fixtures_[{j["template"].get<std::string>(), j["prompt_sha256"].get<std::string>()}] =
        j["reply"].get<std::string>();
  }
}

std::size_t ConfiguredGateway::fixture_count() const { return fixtures_.size(); }

std::string ConfiguredGateway::fetch(const PromptTemplate& t, const std::string& rendered_user,
                                     const std::string& hash) {
  if (cfg_.mode == GatewayMode::Replay) {
    auto it = fixtures_.find({std::string(to_string(t.id)), hash});
    if (it == fixtures_.end()) throw FixtureMiss(t.id, hash);
    return it->second;
  }
  auto reply = live_call(t, rendered_user);
  if (cfg_.mode == GatewayMode::Record) {
    std::lock_guard lock(record_mu_);
    std::ofstream out(cfg_.fixture_path, std::ios::app);
    if (!out) throw GatewayError("cannot append to fixture file " + cfg_.fixture_path);
    out << fixture_line(t.id, hash, reply) << '\n';
  }
  return reply;
}

std::string ConfiguredGateway::live_call(const PromptTemplate& t, const std::string& rendered_user) {
  auto key = env(cfg_.api_key_env.c_str());
  if (!key) throw GatewayError("environment variable " + cfg_.api_key_env + " is not set");

  // Split "https://host[:port]/path" into the client origin and request path.
  auto scheme_end = cfg_.endpoint.find("://");
  auto path_start = cfg_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string origin = cfg_.endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);

  json messages = json::array();
  if (!t.system.empty()) messages.push_back({{"role", "system"}, {"content", t.system}});
  messages.push_back({{"role", "user"}, {"content", rendered_user}});
  json body = {{"model", cfg_.model}, {"messages", messages}};

  httplib::Client cli(origin);
  auto secs = cfg_.timeout.count() / 1000;
  auto usecs = (cfg_.timeout.count() % 1000) * 1000;
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers = {{"Authorization", "Bearer " + *key}};

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(250 << (attempt - 1)));
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw GatewayError("HTTP status " + std::to_string(res->status));
    auto j = json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw GatewayError("response is not JSON");
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw GatewayError("response has no choices[0].message.content");
    }
  }
  throw GatewayError("gateway request failed after " + std::to_string(cfg_.max_retries + 1) +
                     " attempts: " + last_error);
}

}  // namespace ncx
