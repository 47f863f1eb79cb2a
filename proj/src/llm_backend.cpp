#include "article/llm_backend.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "article/io.hpp"
#include "article/lexicon.hpp"
#include "article/rng.hpp"

namespace article {

using nlohmann::json;

namespace {

std::size_t count_placeholder(const std::string& fmt, const std::string& ph) {
  std::size_t n = 0;
  for (std::size_t pos = fmt.find(ph); pos != std::string::npos; pos = fmt.find(ph, pos + 1))
    ++n;
  return n;
}

std::string substitute(std::string fmt, const std::string& ph, const std::string& value) {
  auto pos = fmt.find(ph);
  if (pos != std::string::npos) fmt.replace(pos, ph.size(), value);
  return fmt;
}

// lowercase, drop punctuation, collapse whitespace, trim
std::string normalize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
    } else if (std::ispunct(c)) {
      // dropped
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    }
  }
  return out;
}

}  // namespace

PromptTemplate PromptTemplate::defaults() {
  PromptTemplate t;
  t.system_instruction =
      "You judge whether a comment is offensive. "
      "Answer with exactly one word: offensive or non-offensive.";
  t.example_format = "Comment: {comment}\nLabel: {label}\n";
  t.query_format = "Comment: {comment}\nLabel:";
  t.label_lexicon = {{Label::offensive, "offensive"},
                     {Label::non_offensive, "non-offensive"}};
  return t;
}

void PromptTemplate::validate() const {
  if (count_placeholder(example_format, "{comment}") != 1 ||
      count_placeholder(example_format, "{label}") != 1)
    throw std::invalid_argument(
        "example_format must contain {comment} and {label} exactly once");
  if (count_placeholder(query_format, "{comment}") != 1)
    throw std::invalid_argument("query_format must contain {comment} exactly once");
  auto off = label_lexicon.find(Label::offensive);
  auto non = label_lexicon.find(Label::non_offensive);
  if (off == label_lexicon.end() || non == label_lexicon.end() || off->second.empty() ||
      non->second.empty() || off->second == non->second)
    throw std::invalid_argument("label_lexicon needs two distinct non-empty tokens");
}

void BackendConfig::validate() const {
  if (max_concurrency < 1) throw std::invalid_argument("max_concurrency must be >= 1");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (kind == BackendKind::remote && endpoint_url.empty())
    throw std::invalid_argument("remote backend needs endpoint_url");
}

std::string render_prompt(const std::vector<IclExample>& icl_examples,
                          const std::string& target, const PromptTemplate& tmpl) {
  tmpl.validate();
  if (icl_examples.empty())
    throw std::invalid_argument("render_prompt: need at least one ICL example");
  std::string out = tmpl.system_instruction;
  if (!out.empty()) out += "\n\n";
  for (const auto& [comment, label] : icl_examples) {
    auto it = tmpl.label_lexicon.find(label);
    if (it == tmpl.label_lexicon.end())
      throw std::invalid_argument("label missing from lexicon");
    out += substitute(substitute(tmpl.example_format, "{comment}", comment), "{label}",
                      it->second);
  }
  out += substitute(tmpl.query_format, "{comment}", target);
  return out;
}

ParsedPrediction parse_label(const std::string& raw, const PromptTemplate& tmpl) {
  std::string text = normalize(raw);
  std::size_t best_pos = std::string::npos;
  std::optional<Label> best;
  bool tie = false;
  for (const auto& [label, token] : tmpl.label_lexicon) {
    std::size_t pos = text.find(normalize(token));
    if (pos == std::string::npos) continue;
    if (pos < best_pos) {
      best_pos = pos;
      best = label;
      tie = false;
    } else if (pos == best_pos) {
      tie = true;
    }
  }
  if (tie) best.reset();
  return {best, raw};
}

std::string cache_key(const CompletionRequest& request) {
  std::string material = request.model_id + "\x1f" + io::fmt_full(request.temperature) +
                         "\x1f" + std::to_string(request.max_tokens) + "\x1f" +
                         request.prompt_text;
  // two independent FNV-1a streams -> 128-bit key
  auto fnv = [&](std::uint64_t h) {
    for (unsigned char c : material) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  };
  std::uint64_t a = fnv(0xcbf29ce484222325ULL);
  std::uint64_t b = fnv(0x84222325cbf29ce4ULL);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(a),
                static_cast<unsigned long long>(b));
  return buf;
}

double fit_threshold(const std::vector<std::pair<double, Label>>& examples) {
  if (examples.empty()) throw std::invalid_argument("fit_threshold: no examples");
  std::vector<double> candidates;
  candidates.push_back(-std::numeric_limits<double>::infinity());
  for (const auto& [score, label] : examples) candidates.push_back(score);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best_theta = candidates.front();
  std::size_t best_err = std::numeric_limits<std::size_t>::max();
  for (double theta : candidates) {
    std::size_t err = 0;
    for (const auto& [score, label] : examples) {
      Label pred = score >= theta ? Label::offensive : Label::non_offensive;
      if (pred != label) ++err;
    }
    if (err < best_err) {
      best_err = err;
      best_theta = theta;
    }
  }
  return best_theta;
}

namespace {

double mock_score(const std::string& text, int variant) {
  double s = keyword_toxicity_score(text);
  if (variant != 0) {
    Rng rng(derive_seed(static_cast<std::uint64_t>(variant), "mock_jitter:" + text));
    s += (rng.next_double() - 0.5) * 0.1;
  }
  return s;
}

}  // namespace

Label mock_oracle_predict(const std::vector<IclExample>& icl_examples,
                          const std::string& target, int variant) {
  if (icl_examples.empty())
    throw std::invalid_argument("mock_oracle_predict: no examples");
  std::vector<std::pair<double, Label>> scored;
  scored.reserve(icl_examples.size());
  for (const auto& [text, label] : icl_examples)
    scored.emplace_back(mock_score(text, variant), label);
  double theta = fit_threshold(scored);
  return mock_score(target, variant) >= theta ? Label::offensive : Label::non_offensive;
}

namespace {

// Recovers the ICL examples and query target from a rendered prompt by
// pattern-matching the template. Requires comments without embedded newlines
// (true for the synthetic generator).
struct PromptParts {
  std::vector<IclExample> examples;
  std::string target;
};

PromptParts invert_prompt(const std::string& prompt, const PromptTemplate& tmpl) {
  auto split2 = [](const std::string& fmt, const std::string& ph) {
    auto pos = fmt.find(ph);
    return std::pair<std::string, std::string>(fmt.substr(0, pos),
                                               fmt.substr(pos + ph.size()));
  };
  auto [e_head, e_rest] = split2(tmpl.example_format, "{comment}");
  auto [e_mid, e_tail] = split2(e_rest, "{label}");
  auto [q_head, q_tail] = split2(tmpl.query_format, "{comment}");
  if (e_head.empty() || e_mid.empty())
    throw std::invalid_argument("mock backend needs delimiting example_format literals");

  PromptParts parts;
  std::size_t pos = prompt.find(e_head);
  if (pos == std::string::npos)
    throw std::invalid_argument("mock backend: prompt does not match template");

  while (pos != std::string::npos && pos < prompt.size()) {
    std::size_t c_begin = pos + e_head.size();
    std::size_t mid = prompt.find(e_mid, c_begin);
    if (mid == std::string::npos) break;
    std::size_t l_begin = mid + e_mid.size();
    std::size_t tail = e_tail.empty() ? prompt.size() : prompt.find(e_tail, l_begin);
    if (tail == std::string::npos) break;
    std::string label_text = prompt.substr(l_begin, tail - l_begin);

    std::optional<Label> label;
    for (const auto& [l, token] : tmpl.label_lexicon)
      if (label_text == token) label = l;
    if (!label) break;  // not an example block; must be the query

    parts.examples.emplace_back(prompt.substr(c_begin, mid - c_begin), *label);
    pos = tail + e_tail.size();
    if (prompt.compare(pos, e_head.size(), e_head) != 0) break;
  }

  // remainder must be the query block
  std::size_t q = prompt.find(q_head, pos == std::string::npos ? 0 : pos);
  if (q == std::string::npos)
    throw std::invalid_argument("mock backend: query block not found");
  std::size_t t_begin = q + q_head.size();
  std::size_t t_end = q_tail.empty() ? prompt.size() : prompt.rfind(q_tail);
  if (t_end == std::string::npos || t_end < t_begin)
    throw std::invalid_argument("mock backend: malformed query block");
  parts.target = prompt.substr(t_begin, t_end - t_begin);
  if (parts.examples.empty())
    throw std::invalid_argument("mock backend: no ICL examples in prompt");
  return parts;
}

class MockOracleBackend final : public Backend {
 public:
  MockOracleBackend(BackendConfig config, PromptTemplate tmpl)
      : config_(std::move(config)), tmpl_(std::move(tmpl)) {}

  std::string complete(const CompletionRequest& request) override {
    PromptParts parts = invert_prompt(request.prompt_text, tmpl_);
    Label pred = mock_oracle_predict(parts.examples, parts.target, config_.mock_variant);
    return tmpl_.label_lexicon.at(pred);
  }

 private:
  BackendConfig config_;
  PromptTemplate tmpl_;
};

class TokenBucket {
 public:
  explicit TokenBucket(int requests_per_minute) : rpm_(requests_per_minute) {}

  void acquire() {
    if (rpm_ <= 0) return;
    std::unique_lock lock(mu_);
    auto interval = std::chrono::microseconds(60'000'000 / rpm_);
    auto now = std::chrono::steady_clock::now();
    if (next_slot_ < now) next_slot_ = now;
    auto wait_until = next_slot_;
    next_slot_ += interval;
    lock.unlock();
    std::this_thread::sleep_until(wait_until);
  }

 private:
  int rpm_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_slot_{};
};

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  int count_;
  std::mutex mu_;
  std::condition_variable cv_;
};

class RemoteBackend final : public Backend {
 public:
  RemoteBackend(BackendConfig config)
      : config_(std::move(config)),
        bucket_(config_.requests_per_minute),
        slots_(config_.max_concurrency) {
    const char* secret = std::getenv(config_.auth_env.c_str());
    if (secret == nullptr || *secret == '\0')
      throw std::runtime_error("auth error: environment variable " + config_.auth_env +
                               " is not set");
    secret_ = secret;
    auto scheme_end = config_.endpoint_url.find("://");
    if (scheme_end == std::string::npos)
      throw std::invalid_argument("endpoint_url must include a scheme");
    auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_ = config_.endpoint_url;
      path_ = "/";
    } else {
      base_ = config_.endpoint_url.substr(0, path_start);
      path_ = config_.endpoint_url.substr(path_start);
    }
  }

  std::string complete(const CompletionRequest& request) override {
    std::filesystem::path cache_file;
    if (!config_.cache_dir.empty()) {
      cache_file = config_.cache_dir / cache_key(request);
      {
        std::lock_guard lock(cache_mu_);
        if (std::filesystem::exists(cache_file)) return io::read_file(cache_file);
      }
    }

    slots_.acquire();
    std::string content;
    try {
      content = post_with_retries(request);
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();

    if (!cache_file.empty()) {
      std::lock_guard lock(cache_mu_);
      if (!std::filesystem::exists(cache_file)) {
        auto tmp = cache_file;
        tmp += ".tmp";
        io::write_file(tmp, content);
        std::filesystem::rename(tmp, cache_file);
      }
    }
    return content;
  }

 private:
  std::string post_with_retries(const CompletionRequest& request) {
    json body = {{"model", request.model_id},
                 {"messages", json::array({json{{"role", "user"},
                                                {"content", request.prompt_text}}})},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};
    std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        auto delay = std::chrono::milliseconds(config_.backoff_base_ms) * (1 << (attempt - 1));
        std::this_thread::sleep_for(delay);
      }
      bucket_.acquire();

      httplib::Client client(base_);
      client.set_connection_timeout(30);
      client.set_read_timeout(120);
      httplib::Headers headers = {{"Authorization", "Bearer " + secret_}};
      auto res = client.Post(path_, headers, payload, "application/json");

      if (!res) {
        last_error = "connection failure: " + httplib::to_string(res.error());
        continue;  // transient
      }
      if (res->status == 401 || res->status == 403)
        throw std::runtime_error("auth error: HTTP " + std::to_string(res->status));
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;  // transient
      }
      if (res->status != 200)
        throw std::runtime_error("backend error: HTTP " + std::to_string(res->status));

      try {
        json parsed = json::parse(res->body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("malformed response: ") + e.what());
      }
    }
    throw std::runtime_error("exhausted retries (" + std::to_string(config_.max_retries + 1) +
                             " attempts): " + last_error);
  }

  BackendConfig config_;
  std::string secret_;
  std::string base_;
  std::string path_;
  TokenBucket bucket_;
  Semaphore slots_;
  std::mutex cache_mu_;
};

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      const PromptTemplate& tmpl) {
  config.validate();
  tmpl.validate();
  if (config.kind == BackendKind::mock_oracle)
    return std::make_unique<MockOracleBackend>(config, tmpl);
  return std::make_unique<RemoteBackend>(config);
}

ParsedPrediction predict_label(Backend& backend, const BackendConfig& config,
                               const PromptTemplate& tmpl,
                               const std::vector<IclExample>& icl_examples,
                               const std::string& target) {
  CompletionRequest req;
  req.model_id = config.model_id;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  req.prompt_text = render_prompt(icl_examples, target, tmpl);

  ParsedPrediction pred = parse_label(backend.complete(req), tmpl);
  if (pred.label) return pred;

  // one clarifying retry before giving up on the response format
  PromptTemplate clarified = tmpl;
  clarified.system_instruction +=
      "\nRespond with exactly one of: " + tmpl.label_lexicon.at(Label::offensive) + " or " +
      tmpl.label_lexicon.at(Label::non_offensive) + ". No other words.";
  req.prompt_text = render_prompt(icl_examples, target, clarified);
  return parse_label(backend.complete(req), tmpl);
}

}  // namespace article
