#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "article/labels.hpp"

namespace article {

struct PromptTemplate {
  std::string system_instruction;
  std::string example_format;  // placeholders {comment}, {label}
  std::string query_format;    // placeholder {comment}
  std::map<Label, std::string> label_lexicon;

  static PromptTemplate defaults();
  void validate() const;
};

struct CompletionRequest {
  std::string prompt_text;
  std::string model_id;
  double temperature = 0.0;
  int max_tokens = 8;
};

enum class BackendKind { remote, mock_oracle };

struct BackendConfig {
  BackendKind kind = BackendKind::mock_oracle;
  std::string endpoint_url;       // remote only
  std::string auth_env = "ARTICLE_API_KEY";  // env var NAME holding the secret
  int max_concurrency = 4;
  int max_retries = 3;
  int requests_per_minute = 0;    // 0 = unlimited
  std::filesystem::path cache_dir;
  std::string model_id = "mock-oracle";
  double temperature = 0.0;
  int max_tokens = 8;
  int mock_variant = 0;           // perturbs the mock scorer; used for stability runs
  int backoff_base_ms = 250;      // first retry delay

  void validate() const;
};

struct ParsedPrediction {
  std::optional<Label> label;  // nullopt = unparseable
  std::string raw_text;
};

using IclExample = std::pair<std::string, Label>;  // (comment text, label)

std::string render_prompt(const std::vector<IclExample>& icl_examples,
                          const std::string& target, const PromptTemplate& tmpl);

ParsedPrediction parse_label(const std::string& raw, const PromptTemplate& tmpl);

// content-addressed cache key; stable across platforms and runs
std::string cache_key(const CompletionRequest& request);

class Backend {
 public:
  virtual ~Backend() = default;
  // thread-safe up to the configured max_concurrency
  virtual std::string complete(const CompletionRequest& request) = 0;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      const PromptTemplate& tmpl);

// Renders, completes, parses; on an unparseable response retries once with a
// clarifying instruction appended. Returns the final prediction.
ParsedPrediction predict_label(Backend& backend, const BackendConfig& config,
                               const PromptTemplate& tmpl,
                               const std::vector<IclExample>& icl_examples,
                               const std::string& target);

// Threshold classifier used by the mock backend. Fits the cut point over the
// example scores that minimizes training misclassifications (predict offensive
// iff score >= theta); ties resolve to the smallest candidate, with -inf as
// the extra "everything offensive" candidate.
double fit_threshold(const std::vector<std::pair<double, Label>>& examples);

Label mock_oracle_predict(const std::vector<IclExample>& icl_examples,
                          const std::string& target, int variant = 0);

}  // namespace article
