#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "article/analysis.hpp"
#include "article/consistency.hpp"
#include "article/crowdtruth.hpp"
#include "article/dataset.hpp"
#include "article/groupmodel.hpp"
#include "article/llm_backend.hpp"
#include "article/simulator.hpp"

namespace article {

struct CtConfig {
  double tolerance = 1e-6;
  std::size_t max_iter = 100;
  double wqs_threshold = 0.6;
};

struct StabilityVariant {
  std::string name;
  int mock_variant = 0;
  std::optional<std::string> model_id;
};

struct StabilityConfig {
  std::vector<StabilityVariant> variants;
  bool include_crowdtruth = true;
};

struct RunConfig {
  std::filesystem::path dataset_path;
  DatasetFormat dataset_format = DatasetFormat::csv;
  std::filesystem::path output_dir;
  BackendConfig backend;
  PromptTemplate prompt = PromptTemplate::defaults();
  ConsistencyConfig consistency;
  GroupEvalConfig group_eval;
  std::vector<double> ks = {0.0, 0.35, 0.45, 0.5, 0.6};
  CtConfig ct;
  TiePolicy tie_policy = TiePolicy::drop;
  std::optional<SimConfig> simulate;
  StabilityConfig stability;
  double max_errored_fraction = 0.01;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;  // snapshot for the manifest; holds no secrets
};

// Runs one subcommand; writes artifacts plus manifest.json under output_dir.
// Throws on failure (the CLI maps exceptions to a nonzero exit and an error
// record). dry_run prints the probe count instead of calling any backend.
void run_subcommand(const std::string& name, const RunConfig& config, bool dry_run = false);

const std::vector<std::string>& subcommand_names();

}  // namespace article
