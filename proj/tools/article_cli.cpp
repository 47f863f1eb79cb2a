#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "article/io.hpp"
#include "article/pipeline.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"annotator reliability pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  bool dry_run = false;
  std::optional<double> k_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> backend_override;
  std::optional<int> concurrency_override;
  std::optional<std::string> output_override;

  for (const auto& name : article::subcommand_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "JSON config file")->required();
    sub->add_flag("--dry-run", dry_run, "print probe counts without backend calls");
    sub->add_option("--k", k_override, "override consistency threshold k");
    sub->add_option("--seed", seed_override, "override consistency seed");
    sub->add_option("--backend", backend_override, "override backend kind (remote|mock_oracle)");
    sub->add_option("--max-concurrency", concurrency_override, "override backend concurrency");
    sub->add_option("--output-dir", output_override, "override output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    json raw = json::parse(article::io::read_file(config_path));
    if (k_override) raw["consistency"]["k"] = *k_override;
    if (seed_override) raw["consistency"]["seed"] = *seed_override;
    if (backend_override) raw["backend"]["kind"] = *backend_override;
    if (concurrency_override) raw["backend"]["max_concurrency"] = *concurrency_override;
    if (output_override) raw["output_dir"] = *output_override;

    article::RunConfig config = article::RunConfig::from_json(raw);
    article::run_subcommand(subcommand, config, dry_run);
  } catch (const std::exception& e) {
    json err = {{"subcommand", subcommand}, {"error", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump(2).c_str());
    return 1;
  }
  return 0;
}
