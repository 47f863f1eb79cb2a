#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "article/dataset.hpp"

namespace article {

struct AnnotatorProfile {
  double theta = 0.5;     // offensiveness threshold in [0,1]
  double epsilon = 0.0;   // label-flip rate in [0, 0.5]
  std::string group;
  std::size_t n_annotations = 60;
};

struct SimConfig {
  std::size_t n_comments = 0;
  std::size_t block_size = 20;
  std::size_t annotators_per_block = 5;
  std::vector<AnnotatorProfile> profiles;
  std::uint64_t seed = 0;

  void validate() const;
};

// Comment text is a fixed-length token mix from the benign/toxic lexicons in
// proportion to a uniform draw t; latent_toxicity stores the realized toxic
// fraction, so the keyword scorer recovers it exactly.
std::vector<Comment> gen_comments(std::size_t n, std::uint64_t seed);

struct SimResult {
  Dataset dataset;
  std::map<std::string, AnnotatorProfile> ground_truth;  // annotator_id -> profile
};

// Annotators label offensive iff latent_toxicity >= theta, then each label
// flips independently with probability epsilon. Comments are grouped into
// blocks of block_size, each annotated by the same annotators_per_block
// annotators.
SimResult gen_dataset(const SimConfig& cfg);

void save_ground_truth(const std::map<std::string, AnnotatorProfile>& gt,
                       const std::filesystem::path& path);

}  // namespace article
