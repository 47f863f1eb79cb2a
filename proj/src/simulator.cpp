#include "article/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "article/io.hpp"
#include "article/lexicon.hpp"
#include "article/rng.hpp"

namespace article {

namespace {

constexpr std::size_t kTokensPerComment = 16;

std::string pad_id(const char* prefix, std::size_t i, int width = 5) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  if (annotators_per_block < 2)
    throw std::invalid_argument("annotators_per_block must be >= 2");
  if (block_size == 0 || n_comments == 0 || n_comments % block_size != 0)
    throw std::invalid_argument("n_comments must be a positive multiple of block_size");
  if (profiles.size() < annotators_per_block)
    throw std::invalid_argument("need at least annotators_per_block profiles");
  std::size_t total_slots = 0;
  for (const auto& p : profiles) {
    if (p.theta < 0.0 || p.theta > 1.0)
      throw std::invalid_argument("theta must be in [0,1]");
    if (p.epsilon < 0.0 || p.epsilon > 0.5)
      throw std::invalid_argument("epsilon must be in [0, 0.5]");
    if (p.group.empty()) throw std::invalid_argument("profile with empty group");
    if (p.n_annotations == 0 || p.n_annotations % block_size != 0)
      throw std::invalid_argument("n_annotations must be a positive multiple of block_size");
    total_slots += p.n_annotations / block_size;
  }
  std::size_t n_blocks = n_comments / block_size;
  if (total_slots != n_blocks * annotators_per_block)
    throw std::invalid_argument(
        "profile annotation counts do not fill the block grid: " +
        std::to_string(total_slots) + " annotator-blocks vs " +
        std::to_string(n_blocks * annotators_per_block) + " slots");
}

std::vector<Comment> gen_comments(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_comments: n must be >= 1");
  const auto& toxic = toxic_lexicon();
  const auto& benign = benign_lexicon();

  std::vector<Comment> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "comment:" + std::to_string(i)));
    double t = rng.next_double();
    auto n_toxic = static_cast<std::size_t>(std::lround(t * kTokensPerComment));

    std::vector<std::string> tokens;
    tokens.reserve(kTokensPerComment);
    for (std::size_t j = 0; j < kTokensPerComment; ++j) {
      const auto& lex = j < n_toxic ? toxic : benign;
      tokens.push_back(lex[rng.next_index(lex.size())]);
    }
    rng.shuffle(tokens);

    Comment c;
    c.id = pad_id("c", i);
    c.source = "synthetic";
    c.latent_toxicity = static_cast<double>(n_toxic) / kTokensPerComment;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (j) c.text += ' ';
      c.text += tokens[j];
    }
    out.push_back(std::move(c));
  }
  return out;
}

SimResult gen_dataset(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n_blocks = cfg.n_comments / cfg.block_size;

  auto comments = gen_comments(cfg.n_comments, cfg.seed);

  std::vector<Annotator> annotators;
  std::map<std::string, AnnotatorProfile> ground_truth;
  for (std::size_t i = 0; i < cfg.profiles.size(); ++i) {
    std::string id = pad_id("a", i, 4);
    annotators.push_back({id, cfg.profiles[i].group});
    ground_truth.emplace(id, cfg.profiles[i]);
  }

  // assign annotators to blocks: every block takes the annotators_per_block
  // annotators with the most unfilled capacity (ties by index)
  std::vector<std::size_t> remaining(cfg.profiles.size());
  for (std::size_t i = 0; i < cfg.profiles.size(); ++i)
    remaining[i] = cfg.profiles[i].n_annotations / cfg.block_size;

  std::vector<std::vector<std::size_t>> block_annotators(n_blocks);
  std::vector<std::size_t> order(cfg.profiles.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return remaining[x] > remaining[y];
    });
    for (std::size_t j = 0; j < cfg.annotators_per_block; ++j) {
      std::size_t a = order[j];
      if (remaining[a] == 0)
        throw std::invalid_argument("block assignment infeasible for the given profiles");
      --remaining[a];
      block_annotators[b].push_back(a);
    }
  }
  for (std::size_t r : remaining)
    if (r != 0) throw std::invalid_argument("block assignment infeasible: capacity left over");

  // collect each annotator's comments, then label them with a per-annotator
  // noise stream so output is independent of assignment iteration order
  std::vector<std::vector<std::size_t>> comments_of(cfg.profiles.size());
  for (std::size_t b = 0; b < n_blocks; ++b)
    for (std::size_t a : block_annotators[b])
      for (std::size_t ci = b * cfg.block_size; ci < (b + 1) * cfg.block_size; ++ci)
        comments_of[a].push_back(ci);

  std::vector<Annotation> annotations;
  for (std::size_t a = 0; a < cfg.profiles.size(); ++a) {
    const auto& profile = cfg.profiles[a];
    Rng noise(derive_seed(cfg.seed, "labels:" + annotators[a].id));
    for (std::size_t ci : comments_of[a]) {
      bool offensive = *comments[ci].latent_toxicity >= profile.theta;
      if (noise.next_double() < profile.epsilon) offensive = !offensive;
      Annotation ann;
      ann.annotator_id = annotators[a].id;
      ann.comment_id = comments[ci].id;
      ann.binary_label = offensive ? Label::offensive : Label::non_offensive;
      ann.raw_rating = offensive ? 4 : 2;
      annotations.push_back(std::move(ann));
    }
  }

  SimResult result{Dataset::build(std::move(comments), std::move(annotators),
                                  std::move(annotations)),
                   std::move(ground_truth)};
  return result;
}

void save_ground_truth(const std::map<std::string, AnnotatorProfile>& gt,
                       const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, p] : gt)
    rows.push_back({id, io::fmt_full(p.theta), io::fmt_full(p.epsilon), p.group});
  io::write_csv(path, {"annotator_id", "theta", "epsilon", "group"}, rows);
}

}  // namespace article
