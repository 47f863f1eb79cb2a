#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "article/labels.hpp"

namespace article {

struct Comment {
  std::string id;
  std::string text;
  std::string source;
  std::optional<double> latent_toxicity;  // synthetic data only
};

struct Annotator {
  std::string id;
  std::string group;
};

struct Annotation {
  std::string annotator_id;
  std::string comment_id;
  std::optional<int> raw_rating;  // 1..5 when present
  Label binary_label = Label::non_offensive;
};

enum class DatasetFormat { csv, jsonl };

// {1,2} -> non_offensive, {3,4,5} -> offensive
Label binarize_rating(int raw_rating);

// Immutable after construction; safe to share across threads.
class Dataset {
 public:
  static Dataset build(std::vector<Comment> comments,
                       std::vector<Annotator> annotators,
                       std::vector<Annotation> annotations);

  const std::vector<Comment>& comments() const { return comments_; }
  const std::vector<Annotator>& annotators() const { return annotators_; }
  const std::vector<Annotation>& annotations() const { return annotations_; }

  const Comment& comment(const std::string& id) const;
  const Annotator& annotator(const std::string& id) const;
  bool has_comment(const std::string& id) const { return comment_index_.count(id) > 0; }
  bool has_annotator(const std::string& id) const { return annotator_index_.count(id) > 0; }

  // sorted by comment_id
  std::vector<const Annotation*> annotations_of(const std::string& annotator_id) const;
  // sorted by annotator_id
  std::vector<const Annotation*> annotations_on(const std::string& comment_id) const;

 private:
  std::vector<Comment> comments_;
  std::vector<Annotator> annotators_;
  std::vector<Annotation> annotations_;
  std::unordered_map<std::string, std::size_t> comment_index_;
  std::unordered_map<std::string, std::size_t> annotator_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_annotator_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_comment_;
};

// path is a directory holding comments.{csv,jsonl}, annotators.{csv,jsonl},
// annotations.{csv,jsonl}
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  DatasetFormat format);

// Splits one annotator's annotations into n_train training examples and the
// rest for testing. The shuffle seed is derived from (seed, annotator_id),
// so the result is independent of the order annotators are processed in.
std::pair<std::vector<const Annotation*>, std::vector<const Annotation*>>
annotator_split(const std::vector<const Annotation*>& annotations,
                std::size_t n_train, std::uint64_t seed);

// Samples whole blocks (groups of block_size comments sharing an identical
// annotator set) until n_comments comments are selected.
Dataset sample_blocks(const Dataset& dataset, std::size_t n_comments,
                      std::size_t block_size, std::uint64_t seed);

}  // namespace article
