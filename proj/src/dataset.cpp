#include "article/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "article/io.hpp"
#include "article/rng.hpp"

namespace article {

using nlohmann::json;

Label binarize_rating(int raw_rating) {
  if (raw_rating < 1 || raw_rating > 5)
    throw std::out_of_range("raw_rating must be in 1..5, got " +
                            std::to_string(raw_rating));
  return raw_rating <= 2 ? Label::non_offensive : Label::offensive;
}

Dataset Dataset::build(std::vector<Comment> comments,
                       std::vector<Annotator> annotators,
                       std::vector<Annotation> annotations) {
  Dataset d;
  d.comments_ = std::move(comments);
  d.annotators_ = std::move(annotators);
  d.annotations_ = std::move(annotations);

  for (std::size_t i = 0; i < d.comments_.size(); ++i) {
    const auto& c = d.comments_[i];
    if (c.id.empty()) throw std::invalid_argument("comment with empty id");
    if (c.text.empty()) throw std::invalid_argument("comment " + c.id + " has empty text");
    if (!d.comment_index_.emplace(c.id, i).second)
      throw std::invalid_argument("duplicate comment id: " + c.id);
  }
  for (std::size_t i = 0; i < d.annotators_.size(); ++i) {
    const auto& a = d.annotators_[i];
    if (a.id.empty()) throw std::invalid_argument("annotator with empty id");
    if (a.group.empty()) throw std::invalid_argument("annotator " + a.id + " has empty group");
    if (!d.annotator_index_.emplace(a.id, i).second)
      throw std::invalid_argument("duplicate annotator id: " + a.id);
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < d.annotations_.size(); ++i) {
    const auto& a = d.annotations_[i];
    if (!d.comment_index_.count(a.comment_id))
      throw std::invalid_argument("annotation references unknown comment: " + a.comment_id);
    if (!d.annotator_index_.count(a.annotator_id))
      throw std::invalid_argument("annotation references unknown annotator: " + a.annotator_id);
    if (!seen.emplace(a.annotator_id, a.comment_id).second)
      throw std::invalid_argument("duplicate annotation: (" + a.annotator_id + ", " +
                                  a.comment_id + ")");
    if (a.raw_rating && binarize_rating(*a.raw_rating) != a.binary_label)
      throw std::invalid_argument("binary_label disagrees with raw_rating for (" +
                                  a.annotator_id + ", " + a.comment_id + ")");
    d.by_annotator_[a.annotator_id].push_back(i);
    d.by_comment_[a.comment_id].push_back(i);
  }

  for (const auto& a : d.annotators_) {
    if (!d.by_annotator_.count(a.id))
      throw std::invalid_argument("orphan annotator with no annotations: " + a.id);
  }

  auto sort_by = [&](std::vector<std::size_t>& ids, auto key) {
    std::sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) {
      return key(d.annotations_[x]) < key(d.annotations_[y]);
    });
  };
  for (auto& [id, ids] : d.by_annotator_)
    sort_by(ids, [](const Annotation& a) { return a.comment_id; });
  for (auto& [id, ids] : d.by_comment_)
    sort_by(ids, [](const Annotation& a) { return a.annotator_id; });

  return d;
}

const Comment& Dataset::comment(const std::string& id) const {
  auto it = comment_index_.find(id);
  if (it == comment_index_.end()) throw std::out_of_range("unknown comment: " + id);
  return comments_[it->second];
}

const Annotator& Dataset::annotator(const std::string& id) const {
  auto it = annotator_index_.find(id);
  if (it == annotator_index_.end()) throw std::out_of_range("unknown annotator: " + id);
  return annotators_[it->second];
}

std::vector<const Annotation*> Dataset::annotations_of(const std::string& annotator_id) const {
  std::vector<const Annotation*> out;
  auto it = by_annotator_.find(annotator_id);
  if (it == by_annotator_.end()) return out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(&annotations_[i]);
  return out;
}

std::vector<const Annotation*> Dataset::annotations_on(const std::string& comment_id) const {
  std::vector<const Annotation*> out;
  auto it = by_comment_.find(comment_id);
  if (it == by_comment_.end()) return out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(&annotations_[i]);
  return out;
}

namespace {

int parse_rating(const std::string& s) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed rating: '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument("malformed rating: '" + s + "'");
  if (v < 1 || v > 5) throw std::out_of_range("raw_rating must be in 1..5, got " + s);
  return v;
}

Annotation make_annotation(const std::string& annotator_id, const std::string& comment_id,
                           const std::optional<int>& raw,
                           const std::optional<std::string>& binary) {
  Annotation a;
  a.annotator_id = annotator_id;
  a.comment_id = comment_id;
  a.raw_rating = raw;
  if (binary) {
    a.binary_label = label_from_string(*binary);
  } else if (raw) {
    a.binary_label = binarize_rating(*raw);
  } else {
    throw std::invalid_argument("annotation (" + annotator_id + ", " + comment_id +
                                ") has neither raw_rating nor binary_label");
  }
  return a;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& objs) {
  std::ostringstream out;
  for (const auto& o : objs) out << o.dump() << '\n';
  io::write_file(path, out.str());
}

Dataset load_csv(const std::filesystem::path& dir) {
  auto check_header = [](const std::vector<std::vector<std::string>>& rows,
                         const std::vector<std::string>& want,
                         std::size_t required, const char* what) {
    if (rows.empty()) throw std::invalid_argument(std::string(what) + ": empty file");
    const auto& h = rows[0];
    if (h.size() < required || h.size() > want.size())
      throw std::invalid_argument(std::string(what) + ": bad header");
    for (std::size_t i = 0; i < h.size(); ++i)
      if (h[i] != want[i])
        throw std::invalid_argument(std::string(what) + ": expected column '" + want[i] +
                                    "', got '" + h[i] + "'");
  };

  auto crows = io::read_csv(dir / "comments.csv");
  check_header(crows, {"id", "text", "source", "latent_toxicity"}, 3, "comments.csv");
  std::vector<Comment> comments;
  for (std::size_t i = 1; i < crows.size(); ++i) {
    const auto& r = crows[i];
    Comment c{r[0], r[1], r[2], std::nullopt};
    if (r.size() > 3 && !r[3].empty()) c.latent_toxicity = std::stod(r[3]);
    comments.push_back(std::move(c));
  }

  auto arows = io::read_csv(dir / "annotators.csv");
  check_header(arows, {"id", "group"}, 2, "annotators.csv");
  std::vector<Annotator> annotators;
  for (std::size_t i = 1; i < arows.size(); ++i)
    annotators.push_back({arows[i][0], arows[i][1]});

  auto nrows = io::read_csv(dir / "annotations.csv");
  check_header(nrows, {"annotator_id", "comment_id", "raw_rating", "binary_label"}, 3,
               "annotations.csv");
  std::vector<Annotation> annotations;
  for (std::size_t i = 1; i < nrows.size(); ++i) {
    const auto& r = nrows[i];
    std::optional<int> raw;
    if (!r[2].empty()) raw = parse_rating(r[2]);
    std::optional<std::string> binary;
    if (r.size() > 3 && !r[3].empty()) binary = r[3];
    annotations.push_back(make_annotation(r[0], r[1], raw, binary));
  }

  return Dataset::build(std::move(comments), std::move(annotators), std::move(annotations));
}

Dataset load_jsonl(const std::filesystem::path& dir) {
  std::vector<Comment> comments;
  for (const auto& o : read_jsonl(dir / "comments.jsonl")) {
    Comment c{o.at("id").get<std::string>(), o.at("text").get<std::string>(),
              o.value("source", std::string{}), std::nullopt};
    if (o.contains("latent_toxicity") && !o["latent_toxicity"].is_null())
      c.latent_toxicity = o["latent_toxicity"].get<double>();
    comments.push_back(std::move(c));
  }
  std::vector<Annotator> annotators;
  for (const auto& o : read_jsonl(dir / "annotators.jsonl"))
    annotators.push_back({o.at("id").get<std::string>(), o.at("group").get<std::string>()});
  std::vector<Annotation> annotations;
  for (const auto& o : read_jsonl(dir / "annotations.jsonl")) {
    std::optional<int> raw;
    if (o.contains("raw_rating") && !o["raw_rating"].is_null()) {
      int v = o["raw_rating"].get<int>();
      if (v < 1 || v > 5)
        throw std::out_of_range("raw_rating must be in 1..5, got " + std::to_string(v));
      raw = v;
    }
    std::optional<std::string> binary;
    if (o.contains("binary_label") && !o["binary_label"].is_null())
      binary = o["binary_label"].get<std::string>();
    annotations.push_back(make_annotation(o.at("annotator_id").get<std::string>(),
                                          o.at("comment_id").get<std::string>(), raw, binary));
  }
  return Dataset::build(std::move(comments), std::move(annotators), std::move(annotations));
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  return format == DatasetFormat::csv ? load_csv(path) : load_jsonl(path);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  DatasetFormat format) {
  std::filesystem::create_directories(path);
  if (format == DatasetFormat::csv) {
    std::vector<std::vector<std::string>> crows;
    for (const auto& c : dataset.comments())
      crows.push_back({c.id, c.text, c.source,
                       c.latent_toxicity ? io::fmt_full(*c.latent_toxicity) : ""});
    io::write_csv(path / "comments.csv", {"id", "text", "source", "latent_toxicity"}, crows);

    std::vector<std::vector<std::string>> arows;
    for (const auto& a : dataset.annotators()) arows.push_back({a.id, a.group});
    io::write_csv(path / "annotators.csv", {"id", "group"}, arows);

    std::vector<std::vector<std::string>> nrows;
    for (const auto& a : dataset.annotations())
      nrows.push_back({a.annotator_id, a.comment_id,
                       a.raw_rating ? std::to_string(*a.raw_rating) : "",
                       label_to_string(a.binary_label)});
    io::write_csv(path / "annotations.csv",
                  {"annotator_id", "comment_id", "raw_rating", "binary_label"}, nrows);
  } else {
    std::vector<json> cs;
    for (const auto& c : dataset.comments()) {
      json o{{"id", c.id}, {"text", c.text}, {"source", c.source}};
      if (c.latent_toxicity) o["latent_toxicity"] = *c.latent_toxicity;
      cs.push_back(std::move(o));
    }
    write_jsonl(path / "comments.jsonl", cs);

    std::vector<json> as;
    for (const auto& a : dataset.annotators())
      as.push_back(json{{"id", a.id}, {"group", a.group}});
    write_jsonl(path / "annotators.jsonl", as);

    std::vector<json> ns;
    for (const auto& a : dataset.annotations()) {
      json o{{"annotator_id", a.annotator_id},
             {"comment_id", a.comment_id},
             {"binary_label", label_to_string(a.binary_label)}};
      if (a.raw_rating) o["raw_rating"] = *a.raw_rating;
      ns.push_back(std::move(o));
    }
    write_jsonl(path / "annotations.jsonl", ns);
  }
}

std::pair<std::vector<const Annotation*>, std::vector<const Annotation*>>
annotator_split(const std::vector<const Annotation*>& annotations,
                std::size_t n_train, std::uint64_t seed) {
  if (annotations.empty()) throw std::invalid_argument("annotator_split: no annotations");
  const std::string& annotator_id = annotations.front()->annotator_id;
  for (const auto* a : annotations)
    if (a->annotator_id != annotator_id)
      throw std::invalid_argument("annotator_split: mixed annotators");
  if (annotations.size() < n_train + 1)
    throw std::invalid_argument("annotator " + annotator_id + " has " +
                                std::to_string(annotations.size()) +
                                " annotations, needs at least " + std::to_string(n_train + 1));

  // canonical order first so the shuffle is independent of the caller's order
  std::vector<const Annotation*> pool = annotations;
  std::sort(pool.begin(), pool.end(), [](const Annotation* a, const Annotation* b) {
    return a->comment_id < b->comment_id;
  });
  Rng rng(derive_seed(seed, "split:" + annotator_id));
  rng.shuffle(pool);

  std::vector<const Annotation*> train(pool.begin(), pool.begin() + n_train);
  std::vector<const Annotation*> test(pool.begin() + n_train, pool.end());
  return {std::move(train), std::move(test)};
}

Dataset sample_blocks(const Dataset& dataset, std::size_t n_comments,
                      std::size_t block_size, std::uint64_t seed) {
  if (block_size == 0) throw std::invalid_argument("block_size must be positive");
  if (n_comments % block_size != 0)
    throw std::invalid_argument("n_comments must be a multiple of block_size");

  // bucket comments by their annotator set
  std::map<std::vector<std::string>, std::vector<std::string>> buckets;
  for (const auto& c : dataset.comments()) {
    std::vector<std::string> sig;
    for (const auto* a : dataset.annotations_on(c.id)) sig.push_back(a->annotator_id);
    buckets[std::move(sig)].push_back(c.id);
  }

  std::vector<std::vector<std::string>> blocks;
  for (auto& [sig, ids] : buckets) {
    if (ids.size() % block_size != 0)
      throw std::invalid_argument("dataset is not block-structured: " +
                                  std::to_string(ids.size()) + " comments share annotator set " +
                                  (sig.empty() ? "<empty>" : sig.front() + ",..."));
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); i += block_size)
      blocks.emplace_back(ids.begin() + i, ids.begin() + i + block_size);
  }
  std::sort(blocks.begin(), blocks.end());

  std::size_t want = n_comments / block_size;
  if (want > blocks.size())
    throw std::invalid_argument("requested " + std::to_string(want) + " blocks, dataset has " +
                                std::to_string(blocks.size()));

  Rng rng(derive_seed(seed, "sample_blocks"));
  rng.shuffle(blocks);
  blocks.resize(want);

  std::set<std::string> keep_comments;
  for (const auto& b : blocks) keep_comments.insert(b.begin(), b.end());

  std::vector<Comment> comments;
  for (const auto& c : dataset.comments())
    if (keep_comments.count(c.id)) comments.push_back(c);

  std::vector<Annotation> annotations;
  std::set<std::string> keep_annotators;
  for (const auto& a : dataset.annotations())
    if (keep_comments.count(a.comment_id)) {
      annotations.push_back(a);
      keep_annotators.insert(a.annotator_id);
    }

  std::vector<Annotator> annotators;
  for (const auto& a : dataset.annotators())
    if (keep_annotators.count(a.id)) annotators.push_back(a);

  return Dataset::build(std::move(comments), std::move(annotators), std::move(annotations));
}

}  // namespace article
