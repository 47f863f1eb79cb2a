#include "article/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace article {

const std::vector<std::string>& toxic_lexicon() {
  static const std::vector<std::string> words = {
      "awful",    "garbage",  "idiotic",  "pathetic", "disgusting", "stupid",
      "terrible", "horrible", "trash",    "moronic",  "dumb",       "worthless",
      "nasty",    "vile",     "shameful", "rotten",   "lousy",      "obnoxious",
      "dreadful", "foul",     "wretched", "appalling"};
  return words;
}

const std::vector<std::string>& benign_lexicon() {
  static const std::vector<std::string> words = {
      "sunny",   "garden",   "coffee",  "library", "bridge",  "morning", "pleasant",
      "gentle",  "harbor",   "meadow",  "quiet",   "bright",  "friendly", "window",
      "journey", "festival", "melody",  "autumn",  "gallery", "breeze",  "lantern",
      "orchard"};
  return words;
}

namespace {

std::string strip_token(std::string_view token) {
  std::size_t b = 0, e = token.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
  std::string out(token.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

bool is_toxic_token(std::string_view token) {
  static const std::unordered_set<std::string> set(toxic_lexicon().begin(),
                                                   toxic_lexicon().end());
  return set.count(strip_token(token)) > 0;
}

double keyword_toxicity_score(std::string_view text) {
  std::size_t total = 0, toxic = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) {
      ++total;
      if (is_toxic_token(text.substr(start, i - start))) ++toxic;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(toxic) / static_cast<double>(total);
}

}  // namespace article
