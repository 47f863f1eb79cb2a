#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace article {

// Small bundled word lists shared by the synthetic generator and the mock
// oracle's keyword scorer. Deliberately mild vocabulary.
const std::vector<std::string>& toxic_lexicon();
const std::vector<std::string>& benign_lexicon();

bool is_toxic_token(std::string_view token);

// fraction of whitespace-separated tokens found in the toxic lexicon
// (tokens are lowercased and stripped of surrounding punctuation first)
double keyword_toxicity_score(std::string_view text);

}  // namespace article
