#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace article {

enum class Label { non_offensive = 0, offensive = 1 };

inline std::string label_to_string(Label l) {
  return l == Label::offensive ? "offensive" : "non_offensive";
}

inline Label label_from_string(std::string_view s) {
  if (s == "offensive") return Label::offensive;
  if (s == "non_offensive" || s == "non-offensive") return Label::non_offensive;
  throw std::invalid_argument("unknown label: " + std::string(s));
}

}  // namespace article
