#include "tightchains/model.hpp"

#include <algorithm>
#include <cctype>

#include "tightchains/errors.hpp"

namespace tc {

std::string_view to_string(Model model) {
  switch (model) {
    case Model::Cca:
      return "cca";
    case Model::Carlitz:
      return "carlitz";
  }
  return "unknown";
}

Model parse_model(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cca") return Model::Cca;
  if (lower == "carlitz" || lower == "c") return Model::Carlitz;
  throw DomainError("unknown model '" + std::string(name) + "' (expected cca or carlitz)");
}

}  // namespace tc
