#include "kgqa/kg/backend.hpp"

#include "kgqa/error.hpp"

namespace kgqa::kg {

std::string requireSearchTerm(std::string_view term) {
  const auto first = term.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw ValidationError("search term is empty");
  const auto last = term.find_last_not_of(" \t\r\n");
  return std::string(term.substr(first, last - first + 1));
}

void requirePositiveLimit(std::size_t limit) {
  if (limit == 0) throw ValidationError("limit must be a positive integer");
}

}  // namespace kgqa::kg
