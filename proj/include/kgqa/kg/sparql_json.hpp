#pragma once

#include <string_view>

#include <json.hpp>

#include "kgqa/kg/types.hpp"

namespace kgqa::kg {

/// Decodes the W3C SPARQL 1.1 Query Results JSON format.
SparqlResultTable parseSparqlResultsJson(std::string_view body);

/// Encodes a table in the same format (used by the stub backend and fixtures).
nlohmann::json toSparqlResultsJson(const SparqlResultTable& table);

}  // namespace kgqa::kg
