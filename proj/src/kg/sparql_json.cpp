#include "kgqa/kg/sparql_json.hpp"

#include "kgqa/error.hpp"

namespace kgqa::kg {

using nlohmann::json;

SparqlResultTable parseSparqlResultsJson(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw QueryError(std::string("endpoint returned malformed JSON: ") + e.what());
  }
  if (!doc.contains("head") || !doc["head"].contains("vars")) {
    throw QueryError("SPARQL results lack head.vars");
  }
  SparqlResultTable table;
  for (const auto& v : doc["head"]["vars"]) table.columns.push_back(v.get<std::string>());

  if (doc.contains("results")) {
    for (const auto& binding : doc["results"].value("bindings", json::array())) {
      std::vector<Cell> row;
      row.reserve(table.columns.size());
      for (const auto& column : table.columns) {
        auto it = binding.find(column);
        if (it == binding.end()) {
          row.emplace_back(UnboundCell{});
          continue;
        }
        const auto type = it->value("type", "");
        const auto value = it->value("value", "");
        if (type == "uri") {
          row.emplace_back(IriCell{value});
        } else if (type == "literal" || type == "typed-literal") {
          LiteralCell lit{value, std::nullopt, std::nullopt};
          if (it->contains("datatype")) lit.datatype = (*it)["datatype"].get<std::string>();
          if (it->contains("xml:lang")) lit.language = (*it)["xml:lang"].get<std::string>();
          row.emplace_back(std::move(lit));
        } else if (type == "bnode") {
          row.emplace_back(LiteralCell{"_:" + value, std::nullopt, std::nullopt});
        } else {
          throw QueryError("unknown SPARQL binding type '" + type + "'");
        }
      }
      table.rows.push_back(std::move(row));
    }
  }
  table.validate();
  return table;
}

json toSparqlResultsJson(const SparqlResultTable& table) {
  json bindings = json::array();
  for (const auto& row : table.rows) {
    json b = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& cell = row[i];
      if (const auto* iri = std::get_if<IriCell>(&cell)) {
        b[table.columns[i]] = {{"type", "uri"}, {"value", iri->value}};
      } else if (const auto* lit = std::get_if<LiteralCell>(&cell)) {
        json c = {{"type", "literal"}, {"value", lit->value}};
        if (lit->datatype) c["datatype"] = *lit->datatype;
        if (lit->language) c["xml:lang"] = *lit->language;
        b[table.columns[i]] = std::move(c);
      }
    }
    bindings.push_back(std::move(b));
  }
  return {{"head", {{"vars", table.columns}}}, {"results", {{"bindings", bindings}}}};
}

}  // namespace kgqa::kg
