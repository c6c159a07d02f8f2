#include "kgqa/kg/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "kgqa/error.hpp"

namespace kgqa::kg {
namespace {

bool isPrefixedNumber(std::string_view text, char prefix) {
  if (text.size() < 2 || text.front() != prefix) return false;
  if (text[1] == '0') return false;
  return std::all_of(text.begin() + 1, text.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

bool isEntityIdText(std::string_view text) { return isPrefixedNumber(text, 'Q'); }
bool isRelationIdText(std::string_view text) { return isPrefixedNumber(text, 'P'); }

EntityId::EntityId(std::string value) : value_(std::move(value)) {
  if (!isEntityIdText(value_)) throw ValidationError("malformed entity id '" + value_ + "'");
}

RelationId::RelationId(std::string value) : value_(std::move(value)) {
  if (!isRelationIdText(value_)) {
    throw ValidationError("malformed relation id '" + value_ + "'");
  }
}

std::string_view to_string(RecordKind kind) {
  return kind == RecordKind::entity ? "entity" : "relation";
}

KgId::KgId(EntityId id) : kind_(RecordKind::entity), value_(id.str()) {}
KgId::KgId(RelationId id) : kind_(RecordKind::relation), value_(id.str()) {}

KgId KgId::parse(std::string_view text) {
  if (isEntityIdText(text)) return KgId(RecordKind::entity, std::string(text));
  if (isRelationIdText(text)) return KgId(RecordKind::relation, std::string(text));
  throw ValidationError("malformed identifier '" + std::string(text) + "'");
}

EntityRecord unresolvableRecord(const KgId& id) {
  return EntityRecord{id.str(), "", "", id.kind(), false};
}

std::string cellText(const Cell& cell) {
  if (const auto* iri = std::get_if<IriCell>(&cell)) return iri->value;
  if (const auto* lit = std::get_if<LiteralCell>(&cell)) return lit->value;
  return {};
}

void SparqlResultTable::validate() const {
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c).second) throw ValidationError("duplicate result column '" + c + "'");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != columns.size()) {
      throw ValidationError("result row " + std::to_string(i) + " has " +
                            std::to_string(rows[i].size()) + " cells, expected " +
                            std::to_string(columns.size()));
    }
  }
}

std::optional<std::size_t> SparqlResultTable::columnIndex(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

std::optional<KgId> idFromIri(std::string_view iri) {
  static constexpr std::array<std::string_view, 8> kNamespaces = {
      "http://www.wikidata.org/entity/",
      "http://www.wikidata.org/prop/direct/",
      "http://www.wikidata.org/prop/statement/",
      "http://www.wikidata.org/prop/qualifier/",
      "http://www.wikidata.org/prop/direct-normalized/",
      "http://www.wikidata.org/prop/reference/",
      "http://www.wikidata.org/prop/",
      "http://www.wikidata.org/wiki/",
  };
  for (auto ns : kNamespaces) {
    if (iri.substr(0, ns.size()) != ns) continue;
    auto local = iri.substr(ns.size());
    if (isEntityIdText(local) || isRelationIdText(local)) return KgId::parse(local);
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace kgqa::kg
