#pragma once

// Random basic graph pattern queries with their expected triples.

#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <vector>

namespace kgqa::testsupport {

struct RandomTerm {
  std::string written;
  std::string key;
};

struct RandomBgp {
  std::string query;
  std::vector<std::array<std::string, 3>> triples;
};

class BgpGenerator {
 public:
  explicit BgpGenerator(unsigned seed) : rng_(seed) {}

  RandomBgp next() {
    RandomBgp out;
    const int n = pick(1, 8);
    std::vector<std::array<RandomTerm, 3>> rows;
    for (int i = 0; i < n; ++i) {
      rows.push_back({i == 0 ? variable() : node(), predicate(), i == 0 ? node() : object()});
    }
    std::vector<std::string> vars;
    for (const auto& r : rows) {
      out.triples.push_back({r[0].key, r[1].key, r[2].key});
      for (const auto& t : r) {
        if (t.key[0] == '?' && std::find(vars.begin(), vars.end(), t.key) == vars.end()) {
          vars.push_back(t.key);
        }
      }
    }
    std::string q;
    if (pick(0, 3) == 0) q += "PREFIX ex: <http://example.org/>\n";
    q += pick(0, 1) ? "SELECT " : "select ";
    if (pick(0, 4) == 0) q += "DISTINCT ";
    if (pick(0, 5) == 0) {
      q += "*";
    } else {
      for (const auto& v : vars) {
        if (v == vars.front() || pick(0, 1)) q += v + " ";
      }
    }
    q += " WHERE {\n";
    for (const auto& r : rows) {
      q += "  " + r[0].written + " " + r[1].written + " " + r[2].written;
      q += pick(0, 3) == 0 ? " .\n" : " . ";
    }
    q += "}";
    if (pick(0, 3) == 0) q += " LIMIT " + std::to_string(pick(1, 100));
    out.query = q;
    return out;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  RandomTerm variable() {
    static const std::array<std::string, 6> kNames = {"a", "b", "film", "x1", "item_2", "p"};
    const auto& name = kNames[pick(0, kNames.size() - 1)];
    return {"?" + name, "?" + name};
  }

  RandomTerm entity() {
    const std::string id = "Q" + std::to_string(pick(1, 500));
    if (pick(0, 4) == 0) {
      return {"<http://www.wikidata.org/entity/" + id + ">",
              "<http://www.wikidata.org/entity/" + id + ">"};
    }
    return {"wd:" + id, "<http://www.wikidata.org/entity/" + id + ">"};
  }

  RandomTerm node() { return pick(0, 1) ? variable() : entity(); }

  RandomTerm predicate() {
    switch (pick(0, 5)) {
      case 0:
        return variable();
      case 1:
        return {"rdfs:label", "<http://www.w3.org/2000/01/rdf-schema#label>"};
      case 2:
        return {"a", "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>"};
      default: {
        const std::string id = "P" + std::to_string(pick(1, 3000));
        return {"wdt:" + id, "<http://www.wikidata.org/prop/direct/" + id + ">"};
      }
    }
  }

  RandomTerm object() {
    switch (pick(0, 7)) {
      case 0: {
        const auto n = std::to_string(pick(0, 99999));
        return {n, "\"" + n + "\"^^<http://www.w3.org/2001/XMLSchema#integer>"};
      }
      case 1: {
        const auto s = "name " + std::to_string(pick(0, 99));
        return {"\"" + s + "\"@en", "\"" + s + "\"@en"};
      }
      case 2: {
        const auto s = "text" + std::to_string(pick(0, 99));
        return {"\"" + s + "\"", "\"" + s + "\""};
      }
      default:
        return node();
    }
  }

  std::mt19937 rng_;
};

}  // namespace kgqa::testsupport
