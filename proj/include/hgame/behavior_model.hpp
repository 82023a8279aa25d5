#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hgame/solution_concepts.hpp"
#include "hgame/types.hpp"

namespace hgame {

enum class Metamodel { kQL0, kQL1, kPNEQE };

inline std::string_view to_string(Metamodel m) {
  switch (m) {
    case Metamodel::kQL0: return "QL0";
    case Metamodel::kQL1: return "QL1";
    case Metamodel::kPNEQE: return "PNE-QE";
  }
  return "?";
}

// Metamodel x level-1 response x level-2 response x sampling scheme.
//
// Keys follow "<metamodel>:<G1>:<G2>:<scheme>". PNE-QE has no G1 token (its G1 rule is the
// equilibrium) and drops the G2 token for S1, where every level-2 game is 1x1. QL0/QL1 with S1
// keep a G2 token equal to the G1 token for the same reason.
struct BehaviorModel {
  Metamodel metamodel = Metamodel::kQL0;
  ResponseKind g1_response = ResponseKind::kBR;
  std::optional<ResponseKind> g2_response = ResponseKind::kBR;
  Scheme scheme = Scheme::kS1;
  double alpha = 0.5;  // level-0 share, QL1 only

  std::string key() const {
    std::ostringstream os;
    os << to_string(metamodel);
    if (metamodel != Metamodel::kPNEQE) os << ':' << to_string(g1_response);
    if (g2_response) os << ':' << to_string(*g2_response);
    os << ':' << to_string(scheme);
    return os.str();
  }

  ResponseConcept level1_concept() const {
    switch (metamodel) {
      case Metamodel::kQL0: return {g1_response, true, 0.0, g1_response};
      case Metamodel::kQL1: return {ResponseKind::kQBR, true, 0.0, g1_response};
      case Metamodel::kPNEQE: return {ResponseKind::kPNE, true, 0.0, ResponseKind::kBR};
    }
    return {};
  }

  ResponseConcept level2_concept() const {
    return {g2_response.value_or(ResponseKind::kBR), true, 0.0, ResponseKind::kBR};
  }

  // Parameters fitted beyond the precision coefficients.
  std::size_t extra_parameters() const { return metamodel == Metamodel::kQL1 ? 1 : 0; }

  friend bool operator==(const BehaviorModel& a, const BehaviorModel& b) { return a.key() == b.key(); }
};

// The 25 concrete models, in a fixed order.
inline std::vector<BehaviorModel> model_registry() {
  std::vector<BehaviorModel> out;
  constexpr ResponseKind kNs[] = {ResponseKind::kBR, ResponseKind::kMM};
  for (Metamodel meta : {Metamodel::kQL0, Metamodel::kQL1}) {
    for (ResponseKind g1 : kNs) out.push_back({meta, g1, g1, Scheme::kS1});
    for (Scheme scheme : {Scheme::kBound, Scheme::kGauss}) {
      for (ResponseKind g1 : kNs) {
        for (ResponseKind g2 : kNs) out.push_back({meta, g1, g2, scheme});
      }
    }
  }
  out.push_back({Metamodel::kPNEQE, ResponseKind::kPNE, std::nullopt, Scheme::kS1});
  for (Scheme scheme : {Scheme::kBound, Scheme::kGauss}) {
    for (ResponseKind g2 : kNs) out.push_back({Metamodel::kPNEQE, ResponseKind::kPNE, g2, scheme});
  }
  return out;
}

inline std::vector<std::string> split_key(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = key.find(':', start);
    parts.emplace_back(key.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Accepts canonical keys plus the short S1 spellings "QL0:BR:S1" and "PNE-QE:BR:S1".
inline std::optional<BehaviorModel> find_model(std::string_view key) {
  std::string canonical(key);
  const auto parts = split_key(key);
  if (parts.size() == 3 && parts[2] == "S1") {
    if (parts[0] == "QL0" || parts[0] == "QL1") canonical = parts[0] + ":" + parts[1] + ":" + parts[1] + ":S1";
    if (parts[0] == "PNE-QE") canonical = "PNE-QE:S1";
  }
  for (const BehaviorModel& m : model_registry()) {
    if (m.key() == canonical) return m;
  }
  return std::nullopt;
}

inline BehaviorModel parse_model(std::string_view key) {
  auto m = find_model(key);
  if (!m) throw Error(ErrorCode::kUnknownModel, "unknown model key '" + std::string(key) + "'");
  return *m;
}

}  // namespace hgame
