#pragma once

#include <string>

#include "dfsel/features.hpp"
#include "dfsel/sparse.hpp"

namespace dfsel {

// Frozen two-level rule thresholds (full printed precision). Inputs are
// min-max scaled features.
namespace heuristic_thresholds {
inline constexpr double kBlocksAccessed = 0.03894999995827675;
inline constexpr double kRowLengthVarA = 0.009800000116229057;
inline constexpr double kBlocksAccessedInner = 0.04165000095963478;
}  // namespace heuristic_thresholds

// Two-feature rule selector: decides on blocks_accessed and
// avg_row_lengthA_var alone. Boundary values take the <= branch.
Dataflow heuristic_predict(const FeatureVector& scaled);

// The rule set as nested if/elif text, same shape export_rules produces.
std::string heuristic_rules_text();

}  // namespace dfsel
