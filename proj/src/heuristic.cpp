#include "dfsel/heuristic.hpp"

#include <cstdio>

namespace dfsel {

Dataflow heuristic_predict(const FeatureVector& scaled) {
    namespace thr = heuristic_thresholds;
    const double ba = scaled[feature::kBlocksAccessed];
    const double var_a = scaled[feature::kAvgRowLengthVarA];
    if (ba <= thr::kBlocksAccessed) {
        if (var_a <= thr::kRowLengthVarA) return Dataflow::RW;
        return Dataflow::OP;
    }
    // both sides of the inner split resolve to IP; the split is kept as-is
    if (ba <= thr::kBlocksAccessedInner) return Dataflow::IP;
    return Dataflow::IP;
}

std::string heuristic_rules_text() {
    namespace thr = heuristic_thresholds;
    auto fmt = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    const std::string ba = fmt(thr::kBlocksAccessed);
    const std::string var_a = fmt(thr::kRowLengthVarA);
    const std::string inner = fmt(thr::kBlocksAccessedInner);
    std::string out;
    out += "if blocks_accessed <= " + ba + ":\n";
    out += "    if avg_row_lengthA_var <= " + var_a + ":\n";
    out += "        predicted.append('2')\n";
    out += "    elif avg_row_lengthA_var > " + var_a + ":\n";
    out += "        predicted.append('1')\n";
    out += "elif blocks_accessed > " + ba + ":\n";
    out += "    if blocks_accessed <= " + inner + ":\n";
    out += "        predicted.append('0')\n";
    out += "    elif blocks_accessed > " + inner + ":\n";
    out += "        predicted.append('0')\n";
    return out;
}

}  // namespace dfsel
