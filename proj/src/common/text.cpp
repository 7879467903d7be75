// SPDX-License-Identifier: Apache-2.0

#include "medforge/common/text.hpp"

#include <cctype>

#include "medforge/common/errors.hpp"

namespace medforge {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return "";
    }
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;  // swallow leading whitespace
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_ws) {
                out.push_back(' ');
                in_ws = true;
            }
        } else {
            out.push_back(c);
            in_ws = false;
        }
    }
    if (!out.empty() && out.back() == ' ') {
        out.pop_back();
    }
    return out;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ReplayMiss*>(&e)) return "ReplayMiss";
    if (dynamic_cast<const BackendRefusal*>(&e)) return "BackendRefusal";
    if (dynamic_cast<const TransportError*>(&e)) return "TransportError";
    if (dynamic_cast<const DimensionMismatch*>(&e)) return "DimensionMismatch";
    if (dynamic_cast<const TrainerUnavailable*>(&e)) return "TrainerUnavailable";
    if (dynamic_cast<const IllegalState*>(&e)) return "IllegalState";
    if (dynamic_cast<const DuplicateQuestions*>(&e)) return "DuplicateQuestions";
    if (dynamic_cast<const RangeViolation*>(&e)) return "RangeViolation";
    if (dynamic_cast<const SectionsMissing*>(&e)) return "SectionsMissing";
    if (dynamic_cast<const ClassificationUnparseable*>(&e)) return "ClassificationUnparseable";
    if (dynamic_cast<const ParseFailure*>(&e)) return "ParseFailure";
    if (dynamic_cast<const MismatchedPair*>(&e)) return "MismatchedPair";
    if (dynamic_cast<const MissingCounterpart*>(&e)) return "MissingCounterpart";
    if (dynamic_cast<const ManifestMismatch*>(&e)) return "ManifestMismatch";
    if (dynamic_cast<const InsufficientPool*>(&e)) return "InsufficientPool";
    if (dynamic_cast<const EmptyDataset*>(&e)) return "EmptyDataset";
    if (dynamic_cast<const MissingAxis*>(&e)) return "MissingAxis";
    if (dynamic_cast<const DegenerateVector*>(&e)) return "DegenerateVector";
    if (dynamic_cast<const EmptyBenchmark*>(&e)) return "EmptyBenchmark";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "Exception";
}

}  // namespace medforge
