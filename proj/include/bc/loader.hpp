#pragma once

#include "bc/engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bc {

struct SessionPaths {
    std::string kb;
    std::string templates;
    std::string taxonomy;
    std::string sim;
    std::string canned;
};

struct LoadResult {
    std::optional<Session> session; // empty when any file failed
    std::vector<std::string> errors;   // `file:line:col: error: ...`
    std::vector<std::string> warnings;
};

/// Reads and parses every given file. Empty paths are skipped, except the KB.
LoadResult load_session(const SessionPaths &paths);

} // namespace bc
