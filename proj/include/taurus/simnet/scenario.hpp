#pragma once

#include <optional>
#include <string>
#include <vector>

#include "taurus/core/types.hpp"
#include "taurus/simnet/ids.hpp"

namespace taurus::sim {

// One line of a scenario script:
//   AT <ms> WRITE page=<n> len=<n>
//   AT <ms> BEGIN_GROUP
//   AT <ms> END_GROUP
//   AT <ms> CRASH node=<id> FOR <ms>
//   AT <ms> PARTITION <id> <id> FOR <ms>
//   AT <ms> READ page=<n> [replica=<id>] [lsn=<n>]
//   AT <ms> CHECK <invariant-name>
// Lines starting with '#' and blank lines are ignored.
struct ScenarioEvent {
    enum class Kind : uint8_t { kWrite, kBeginGroup, kEndGroup, kCrash, kPartition, kRead, kCheck };
    Kind kind = Kind::kWrite;
    Time at = 0;
    core::PageId page = 0;
    uint64_t len = 0;
    core::Lsn lsn = core::kNoLsn;  // optional read lsn; 0 means "latest"
    std::string node_a;            // CRASH node / PARTITION first / READ replica
    std::string node_b;            // PARTITION second
    Time duration = 0;
    std::string check_name;
};

struct ScenarioScript {
    std::vector<ScenarioEvent> events;
    Time end_time() const;
};

struct ScenarioParseError {
    int line = 0;
    std::string message;
};

// Returns the parsed script or an error describing the first bad line.
std::optional<ScenarioScript> parse_scenario(const std::string& text, ScenarioParseError* err);

}  // namespace taurus::sim
