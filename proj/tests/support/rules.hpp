#pragma once

#include <vector>

#include "netqre/rulegen.hpp"
#include "netqre/trace.hpp"

namespace testsupport {

/// Replays the script's event semantics over one trace, with the timeout
/// never expiring. True if the notice fires at least once.
bool replay_fires(const netqre::RuleScript& s, const std::vector<netqre::Packet>& trace,
                  const netqre::ValueSpaces& spaces, const netqre::TraceManifest& m);

}  // namespace testsupport
