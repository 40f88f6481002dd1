#pragma once

// Random programs, traces and synthetic attack families for tests.

#include <cstdint>
#include <random>
#include <vector>

#include "netqre/lang.hpp"
#include "netqre/trace.hpp"

namespace testsupport {

using Rng = std::mt19937_64;

/// Three features: `a` (2 bits), `b` (3 bits) and the time feature `t`.
struct SmallWorld {
  netqre::TraceManifest manifest;
  netqre::ValueSpaces spaces;
};

SmallWorld small_world(Rng& rng);
std::vector<netqre::Packet> random_trace(Rng& rng, const SmallWorld& w, std::size_t max_len);

netqre::Ast random_leaf(Rng& rng, const SmallWorld& w);
netqre::Ast random_pred(Rng& rng, const SmallWorld& w, int depth);
netqre::Ast random_re(Rng& rng, const SmallWorld& w, int depth);
netqre::Ast random_qre(Rng& rng, const SmallWorld& w, int depth);
/// Height at most `depth`; may be a single-feature flow split.
netqre::Ast random_program(Rng& rng, const SmallWorld& w, int depth, bool allow_split = true);

/// Replaces 1..max_holes disjoint subtrees or numeric attributes by holes.
netqre::Ast punch_holes(Rng& rng, const netqre::Ast& program, int max_holes);

/// Every completion of `partial` drawn from a bounded space: predicate
/// holes take any leaf or `[_]`; regex and expression holes take programs
/// of height <= 2 over `core` predicates; bound holes take multiples of
/// 1/16 and range holes dyadic sub-ranges down to width 1/16. Returns an
/// empty list if there would be more than `cap`.
std::vector<netqre::Ast> completions(const netqre::Ast& partial, const SmallWorld& w,
                                     const std::vector<netqre::Ast>& core, std::size_t cap);

// ----------------------------------------------------------- families

/// Flows with repeated handshakes that end in RST against normal sessions.
std::vector<netqre::Example> syn_flood_like(std::uint64_t seed, std::size_t pos, std::size_t neg);
/// High sequence numbers and many FINs against ordinary transfers.
std::vector<netqre::Example> hulk_like(std::uint64_t seed, std::size_t pos, std::size_t neg);
/// A suspect source range with resets and short gaps against normal clients.
std::vector<netqre::Example> ddos_like(std::uint64_t seed, std::size_t pos, std::size_t neg);

/// Small three-feature task: positives contain a marker packet (possibly
/// twice, in order), negatives never do.
netqre::TraceSet small_task(std::uint64_t seed, std::size_t pos, std::size_t neg, std::size_t max_len);

}  // namespace testsupport
