#pragma once

#include <map>
#include <vector>

#include "frameless/analysis.hpp"
#include "frameless/model.hpp"

namespace frameless {

/// Enumeration budget: n * m transmission indicators, 2^(n m) patterns.
inline constexpr int kOracleMaxCells = 24;

/// Exact PER by enumerating every user-by-slot incidence pattern and running
/// the peeling closure on each. Throws std::invalid_argument when n * m
/// exceeds kOracleMaxCells.
double exact_per(const SystemParams& params);

/// Users left unresolved by the peeling closure: any slot whose reduced
/// degree is between 1 and k releases all its users, repeated to a fixpoint.
/// slots[j] is the bitmask of users transmitting in slot j.
int peeling_closure_unresolved(const std::vector<unsigned>& slots, int n, int k);

/// Exact decoder-state occupancy per stage for the randomized one-user-per-step
/// decoder, enumerating every graph and every decoder choice path.
/// Result[u] maps DecoderState keys to probability; halted paths stay at the
/// stage where they stopped. Same budget as exact_per, and k <= kMaxAnalysisK.
std::vector<std::map<uint64_t, double>> exact_state_occupancy(const SystemParams& params);

} // namespace frameless
