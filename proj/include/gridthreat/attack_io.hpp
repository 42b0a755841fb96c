#pragma once

#include "gridthreat/attack_synthesis.hpp"
#include "gridthreat/grid_model.hpp"

#include <string>

namespace gridthreat {

std::string attack_to_json(const GridCase& grid, const AttackVector& attack);

/// Throws Error on malformed input or size mismatch with `grid`.
AttackVector attack_from_json(const GridCase& grid, const std::string& text);

}  // namespace gridthreat
