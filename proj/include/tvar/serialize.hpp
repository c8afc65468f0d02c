#pragma once

#include <string>

#include "tvar/sampler.hpp"

namespace tvar {

// Draw file layout: one CSV row per block per draw,
//   draw_index,block_name,v0,v1,...
// Matrices are flattened column-major. Volatility blocks are prefixed
// "vol." and depend on the regime; a "vol.type" row names it.
void write_draws(const std::string& path, const PosteriorDraws& draws);

PosteriorDraws read_draws(const std::string& path);

}  // namespace tvar
