#pragma once

#include "morpher/align.hpp"

#include <filesystem>

namespace morpher {

/// MPST file: "MPST", u32 version = 1, u32 mode, u32 style, f64 delta_inner,
/// f64 delta_cross, f64 init_std_multiplier, f64 tau, u32 option flags, u32 n_g,
/// u32 d, u32 n_t, u32 d_t, u32 d_g, u32 has_head, u32 C, then P^g, P^t, W, b and
/// (if present) head W and head b, all row-major little-endian f64.
void save_prompt_state(const PromptState& state, const std::filesystem::path& path);
PromptState load_prompt_state(const std::filesystem::path& path);

}  // namespace morpher
