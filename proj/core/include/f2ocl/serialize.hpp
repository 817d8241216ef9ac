#pragma once

#include <string>

#include "f2ocl/trainer.hpp"

namespace f2ocl {

// Versioned JSON state file. Doubles are emitted with shortest round-trip
// formatting, so load(save(state)) == state bit for bit. Adam slots and the
// ablation prototype store ride along so a reloaded state can keep training
// or serve the no-prompt comparison.
inline constexpr const char* kStateMagic = "f2ocl-state";
inline constexpr int kStateVersion = 1;

void save_state(const ModelState& state, const std::string& path);
ModelState load_state(const std::string& path);

std::string state_to_json(const ModelState& state);
ModelState state_from_json(const std::string& text);

}  // namespace f2ocl
