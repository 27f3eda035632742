#pragma once

#include <filesystem>

#include "core/types.hpp"

namespace engage::core {

// Directory layout: frames.csv, ipus.jsonl, turns.jsonl are required;
// nods.jsonl, annotations.jsonl, gaze.csv are optional and absent when empty.
// session_id is the directory basename. load(write(s)) == s field-for-field.
Session load_session(const std::filesystem::path& dir);
void write_session(const Session& s, const std::filesystem::path& dir);

}  // namespace engage::core
