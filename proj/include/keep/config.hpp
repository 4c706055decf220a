#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "keep/keep_trainer.hpp"
#include "keep/sgns.hpp"
#include "keep/synthdata.hpp"
#include "keep/walks.hpp"

namespace keep {

// key=value lines; '#' comments and blank lines are ignored. Later lines
// win. Throws InputError on lines without '='.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

// Keys are the field names ("seed" is accepted for rng_seed). Unknown keys
// and unparsable values raise ConfigError naming the key. The result is
// validated.
void apply_key_values(const KeyValues& kv, WalkConfig& cfg);
void apply_key_values(const KeyValues& kv, SgnsConfig& cfg);
void apply_key_values(const KeyValues& kv, KeepConfig& cfg);
void apply_key_values(const KeyValues& kv, SynthConfig& cfg);

KeyValues to_key_values(const WalkConfig& cfg);
KeyValues to_key_values(const SgnsConfig& cfg);
KeyValues to_key_values(const KeepConfig& cfg);
KeyValues to_key_values(const SynthConfig& cfg);

}  // namespace keep
