#include "keep/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <variant>

#include "keep/error.hpp"
#include "text_util.hpp"

namespace keep {

namespace {

template <typename S>
using Member = std::variant<int S::*, double S::*, bool S::*, std::uint64_t S::*>;

template <typename S>
struct Field {
  const char* key;
  Member<S> ptr;
};

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key, "expected a boolean, got '" + text + "'");
  } else {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
      throw ConfigError(key, "cannot parse '" + text + "'");
    }
    return value;
  }
}

template <typename S, std::size_t N>
void apply(const KeyValues& kv, S& cfg, const Field<S> (&fields)[N]) {
  for (const auto& [key, text] : kv) {
    const std::string name = key == "seed" ? "rng_seed" : key;
    bool found = false;
    for (const auto& f : fields) {
      if (name != f.key) continue;
      found = true;
      std::visit(
          [&](auto ptr) {
            using T = std::remove_reference_t<decltype(cfg.*ptr)>;
            cfg.*ptr = parse_value<T>(key, text);
          },
          f.ptr);
    }
    if (!found) throw ConfigError(key, "unknown configuration key");
  }
  cfg.validate();
}

template <typename S, std::size_t N>
KeyValues dump(const S& cfg, const Field<S> (&fields)[N]) {
  KeyValues kv;
  for (const auto& f : fields) {
    std::visit(
        [&](auto ptr) {
          using T = std::remove_cvref_t<decltype(cfg.*ptr)>;
          if constexpr (std::is_same_v<T, bool>) {
            kv[f.key] = cfg.*ptr ? "true" : "false";
          } else if constexpr (std::is_same_v<T, double>) {
            std::ostringstream os;
            os.precision(17);
            os << cfg.*ptr;
            kv[f.key] = os.str();
          } else {
            kv[f.key] = std::to_string(cfg.*ptr);
          }
        },
        f.ptr);
  }
  return kv;
}

const Field<WalkConfig> kWalkFields[] = {
    {"walk_length", &WalkConfig::walk_length},
    {"walks_per_node", &WalkConfig::walks_per_node},
    {"p", &WalkConfig::p},
    {"q", &WalkConfig::q},
    {"rng_seed", &WalkConfig::rng_seed},
    {"threads", &WalkConfig::threads},
};

const Field<SgnsConfig> kSgnsFields[] = {
    {"dim", &SgnsConfig::dim},
    {"window", &SgnsConfig::window},
    {"negatives", &SgnsConfig::negatives},
    {"min_count", &SgnsConfig::min_count},
    {"epochs", &SgnsConfig::epochs},
    {"learning_rate", &SgnsConfig::learning_rate},
    {"batch_size", &SgnsConfig::batch_size},
    {"rng_seed", &SgnsConfig::rng_seed},
    {"deterministic", &SgnsConfig::deterministic},
    {"threads", &SgnsConfig::threads},
};

const Field<KeepConfig> kKeepFields[] = {
    {"dim", &KeepConfig::dim},
    {"learning_rate", &KeepConfig::learning_rate},
    {"epochs", &KeepConfig::epochs},
    {"batch_size", &KeepConfig::batch_size},
    {"x_max_percentile", &KeepConfig::x_max_percentile},
    {"alpha", &KeepConfig::alpha},
    {"lambda", &KeepConfig::lambda},
    {"weight_decay", &KeepConfig::weight_decay},
    {"beta1", &KeepConfig::beta1},
    {"beta2", &KeepConfig::beta2},
    {"epsilon", &KeepConfig::epsilon},
    {"use_bias", &KeepConfig::use_bias},
    {"rng_seed", &KeepConfig::rng_seed},
    {"deterministic", &KeepConfig::deterministic},
    {"threads", &KeepConfig::threads},
};

const Field<SynthConfig> kSynthFields[] = {
    {"n_concepts", &SynthConfig::n_concepts},
    {"branching", &SynthConfig::branching},
    {"max_depth_generated", &SynthConfig::max_depth_generated},
    {"extra_parent_fraction", &SynthConfig::extra_parent_fraction},
    {"n_patients", &SynthConfig::n_patients},
    {"n_clusters", &SynthConfig::n_clusters},
    {"cluster_size", &SynthConfig::cluster_size},
    {"within_cluster_rate", &SynthConfig::within_cluster_rate},
    {"background_rate", &SynthConfig::background_rate},
    {"repeat_mean", &SynthConfig::repeat_mean},
    {"max_day", &SynthConfig::max_day},
    {"rng_seed", &SynthConfig::rng_seed},
};

}  // namespace

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t no) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(no) + ": expected key=value");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(no) + ": empty key");
    kv[std::string(key)] = std::string(value);
  });
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  return read_key_values(in);
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

void apply_key_values(const KeyValues& kv, WalkConfig& cfg) { apply(kv, cfg, kWalkFields); }
void apply_key_values(const KeyValues& kv, SgnsConfig& cfg) { apply(kv, cfg, kSgnsFields); }
void apply_key_values(const KeyValues& kv, KeepConfig& cfg) { apply(kv, cfg, kKeepFields); }
void apply_key_values(const KeyValues& kv, SynthConfig& cfg) { apply(kv, cfg, kSynthFields); }

KeyValues to_key_values(const WalkConfig& cfg) { return dump(cfg, kWalkFields); }
KeyValues to_key_values(const SgnsConfig& cfg) { return dump(cfg, kSgnsFields); }
KeyValues to_key_values(const KeepConfig& cfg) { return dump(cfg, kKeepFields); }
KeyValues to_key_values(const SynthConfig& cfg) { return dump(cfg, kSynthFields); }

}  // namespace keep
