#include "navshift/theme.hpp"

namespace navshift {

void Theme::validate_for(const CategoryTable& table) const {
  if (hue_jitter < 0.0 || shading_gain < 0.0 || pixel_noise_sd < 0.0)
    throw ConfigError("theme '" + name + "': noise parameters must be non-negative");
  for (const auto& c : table.categories) {
    auto it = base_color.find(c.name);
    if (it == base_color.end())
      throw ConfigError("theme '" + name + "' has no color for category '" + c.name + "'");
    for (double v : it->second)
      if (v < 0.0 || v > 1.0)
        throw ConfigError("theme '" + name + "': color for '" + c.name + "' outside [0,1]");
  }
}

const Theme& builtin_theme(const std::string& name) {
  // Source-domain look: saturated, high-contrast.
  static const Theme studio = [] {
    Theme t;
    t.name = "studio";
    t.base_color = {
        {"wall", {0.82, 0.80, 0.74}},   {"window", {0.35, 0.60, 0.85}},
        {"furniture", {0.55, 0.35, 0.20}}, {"floor", {0.45, 0.40, 0.35}},
        {"rug", {0.60, 0.15, 0.20}},    {"ceiling", {0.92, 0.92, 0.90}},
    };
    t.hue_jitter = 0.02;
    t.shading_gain = 0.4;
    t.pixel_noise_sd = 0.01;
    return t;
  }();
  // Visually shifted indoor domain: washed-out palette, different shading,
  // noisier sensor.
  static const Theme flat = [] {
    Theme t;
    t.name = "flat";
    t.base_color = {
        {"wall", {0.30, 0.34, 0.38}},   {"window", {0.75, 0.75, 0.60}},
        {"furniture", {0.25, 0.45, 0.40}}, {"floor", {0.70, 0.68, 0.62}},
        {"rug", {0.20, 0.25, 0.55}},    {"ceiling", {0.50, 0.50, 0.52}},
    };
    t.hue_jitter = 0.05;
    t.shading_gain = 0.15;
    t.pixel_noise_sd = 0.03;
    return t;
  }();
  static const Theme daylight = [] {
    Theme t;
    t.name = "daylight";
    t.base_color = {
        {"tree", {0.15, 0.45, 0.18}},  {"person", {0.80, 0.60, 0.50}},
        {"car", {0.70, 0.10, 0.12}},   {"pavement", {0.58, 0.58, 0.58}},
        {"grass", {0.35, 0.65, 0.25}}, {"gravel", {0.62, 0.58, 0.50}},
        {"dirt", {0.48, 0.36, 0.22}},  {"sky", {0.65, 0.80, 0.95}},
    };
    t.hue_jitter = 0.04;
    t.shading_gain = 0.2;
    t.pixel_noise_sd = 0.02;
    return t;
  }();
  static const Theme dusk = [] {
    Theme t;
    t.name = "dusk";
    t.base_color = {
        {"tree", {0.08, 0.18, 0.12}},  {"person", {0.40, 0.32, 0.30}},
        {"car", {0.30, 0.08, 0.10}},   {"pavement", {0.28, 0.28, 0.32}},
        {"grass", {0.14, 0.25, 0.12}}, {"gravel", {0.30, 0.28, 0.26}},
        {"dirt", {0.22, 0.17, 0.12}},  {"sky", {0.25, 0.20, 0.40}},
    };
    t.hue_jitter = 0.06;
    t.shading_gain = 0.5;
    t.pixel_noise_sd = 0.03;
    return t;
  }();
  if (name == "studio") return studio;
  if (name == "flat") return flat;
  if (name == "daylight") return daylight;
  if (name == "dusk") return dusk;
  throw ConfigError("unknown theme: '" + name + "'");
}

std::vector<std::string> builtin_theme_names() {
  return {"studio", "flat", "daylight", "dusk"};
}

}  // namespace navshift
