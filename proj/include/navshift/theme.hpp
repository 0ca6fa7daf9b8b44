#pragma once

#include <array>
#include <map>
#include <string>

#include "navshift/categories.hpp"

namespace navshift {

// A visual domain: per-category base colors plus render-noise parameters.
// Colors are keyed by category name so one theme can serve any table that
// uses those names.
struct Theme {
  std::string name;
  std::map<std::string, std::array<double, 3>> base_color;  // name -> rgb in [0,1]
  double hue_jitter = 0.0;     // sd of the per-world color offset
  double shading_gain = 0.0;   // brightness = 1 / (1 + gain * depth)
  double pixel_noise_sd = 0.0; // per-ray per-channel gaussian, render time

  // Throws ConfigError if a category of `table` has no color or a noise
  // parameter is negative.
  void validate_for(const CategoryTable& table) const;
};

// Built-in themes.  "studio" / "flat" color the indoor table, "daylight" /
// "dusk" the outdoor one.
const Theme& builtin_theme(const std::string& name);
std::vector<std::string> builtin_theme_names();

}  // namespace navshift
