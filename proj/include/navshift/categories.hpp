#pragma once

#include <string>
#include <vector>

#include "navshift/common.hpp"

namespace navshift {

enum class NavLabel : int { Obstacle = 0, Ambiguous = 1, Free = 2 };

const char* nav_label_name(NavLabel l);
NavLabel nav_label_from_name(const std::string& s);  // throws ConfigError

struct SemanticCategory {
  int id = 0;
  std::string name;
};

// A closed universe of semantic categories with their navigability labels.
// `open_category` is what an unobstructed ray reports (sky / ceiling); it
// must map to Ambiguous so that free-space readings never look like walls.
struct CategoryTable {
  std::string name;
  std::vector<SemanticCategory> categories;  // categories[i].id == i
  std::vector<NavLabel> nav;                 // nav[id]
  int open_category = -1;

  int size() const { return static_cast<int>(categories.size()); }
  int find(const std::string& cat_name) const;  // -1 when absent
  const std::string& name_of(int id) const;
  void validate() const;  // throws ConfigError on broken invariants
};

CategoryTable make_category_table(
    const std::string& table_name,
    const std::vector<std::pair<std::string, NavLabel>>& entries,
    const std::string& open_name);

// Built-in tables: "indoor" (source domain) and "outdoor" (shifted domain).
const CategoryTable& builtin_table(const std::string& name);
std::vector<std::string> builtin_table_names();

// Category ids of a table partitioned by label, ascending id order.
std::vector<int> ids_with_label(const CategoryTable& table, NavLabel label);

// Shared one-hot layout across tables so features from different domains
// are comparable: the union of category names, alphabetical.
struct CategoryUnion {
  std::vector<std::string> names;  // sorted, unique
  int size() const { return static_cast<int>(names.size()); }
  int slot(const std::string& cat_name) const;  // -1 when absent
};

CategoryUnion build_category_union(const std::vector<const CategoryTable*>& tables);

// id -> union slot for one table.  Throws if a category is missing.
std::vector<int> union_slots(const CategoryTable& table, const CategoryUnion& u);

}  // namespace navshift
