#include "navshift/categories.hpp"

#include <algorithm>
#include <set>

namespace navshift {

const char* nav_label_name(NavLabel l) {
  switch (l) {
    case NavLabel::Obstacle: return "obstacle";
    case NavLabel::Ambiguous: return "ambiguous";
    case NavLabel::Free: return "free";
  }
  return "?";
}

NavLabel nav_label_from_name(const std::string& s) {
  if (s == "obstacle") return NavLabel::Obstacle;
  if (s == "ambiguous") return NavLabel::Ambiguous;
  if (s == "free") return NavLabel::Free;
  throw ConfigError("unknown navigability label: '" + s + "'");
}

int CategoryTable::find(const std::string& cat_name) const {
  for (const auto& c : categories)
    if (c.name == cat_name) return c.id;
  return -1;
}

const std::string& CategoryTable::name_of(int id) const {
  if (id < 0 || id >= size())
    throw ConfigError("category id " + std::to_string(id) + " out of range for table '" + name + "'");
  return categories[static_cast<std::size_t>(id)].name;
}

void CategoryTable::validate() const {
  if (categories.empty()) throw ConfigError("category table '" + name + "' is empty");
  if (nav.size() != categories.size())
    throw ConfigError("category table '" + name + "': nav mapping size mismatch");
  std::set<std::string> seen;
  for (int i = 0; i < size(); ++i) {
    const auto& c = categories[static_cast<std::size_t>(i)];
    if (c.id != i) throw ConfigError("category table '" + name + "': ids not contiguous from 0");
    if (c.name.empty()) throw ConfigError("category table '" + name + "': empty category name");
    if (!seen.insert(c.name).second)
      throw ConfigError("category table '" + name + "': duplicate category '" + c.name + "'");
  }
  if (open_category < 0 || open_category >= size())
    throw ConfigError("category table '" + name + "': open category id invalid");
  if (nav[static_cast<std::size_t>(open_category)] != NavLabel::Ambiguous)
    throw ConfigError("category table '" + name + "': open category must map to ambiguous");
  bool any_obstacle = false, any_free = false;
  for (auto l : nav) {
    any_obstacle |= l == NavLabel::Obstacle;
    any_free |= l == NavLabel::Free;
  }
  if (!any_obstacle || !any_free)
    throw ConfigError("category table '" + name + "': needs at least one obstacle and one free category");
}

CategoryTable make_category_table(
    const std::string& table_name,
    const std::vector<std::pair<std::string, NavLabel>>& entries,
    const std::string& open_name) {
  CategoryTable t;
  t.name = table_name;
  for (const auto& [cat_name, label] : entries) {
    t.categories.push_back({t.size(), cat_name});
    t.nav.push_back(label);
  }
  t.open_category = t.find(open_name);
  t.validate();
  return t;
}

const CategoryTable& builtin_table(const std::string& name) {
  static const CategoryTable indoor = make_category_table(
      "indoor",
      {{"wall", NavLabel::Obstacle},
       {"window", NavLabel::Obstacle},
       {"furniture", NavLabel::Obstacle},
       {"floor", NavLabel::Free},
       {"rug", NavLabel::Free},
       {"ceiling", NavLabel::Ambiguous}},
      "ceiling");
  static const CategoryTable outdoor = make_category_table(
      "outdoor",
      {{"tree", NavLabel::Obstacle},
       {"person", NavLabel::Obstacle},
       {"car", NavLabel::Obstacle},
       {"pavement", NavLabel::Free},
       {"grass", NavLabel::Free},
       {"gravel", NavLabel::Free},
       {"dirt", NavLabel::Ambiguous},
       {"sky", NavLabel::Ambiguous}},
      "sky");
  if (name == "indoor") return indoor;
  if (name == "outdoor") return outdoor;
  throw ConfigError("unknown category table: '" + name + "'");
}

std::vector<std::string> builtin_table_names() { return {"indoor", "outdoor"}; }

std::vector<int> ids_with_label(const CategoryTable& table, NavLabel label) {
  std::vector<int> out;
  for (int i = 0; i < table.size(); ++i)
    if (table.nav[static_cast<std::size_t>(i)] == label) out.push_back(i);
  return out;
}

int CategoryUnion::slot(const std::string& cat_name) const {
  auto it = std::lower_bound(names.begin(), names.end(), cat_name);
  if (it == names.end() || *it != cat_name) return -1;
  return static_cast<int>(it - names.begin());
}

CategoryUnion build_category_union(const std::vector<const CategoryTable*>& tables) {
  std::set<std::string> all;
  for (const auto* t : tables)
    for (const auto& c : t->categories) all.insert(c.name);
  CategoryUnion u;
  u.names.assign(all.begin(), all.end());
  return u;
}

std::vector<int> union_slots(const CategoryTable& table, const CategoryUnion& u) {
  std::vector<int> slots(static_cast<std::size_t>(table.size()));
  for (int i = 0; i < table.size(); ++i) {
    const int s = u.slot(table.categories[static_cast<std::size_t>(i)].name);
    if (s < 0)
      throw ConfigError("category '" + table.categories[static_cast<std::size_t>(i)].name +
                        "' missing from union layout");
    slots[static_cast<std::size_t>(i)] = s;
  }
  return slots;
}

}  // namespace navshift
