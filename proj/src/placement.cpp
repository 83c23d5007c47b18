#include "omnikit/placement.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include "omnikit/error.hpp"

namespace omnikit::place {

namespace {

constexpr int kDomainSize = 12;

const Item* find_item(const std::string& object) {
  for (const Item& item : domain()) {
    if (item.name == object) return &item;
  }
  return nullptr;
}

Destination coin(double u01) { return u01 < 0.5 ? Destination::sink : Destination::shelf; }

const Demo* find_demo(const DemoSet& demos, const std::string& object) {
  for (const Demo& demo : demos) {
    if (demo.object == object) return &demo;
  }
  return nullptr;
}

Destination lookup_with_variate(const DemoSet& demos, const std::string& object, double u01) {
  if (find_item(object) == nullptr) fail("UnknownObject", "no such object '" + object + "'");
  if (const Demo* demo = find_demo(demos, object)) return demo->destination;
  return coin(u01);
}

Destination category_majority(const DemoSet& demos, const std::string& object, double u01) {
  const Item* item = find_item(object);
  if (item == nullptr) fail("UnknownObject", "no such object '" + object + "'");
  int sink_votes = 0;
  int shelf_votes = 0;
  for (const Demo& demo : demos) {
    const Item* shown = find_item(demo.object);
    if (shown == nullptr || shown->category != item->category) continue;
    (demo.destination == Destination::sink ? sink_votes : shelf_votes) += 1;
  }
  if (sink_votes > shelf_votes) return Destination::sink;
  if (shelf_votes > sink_votes) return Destination::shelf;
  return coin(u01);
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t c = 1;
  for (int i = 0; i < k; ++i) c = c * static_cast<std::uint64_t>(n - i) / (i + 1);
  return c;
}

// all k-subsets of {0..n-1} in lexicographic order
std::vector<std::vector<int>> all_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (k == 0) out.assign(1, {});
  return out;
}

std::vector<std::vector<int>> draw_subsets(int k, int max_combos, SplitRng& rng) {
  if (binomial(kDomainSize, k) <= static_cast<std::uint64_t>(max_combos)) {
    return all_subsets(kDomainSize, k);
  }
  std::vector<std::vector<int>> out;
  std::set<std::uint16_t> seen;
  while (static_cast<int>(out.size()) < max_combos) {
    std::vector<int> subset = rng.sample_subset(kDomainSize, k);
    std::uint16_t mask = 0;
    for (int i : subset) mask = static_cast<std::uint16_t>(mask | (1u << i));
    if (seen.insert(mask).second) out.push_back(std::move(subset));
  }
  return out;
}

}  // namespace

std::string to_string(Destination d) { return d == Destination::sink ? "sink" : "shelf"; }

const std::vector<Item>& domain() {
  static const std::vector<Item> items = {
      {"orange", "fruit", Destination::sink},
      {"apple", "fruit", Destination::sink},
      {"banana", "fruit", Destination::sink},
      {"lemon", "fruit", Destination::sink},
      {"pear", "fruit", Destination::sink},
      {"peach", "fruit", Destination::sink},
      {"pringles can", "packaged", Destination::shelf},
      {"spam", "packaged", Destination::shelf},
      {"mustard bottle", "packaged", Destination::shelf},
      {"soup can", "packaged", Destination::shelf},
      {"cereal box", "packaged", Destination::shelf},
      {"ketchup bottle", "packaged", Destination::shelf},
  };
  return items;
}

Destination ground_truth(const std::string& object) {
  const Item* item = find_item(object);
  if (item == nullptr) fail("UnknownObject", "no such object '" + object + "'");
  return item->destination;
}

Destination lookup_predict(const DemoSet& demos, const std::string& object, SplitRng& rng) {
  return lookup_with_variate(demos, object, rng.uniform01());
}

Predictor make_predictor(const std::string& name) {
  if (name == "lookup") return lookup_with_variate;
  if (name == "always-sink") {
    return [](const DemoSet&, const std::string& object, double) {
      if (find_item(object) == nullptr) fail("UnknownObject", "no such object '" + object + "'");
      return Destination::sink;
    };
  }
  if (name == "category-majority") return category_majority;
  fail("SchemaError", "unknown predictor '" + name + "'");
}

std::vector<SweepRow> sweep(const Predictor& predictor, const SweepConfig& config) {
  if (!predictor) fail("SchemaError", "predictor is empty");
  if (config.max_combos < 1) fail("SchemaError", "max_combos must be positive");
  std::vector<int> ks = config.k_values;
  if (ks.empty()) {
    for (int k = 0; k <= kDomainSize; ++k) ks.push_back(k);
  }
  const std::vector<Item>& items = domain();
  const SplitRng root(config.seed);

  std::vector<SweepRow> rows;
  for (int k : ks) {
    if (k < 0 || k > kDomainSize) fail("SchemaError", "k outside the domain size");
    SplitRng subset_rng = root.split(static_cast<std::uint64_t>(k));
    SplitRng eval_rng = root.split(1000 + static_cast<std::uint64_t>(k));
    const std::vector<std::vector<int>> subsets = draw_subsets(k, config.max_combos, subset_rng);

    double ratio_sum = 0.0;
    for (const std::vector<int>& subset : subsets) {
      DemoSet demos;
      std::vector<bool> shown(items.size(), false);
      for (int i : subset) {
        demos.push_back({items[i].name, items[i].destination});
        shown[i] = true;
      }
      double score = 0.0;
      int evaluated = 0;
      for (std::size_t j = 0; j < items.size(); ++j) {
        if (config.only_remaining && shown[j]) continue;
        const double u = eval_rng.uniform01();
        // mirrored pair: a fair-coin guess contributes exactly 1/2
        const double hit =
            0.5 * ((predictor(demos, items[j].name, u) == items[j].destination ? 1.0 : 0.0) +
                   (predictor(demos, items[j].name, 1.0 - u) == items[j].destination ? 1.0 : 0.0));
        score += hit;
        evaluated += 1;
      }
      ratio_sum += evaluated > 0 ? score / evaluated : 1.0;
    }
    rows.push_back({k, ratio_sum / static_cast<double>(subsets.size()),
                    static_cast<int>(subsets.size())});
  }
  return rows;
}

double expected_lookup_accuracy(int k) {
  if (k < 0 || k > kDomainSize) fail("SchemaError", "k outside the domain size");
  return (k + (kDomainSize - k) * 0.5) / kDomainSize;
}

}  // namespace omnikit::place
