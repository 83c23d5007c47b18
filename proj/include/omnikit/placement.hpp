#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "omnikit/rng.hpp"

namespace omnikit::place {

enum class Destination { sink, shelf };

std::string to_string(Destination d);

struct Item {
  std::string name;
  std::string category;  // fruit | packaged
  Destination destination = Destination::sink;
};

// twelve kitchen objects, six fresh produce bound for the sink and six
// packaged goods bound for the shelf
const std::vector<Item>& domain();

Destination ground_truth(const std::string& object);

struct Demo {
  std::string object;
  Destination destination = Destination::sink;
};
using DemoSet = std::vector<Demo>;

// a demonstrated object keeps its shown destination, anything else is a
// fair coin flip
Destination lookup_predict(const DemoSet& demos, const std::string& object, SplitRng& rng);

// Predictors draw any tie-breaking randomness from the single uniform variate
// they are handed, which lets the sweep pair every draw with its mirror and
// cancel coin-flip noise exactly instead of averaging it down.
using Predictor = std::function<Destination(const DemoSet&, const std::string&, double)>;

// lookup | always-sink | category-majority
Predictor make_predictor(const std::string& name);

struct SweepConfig {
  std::vector<int> k_values;    // empty means 0..12
  int max_combos = 15;          // per k; all combinations when fewer exist
  std::uint64_t seed = 42;
  bool only_remaining = false;  // score only objects outside the demo set
};

struct SweepRow {
  int k = 0;
  double mean_ratio = 0.0;
  int n_combos = 0;
};

std::vector<SweepRow> sweep(const Predictor& predictor, const SweepConfig& config = {});

// closed-form mean accuracy of the lookup baseline over the full domain
double expected_lookup_accuracy(int k);

}  // namespace omnikit::place
