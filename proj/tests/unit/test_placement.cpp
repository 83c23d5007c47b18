#include "omnikit/placement.hpp"

#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "omnikit/error.hpp"
#include "omnikit/rng.hpp"

using namespace omnikit;
using namespace omnikit::place;

namespace {

template <typename Fn>
std::string thrown_name(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.name();
  }
  return "";
}

DemoSet full_demos() {
  DemoSet demos;
  for (const Item& item : domain()) demos.push_back({item.name, item.destination});
  return demos;
}

}  // namespace

TEST_SUITE("placement domain") {
  TEST_CASE("twelve objects split evenly between sink and shelf") {
    const std::vector<Item>& items = domain();
    REQUIRE(items.size() == 12);
    int sink = 0;
    int shelf = 0;
    std::set<std::string> names;
    for (const Item& item : items) {
      names.insert(item.name);
      (item.destination == Destination::sink ? sink : shelf) += 1;
      if (item.category == "fruit") CHECK(item.destination == Destination::sink);
      if (item.category == "packaged") CHECK(item.destination == Destination::shelf);
      CHECK((item.category == "fruit" || item.category == "packaged"));
    }
    CHECK(names.size() == 12);
    CHECK(sink == 6);
    CHECK(shelf == 6);
  }

  TEST_CASE("ground truth matches the category rule") {
    CHECK(ground_truth("banana") == Destination::sink);
    CHECK(ground_truth("cereal box") == Destination::shelf);
    CHECK(thrown_name([] { ground_truth("toaster"); }) == "UnknownObject");
  }
}

TEST_SUITE("placement lookup") {
  TEST_CASE("demonstrated object returns its shown destination deterministically") {
    SplitRng rng(7);
    const DemoSet demos = {{"apple", Destination::sink}, {"spam", Destination::shelf}};
    for (int i = 0; i < 50; ++i) {
      CHECK(lookup_predict(demos, "apple", rng) == Destination::sink);
      CHECK(lookup_predict(demos, "spam", rng) == Destination::shelf);
    }
  }

  TEST_CASE("full demonstration set predicts every object correctly") {
    SplitRng rng(3);
    const DemoSet demos = full_demos();
    for (const Item& item : domain()) {
      CHECK(lookup_predict(demos, item.name, rng) == item.destination);
    }
  }

  TEST_CASE("unseen object guesses both destinations about equally often") {
    SplitRng rng(11);
    const DemoSet demos = {{"apple", Destination::sink}};
    int sink = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      if (lookup_predict(demos, "soup can", rng) == Destination::sink) sink += 1;
    }
    const double expected = n / 2.0;
    const double chi2 = 2.0 * (sink - expected) * (sink - expected) / expected;
    CHECK(chi2 < 10.83);  // 0.1% tail of chi-squared with one dof
  }

  TEST_CASE("unknown object is rejected") {
    SplitRng rng(1);
    const DemoSet demos;
    CHECK(thrown_name([&] { lookup_predict(demos, "kettle", rng); }) == "UnknownObject");
  }
}

TEST_SUITE("placement predictors") {
  TEST_CASE("registry resolves bundled names and rejects others") {
    CHECK(make_predictor("lookup"));
    CHECK(make_predictor("always-sink"));
    CHECK(make_predictor("category-majority"));
    CHECK(thrown_name([] { make_predictor("oracle"); }) == "SchemaError");
  }

  TEST_CASE("category majority generalizes from one demo per category") {
    const Predictor pred = make_predictor("category-majority");
    const DemoSet demos = {{"orange", Destination::sink}, {"spam", Destination::shelf}};
    for (const Item& item : domain()) {
      CHECK(pred(demos, item.name, 0.1) == item.destination);
      CHECK(pred(demos, item.name, 0.9) == item.destination);
    }
  }

  TEST_CASE("category majority falls back to the variate when uncovered") {
    const Predictor pred = make_predictor("category-majority");
    const DemoSet demos = {{"orange", Destination::sink}};
    CHECK(pred(demos, "soup can", 0.2) == Destination::sink);
    CHECK(pred(demos, "soup can", 0.8) == Destination::shelf);
  }
}

TEST_SUITE("placement sweep") {
  TEST_CASE("closed-form accuracy endpoints and midpoint") {
    CHECK(expected_lookup_accuracy(0) == 0.5);
    CHECK(expected_lookup_accuracy(12) == 1.0);
    CHECK(expected_lookup_accuracy(3) == 0.625);
    for (int k = 1; k <= 12; ++k) {
      CHECK(expected_lookup_accuracy(k) > expected_lookup_accuracy(k - 1));
    }
    CHECK(thrown_name([] { expected_lookup_accuracy(13); }) == "SchemaError");
  }

  TEST_CASE("lookup sweep reproduces the closed form at every k") {
    const std::vector<SweepRow> rows = sweep(make_predictor("lookup"));
    REQUIRE(rows.size() == 13);
    for (const SweepRow& row : rows) {
      CHECK(row.mean_ratio == doctest::Approx(expected_lookup_accuracy(row.k)).epsilon(1e-12));
    }
    CHECK(rows[0].mean_ratio == 0.5);
    CHECK(rows[3].mean_ratio == 0.625);
    CHECK(rows[6].mean_ratio == 0.75);
    CHECK(rows[9].mean_ratio == 0.875);
    CHECK(rows[12].mean_ratio == 1.0);
  }

  TEST_CASE("combo counts cap at fifteen and at the number of distinct subsets") {
    const std::vector<SweepRow> rows = sweep(make_predictor("lookup"));
    CHECK(rows[0].n_combos == 1);
    CHECK(rows[1].n_combos == 12);
    CHECK(rows[2].n_combos == 15);
    CHECK(rows[11].n_combos == 12);
    CHECK(rows[12].n_combos == 1);
  }

  TEST_CASE("sweep is bit-deterministic for a fixed seed") {
    const std::vector<SweepRow> a = sweep(make_predictor("lookup"));
    const std::vector<SweepRow> b = sweep(make_predictor("lookup"));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].mean_ratio == b[i].mean_ratio);
      CHECK(a[i].n_combos == b[i].n_combos);
    }
  }

  TEST_CASE("constant predictor scores exactly half at every k") {
    const std::vector<SweepRow> rows = sweep(make_predictor("always-sink"));
    for (const SweepRow& row : rows) CHECK(row.mean_ratio == 0.5);
  }

  TEST_CASE("ratios stay within the unit interval and are monotone for lookup") {
    const std::vector<SweepRow> rows = sweep(make_predictor("lookup"));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].mean_ratio >= 0.0);
      CHECK(rows[i].mean_ratio <= 1.0);
      if (i > 0) CHECK(rows[i].mean_ratio >= rows[i - 1].mean_ratio - 0.02);
    }
  }

  TEST_CASE("remaining-only evaluation scores the coin on unseen objects") {
    SweepConfig config;
    config.only_remaining = true;
    const std::vector<SweepRow> rows = sweep(make_predictor("lookup"), config);
    for (const SweepRow& row : rows) {
      if (row.k < 12) {
        CHECK(row.mean_ratio == doctest::Approx(0.5).epsilon(1e-12));
      } else {
        CHECK(row.mean_ratio == 1.0);  // nothing left to test
      }
    }
  }

  TEST_CASE("custom k values are honored in order") {
    SweepConfig config;
    config.k_values = {12, 0};
    const std::vector<SweepRow> rows = sweep(make_predictor("lookup"), config);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].k == 12);
    CHECK(rows[0].mean_ratio == 1.0);
    CHECK(rows[1].k == 0);
    CHECK(rows[1].mean_ratio == 0.5);
  }

  TEST_CASE("invalid configurations are rejected") {
    CHECK(thrown_name([] {
            SweepConfig config;
            config.k_values = {13};
            sweep(make_predictor("lookup"), config);
          }) == "SchemaError");
    CHECK(thrown_name([] {
            SweepConfig config;
            config.max_combos = 0;
            sweep(make_predictor("lookup"), config);
          }) == "SchemaError");
    CHECK(thrown_name([] { sweep(Predictor{}); }) == "SchemaError");
  }
}
