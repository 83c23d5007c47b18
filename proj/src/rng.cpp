#include "omnikit/rng.hpp"

#include <algorithm>
#include <numeric>

#include "omnikit/error.hpp"

namespace omnikit {

std::vector<int> SplitRng::sample_subset(int n, int k) {
  if (k < 0 || k > n) fail("BadArgument", "sample_subset: k out of range");
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> SplitRng::permutation(int n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(uniform_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(ids[i], ids[j]);
  }
  return ids;
}

}  // namespace omnikit
