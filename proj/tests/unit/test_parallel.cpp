#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

#include "ngcn/parallel.hpp"

using ngcn::parallel_for;

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int jobs : {1, 2, 5}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1) << "jobs=" << jobs;
  }
}

TEST(ParallelFor, ZeroCountNeverCalls) {
  bool called = false;
  parallel_for(0, 4, [&](std::size_t) { called = true; });
  EXPECT_FALSE(called);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  for (int jobs : {1, 3}) {
    try {
      parallel_for(10, jobs, [](std::size_t i) {
        if (i == 7 || i == 4) throw std::runtime_error("index " + std::to_string(i));
      });
      FAIL() << "expected a throw";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "index 4");
    }
  }
}
