#include "doctest.h"
#include "jamnet/verify/checks.hpp"

TEST_CASE("invariant suite passes") {
  for (const auto& r : jamnet::verify::run_invariant_suite(1)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.passed);
  }
}
