#include <catch_amalgamated.hpp>

#include <cmath>

#include "fieldforge/schedule.hpp"

using namespace fieldforge;
using schedule::LrSchedule;

TEST_CASE("default schedule hits its anchor points") {
  const LrSchedule s;
  CHECK(schedule::lr_at(0, s) == Catch::Approx(1e-5).margin(0.0));
  CHECK(schedule::lr_at(s.ramp_epochs, s) == Catch::Approx(1e-3).margin(0.0));
  // Halfway up the ramp, by direct arithmetic.
  CHECK(schedule::lr_at(3, s) ==
        Catch::Approx(1e-5 + (1e-3 - 1e-5) * 3.0 / 5.0).margin(1e-18));
  // One decay step past the plateau.
  CHECK(schedule::lr_at(s.ramp_epochs + 1, s) ==
        Catch::Approx(1e-5 + (1e-3 - 1e-5) * 0.8).margin(1e-18));
}

TEST_CASE("schedule decays to lr_min in the limit") {
  const LrSchedule s;
  CHECK(schedule::lr_at(400, s) == Catch::Approx(s.lr_min).margin(1e-12));
}

TEST_CASE("sustain phase holds lr_max") {
  LrSchedule s;
  s.sustain_epochs = 4;
  for (int epoch = s.ramp_epochs; epoch < s.ramp_epochs + s.sustain_epochs;
       ++epoch)
    CHECK(schedule::lr_at(epoch, s) == s.lr_max);
}

TEST_CASE("phase boundaries are continuous") {
  LrSchedule s;
  s.sustain_epochs = 3;
  // End of ramp meets the plateau, and the first decay step starts at
  // lr_max exactly: lr_min + (lr_max - lr_min) * decay^0.
  CHECK(schedule::lr_at(s.ramp_epochs, s) == s.lr_max);
  const double decay_start =
      s.lr_min + (s.lr_max - s.lr_min) * std::pow(s.decay, 0);
  CHECK(decay_start == s.lr_max);
}

TEST_CASE("schedule shape holds across parameterizations") {
  int checked = 0;
  for (int variant = 0; variant < 100; ++variant) {
    LrSchedule s;
    s.lr_start = 1e-6 + 1e-6 * (variant % 7);
    s.lr_min = s.lr_start / 2;
    s.lr_max = 1e-3 * (1 + variant % 5);
    s.ramp_epochs = 1 + variant % 9;
    s.sustain_epochs = variant % 4;
    s.decay = 0.70 + 0.0025 * variant; // [0.70, 0.9475]
    s.validate();

    const int decay_start = s.ramp_epochs + s.sustain_epochs;
    double prev = schedule::lr_at(0, s);
    CHECK(prev == s.lr_start);
    for (int epoch = 1; epoch <= decay_start + 40; ++epoch) {
      const double lr = schedule::lr_at(epoch, s);
      if (epoch <= s.ramp_epochs)
        REQUIRE(lr >= prev);
      else if (epoch <= decay_start)
        REQUIRE(lr == s.lr_max);
      else
        REQUIRE(lr < prev);
      REQUIRE(lr >= s.lr_min);
      REQUIRE(lr <= s.lr_max);
      prev = lr;
    }
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("schedule validation rejects inconsistent fields") {
  LrSchedule order;
  order.lr_start = 1e-3;
  order.lr_max = 1e-5;
  CHECK_THROWS_AS(order.validate(), std::invalid_argument);

  LrSchedule min_above;
  min_above.lr_min = 1e-2;
  CHECK_THROWS_AS(min_above.validate(), std::invalid_argument);

  LrSchedule decay1;
  decay1.decay = 1.0;
  CHECK_THROWS_AS(decay1.validate(), std::invalid_argument);

  LrSchedule decay0;
  decay0.decay = 0.0;
  CHECK_THROWS_AS(decay0.validate(), std::invalid_argument);

  LrSchedule nonpositive;
  nonpositive.lr_start = 0.0;
  nonpositive.lr_min = 0.0;
  CHECK_THROWS_AS(nonpositive.validate(), std::invalid_argument);
}
