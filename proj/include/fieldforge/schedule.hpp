#pragma once

#include <cmath>
#include <stdexcept>

namespace fieldforge::schedule {

// Learning-rate curve: linear ramp to lr_max, optional sustain, then
// exponential decay toward lr_min. Continuous at both phase boundaries.
struct LrSchedule {
  double lr_start = 1e-5;
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  int ramp_epochs = 5;
  int sustain_epochs = 0;
  double decay = 0.8;

  void validate() const {
    if (!(lr_min > 0.0 && lr_start > 0.0 && lr_max > 0.0))
      throw std::invalid_argument("LrSchedule: rates must be positive");
    if (!(lr_min <= lr_start && lr_start <= lr_max))
      throw std::invalid_argument(
          "LrSchedule: requires lr_min <= lr_start <= lr_max");
    if (!(decay > 0.0 && decay < 1.0))
      throw std::invalid_argument("LrSchedule: decay must lie in (0,1)");
    if (ramp_epochs < 0 || sustain_epochs < 0)
      throw std::invalid_argument("LrSchedule: negative phase length");
  }
};

inline double lr_at(int epoch, const LrSchedule& s) {
  if (epoch < 0)
    throw std::invalid_argument("lr_at: negative epoch");
  if (epoch < s.ramp_epochs)
    return s.lr_start +
           (s.lr_max - s.lr_start) * static_cast<double>(epoch) / s.ramp_epochs;
  if (epoch < s.ramp_epochs + s.sustain_epochs)
    return s.lr_max;
  const int k = epoch - s.ramp_epochs - s.sustain_epochs;
  return s.lr_min + (s.lr_max - s.lr_min) * std::pow(s.decay, k);
}

} // namespace fieldforge::schedule
