#pragma once

#include <string>
#include <vector>

#include "majorantlab/rvfunc.hpp"

namespace testfam {

using majorantlab::rv::RegVaryFn;
using majorantlab::rv::SlowlyVaryingSpec;

inline RegVaryFn xlogx() { return RegVaryFn::make(1.0, SlowlyVaryingSpec::log_power(1.0)); }
inline RegVaryFn xlog2x() { return RegVaryFn::make(1.0, SlowlyVaryingSpec::log_power(2.0)); }
inline RegVaryFn power15() { return RegVaryFn::make(1.5, SlowlyVaryingSpec::constant_one()); }

struct Named {
  std::string name;
  RegVaryFn f;
};

inline std::vector<Named> supported() {
  return {
      {"x log x", xlogx()},
      {"x (log x)^2", xlog2x()},
      {"x exp((log x)^0.5)", RegVaryFn::make(1.0, SlowlyVaryingSpec::exp_log_power(1.0, 0.5))},
      {"x log log x", RegVaryFn::make(1.0, SlowlyVaryingSpec::iterated_log(2))},
      {"x^1.5", power15()},
      {"x^1.1 log x", RegVaryFn::make(1.1, SlowlyVaryingSpec::log_power(1.0))},
      {"x^1.9 (log x)^0.5", RegVaryFn::make(1.9, SlowlyVaryingSpec::log_power(0.5))},
  };
}

}  // namespace testfam
