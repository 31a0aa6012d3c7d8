#ifndef DMLE2E_GRAD_SUITE_HPP
#define DMLE2E_GRAD_SUITE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dmle2e/grad/check.hpp"

namespace dmle2e::grad {

struct NamedCheck {
  std::string name;
  GradientCheck result;
};

/// Finite-difference check of every primitive in ops.hpp at a random point.
/// Each primitive output is contracted with a fixed random weight to form a scalar.
std::vector<NamedCheck> check_primitives(std::uint64_t seed, double h = 1e-5);

}  // namespace dmle2e::grad

#endif  // DMLE2E_GRAD_SUITE_HPP
