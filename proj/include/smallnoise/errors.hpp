#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace smallnoise {

// Bad arguments, shapes, or non-finite inputs.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by ensemble estimators when a sample path blows up; single-path
// integrators report divergence in their result instead of throwing.
class diverged_path : public std::runtime_error {
 public:
  static constexpr std::uint64_t kNoPath = ~std::uint64_t{0};

  diverged_path(std::uint64_t path_index_, std::size_t step_, const std::string& what_)
      : std::runtime_error(what_), path_index(path_index_), step(step_) {}

  std::uint64_t path_index;
  std::size_t step;
};

}  // namespace smallnoise
