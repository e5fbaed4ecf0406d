#include "plus/rng.hpp"

#include "plus/text.hpp"

namespace plus {

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t id) noexcept {
  return combine(combine(master, fnv1a64(stage)), id);
}

}  // namespace plus
