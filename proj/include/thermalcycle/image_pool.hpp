#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "thermalcycle/tensor.hpp"

namespace thermalcycle {

/// History of generated images replayed to a discriminator.
///
/// While filling, every query is stored and returned unchanged. Once full,
/// each query returns a uniformly chosen stored image (which the query then
/// replaces) with probability 1/2, and the query itself otherwise.
class ImagePool {
 public:
  explicit ImagePool(std::size_t capacity = 50, std::uint64_t seed = 0);

  Tensor query(const Tensor& image);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return storage_.size(); }
  const std::vector<Tensor>& storage() const { return storage_; }

  /// Slot replaced by the most recent historical return, if any.
  std::optional<std::size_t> last_replaced_slot() const { return last_slot_; }

 private:
  std::size_t capacity_;
  std::vector<Tensor> storage_;
  std::mt19937_64 rng_;
  std::optional<std::size_t> last_slot_;
};

}  // namespace thermalcycle
