#include "thermalcycle/image_pool.hpp"

#include <utility>

namespace thermalcycle {

ImagePool::ImagePool(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  storage_.reserve(capacity_);
}

Tensor ImagePool::query(const Tensor& image) {
  last_slot_.reset();
  if (!storage_.empty()) require_same_shape(storage_.front().shape(), image.shape(), "image pool query");
  if (capacity_ == 0) return image;
  if (storage_.size() < capacity_) {
    storage_.push_back(image);
    return image;
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng_) < 0.5) {
    std::uniform_int_distribution<std::size_t> pick(0, capacity_ - 1);
    const std::size_t slot = pick(rng_);
    last_slot_ = slot;
    return std::exchange(storage_[slot], image);
  }
  return image;
}

}  // namespace thermalcycle
