#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cadgl {

// Compressed list of index groups: segment s covers members()[offsets[s],
// offsets[s+1]). Used for neighborhood aggregation and per-destination
// softmax.
class Segments {
 public:
  Segments() : offsets_{0} {}
  static Segments from_lists(const std::vector<std::vector<std::size_t>>& lists);
  // Segment s is the contiguous range [boundaries[s], boundaries[s+1]) of
  // 0..boundaries.back()-1.
  static Segments contiguous(std::vector<std::size_t> boundaries);

  std::size_t count() const { return offsets_.size() - 1; }
  std::size_t total() const { return members_.size(); }
  std::span<const std::size_t> operator[](std::size_t s) const {
    return {members_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
  }
  std::size_t segment_size(std::size_t s) const { return offsets_[s + 1] - offsets_[s]; }
  std::span<const std::size_t> members() const { return members_; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> members_;
};

}  // namespace cadgl
