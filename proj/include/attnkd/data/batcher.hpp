#pragma once

#include <string>
#include <vector>

#include "attnkd/core/rng.hpp"
#include "attnkd/core/types.hpp"
#include "attnkd/data/dataset.hpp"

namespace attnkd::data {

struct Batch {
    Tensor images;  // (B, 3, H, W)
    Tensor labels;  // (B, K)
    std::vector<size_t> indices;
};

// Epoch-wise seeded shuffle; the last partial batch of each epoch is dropped.
class Batcher {
public:
    Batcher(const Dataset& data, int batch_size, uint64_t seed, bool flip = false);

    Batch next();
    size_t batches_per_epoch() const { return data_->size() / static_cast<size_t>(batch_size_); }
    int64_t epoch() const { return epoch_; }

    std::string serialize() const;
    void restore(const std::string& state);

private:
    void start_epoch();

    const Dataset* data_;
    int batch_size_;
    bool flip_;
    Rng rng_;
    std::vector<size_t> order_;
    size_t position_ = 0;
    int64_t epoch_ = -1;
};

Batch gather(const Dataset& data, const std::vector<size_t>& indices);

}  // namespace attnkd::data
