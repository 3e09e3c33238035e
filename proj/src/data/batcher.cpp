#include "attnkd/data/batcher.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace attnkd::data {

Batcher::Batcher(const Dataset& data, int batch_size, uint64_t seed, bool flip)
    : data_(&data), batch_size_(batch_size), flip_(flip), rng_(derive_seed(seed, "batcher")) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (static_cast<size_t>(batch_size) > data.size())
        throw std::invalid_argument("batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                                    std::to_string(data.size()));
}

void Batcher::start_epoch() {
    order_.resize(data_->size());
    std::iota(order_.begin(), order_.end(), size_t{0});
    rng_.shuffle(order_);
    position_ = 0;
    ++epoch_;
}

Batch Batcher::next() {
    if (epoch_ < 0 || position_ + static_cast<size_t>(batch_size_) > order_.size()) start_epoch();
    std::vector<size_t> idx(order_.begin() + static_cast<long>(position_),
                            order_.begin() + static_cast<long>(position_ + static_cast<size_t>(batch_size_)));
    position_ += static_cast<size_t>(batch_size_);
    Batch b = gather(*data_, idx);
    if (flip_) {
        const int64_t C = b.images.dim(1), H = b.images.dim(2), W = b.images.dim(3);
        for (int64_t n = 0; n < b.images.dim(0); ++n) {
            if (!rng_.bernoulli(0.5)) continue;
            for (int64_t c = 0; c < C; ++c)
                for (int64_t y = 0; y < H; ++y) {
                    float* row = b.images.ptr() + ((n * C + c) * H + y) * W;
                    std::reverse(row, row + W);
                }
        }
    }
    return b;
}

std::string Batcher::serialize() const {
    std::ostringstream out;
    out << epoch_ << " " << position_ << " " << order_.size();
    for (size_t i : order_) out << " " << i;
    out << "\n" << rng_.serialize();
    return out.str();
}

void Batcher::restore(const std::string& state) {
    std::istringstream in(state);
    int64_t epoch;
    size_t position, n;
    if (!(in >> epoch >> position >> n)) throw std::invalid_argument("malformed batcher state");
    std::vector<size_t> order(n);
    for (auto& i : order)
        if (!(in >> i) || i >= data_->size()) throw std::invalid_argument("malformed batcher state");
    in.ignore(1);
    const std::string rng_state((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    rng_ = Rng::deserialize(rng_state);
    epoch_ = epoch;
    position_ = position;
    order_ = std::move(order);
}

Batch gather(const Dataset& data, const std::vector<size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("empty batch");
    const Sample& first = data.samples.at(indices.front());
    const int64_t B = static_cast<int64_t>(indices.size());
    const int64_t per = first.image.numel(), K = first.labels.numel();
    Shape shape{B};
    shape.insert(shape.end(), first.image.shape().begin(), first.image.shape().end());
    Batch b;
    b.images = Tensor(shape);
    b.labels = Tensor({B, K});
    b.indices = indices;
    for (int64_t n = 0; n < B; ++n) {
        const Sample& s = data.samples.at(indices[static_cast<size_t>(n)]);
        std::copy(s.image.values().begin(), s.image.values().end(), b.images.ptr() + n * per);
        std::copy(s.labels.values().begin(), s.labels.values().end(), b.labels.ptr() + n * K);
    }
    return b;
}

}  // namespace attnkd::data
