#pragma once

// Reverse-mode automatic differentiation over Tensor values.
//
// Every differentiable op records its inputs and a backward function that is
// itself written in differentiable ops. Running grad() with create_graph=true
// therefore records the backward pass, which is what the gradient penalty and
// second-order attention mode differentiate through.

#include <functional>
#include <memory>
#include <vector>

#include "attnkd/core/tensor.hpp"

namespace attnkd::ad {

class Var;

struct BackwardContext {
    const Var& self;
    const Var& grad;
    const std::vector<Var>& inputs;
    const std::vector<bool>& needs;
};

using BackwardFn = std::function<std::vector<Var>(const BackwardContext&)>;

struct Node : std::enable_shared_from_this<Node> {
    Tensor value;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<Var> inputs;
    BackwardFn backward;
};

class Var {
public:
    Var() = default;
    explicit Var(Tensor value, bool requires_grad = false);

    static Var constant(Tensor value) { return Var(std::move(value), false); }
    static Var parameter(Tensor value) { return Var(std::move(value), true); }

    bool defined() const noexcept { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->value; }
    // Only leaves may be mutated (optimizer updates, checkpoint loads).
    Tensor& mutable_value();

    const Shape& shape() const { return node_->value.shape(); }
    int64_t dim(int i) const { return node_->value.dim(i); }
    int64_t numel() const { return node_->value.numel(); }
    float item() const { return node_->value.item(); }

    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool is_leaf() const { return !node_->backward; }
    const char* op_name() const { return node_->op; }
    void set_requires_grad(bool on);

    // New leaf holding a copy of the value.
    Var detach() const { return Var(node_->value, false); }

    Node* node() const noexcept { return node_.get(); }

private:
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;

    friend Var make_op(const char*, Tensor, std::vector<Var>, BackwardFn);
    friend std::vector<Var> grad(const Var&, const std::vector<Var>&, const Var&, bool);
};

bool grad_enabled();

class GradModeGuard {
public:
    explicit GradModeGuard(bool enabled);
    ~GradModeGuard();
    GradModeGuard(const GradModeGuard&) = delete;
    GradModeGuard& operator=(const GradModeGuard&) = delete;

private:
    bool previous_;
};

struct NoGradGuard : GradModeGuard {
    NoGradGuard() : GradModeGuard(false) {}
};

// Records an op result. When grad mode is off or no input requires a
// gradient, the result is a plain constant and `backward` is dropped.
Var make_op(const char* name, Tensor value, std::vector<Var> inputs, BackwardFn backward);

// Gradients of `output` (weighted by `grad_output`, default ones) with
// respect to each of `inputs`. Inputs the output does not depend on get zero
// gradients. With create_graph the returned gradients are differentiable.
std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, const Var& grad_output = Var(),
                      bool create_graph = false);

// Number of backward functions executed since process start (instrumentation).
uint64_t backward_calls();

}  // namespace attnkd::ad
