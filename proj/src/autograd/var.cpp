#include "attnkd/autograd/var.hpp"

#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "attnkd/autograd/ops.hpp"

namespace attnkd::ad {
namespace {
thread_local bool g_grad_enabled = true;
uint64_t g_backward_calls = 0;
}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

Tensor& Var::mutable_value() {
    if (!is_leaf()) throw std::logic_error("cannot mutate the value of a non-leaf Var");
    return node_->value;
}

void Var::set_requires_grad(bool on) {
    if (!is_leaf()) throw std::logic_error("requires_grad can only be changed on leaves");
    node_->requires_grad = on;
}

bool grad_enabled() { return g_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) { g_grad_enabled = enabled; }
GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

Var make_op(const char* name, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    bool any = false;
    if (g_grad_enabled) {
        for (const Var& v : inputs) any = any || v.requires_grad();
    }
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = name;
    if (any) {
        n->requires_grad = true;
        n->inputs = std::move(inputs);
        n->backward = std::move(backward);
    }
    return Var(std::move(n));
}

uint64_t backward_calls() { return g_backward_calls; }

std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, const Var& grad_output,
                      bool create_graph) {
    if (!output.defined()) throw std::invalid_argument("grad: undefined output");

    std::unordered_set<const Node*> targets;
    for (const Var& v : inputs) targets.insert(v.node());

    // Post-order topological sort (inputs before consumers).
    std::vector<Node*> order;
    std::unordered_map<const Node*, bool> needed;
    {
        struct Frame {
            Node* node;
            size_t next;
        };
        std::vector<Frame> stack{{output.node(), 0}};
        std::unordered_set<const Node*> visited{output.node()};
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < f.node->inputs.size()) {
                Node* child = f.node->inputs[f.next++].node();
                if (child->requires_grad && visited.insert(child).second) stack.push_back({child, 0});
                continue;
            }
            Node* n = f.node;
            stack.pop_back();
            bool need = targets.count(n) > 0;
            for (const Var& in : n->inputs) {
                auto it = needed.find(in.node());
                if (it != needed.end() && it->second) need = true;
            }
            needed[n] = need;
            order.push_back(n);
        }
    }

    std::unordered_map<const Node*, Var> grads;
    grads[output.node()] = grad_output.defined() ? grad_output : Var(Tensor::ones(output.shape()));

    GradModeGuard mode(create_graph);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!needed[n] || !n->backward) continue;
        auto git = grads.find(n);
        if (git == grads.end()) continue;
        const Var g = git->second;
        if (!targets.count(n)) grads.erase(git);

        std::vector<bool> needs(n->inputs.size());
        bool any = false;
        for (size_t i = 0; i < n->inputs.size(); ++i) {
            const Node* in = n->inputs[i].node();
            needs[i] = in->requires_grad && needed.count(in) && needed[in];
            any = any || needs[i];
        }
        if (!any) continue;

        const Var self(n->shared_from_this());
        ++g_backward_calls;
        const BackwardContext ctx{self, g, n->inputs, needs};
        std::vector<Var> in_grads = n->backward(ctx);
        for (size_t i = 0; i < n->inputs.size(); ++i) {
            if (!needs[i]) continue;
            if (i >= in_grads.size() || !in_grads[i].defined())
                throw std::logic_error(std::string("backward of ") + n->op + " returned no gradient for input " +
                                       std::to_string(i));
            const Node* in = n->inputs[i].node();
            if (in_grads[i].shape() != in->value.shape())
                throw std::logic_error(std::string("backward of ") + n->op + " produced gradient of shape " +
                                       shape_str(in_grads[i].shape()) + " for input of shape " +
                                       shape_str(in->value.shape()));
            auto found = grads.find(in);
            if (found == grads.end()) grads.emplace(in, std::move(in_grads[i]));
            else found->second = add(found->second, in_grads[i]);
        }
    }

    std::vector<Var> result;
    result.reserve(inputs.size());
    for (const Var& v : inputs) {
        auto it = grads.find(v.node());
        if (it != grads.end()) result.push_back(it->second);
        else result.push_back(Var(Tensor(v.shape(), 0.0f)));
    }
    return result;
}

}  // namespace attnkd::ad
