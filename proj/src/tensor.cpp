#include "infu/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace infu {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

std::string format_shape(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "}";
    return os.str();
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

void Node::accum_grad(std::span<const double> g) {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    return from(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, v), requires_grad);
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data,
                    bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    if (shape.empty())
        throw validation_error("tensor: rank-0 shape not supported");
    for (auto e : shape)
        if (e == 0) throw validation_error("tensor: zero extent in shape " + format_shape(shape));
    if (data.empty()) data.assign(n, 0.0);
    if (data.size() != n)
        throw validation_error("tensor: data length " + std::to_string(data.size()) +
                               " does not match shape " + format_shape(shape));
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

Tensor Tensor::randn(Rng& rng, std::vector<std::size_t> shape, double mean, double stddev,
                     bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    std::vector<double> d(n);
    std::normal_distribution<double> dist(mean, stddev);
    for (auto& v : d) v = dist(rng);
    return from(std::move(shape), std::move(d), requires_grad);
}

std::size_t Tensor::rows() const {
    if (n_->shape.size() != 2)
        throw validation_error("tensor: rows() on non-matrix shape " + format_shape(n_->shape));
    return n_->shape[0];
}

std::size_t Tensor::cols() const {
    if (n_->shape.size() != 2)
        throw validation_error("tensor: cols() on non-matrix shape " + format_shape(n_->shape));
    return n_->shape[1];
}

double Tensor::item() const {
    if (size() != 1)
        throw validation_error("tensor: item() on non-scalar shape " + format_shape(n_->shape));
    return n_->value[0];
}

std::span<const double> Tensor::grad() const {
    static const std::vector<double> empty;
    if (n_->grad.empty()) return empty;
    return n_->grad;
}

void Tensor::zero_grad() { n_->grad.clear(); }

Tensor Tensor::detach() const {
    return from(n_->shape, n_->value, false);
}

void Tensor::snap_to_f32() {
    for (auto& v : n_->value) v = static_cast<double>(static_cast<float>(v));
}

Tensor make_op_output(std::vector<std::size_t> shape, std::vector<double> value,
                      std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
    bool track = g_grad_enabled;
    if (track) {
        track = false;
        for (const auto& p : parents)
            if (p.requires_grad()) {
                track = true;
                break;
            }
    }
    Tensor out = Tensor::from(std::move(shape), std::move(value), track);
    if (track) {
        out.n_->parents = std::move(parents);
        out.n_->backward_fn = std::move(backward_fn);
    }
    return out;
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw validation_error("backward: loss must be a scalar tensor");
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS; post-order is a topological order here since
    // edges point from outputs to inputs.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.node(), 0});
    visited.insert(loss.node());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].node();
            if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    loss.node()->accum_grad(std::vector<double>{1.0});
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

}  // namespace infu
