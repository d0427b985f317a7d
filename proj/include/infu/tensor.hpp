#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "infu/errors.hpp"
#include "infu/rng.hpp"

namespace infu {

class Tensor;

// One recorded operation output. Tensors are immutable after creation except
// for gradient accumulation and explicit parameter updates between steps.
struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    bool requires_grad = false;
    std::vector<double> grad;               // empty until first accumulation
    std::vector<Tensor> parents;            // keeps the recorded graph alive
    std::function<void(Node&)> backward_fn; // pulls grad into parents

    std::size_t size() const { return value.size(); }
    void accum_grad(std::span<const double> g);
};

// Value-semantics handle onto a shared Node.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double v, bool requires_grad = false);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor randn(Rng& rng, std::vector<std::size_t> shape, double mean = 0.0,
                        double stddev = 1.0, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(n_); }
    const std::vector<std::size_t>& shape() const { return n_->shape; }
    std::size_t size() const { return n_->value.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const { return n_->value; }
    std::span<double> mutable_data() { return n_->value; }
    double item() const;

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool b) { n_->requires_grad = b; }
    bool has_grad() const { return !n_->grad.empty(); }
    std::span<const double> grad() const;
    void zero_grad();

    // Copy of the values with no graph attached.
    Tensor detach() const;

    // Round every value through float; keeps parameters exactly representable
    // in the 32-bit checkpoint payload.
    void snap_to_f32();

    Node* node() const { return n_.get(); }

    friend void backward(const Tensor& loss);
    friend Tensor make_op_output(std::vector<std::size_t> shape, std::vector<double> value,
                                 std::vector<Tensor> parents,
                                 std::function<void(Node&)> backward_fn);

private:
    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}
    std::shared_ptr<Node> n_;
};

// Computes d(loss)/d(leaf) for every requires_grad leaf reachable from `loss`,
// visiting each recorded node exactly once in reverse topological order.
// Accumulates into existing grads; call zero_grad between uses.
void backward(const Tensor& loss);

// While alive, operations do not record backward functions and outputs do not
// require grad. Used for sampling and evaluation passes.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

// Builds an op output node, recording parents/backward only when grad mode is
// on and some parent requires grad.
Tensor make_op_output(std::vector<std::size_t> shape, std::vector<double> value,
                      std::vector<Tensor> parents, std::function<void(Node&)> backward_fn);

std::string format_shape(const std::vector<std::size_t>& shape);
std::size_t shape_numel(const std::vector<std::size_t>& shape);

}  // namespace infu
