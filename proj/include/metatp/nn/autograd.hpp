#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <vector>

namespace metatp::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// One value on the tape. Parameters are long-lived nodes without inputs;
// intermediate nodes keep their inputs alive until the graph is dropped.
struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows back
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  bool has_grad() const { return grad.size() != 0; }
  // Zero-initialized gradient buffer with the value's shape.
  Matrix& grad_buffer() {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    return grad;
  }
  void accumulate(const Eigen::Ref<const Matrix>& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

using NodePtr = std::shared_ptr<Node>;

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }
  double scalar() const { return node_->value(0, 0); }

 private:
  NodePtr node_;
};

Var constant(Matrix value);
// Trainable leaf.
Var parameter(Matrix value);

// Records an op. When grad mode is off or no input requires grad, the
// inputs and closure are dropped and the result is a constant.
Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backward);

// Reverse sweep from a 1x1 root seeded with 1.
void backward(const Var& root);

bool grad_enabled();

// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace metatp::nn
