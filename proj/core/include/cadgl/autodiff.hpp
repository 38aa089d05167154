#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "cadgl/tensor.hpp"

namespace cadgl {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // empty until first touched by backward()
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
};

}  // namespace detail

// Handle to a node in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  // Gradient of the last backward root with respect to this node. Zero-filled
  // if backward never reached it.
  const Tensor& grad() const;
  Tensor& mutable_value() { return node_->value; }

  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rows() const { return shape().rows; }
  std::size_t cols() const { return shape().cols; }
  bool requires_grad() const { return node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  void zero_grad();

  detail::Node& node() const { return *node_; }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  friend Var make_op(Tensor value, std::vector<Var> parents,
                     std::function<void(detail::Node&)> backward_fn);
  std::shared_ptr<detail::Node> node_;
};

// Builds an interior node. If no parent requires a gradient the result is a
// constant and the backward rule is dropped.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(detail::Node&)> backward_fn);

struct BackwardStats {
  std::size_t nodes_visited = 0;
};

// Reverse-mode sweep from a [1 x 1] root. Interior gradients are reset at the
// start of every call; leaf gradients accumulate (+=) until zero_grad().
BackwardStats backward(const Var& root);

// A named trainable leaf.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor init);

  const std::string& name() const { return name_; }
  const Var& var() const { return var_; }
  const Tensor& value() const { return var_.value(); }
  Tensor& mutable_value() { return var_.mutable_value(); }
  const Tensor& grad() const { return var_.grad(); }
  void zero_grad() { var_.zero_grad(); }
  const Shape& shape() const { return var_.shape(); }

  operator const Var&() const { return var_; }

 private:
  std::string name_;
  Var var_;
};

// Ordered set of parameters with unique names. Registration order is the
// iteration order and the checkpoint order.
class ParameterStore {
 public:
  // Returns a handle sharing the stored node.
  Parameter add(std::string name, Tensor init);
  const Parameter& at(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter* find(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grads();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace cadgl
