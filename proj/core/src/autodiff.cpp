#include "cadgl/autodiff.hpp"

#include <unordered_set>

#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl {

Tensor& detail::Node::ensure_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::grad() const { return node_->ensure_grad(); }

void Var::zero_grad() { node_->ensure_grad().fill(0.0); }

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(detail::Node&)> backward_fn) {
  Var out;
  out.node_ = std::make_shared<detail::Node>();
  out.node_->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) {
      out.node_->requires_grad = true;
      break;
    }
  }
  if (out.node_->requires_grad) {
    out.node_->parents.reserve(parents.size());
    for (auto& p : parents) out.node_->parents.push_back(p.node_ptr());
    out.node_->backward_fn = std::move(backward_fn);
  }
  return out;
}

BackwardStats backward(const Var& root) {
  if (!root.defined() || root.value().size() != 1) {
    throw ContractError(fmt::format("backward() needs a scalar root, got {}",
                                    root.defined() ? root.shape().str() : "undefined"));
  }
  BackwardStats stats;
  if (!root.requires_grad()) return stats;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(&root.node(), 0);
  seen.insert(&root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) {
    if (n->backward_fn) n->ensure_grad().fill(0.0);
  }
  root.node().ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    ++stats.nodes_visited;
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
  return stats;
}

Parameter::Parameter(std::string name, Tensor init)
    : name_(std::move(name)), var_(std::move(init), true) {}

Parameter ParameterStore::add(std::string name, Tensor init) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  params_.emplace_back(std::move(name), std::move(init));
  return params_.back();
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  const Parameter* p = find(name);
  if (p == nullptr) throw ReferenceError("unknown parameter: " + name);
  return *p;
}

Parameter& ParameterStore::at(const std::string& name) {
  return const_cast<Parameter&>(std::as_const(*this).at(name));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value().size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace cadgl
