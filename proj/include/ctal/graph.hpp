#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctal/rng.hpp"
#include "ctal/tensor.hpp"

namespace ctal {

// A named trainable tensor. The gradient buffer persists across steps so
// gradients can be accumulated over several backward passes before an
// optimizer update.
template <typename S>
struct Parameter {
  std::string name;
  size_t ordinal = 0;  // creation index within its store
  Tensor<S> value;

  Parameter(std::string n, Tensor<S> v) : name(std::move(n)), value(std::move(v)) {
    value.set_requires_grad(true);
    value.grad();  // allocate now, zeroed
  }
};

// Ordered collection of parameters. Iteration order is creation order, which
// fixes optimizer traversal, checkpoint layout and reduction order.
template <typename S>
class ParamStore {
public:
  Parameter<S>& create(const std::string& name, std::vector<Index> shape) {
    if (index_.count(name)) throw Error("duplicate parameter name: " + name);
    params_.push_back(std::make_unique<Parameter<S>>(name, Tensor<S>(std::move(shape))));
    index_[name] = params_.size() - 1;
    params_.back()->ordinal = params_.size() - 1;
    return *params_.back();
  }

  Parameter<S>& create_normal(const std::string& name, std::vector<Index> shape,
                              Rng& rng, double stddev) {
    auto& p = create(name, std::move(shape));
    for (Index i = 0; i < p.value.numel(); ++i)
      p.value[i] = static_cast<S>(normal(rng, 0.0, stddev));
    return p;
  }

  Parameter<S>& create_const(const std::string& name, std::vector<Index> shape, S v) {
    auto& p = create(name, std::move(shape));
    p.value.flat().setConstant(v);
    return p;
  }

  Parameter<S>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }
  const Parameter<S>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }

  Parameter<S>& at(const std::string& name) {
    auto* p = find(name);
    if (!p) throw Error("unknown parameter: " + name);
    return *p;
  }

  size_t size() const { return params_.size(); }
  Parameter<S>& operator[](size_t i) { return *params_[i]; }
  const Parameter<S>& operator[](size_t i) const { return *params_[i]; }

  Index total_elements() const {
    Index n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p->value.zero_grad();
  }

private:
  std::vector<std::unique_ptr<Parameter<S>>> params_;
  std::unordered_map<std::string, size_t> index_;
};

template <typename S>
class Graph;

// Lightweight handle to a node in a Graph.
template <typename S>
struct Var {
  Graph<S>* g = nullptr;
  int id = -1;

  const Tensor<S>& value() const { return g->val(id); }
  const std::vector<Index>& shape() const { return value().shape(); }
  bool valid() const { return g != nullptr && id >= 0; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order by construction; backward() walks the tape once in
// reverse. Values are computed eagerly at node creation.
template <typename S>
class Graph {
public:
  using BackFn = std::function<void(Graph&, int)>;

  struct Node {
    Tensor<S> value;
    std::vector<int> inputs;
    BackFn back;                      // empty for leaves
    Parameter<S>* bound = nullptr;    // set for parameter leaves
    const char* op = "";
    bool needs_grad = false;
  };

  Var<S> make(Tensor<S> value, std::vector<int> inputs, BackFn back, const char* op) {
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.back = std::move(back);
    n.op = op;
    for (int in : n.inputs)
      if (nodes_[in].needs_grad) n.needs_grad = true;
    nodes_.push_back(std::move(n));
    grads_.emplace_back();
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  // Non-differentiable data entering the graph.
  Var<S> input(Tensor<S> v, const char* op = "input") {
    bool rg = v.requires_grad();
    auto var = make(std::move(v), {}, nullptr, op);
    nodes_[var.id].needs_grad = rg;
    return var;
  }

  Var<S> constant(Tensor<S> v, const char* op = "const") { return input(std::move(v), op); }

  Var<S> scalar(S v) { return input(Tensor<S>::scalar(v), "scalar"); }

  // Parameter leaf; one node per parameter per graph so re-use inside a
  // forward pass aliases the same node.
  Var<S> leaf(Parameter<S>& p) {
    auto it = leaf_cache_.find(&p);
    if (it != leaf_cache_.end()) return {this, it->second};
    auto var = make(p.value, {}, nullptr, "param");
    nodes_[var.id].bound = &p;
    nodes_[var.id].needs_grad = true;
    leaf_cache_[&p] = var.id;
    return var;
  }

  Tensor<S>& val(int id) { return nodes_[id].value; }
  const Tensor<S>& val(int id) const { return nodes_[id].value; }
  const Node& node(int id) const { return nodes_[id]; }
  size_t size() const { return nodes_.size(); }

  bool wants_grad(int id) const { return nodes_[id].needs_grad; }

  // Gradient buffer for a node, allocated on first touch.
  VecX<S>& grad(int id) {
    if (grads_[id].size() == 0) grads_[id] = VecX<S>::Zero(nodes_[id].value.numel());
    return grads_[id];
  }

  bool grad_touched(int id) const { return grads_[id].size() != 0; }

  void accum(int id, const VecX<S>& delta) {
    if (!nodes_[id].needs_grad) return;
    grad(id) += delta;
  }

  template <typename Expr>
  void accum_expr(int id, const Expr& delta) {
    if (!nodes_[id].needs_grad) return;
    grad(id) += delta;
  }

  // Per-worker gradient destination for data-parallel batches; buffers are
  // aligned with parameter ordinals and reduced in a fixed order afterwards.
  struct GradSink {
    std::vector<VecX<S>> by_ordinal;

    explicit GradSink(const ParamStore<S>& ps) : by_ordinal(ps.size()) {}

    void reduce_into(ParamStore<S>& ps) {
      for (size_t i = 0; i < ps.size(); ++i)
        if (by_ordinal[i].size()) ps[i].value.grad() += by_ordinal[i];
    }
  };

  // Seeds d(loss)/d(loss)=1 and sweeps the tape backwards. Parameter leaves
  // accumulate into their persistent grad buffers (or the sink when given);
  // other leaves keep their node gradient readable through grad(id).
  void backward(Var<S> loss, GradSink* sink = nullptr) {
    if (loss.g != this) throw Error("backward: loss belongs to another graph");
    if (val(loss.id).numel() != 1)
      throw DimensionError("backward requires a scalar loss, got shape " +
                           shape_str(val(loss.id).shape()));
    grad(loss.id).setConstant(S(1));
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.needs_grad || !grad_touched(id)) continue;
      if (n.back) n.back(*this, id);
      if (n.bound) {
        if (sink) {
          auto& dst = sink->by_ordinal[n.bound->ordinal];
          if (!dst.size()) dst = VecX<S>::Zero(n.bound->value.numel());
          dst += grads_[id];
        } else {
          n.bound->value.grad() += grads_[id];
        }
      }
    }
  }

private:
  std::vector<Node> nodes_;
  std::vector<VecX<S>> grads_;
  std::unordered_map<const Parameter<S>*, int> leaf_cache_;
};

}  // namespace ctal
