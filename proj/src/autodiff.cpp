#include "thermalcycle/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace thermalcycle {

Var Var::constant(Tensor value) {
  return Var(std::make_shared<const Tensor>(std::move(value)), nullptr, std::nullopt);
}

void GradSink::accumulate(std::size_t i, Tensor grad) {
  const auto& id = inputs_.at(i);
  if (!id) return;
  auto& slot = grads_[*id];
  if (slot) {
    slot->add_inplace(grad);
  } else {
    slot = std::move(grad);
  }
}

Tensor Gradients::of(const Var& leaf) const {
  if (leaf.node()) {
    if (auto it = grads_.find(*leaf.node()); it != grads_.end()) return it->second;
  }
  return Tensor(leaf.shape(), 0.0f);
}

bool Gradients::reached(const Var& leaf) const {
  return leaf.node() && grads_.contains(*leaf.node());
}

Var Tape::leaf(Tensor value) {
  const NodeId id = nodes_.size();
  nodes_.push_back(Node{"leaf", {}, nullptr});
  return Var(std::make_shared<const Tensor>(std::move(value)), this, id);
}

Var Tape::record(const char* kind, Tensor value, const std::vector<const Var*>& operands, BackwardFn backward) {
  std::vector<std::optional<NodeId>> inputs;
  inputs.reserve(operands.size());
  bool any = false;
  for (const Var* v : operands) {
    if (v->tracked() && v->tape() != this) {
      throw std::logic_error(std::string(kind) + ": operand recorded on a different tape");
    }
    inputs.push_back(v->node());
    any = any || v->tracked();
  }
  if (!any) return Var::constant(std::move(value));
  const NodeId id = nodes_.size();
  nodes_.push_back(Node{kind, std::move(inputs), std::move(backward)});
  return Var(std::make_shared<const Tensor>(std::move(value)), this, id);
}

Gradients Tape::backward(const Var& loss) const {
  if (loss.value().numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + loss.shape().str());
  }
  Gradients out;
  if (!loss.tracked()) return out;
  if (loss.tape() != this) throw std::logic_error("backward: loss belongs to a different tape");

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[*loss.node()] = Tensor::scalar(1.0f);
  for (NodeId id = *loss.node() + 1; id-- > 0;) {
    if (!grads[id]) continue;
    const Node& node = nodes_[id];
    if (!node.backward) {
      out.grads_.emplace(id, std::move(*grads[id]));
    } else {
      GradSink sink(grads, node.inputs);
      node.backward(*grads[id], sink);
    }
    grads[id].reset();
  }
  return out;
}

Tape* shared_tape(const std::vector<const Var*>& operands) {
  Tape* tape = nullptr;
  for (const Var* v : operands) {
    if (!v->tracked()) continue;
    if (tape && tape != v->tape()) throw std::logic_error("operands recorded on different tapes");
    tape = v->tape();
  }
  return tape;
}

namespace {

// Records on the operands' tape when one exists; otherwise returns a constant.
Var emit(const char* kind, Tensor value, const std::vector<const Var*>& operands, BackwardFn backward) {
  if (Tape* tape = shared_tape(operands)) return tape->record(kind, std::move(value), operands, std::move(backward));
  return Var::constant(std::move(value));
}

}  // namespace

Var ewise(EwiseKind kind, const Var& a, const Var& b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("ewise: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  const std::size_t n = out.numel();
  switch (kind) {
    case EwiseKind::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bv[i];
      return emit("add", std::move(out), {&a, &b}, [](const Tensor& g, GradSink& sink) {
        if (sink.wants(0)) sink.accumulate(0, g);
        if (sink.wants(1)) sink.accumulate(1, g);
      });
    case EwiseKind::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - bv[i];
      return emit("sub", std::move(out), {&a, &b}, [](const Tensor& g, GradSink& sink) {
        if (sink.wants(0)) sink.accumulate(0, g);
        if (sink.wants(1)) {
          Tensor ng(g.shape());
          for (std::size_t i = 0; i < g.numel(); ++i) ng[i] = -g[i];
          sink.accumulate(1, std::move(ng));
        }
      });
    case EwiseKind::mul: {
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bv[i];
      auto as = a.shared_value();
      auto bs = b.shared_value();
      return emit("mul", std::move(out), {&a, &b}, [as, bs](const Tensor& g, GradSink& sink) {
        if (sink.wants(0)) {
          Tensor ga(g.shape());
          for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * (*bs)[i];
          sink.accumulate(0, std::move(ga));
        }
        if (sink.wants(1)) {
          Tensor gb(g.shape());
          for (std::size_t i = 0; i < g.numel(); ++i) gb[i] = g[i] * (*as)[i];
          sink.accumulate(1, std::move(gb));
        }
      });
    }
  }
  throw std::logic_error("ewise: unknown kind");
}

namespace {

float softplus_value(float x) { return std::max(x, 0.0f) + std::log1p(std::exp(-std::abs(x))); }

float sigmoid_value(float x) {
  if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
  const float e = std::exp(x);
  return e / (1.0f + e);
}

}  // namespace

Var map_unary(UnaryKind kind, const Var& a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  const std::size_t n = out.numel();
  using Tag = UnaryKind::Tag;
  auto saved = [&] { return a.shared_value(); };

  switch (kind.tag) {
    case Tag::neg:
      for (std::size_t i = 0; i < n; ++i) out[i] = -av[i];
      return emit("neg", std::move(out), {&a}, [](const Tensor& g, GradSink& sink) {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = -g[i];
        sink.accumulate(0, std::move(ga));
      });
    case Tag::square: {
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * av[i];
      return emit("square", std::move(out), {&a}, [x = saved()](const Tensor& g, GradSink& sink) {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = 2.0f * (*x)[i] * g[i];
        sink.accumulate(0, std::move(ga));
      });
    }
    case Tag::abs: {
      for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(av[i]);
      return emit("abs", std::move(out), {&a}, [x = saved()](const Tensor& g, GradSink& sink) {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) {
          const float v = (*x)[i];
          ga[i] = v > 0.0f ? g[i] : (v < 0.0f ? -g[i] : 0.0f);
        }
        sink.accumulate(0, std::move(ga));
      });
    }
    case Tag::scale: {
      const float c = kind.factor;
      for (std::size_t i = 0; i < n; ++i) out[i] = c * av[i];
      return emit("scale", std::move(out), {&a}, [c](const Tensor& g, GradSink& sink) {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = c * g[i];
        sink.accumulate(0, std::move(ga));
      });
    }
    case Tag::softplus: {
      for (std::size_t i = 0; i < n; ++i) out[i] = softplus_value(av[i]);
      return emit("softplus", std::move(out), {&a}, [x = saved()](const Tensor& g, GradSink& sink) {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * sigmoid_value((*x)[i]);
        sink.accumulate(0, std::move(ga));
      });
    }
  }
  throw std::logic_error("map_unary: unknown kind");
}

Var reduce_mean(const Var& a) {
  const Tensor& av = a.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.numel(); ++i) acc += av[i];
  const std::size_t count = av.numel();
  const Shape in_shape = av.shape();
  return emit("reduce_mean", Tensor::scalar(static_cast<float>(acc / count)), {&a},
              [count, in_shape](const Tensor& g, GradSink& sink) {
                sink.accumulate(0, Tensor(in_shape, g.item() / static_cast<float>(count)));
              });
}

GradCheckResult grad_check(const ScalarFn& f, const Tensor& x, float eps, const std::vector<std::size_t>& coords) {
  if (!(eps > 0.0f)) throw std::invalid_argument("grad_check: eps must be positive");

  Tape tape;
  const Var probe = tape.leaf(x);
  const Var loss = f(probe);
  const Tensor analytic = tape.backward(loss).of(probe);

  std::vector<std::size_t> indices = coords;
  if (indices.empty()) {
    indices.resize(x.numel());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  }

  GradCheckResult result;
  bool first = true;
  Tensor moved = x;
  for (std::size_t i : indices) {
    const float original = x[i];
    const float up = original + eps;
    const float down = original - eps;
    moved[i] = up;
    const double plus = f(Var::constant(moved)).value().item();
    moved[i] = down;
    const double minus = f(Var::constant(moved)).value().item();
    moved[i] = original;

    // Divide by the step actually representable in float, not 2 * eps.
    const double numeric = (plus - minus) / (static_cast<double>(up) - static_cast<double>(down));
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (first || rel > result.max_rel_error) {
      first = false;
      result.max_rel_error = rel;
      result.worst_index = i;
      result.analytic = static_cast<float>(a);
      result.numeric = static_cast<float>(numeric);
    }
  }
  return result;
}

}  // namespace thermalcycle
