#include "depthgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace depthgan {

namespace {

int64_t next_id() {
  static int64_t counter = 0;
  return ++counter;
}

Var make_node(Tensor val, std::vector<Var> parents, Vjp vjp) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  bool rg = false;
  for (const auto& p : n->parents) rg = rg || (p && p->requires_grad);
  n->requires_grad = rg;
  if (rg) n->vjp = std::move(vjp);
  n->id = next_id();
  return n;
}

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  Shape out;
  for (int i = 0; i < 4; ++i) {
    const int da = a.dim(i), db = b.dim(i);
    check_arg(da == db || da == 1 || db == 1,
              std::string(op) + ": shapes " + a.str() + " and " + b.str() +
                  " do not broadcast");
    out.set_dim(i, std::max(da, db));
  }
  return out;
}

void strides_for(const Shape& s, const Shape& out, int64_t st[4]) {
  int64_t acc = 1;
  int64_t full[4];
  for (int i = 3; i >= 0; --i) {
    full[i] = acc;
    acc *= s.dim(i);
  }
  for (int i = 0; i < 4; ++i) st[i] = (s.dim(i) == out.dim(i)) ? full[i] : 0;
}

template <class F>
Tensor ew_binary(const Tensor& a, const Tensor& b, F f, const char* op) {
  if (a.shape == b.shape) {
    Tensor r(a.shape);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) r.v[i] = f(a.v[i], b.v[i]);
    return r;
  }
  const Shape out = broadcast_shape(a.shape, b.shape, op);
  Tensor r(out);
  int64_t sa[4], sb[4];
  strides_for(a.shape, out, sa);
  strides_for(b.shape, out, sb);
  int64_t idx = 0;
  for (int n = 0; n < out.n; ++n)
    for (int c = 0; c < out.c; ++c)
      for (int h = 0; h < out.h; ++h) {
        const int64_t base_a = n * sa[0] + c * sa[1] + h * sa[2];
        const int64_t base_b = n * sb[0] + c * sb[1] + h * sb[2];
        for (int w = 0; w < out.w; ++w)
          r.v[idx++] = f(a.v[base_a + w * sa[3]], b.v[base_b + w * sb[3]]);
      }
  return r;
}

template <class F>
Tensor ew_unary(const Tensor& a, F f) {
  Tensor r(a.shape);
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) r.v[i] = f(a.v[i]);
  return r;
}

Tensor reduce_sum_to_impl(const Tensor& a, const Shape& s) {
  for (int i = 0; i < 4; ++i)
    check_arg(s.dim(i) == a.shape.dim(i) || s.dim(i) == 1,
              "reduce_sum_to: cannot reduce " + a.shape.str() + " to " + s.str());
  Tensor r(s);
  int64_t st[4];
  strides_for(s, a.shape, st);
  int64_t idx = 0;
  for (int n = 0; n < a.shape.n; ++n)
    for (int c = 0; c < a.shape.c; ++c)
      for (int h = 0; h < a.shape.h; ++h) {
        const int64_t base = n * st[0] + c * st[1] + h * st[2];
        for (int w = 0; w < a.shape.w; ++w)
          r.v[base + w * st[3]] += a.v[idx++];
      }
  return r;
}

Tensor broadcast_to_impl(const Tensor& a, const Shape& s) {
  for (int i = 0; i < 4; ++i)
    check_arg(a.shape.dim(i) == s.dim(i) || a.shape.dim(i) == 1,
              "broadcast_to: cannot broadcast " + a.shape.str() + " to " + s.str());
  Tensor r(s);
  int64_t st[4];
  strides_for(a.shape, s, st);
  int64_t idx = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < s.h; ++h) {
        const int64_t base = n * st[0] + c * st[1] + h * st[2];
        for (int w = 0; w < s.w; ++w) r.v[idx++] = a.v[base + w * st[3]];
      }
  return r;
}

}  // namespace

namespace detail {
Var make_node(Tensor val, std::vector<Var> parents, Vjp vjp) {
  return depthgan::make_node(std::move(val), std::move(parents), std::move(vjp));
}
}  // namespace detail

Node::~Node() {
  // Steal sole-owned parents into a worklist so long chains do not unwind
  // through recursive shared_ptr destructors.
  std::vector<Var> work;
  work.swap(parents);
  while (!work.empty()) {
    Var p = std::move(work.back());
    work.pop_back();
    if (p && p.use_count() == 1) {
      for (auto& q : p->parents) work.push_back(std::move(q));
      p->parents.clear();
    }
  }
}

Var constant(Tensor t) { return make_node(std::move(t), {}, nullptr); }

Var constant_scalar(Scalar x) { return constant(Tensor::scalar(x)); }

Var leaf(Tensor t) {
  auto n = make_node(std::move(t), {}, nullptr);
  n->requires_grad = true;
  return n;
}

Var detach(const Var& x) { return constant(x->val); }

const Tensor& value(const Var& x) { return x->val; }

Var add(const Var& a, const Var& b) {
  return make_node(
      ew_binary(a->val, b->val, [](Scalar x, Scalar y) { return x + y; }, "add"),
      {a, b}, [](Node* self, const Var& g) -> std::vector<Var> {
        return {reduce_sum_to(g, self->parents[0]->val.shape),
                reduce_sum_to(g, self->parents[1]->val.shape)};
      });
}

Var sub(const Var& a, const Var& b) {
  return make_node(
      ew_binary(a->val, b->val, [](Scalar x, Scalar y) { return x - y; }, "sub"),
      {a, b}, [](Node* self, const Var& g) -> std::vector<Var> {
        return {reduce_sum_to(g, self->parents[0]->val.shape),
                reduce_sum_to(neg(g), self->parents[1]->val.shape)};
      });
}

Var mul(const Var& a, const Var& b) {
  return make_node(
      ew_binary(a->val, b->val, [](Scalar x, Scalar y) { return x * y; }, "mul"),
      {a, b}, [](Node* self, const Var& g) -> std::vector<Var> {
        const Var& pa = self->parents[0];
        const Var& pb = self->parents[1];
        Var ga, gb;
        if (pa->requires_grad) ga = reduce_sum_to(mul(g, pb), pa->val.shape);
        if (pb->requires_grad) gb = reduce_sum_to(mul(g, pa), pb->val.shape);
        return {ga, gb};
      });
}

Var div(const Var& a, const Var& b) {
  return make_node(
      ew_binary(a->val, b->val, [](Scalar x, Scalar y) { return x / y; }, "div"),
      {a, b}, [](Node* self, const Var& g) -> std::vector<Var> {
        const Var& pa = self->parents[0];
        const Var& pb = self->parents[1];
        Var ga, gb;
        if (pa->requires_grad) ga = reduce_sum_to(div(g, pb), pa->val.shape);
        if (pb->requires_grad)
          gb = reduce_sum_to(neg(div(mul(g, pa), mul(pb, pb))), pb->val.shape);
        return {ga, gb};
      });
}

Var neg(const Var& a) {
  return make_node(ew_unary(a->val, [](Scalar x) { return -x; }), {a},
                   [](Node*, const Var& g) -> std::vector<Var> { return {neg(g)}; });
}

Var scale(const Var& a, Scalar k) {
  return make_node(ew_unary(a->val, [k](Scalar x) { return k * x; }), {a},
                   [k](Node*, const Var& g) -> std::vector<Var> {
                     return {scale(g, k)};
                   });
}

Var add_scalar(const Var& a, Scalar k) {
  return make_node(ew_unary(a->val, [k](Scalar x) { return x + k; }), {a},
                   [](Node*, const Var& g) -> std::vector<Var> { return {g}; });
}

Var pow_scalar(const Var& a, Scalar p) {
  return make_node(ew_unary(a->val, [p](Scalar x) { return std::pow(x, p); }),
                   {a}, [p](Node* self, const Var& g) -> std::vector<Var> {
                     return {mul(g, scale(pow_scalar(self->parents[0], p - 1.0), p))};
                   });
}

Var exp(const Var& a) {
  Tensor y = ew_unary(a->val, [](Scalar x) { return std::exp(x); });
  Tensor dy = y;
  return make_node(std::move(y), {a},
                   [dy](Node*, const Var& g) -> std::vector<Var> {
                     return {mul(g, constant(dy))};
                   });
}

Var log(const Var& a) {
  return make_node(ew_unary(a->val, [](Scalar x) { return std::log(x); }), {a},
                   [](Node* self, const Var& g) -> std::vector<Var> {
                     return {div(g, self->parents[0])};
                   });
}

Var tanh(const Var& a) {
  Tensor y = ew_unary(a->val, [](Scalar x) { return std::tanh(x); });
  Tensor dy = ew_unary(y, [](Scalar t) { return 1.0 - t * t; });
  return make_node(std::move(y), {a},
                   [dy](Node*, const Var& g) -> std::vector<Var> {
                     return {mul(g, constant(dy))};
                   });
}

Var sigmoid(const Var& a) {
  Tensor y = ew_unary(a->val, [](Scalar x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  Tensor dy = ew_unary(y, [](Scalar s) { return s * (1.0 - s); });
  return make_node(std::move(y), {a},
                   [dy](Node*, const Var& g) -> std::vector<Var> {
                     return {mul(g, constant(dy))};
                   });
}

Var softplus(const Var& a) {
  Tensor y = ew_unary(a->val, [](Scalar x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  Tensor dy = ew_unary(a->val, [](Scalar x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  return make_node(std::move(y), {a},
                   [dy](Node*, const Var& g) -> std::vector<Var> {
                     return {mul(g, constant(dy))};
                   });
}

Var square(const Var& a) { return mul(a, a); }

Var abs(const Var& a) {
  return make_node(ew_unary(a->val, [](Scalar x) { return std::abs(x); }), {a},
                   [](Node* self, const Var& g) -> std::vector<Var> {
                     Tensor m = ew_unary(self->parents[0]->val, [](Scalar x) {
                       return x >= 0 ? 1.0 : -1.0;
                     });
                     return {mul(g, constant(std::move(m)))};
                   });
}

Var leaky_relu(const Var& a, Scalar slope, Scalar gain) {
  Tensor y = ew_unary(a->val, [slope, gain](Scalar x) {
    return (x >= 0 ? x : slope * x) * gain;
  });
  return make_node(std::move(y), {a},
                   [slope, gain](Node* self, const Var& g) -> std::vector<Var> {
                     Tensor m = ew_unary(self->parents[0]->val, [slope, gain](Scalar x) {
                       return (x >= 0 ? 1.0 : slope) * gain;
                     });
                     return {mul(g, constant(std::move(m)))};
                   });
}

Var clamp_away_from_zero(const Var& a, Scalar eps) {
  Tensor y = ew_unary(a->val, [eps](Scalar x) {
    if (std::abs(x) >= eps) return x;
    return x >= 0 ? eps : -eps;
  });
  return make_node(std::move(y), {a},
                   [eps](Node* self, const Var& g) -> std::vector<Var> {
                     Tensor m = ew_unary(self->parents[0]->val, [eps](Scalar x) {
                       return std::abs(x) >= eps ? 1.0 : 0.0;
                     });
                     return {mul(g, constant(std::move(m)))};
                   });
}

Var reshape(const Var& a, Shape s) {
  check_arg(s.numel() == a->val.numel(),
            "reshape: numel mismatch " + a->val.shape.str() + " -> " + s.str());
  Tensor t = a->val;
  t.shape = s;
  return make_node(std::move(t), {a},
                   [](Node* self, const Var& g) -> std::vector<Var> {
                     return {reshape(g, self->parents[0]->val.shape)};
                   });
}

Var reduce_sum_to(const Var& a, Shape s) {
  if (a->val.shape == s) return a;
  return make_node(reduce_sum_to_impl(a->val, s), {a},
                   [](Node* self, const Var& g) -> std::vector<Var> {
                     return {broadcast_to(g, self->parents[0]->val.shape)};
                   });
}

Var broadcast_to(const Var& a, Shape s) {
  if (a->val.shape == s) return a;
  return make_node(broadcast_to_impl(a->val, s), {a},
                   [](Node* self, const Var& g) -> std::vector<Var> {
                     return {reduce_sum_to(g, self->parents[0]->val.shape)};
                   });
}

Var sum_all(const Var& a) { return reduce_sum_to(a, Shape(1, 1, 1, 1)); }

Var mean_all(const Var& a) {
  return scale(sum_all(a), 1.0 / static_cast<Scalar>(a->val.numel()));
}

Var concat_c(const std::vector<Var>& xs) {
  check_arg(!xs.empty(), "concat_c: empty input list");
  const Shape& s0 = xs[0]->val.shape;
  int total_c = 0;
  for (const auto& x : xs) {
    const Shape& s = x->val.shape;
    check_arg(s.n == s0.n && s.h == s0.h && s.w == s0.w,
              "concat_c: incompatible shapes " + s0.str() + " vs " + s.str());
    total_c += s.c;
  }
  Tensor out(Shape(s0.n, total_c, s0.h, s0.w));
  const int64_t plane = static_cast<int64_t>(s0.h) * s0.w;
  for (int n = 0; n < s0.n; ++n) {
    int c_off = 0;
    for (const auto& x : xs) {
      const int xc = x->val.shape.c;
      std::copy_n(x->val.data() + static_cast<int64_t>(n) * xc * plane, xc * plane,
                  out.data() + (static_cast<int64_t>(n) * total_c + c_off) * plane);
      c_off += xc;
    }
  }
  std::vector<Var> parents(xs.begin(), xs.end());
  return make_node(std::move(out), std::move(parents),
                   [](Node* self, const Var& g) -> std::vector<Var> {
                     std::vector<Var> grads;
                     int c_off = 0;
                     for (const auto& p : self->parents) {
                       const int pc = p->val.shape.c;
                       grads.push_back(p->requires_grad
                                           ? slice_c(g, c_off, c_off + pc)
                                           : Var());
                       c_off += pc;
                     }
                     return grads;
                   });
}

Var slice_c(const Var& a, int c0, int c1) {
  const Shape& s = a->val.shape;
  check_arg(0 <= c0 && c0 < c1 && c1 <= s.c,
            "slice_c: bad channel range [" + std::to_string(c0) + "," +
                std::to_string(c1) + ") for " + s.str());
  Tensor out(Shape(s.n, c1 - c0, s.h, s.w));
  const int64_t plane = static_cast<int64_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    std::copy_n(a->val.data() + (static_cast<int64_t>(n) * s.c + c0) * plane,
                static_cast<int64_t>(c1 - c0) * plane,
                out.data() + static_cast<int64_t>(n) * (c1 - c0) * plane);
  return make_node(std::move(out), {a},
                   [c0](Node* self, const Var& g) -> std::vector<Var> {
                     return {channel_pad(g, c0, self->parents[0]->val.shape.c)};
                   });
}

Var channel_pad(const Var& a, int c0, int total_c) {
  const Shape& s = a->val.shape;
  check_arg(c0 >= 0 && c0 + s.c <= total_c, "channel_pad: range out of bounds");
  Tensor out(Shape(s.n, total_c, s.h, s.w));
  const int64_t plane = static_cast<int64_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    std::copy_n(a->val.data() + static_cast<int64_t>(n) * s.c * plane, s.c * plane,
                out.data() + (static_cast<int64_t>(n) * total_c + c0) * plane);
  return make_node(std::move(out), {a},
                   [c0](Node* self, const Var& g) -> std::vector<Var> {
                     const int ac = self->parents[0]->val.shape.c;
                     return {slice_c(g, c0, c0 + ac)};
                   });
}

GradMap backward(const Var& root) {
  check_arg(root != nullptr, "backward: null root");
  check_arg(root->val.numel() == 1, "backward: root must be scalar, got " +
                                        root->val.shape.str());
  // Collect the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!n->requires_grad || seen.count(n)) continue;
    seen.insert(n);
    order.push_back(n);
    for (const auto& p : n->parents)
      if (p && p->requires_grad) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](Node* a, Node* b) { return a->id > b->id; });

  GradMap grads;
  grads[root.get()] = constant(Tensor::full(Shape(1, 1, 1, 1), 1.0));
  for (Node* n : order) {
    auto it = grads.find(n);
    if (it == grads.end() || !n->vjp) continue;
    std::vector<Var> pg = n->vjp(n, it->second);
    check_arg(pg.size() == n->parents.size(), "backward: vjp arity mismatch");
    for (size_t i = 0; i < pg.size(); ++i) {
      const Var& p = n->parents[i];
      if (!p || !p->requires_grad || !pg[i]) continue;
      check_arg(pg[i]->val.shape == p->val.shape,
                "backward: gradient shape mismatch");
      auto gi = grads.find(p.get());
      if (gi == grads.end())
        grads.emplace(p.get(), pg[i]);
      else
        gi->second = add(gi->second, pg[i]);
    }
  }
  return grads;
}

Tensor grad_or_zero(const GradMap& g, const Var& x) {
  auto it = g.find(x.get());
  if (it == g.end()) return Tensor::zeros(x->val.shape);
  return it->second->val;
}

}  // namespace depthgan
