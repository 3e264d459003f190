#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "depthgan/tensor.hpp"

namespace depthgan {

// Eager reverse-mode autodiff over NCHW tensors.
//
// Every op evaluates immediately and records its parents plus a vjp that
// builds the parent gradients *as graph nodes*, so a second backward pass
// through a first backward pass works wherever the ops involved have
// graph-complete vjps (conv / linear algebra / elementwise arithmetic /
// piecewise-linear activations). That is exactly what the R1 penalty needs.
// Ops whose vjp returns detached constants (grid_sample, cross-entropy,
// transcendentals) are exact to first order only.

struct Node;
using Var = std::shared_ptr<Node>;

using Vjp = std::function<std::vector<Var>(Node* self, const Var& grad_out)>;

struct Node {
  Tensor val;
  std::vector<Var> parents;
  Vjp vjp;                     // null for leaves and constants
  bool requires_grad = false;  // leaf flag, or derived from parents
  int64_t id = 0;

  ~Node();  // iterative teardown; deep graphs must not recurse
};

Var constant(Tensor t);
Var constant_scalar(Scalar x);
// Leaf that collects gradients (parameters, R1 probe inputs).
Var leaf(Tensor t);
// Value copy cut off from the graph.
Var detach(const Var& x);

const Tensor& value(const Var& x);

// ---- elementwise (NumPy-style broadcasting over the four axes) ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, Scalar k);
Var add_scalar(const Var& a, Scalar k);
Var pow_scalar(const Var& a, Scalar p);  // positive base assumed for non-integer p
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var square(const Var& a);
Var abs(const Var& a);
Var leaky_relu(const Var& a, Scalar slope, Scalar gain = 1.0);
// Pushes tiny values away from zero (|y| >= eps, sign kept; derivative 1
// outside, 0 inside). Guards divisions whose degenerate pixels are masked out.
Var clamp_away_from_zero(const Var& a, Scalar eps);

// ---- shape ----
Var reshape(const Var& a, Shape s);
Var reduce_sum_to(const Var& a, Shape s);  // sum over axes where s has extent 1
Var broadcast_to(const Var& a, Shape s);
Var mean_all(const Var& a);  // scalar [1,1,1,1]
Var sum_all(const Var& a);
Var concat_c(const std::vector<Var>& xs);
Var slice_c(const Var& a, int c0, int c1);            // channels [c0, c1)
Var channel_pad(const Var& a, int c0, int total_c);   // zero-embed into channels

// ---- convolution family (kernel [Co,Ci,kh,kw]) ----
Var conv2d(const Var& x, const Var& w, int stride, int pad);
Var conv2d_input_grad(const Var& g, const Var& w, int stride, int pad,
                      int in_h, int in_w);
Var conv2d_weight_grad(const Var& x, const Var& g, int stride, int pad,
                       int kh, int kw);

// ---- resampling ----
Var upsample2x(const Var& a);  // bilinear, align_corners=false
Var upsample2x_adjoint(const Var& g, int out_h, int out_w);
// out[n,c,i,j] = bilinear(img[n,c], u[n,0,i,j], v[n,0,i,j]), clamp-to-edge.
Var grid_sample(const Var& img, const Var& u, const Var& v);

// ---- losses ----
// Mean over all pixels of -log softmax(logits)[target]; targets hold class
// indices (validated integral, in [0, k)).
Var cross_entropy_mean(const Var& logits, const Var& targets);

// ---- backward ----
using GradMap = std::unordered_map<Node*, Var>;

// Gradients of a scalar root w.r.t. every requires_grad node reachable from
// it. The returned gradients are themselves graph nodes, so building a new
// scalar from them and calling backward again yields second-order gradients.
GradMap backward(const Var& root);

// Convenience: map lookup that returns a zero tensor for absent entries.
Tensor grad_or_zero(const GradMap& g, const Var& x);

namespace detail {
// Factory for new ops (shared by the op translation units).
Var make_node(Tensor val, std::vector<Var> parents, Vjp vjp);
}  // namespace detail

}  // namespace depthgan
