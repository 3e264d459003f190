#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "depthgan/autodiff.hpp"

namespace depthgan {

namespace {

using MatMap = Eigen::Map<
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct ConvDims {
  int n, ci, h, w;      // input
  int co, kh, kw;       // kernel
  int stride, pad;
  int ho, wo;
};

ConvDims conv_dims(const Shape& x, const Shape& w, int stride, int pad,
                   const char* op) {
  check_arg(stride >= 1 && pad >= 0, std::string(op) + ": bad stride/pad");
  check_arg(x.c == w.c, std::string(op) + ": channel mismatch, input " +
                            x.str() + " vs kernel " + w.str());
  ConvDims d;
  d.n = x.n;
  d.ci = x.c;
  d.h = x.h;
  d.w = x.w;
  d.co = w.n;
  d.kh = w.h;
  d.kw = w.w;
  d.stride = stride;
  d.pad = pad;
  check_arg(d.h + 2 * pad >= d.kh && d.w + 2 * pad >= d.kw,
            std::string(op) + ": kernel larger than padded input");
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

// col is [K x P] row-major with K = ci*kh*kw, P = ho*wo.
void im2col(const Scalar* x, const ConvDims& d, Scalar* col) {
  const int P = d.ho * d.wo;
  for (int ci = 0; ci < d.ci; ++ci) {
    const Scalar* xc = x + static_cast<int64_t>(ci) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki)
      for (int kj = 0; kj < d.kw; ++kj) {
        Scalar* row = col + (static_cast<int64_t>(ci) * d.kh * d.kw +
                             ki * d.kw + kj) * P;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * d.stride - d.pad + ki;
          Scalar* out = row + static_cast<int64_t>(oy) * d.wo;
          if (iy < 0 || iy >= d.h) {
            std::fill_n(out, d.wo, 0.0);
            continue;
          }
          // valid ox range: 0 <= ox*stride - pad + kj < w
          int lo = 0;
          while (lo < d.wo && lo * d.stride - d.pad + kj < 0) ++lo;
          int hi = d.wo;
          while (hi > lo && (hi - 1) * d.stride - d.pad + kj >= d.w) --hi;
          std::fill_n(out, lo, 0.0);
          std::fill(out + hi, out + d.wo, 0.0);
          const Scalar* src = xc + static_cast<int64_t>(iy) * d.w;
          if (d.stride == 1) {
            std::copy_n(src + (lo - d.pad + kj), hi - lo, out + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox)
              out[ox] = src[ox * d.stride - d.pad + kj];
          }
        }
      }
  }
}

// Transpose of im2col: accumulates col back into the image.
void col2im_add(const Scalar* col, const ConvDims& d, Scalar* x) {
  const int P = d.ho * d.wo;
  for (int ci = 0; ci < d.ci; ++ci) {
    Scalar* xc = x + static_cast<int64_t>(ci) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki)
      for (int kj = 0; kj < d.kw; ++kj) {
        const Scalar* row = col + (static_cast<int64_t>(ci) * d.kh * d.kw +
                                   ki * d.kw + kj) * P;
        for (int oy = 0; oy < d.ho; ++oy) {
          const int iy = oy * d.stride - d.pad + ki;
          if (iy < 0 || iy >= d.h) continue;
          const Scalar* src = row + static_cast<int64_t>(oy) * d.wo;
          Scalar* dst = xc + static_cast<int64_t>(iy) * d.w;
          for (int ox = 0; ox < d.wo; ++ox) {
            const int ix = ox * d.stride - d.pad + kj;
            if (ix >= 0 && ix < d.w) dst[ix] += src[ox];
          }
        }
      }
  }
}

thread_local std::vector<Scalar> g_col_scratch;

Scalar* col_scratch(int64_t n) {
  if (static_cast<int64_t>(g_col_scratch.size()) < n) g_col_scratch.resize(n);
  return g_col_scratch.data();
}

Tensor conv2d_fwd(const Tensor& x, const Tensor& w, int stride, int pad) {
  const ConvDims d = conv_dims(x.shape, w.shape, stride, pad, "conv2d");
  const int K = d.ci * d.kh * d.kw;
  const int P = d.ho * d.wo;
  Tensor y(Shape(d.n, d.co, d.ho, d.wo));
  Scalar* col = col_scratch(static_cast<int64_t>(K) * P);
  ConstMatMap wm(w.data(), d.co, K);
  for (int n = 0; n < d.n; ++n) {
    im2col(x.data() + static_cast<int64_t>(n) * d.ci * d.h * d.w, d, col);
    ConstMatMap cm(col, K, P);
    MatMap ym(y.data() + static_cast<int64_t>(n) * d.co * P, d.co, P);
    ym.noalias() = wm * cm;
  }
  return y;
}

Tensor conv2d_input_grad_fwd(const Tensor& g, const Tensor& w, int stride,
                             int pad, int in_h, int in_w) {
  Shape xs(g.shape.n, w.shape.c, in_h, in_w);
  const ConvDims d = conv_dims(xs, w.shape, stride, pad, "conv2d_input_grad");
  check_arg(g.shape.c == d.co && g.shape.h == d.ho && g.shape.w == d.wo,
            "conv2d_input_grad: grad shape " + g.shape.str() +
                " inconsistent with reconstructed output");
  const int K = d.ci * d.kh * d.kw;
  const int P = d.ho * d.wo;
  Tensor gx(xs);
  Scalar* col = col_scratch(static_cast<int64_t>(K) * P);
  ConstMatMap wm(w.data(), d.co, K);
  for (int n = 0; n < d.n; ++n) {
    ConstMatMap gm(g.data() + static_cast<int64_t>(n) * d.co * P, d.co, P);
    MatMap cm(col, K, P);
    cm.noalias() = wm.transpose() * gm;
    col2im_add(col, d, gx.data() + static_cast<int64_t>(n) * d.ci * in_h * in_w);
  }
  return gx;
}

Tensor conv2d_weight_grad_fwd(const Tensor& x, const Tensor& g, int stride,
                              int pad, int kh, int kw) {
  Shape ws(g.shape.c, x.shape.c, kh, kw);
  const ConvDims d = conv_dims(x.shape, ws, stride, pad, "conv2d_weight_grad");
  check_arg(g.shape.n == x.shape.n && g.shape.h == d.ho && g.shape.w == d.wo,
            "conv2d_weight_grad: grad shape " + g.shape.str() +
                " inconsistent with input " + x.shape.str());
  const int K = d.ci * d.kh * d.kw;
  const int P = d.ho * d.wo;
  Tensor gw(ws);
  Scalar* col = col_scratch(static_cast<int64_t>(K) * P);
  MatMap gwm(gw.data(), d.co, K);
  for (int n = 0; n < d.n; ++n) {
    im2col(x.data() + static_cast<int64_t>(n) * d.ci * d.h * d.w, d, col);
    ConstMatMap cm(col, K, P);
    ConstMatMap gm(g.data() + static_cast<int64_t>(n) * d.co * P, d.co, P);
    gwm.noalias() += gm * cm.transpose();
  }
  return gw;
}

}  // namespace

Var conv2d(const Var& x, const Var& w, int stride, int pad) {
  return detail::make_node(
      conv2d_fwd(x->val, w->val, stride, pad), {x, w},
      [stride, pad](Node* self, const Var& g) -> std::vector<Var> {
        const Var& px = self->parents[0];
        const Var& pw = self->parents[1];
        Var gx, gw;
        if (px->requires_grad)
          gx = conv2d_input_grad(g, pw, stride, pad, px->val.shape.h,
                                 px->val.shape.w);
        if (pw->requires_grad)
          gw = conv2d_weight_grad(px, g, stride, pad, pw->val.shape.h,
                                  pw->val.shape.w);
        return {gx, gw};
      });
}

Var conv2d_input_grad(const Var& g, const Var& w, int stride, int pad,
                      int in_h, int in_w) {
  return detail::make_node(
      conv2d_input_grad_fwd(g->val, w->val, stride, pad, in_h, in_w), {g, w},
      [stride, pad](Node* self, const Var& v) -> std::vector<Var> {
        const Var& pg = self->parents[0];
        const Var& pw = self->parents[1];
        Var gg, gw;
        if (pg->requires_grad) gg = conv2d(v, pw, stride, pad);
        if (pw->requires_grad)
          gw = conv2d_weight_grad(v, pg, stride, pad, pw->val.shape.h,
                                  pw->val.shape.w);
        return {gg, gw};
      });
}

Var conv2d_weight_grad(const Var& x, const Var& g, int stride, int pad,
                       int kh, int kw) {
  return detail::make_node(
      conv2d_weight_grad_fwd(x->val, g->val, stride, pad, kh, kw), {x, g},
      [stride, pad](Node* self, const Var& u) -> std::vector<Var> {
        const Var& px = self->parents[0];
        const Var& pg = self->parents[1];
        Var gx, gg;
        if (px->requires_grad)
          gx = conv2d_input_grad(pg, u, stride, pad, px->val.shape.h,
                                 px->val.shape.w);
        if (pg->requires_grad) gg = conv2d(px, u, stride, pad);
        return {gx, gg};
      });
}

namespace {

// Bilinear 2x with align_corners=false: output sample centres sit at input
// coordinates o/2 - 0.25, i.e. two taps with weights (0.25, 0.75) clamped at
// the borders.
struct Tap {
  int a, b;
  Scalar wa, wb;
};

std::vector<Tap> up2x_taps(int in_len) {
  std::vector<Tap> taps(2 * in_len);
  for (int o = 0; o < 2 * in_len; ++o) {
    Tap t;
    if (o % 2 == 0) {
      const int i = o / 2;
      t.a = std::max(i - 1, 0);
      t.b = i;
      t.wa = 0.25;
      t.wb = 0.75;
    } else {
      const int i = o / 2;
      t.a = i;
      t.b = std::min(i + 1, in_len - 1);
      t.wa = 0.75;
      t.wb = 0.25;
    }
    taps[o] = t;
  }
  return taps;
}

Tensor upsample2x_fwd(const Tensor& x) {
  const Shape& s = x.shape;
  Tensor y(Shape(s.n, s.c, 2 * s.h, 2 * s.w));
  const auto ty = up2x_taps(s.h);
  const auto tx = up2x_taps(s.w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const Scalar* in = x.data() + (static_cast<int64_t>(n) * s.c + c) * s.h * s.w;
      Scalar* out = y.data() + (static_cast<int64_t>(n) * s.c + c) * 4 * s.h * s.w;
      for (int oy = 0; oy < 2 * s.h; ++oy) {
        const Tap& py = ty[oy];
        const Scalar* ra = in + static_cast<int64_t>(py.a) * s.w;
        const Scalar* rb = in + static_cast<int64_t>(py.b) * s.w;
        Scalar* ro = out + static_cast<int64_t>(oy) * 2 * s.w;
        for (int ox = 0; ox < 2 * s.w; ++ox) {
          const Tap& px = tx[ox];
          ro[ox] = py.wa * (px.wa * ra[px.a] + px.wb * ra[px.b]) +
                   py.wb * (px.wa * rb[px.a] + px.wb * rb[px.b]);
        }
      }
    }
  return y;
}

Tensor upsample2x_adjoint_fwd(const Tensor& g, int out_h, int out_w) {
  const Shape& s = g.shape;
  check_arg(s.h == 2 * out_h && s.w == 2 * out_w,
            "upsample2x_adjoint: shape mismatch");
  Tensor y(Shape(s.n, s.c, out_h, out_w));
  const auto ty = up2x_taps(out_h);
  const auto tx = up2x_taps(out_w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      Scalar* out = y.data() + (static_cast<int64_t>(n) * s.c + c) * out_h * out_w;
      const Scalar* in = g.data() + (static_cast<int64_t>(n) * s.c + c) * s.h * s.w;
      for (int oy = 0; oy < s.h; ++oy) {
        const Tap& py = ty[oy];
        const Scalar* ri = in + static_cast<int64_t>(oy) * s.w;
        Scalar* ra = out + static_cast<int64_t>(py.a) * out_w;
        Scalar* rb = out + static_cast<int64_t>(py.b) * out_w;
        for (int ox = 0; ox < s.w; ++ox) {
          const Tap& px = tx[ox];
          const Scalar v = ri[ox];
          ra[px.a] += py.wa * px.wa * v;
          ra[px.b] += py.wa * px.wb * v;
          rb[px.a] += py.wb * px.wa * v;
          rb[px.b] += py.wb * px.wb * v;
        }
      }
    }
  return y;
}

}  // namespace

Var upsample2x(const Var& a) {
  return detail::make_node(
      upsample2x_fwd(a->val), {a},
      [](Node* self, const Var& g) -> std::vector<Var> {
        const Shape& s = self->parents[0]->val.shape;
        return {upsample2x_adjoint(g, s.h, s.w)};
      });
}

Var upsample2x_adjoint(const Var& g, int out_h, int out_w) {
  return detail::make_node(
      upsample2x_adjoint_fwd(g->val, out_h, out_w), {g},
      [](Node*, const Var& v) -> std::vector<Var> { return {upsample2x(v)}; });
}

Var grid_sample(const Var& img, const Var& u, const Var& v) {
  const Shape& is = img->val.shape;
  const Shape& us = u->val.shape;
  check_arg(us == v->val.shape && us.n == is.n && us.c == 1,
            "grid_sample: coordinate shapes must be [N,1,H,W] matching image batch");
  const int H = is.h, W = is.w, C = is.c;
  const int P = us.h * us.w;
  Tensor out(Shape(is.n, C, us.h, us.w));
  for (int n = 0; n < is.n; ++n) {
    const Scalar* un = u->val.data() + static_cast<int64_t>(n) * P;
    const Scalar* vn = v->val.data() + static_cast<int64_t>(n) * P;
    for (int p = 0; p < P; ++p) {
      Scalar x = std::min(std::max(un[p], 0.0), static_cast<Scalar>(W - 1));
      Scalar y = std::min(std::max(vn[p], 0.0), static_cast<Scalar>(H - 1));
      int x0 = std::min(static_cast<int>(std::floor(x)), W >= 2 ? W - 2 : 0);
      int y0 = std::min(static_cast<int>(std::floor(y)), H >= 2 ? H - 2 : 0);
      const Scalar fx = x - x0, fy = y - y0;
      const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
      for (int c = 0; c < C; ++c) {
        const Scalar* ic =
            img->val.data() + (static_cast<int64_t>(n) * C + c) * H * W;
        const Scalar v00 = ic[y0 * W + x0], v01 = ic[y0 * W + x1];
        const Scalar v10 = ic[y1 * W + x0], v11 = ic[y1 * W + x1];
        out.v[(static_cast<int64_t>(n) * C + c) * P + p] =
            (1 - fy) * ((1 - fx) * v00 + fx * v01) +
            fy * ((1 - fx) * v10 + fx * v11);
      }
    }
  }
  return detail::make_node(
      std::move(out), {img, u, v},
      [](Node* self, const Var& g) -> std::vector<Var> {
        const Var& pimg = self->parents[0];
        const Var& pu = self->parents[1];
        const Var& pv = self->parents[2];
        const Shape& is = pimg->val.shape;
        const Shape& us = pu->val.shape;
        const int H = is.h, W = is.w, C = is.c;
        const int P = us.h * us.w;
        Tensor gi(is), gu(us), gv(us);
        for (int n = 0; n < is.n; ++n) {
          const Scalar* un = pu->val.data() + static_cast<int64_t>(n) * P;
          const Scalar* vn = pv->val.data() + static_cast<int64_t>(n) * P;
          for (int p = 0; p < P; ++p) {
            const bool in_x = un[p] > 0.0 && un[p] < W - 1;
            const bool in_y = vn[p] > 0.0 && vn[p] < H - 1;
            Scalar x = std::min(std::max(un[p], 0.0), static_cast<Scalar>(W - 1));
            Scalar y = std::min(std::max(vn[p], 0.0), static_cast<Scalar>(H - 1));
            int x0 = std::min(static_cast<int>(std::floor(x)), W >= 2 ? W - 2 : 0);
            int y0 = std::min(static_cast<int>(std::floor(y)), H >= 2 ? H - 2 : 0);
            const Scalar fx = x - x0, fy = y - y0;
            const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
            Scalar du = 0, dv = 0;
            for (int c = 0; c < C; ++c) {
              const Scalar gc =
                  g->val.v[(static_cast<int64_t>(n) * C + c) * P + p];
              Scalar* ic = gi.data() + (static_cast<int64_t>(n) * C + c) * H * W;
              ic[y0 * W + x0] += gc * (1 - fy) * (1 - fx);
              ic[y0 * W + x1] += gc * (1 - fy) * fx;
              ic[y1 * W + x0] += gc * fy * (1 - fx);
              ic[y1 * W + x1] += gc * fy * fx;
              const Scalar* iv =
                  pimg->val.data() + (static_cast<int64_t>(n) * C + c) * H * W;
              const Scalar v00 = iv[y0 * W + x0], v01 = iv[y0 * W + x1];
              const Scalar v10 = iv[y1 * W + x0], v11 = iv[y1 * W + x1];
              du += gc * ((1 - fy) * (v01 - v00) + fy * (v11 - v10));
              dv += gc * ((1 - fx) * (v10 - v00) + fx * (v11 - v01));
            }
            gu.v[static_cast<int64_t>(n) * P + p] = in_x ? du : 0.0;
            gv.v[static_cast<int64_t>(n) * P + p] = in_y ? dv : 0.0;
          }
        }
        Var rgi = pimg->requires_grad ? constant(std::move(gi)) : Var();
        Var rgu = pu->requires_grad ? constant(std::move(gu)) : Var();
        Var rgv = pv->requires_grad ? constant(std::move(gv)) : Var();
        return {rgi, rgu, rgv};
      });
}

Var cross_entropy_mean(const Var& logits, const Var& targets) {
  const Shape& ls = logits->val.shape;
  const Shape& ts = targets->val.shape;
  check_arg(ts.n == ls.n && ts.c == 1 && ts.h == ls.h && ts.w == ls.w,
            "cross_entropy_mean: target shape " + ts.str() +
                " does not match logits " + ls.str());
  const int k = ls.c;
  check_arg(k >= 2, "cross_entropy_mean: need at least 2 classes");
  const int P = ls.h * ls.w;
  const int64_t count = static_cast<int64_t>(ls.n) * P;
  Scalar loss = 0;
  for (int n = 0; n < ls.n; ++n)
    for (int p = 0; p < P; ++p) {
      const Scalar tval = targets->val.v[static_cast<int64_t>(n) * P + p];
      const int t = static_cast<int>(tval);
      check_arg(t >= 0 && t < k && static_cast<Scalar>(t) == tval,
                "cross_entropy_mean: target class out of range");
      Scalar m = -1e300;
      for (int c = 0; c < k; ++c)
        m = std::max(m, logits->val.v[(static_cast<int64_t>(n) * k + c) * P + p]);
      Scalar lse = 0;
      for (int c = 0; c < k; ++c)
        lse += std::exp(logits->val.v[(static_cast<int64_t>(n) * k + c) * P + p] - m);
      lse = m + std::log(lse);
      loss += lse - logits->val.v[(static_cast<int64_t>(n) * k + t) * P + p];
    }
  loss /= static_cast<Scalar>(count);
  return detail::make_node(
      Tensor::scalar(loss), {logits, targets},
      [](Node* self, const Var& g) -> std::vector<Var> {
        const Var& pl = self->parents[0];
        const Var& pt = self->parents[1];
        const Shape& ls = pl->val.shape;
        const int k = ls.c;
        const int P = ls.h * ls.w;
        const int64_t count = static_cast<int64_t>(ls.n) * P;
        const Scalar gs = g->val.item() / static_cast<Scalar>(count);
        Tensor gl(ls);
        for (int n = 0; n < ls.n; ++n)
          for (int p = 0; p < P; ++p) {
            const int t =
                static_cast<int>(pt->val.v[static_cast<int64_t>(n) * P + p]);
            Scalar m = -1e300;
            for (int c = 0; c < k; ++c)
              m = std::max(m, pl->val.v[(static_cast<int64_t>(n) * k + c) * P + p]);
            Scalar z = 0;
            for (int c = 0; c < k; ++c)
              z += std::exp(pl->val.v[(static_cast<int64_t>(n) * k + c) * P + p] - m);
            for (int c = 0; c < k; ++c) {
              const Scalar sm =
                  std::exp(pl->val.v[(static_cast<int64_t>(n) * k + c) * P + p] - m) / z;
              gl.v[(static_cast<int64_t>(n) * k + c) * P + p] =
                  gs * (sm - (c == t ? 1.0 : 0.0));
            }
          }
        return {constant(std::move(gl)), Var()};
      });
}

}  // namespace depthgan
