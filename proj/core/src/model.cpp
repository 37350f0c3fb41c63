#include "golden/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "golden/rng.hpp"
#include "golden/util.hpp"

namespace golden {

namespace {

constexpr double kRmsEps = 1e-5;
constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;
constexpr size_t kParamBudget = 2'000'000;

double gelu(double z) {
  double u = kGeluC0 * (z + kGeluC1 * z * z * z);
  return 0.5 * z * (1.0 + std::tanh(u));
}

double gelu_grad(double z) {
  double u = kGeluC0 * (z + kGeluC1 * z * z * z);
  double th = std::tanh(u);
  return 0.5 * (1.0 + th) + 0.5 * z * (1.0 - th * th) * kGeluC0 * (1.0 + 3.0 * kGeluC1 * z * z);
}

// y += W x, W row-major [rows x cols]
void matvec(std::span<const float> w, const double* x, double* y, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* wr = w.data() + static_cast<size_t>(r) * static_cast<size_t>(cols);
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += static_cast<double>(wr[c]) * x[c];
    y[r] += acc;
  }
}

// y += W^T x, W row-major [rows x cols], x has rows entries, y has cols
void matvec_t(std::span<const float> w, const double* x, double* y, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* wr = w.data() + static_cast<size_t>(r) * static_cast<size_t>(cols);
    double xr = x[r];
    if (xr == 0.0) continue;
    for (int c = 0; c < cols; ++c) y[c] += xr * static_cast<double>(wr[c]);
  }
}

// dW += x_out (outer) x_in
void outer_acc(std::span<double> dw, const double* dout, const double* xin, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double d = dout[r];
    if (d == 0.0) continue;
    double* row = dw.data() + static_cast<size_t>(r) * static_cast<size_t>(cols);
    for (int c = 0; c < cols; ++c) row[c] += d * xin[c];
  }
}

double rms_inv(const double* x, int n) {
  double ms = 0.0;
  for (int i = 0; i < n; ++i) ms += x[i] * x[i];
  ms /= n;
  return 1.0 / std::sqrt(ms + kRmsEps);
}

// dx of y = x * g * r; accumulates gain gradient.
void rms_backward(const double* dy, const double* x, std::span<const float> g, double inv_r,
                  double* dx, std::span<double> dg, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += dy[i] * static_cast<double>(g[i]) * x[i];
  double coef = inv_r * inv_r * inv_r * s / n;
  for (int i = 0; i < n; ++i) {
    dx[i] += inv_r * static_cast<double>(g[i]) * dy[i] - coef * x[i];
    dg[i] += dy[i] * x[i] * inv_r;
  }
}

void ensure_workspace(Workspace& ws, const PolicySpec& spec) {
  int cap = spec.context_len;
  if (ws.cap == cap && static_cast<int>(ws.layers.size()) == spec.n_layers &&
      static_cast<int>(ws.x0.size()) == cap * spec.embed_dim &&
      static_cast<int>(ws.logits.size()) == cap * spec.vocab_size) {
    return;
  }
  size_t d = static_cast<size_t>(cap) * static_cast<size_t>(spec.embed_dim);
  size_t h = static_cast<size_t>(cap) * static_cast<size_t>(spec.hidden_dim);
  ws.cap = cap;
  ws.len = 0;
  ws.tokens.assign(static_cast<size_t>(cap), 0);
  ws.x0.assign(d, 0.0);
  ws.layers.assign(static_cast<size_t>(spec.n_layers), {});
  for (auto& l : ws.layers) {
    l.n1.assign(d, 0.0);
    l.q.assign(d, 0.0);
    l.k.assign(d, 0.0);
    l.v.assign(d, 0.0);
    l.a.assign(d, 0.0);
    l.x2.assign(d, 0.0);
    l.n2.assign(d, 0.0);
    l.z.assign(h, 0.0);
    l.h.assign(h, 0.0);
    l.x3.assign(d, 0.0);
    l.att.assign(static_cast<size_t>(cap) * static_cast<size_t>(cap), 0.0);
    l.inv_r1.assign(static_cast<size_t>(cap), 0.0);
    l.inv_r2.assign(static_cast<size_t>(cap), 0.0);
  }
  ws.xf.assign(d, 0.0);
  ws.inv_rf.assign(static_cast<size_t>(cap), 0.0);
  ws.logits.assign(static_cast<size_t>(cap) * static_cast<size_t>(spec.vocab_size), 0.0);
  ws.values.assign(static_cast<size_t>(cap), 0.0);
}

// Computes position t from the cached prefix state; the single source of truth
// for both full-sequence forward and incremental decoding.
void forward_position(const PolicyParams& p, Workspace& ws, int t, int token) {
  const auto& spec = p.spec;
  const int d = spec.embed_dim;
  const int hd = spec.hidden_dim;
  const int v = spec.vocab_size;
  if (t >= spec.context_len) {
    throw StageError("context overflow: position " + std::to_string(t) + " with context_len " +
                     std::to_string(spec.context_len));
  }
  if (token < 0 || token >= v) {
    throw StageError("token id out of range: " + std::to_string(token));
  }
  ws.tokens[static_cast<size_t>(t)] = token;

  auto row = [&](std::vector<double>& m, int dim, int r) { return m.data() + static_cast<size_t>(r) * static_cast<size_t>(dim); };

  double* x = row(ws.x0, d, t);
  {
    std::span<const float> te = p.tensor("tok_emb");
    std::span<const float> pe = p.tensor("pos_emb");
    const float* tr = te.data() + static_cast<size_t>(token) * static_cast<size_t>(d);
    const float* pr = pe.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
    for (int i = 0; i < d; ++i) x[i] = static_cast<double>(tr[i]) + static_cast<double>(pr[i]);
  }

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double* xin = x;
  std::vector<double> tmp(static_cast<size_t>(std::max(d, hd)), 0.0);

  for (int li = 0; li < spec.n_layers; ++li) {
    auto& tape = ws.layers[static_cast<size_t>(li)];
    std::string pre = "l" + std::to_string(li) + ".";

    double* n1 = row(tape.n1, d, t);
    double r1 = rms_inv(xin, d);
    tape.inv_r1[static_cast<size_t>(t)] = r1;
    {
      std::span<const float> g = p.tensor(pre + "ln1_g");
      for (int i = 0; i < d; ++i) n1[i] = xin[i] * static_cast<double>(g[i]) * r1;
    }

    double* q = row(tape.q, d, t);
    double* k = row(tape.k, d, t);
    double* vv = row(tape.v, d, t);
    std::fill(q, q + d, 0.0);
    std::fill(k, k + d, 0.0);
    std::fill(vv, vv + d, 0.0);
    matvec(p.tensor(pre + "wq"), n1, q, d, d);
    matvec(p.tensor(pre + "wk"), n1, k, d, d);
    matvec(p.tensor(pre + "wv"), n1, vv, d, d);

    // causal single-head attention over cached keys/values
    double* att = tape.att.data() + static_cast<size_t>(t) * static_cast<size_t>(ws.cap);
    double max_sc = -1e300;
    for (int s = 0; s <= t; ++s) {
      const double* ks = row(tape.k, d, s);
      double sc = 0.0;
      for (int i = 0; i < d; ++i) sc += q[i] * ks[i];
      sc *= inv_sqrt_d;
      att[s] = sc;
      max_sc = std::max(max_sc, sc);
    }
    double denom = 0.0;
    for (int s = 0; s <= t; ++s) {
      att[s] = std::exp(att[s] - max_sc);
      denom += att[s];
    }
    for (int s = 0; s <= t; ++s) att[s] /= denom;

    double* a = row(tape.a, d, t);
    std::fill(a, a + d, 0.0);
    for (int s = 0; s <= t; ++s) {
      const double* vs = row(tape.v, d, s);
      double w = att[s];
      for (int i = 0; i < d; ++i) a[i] += w * vs[i];
    }

    double* x2 = row(tape.x2, d, t);
    std::fill(tmp.begin(), tmp.begin() + d, 0.0);
    matvec(p.tensor(pre + "wo"), a, tmp.data(), d, d);
    for (int i = 0; i < d; ++i) x2[i] = xin[i] + tmp[i];

    double* n2 = row(tape.n2, d, t);
    double r2 = rms_inv(x2, d);
    tape.inv_r2[static_cast<size_t>(t)] = r2;
    {
      std::span<const float> g = p.tensor(pre + "ln2_g");
      for (int i = 0; i < d; ++i) n2[i] = x2[i] * static_cast<double>(g[i]) * r2;
    }

    double* z = row(tape.z, hd, t);
    double* hrow = row(tape.h, hd, t);
    {
      std::span<const float> b1 = p.tensor(pre + "b1");
      for (int i = 0; i < hd; ++i) z[i] = static_cast<double>(b1[i]);
    }
    matvec(p.tensor(pre + "w1"), n2, z, hd, d);
    for (int i = 0; i < hd; ++i) hrow[i] = gelu(z[i]);

    double* x3 = row(tape.x3, d, t);
    {
      std::span<const float> b2 = p.tensor(pre + "b2");
      for (int i = 0; i < d; ++i) tmp[static_cast<size_t>(i)] = static_cast<double>(b2[i]);
    }
    matvec(p.tensor(pre + "w2"), hrow, tmp.data(), d, hd);
    for (int i = 0; i < d; ++i) x3[i] = x2[i] + tmp[i];

    xin = x3;
  }

  double* xf = row(ws.xf, d, t);
  double rf = rms_inv(xin, d);
  ws.inv_rf[static_cast<size_t>(t)] = rf;
  {
    std::span<const float> g = p.tensor("lnf_g");
    for (int i = 0; i < d; ++i) xf[i] = xin[i] * static_cast<double>(g[i]) * rf;
  }

  double* lrow = ws.logits.data() + static_cast<size_t>(t) * static_cast<size_t>(v);
  {
    std::span<const float> b = p.tensor("b_lm");
    for (int i = 0; i < v; ++i) lrow[i] = static_cast<double>(b[i]);
  }
  matvec(p.tensor("w_lm"), xf, lrow, v, d);

  {
    std::span<const float> wv = p.tensor("w_val");
    std::span<const float> bv = p.tensor("b_val");
    double acc = static_cast<double>(bv[0]);
    for (int i = 0; i < d; ++i) acc += static_cast<double>(wv[i]) * xf[i];
    ws.values[static_cast<size_t>(t)] = acc;
  }
}

}  // namespace

void PolicySpec::validate() const {
  if (vocab_size < 8) throw ConfigError("model: vocab_size must be >= 8");
  if (embed_dim < 1) throw ConfigError("model: embed_dim must be >= 1");
  if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
  if (n_layers < 1 || n_layers > 8) throw ConfigError("model: n_layers must be in [1, 8]");
  if (context_len < 2) throw ConfigError("model: context_len must be >= 2");
  ParamLayout layout = ParamLayout::build(*this);
  if (layout.total > kParamBudget) {
    throw ConfigError("model exceeds the parameter budget: " + std::to_string(layout.total) +
                      " > " + std::to_string(kParamBudget));
  }
}

ParamLayout ParamLayout::build(const PolicySpec& spec) {
  ParamLayout layout;
  auto add = [&layout](std::string name, int rows, int cols) {
    TensorSlice s{std::move(name), layout.total, rows, cols};
    layout.total += s.size();
    layout.tensors.push_back(std::move(s));
  };
  const int d = spec.embed_dim;
  const int h = spec.hidden_dim;
  add("tok_emb", spec.vocab_size, d);
  add("pos_emb", spec.context_len, d);
  for (int l = 0; l < spec.n_layers; ++l) {
    std::string pre = "l" + std::to_string(l) + ".";
    add(pre + "ln1_g", 1, d);
    add(pre + "wq", d, d);
    add(pre + "wk", d, d);
    add(pre + "wv", d, d);
    add(pre + "wo", d, d);
    add(pre + "ln2_g", 1, d);
    add(pre + "w1", h, d);
    add(pre + "b1", 1, h);
    add(pre + "w2", d, h);
    add(pre + "b2", 1, d);
  }
  add("lnf_g", 1, d);
  add("w_lm", spec.vocab_size, d);
  add("b_lm", 1, spec.vocab_size);
  add("w_val", 1, d);
  add("b_val", 1, 1);
  return layout;
}

const TensorSlice& ParamLayout::at(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no such tensor: " + std::string(name));
}

std::span<const float> PolicyParams::tensor(std::string_view name) const {
  const auto& s = layout.at(name);
  return std::span<const float>(values.data() + s.offset, s.size());
}

std::span<float> PolicyParams::tensor(std::string_view name) {
  const auto& s = layout.at(name);
  return std::span<float>(values.data() + s.offset, s.size());
}

PolicyOutput PolicyOutput::zeros(int seq_len, int vocab) {
  PolicyOutput out;
  out.seq_len = seq_len;
  out.vocab = vocab;
  out.logits.assign(static_cast<size_t>(seq_len) * static_cast<size_t>(vocab), 0.0);
  out.values.assign(static_cast<size_t>(seq_len), 0.0);
  return out;
}

PolicyParams init_policy(const PolicySpec& spec) {
  spec.validate();
  PolicyParams p;
  p.spec = spec;
  p.layout = ParamLayout::build(spec);
  p.values.assign(p.layout.total, 0.0f);
  Rng rng(spec.seed);
  for (const auto& t : p.layout.tensors) {
    std::span<float> dst(p.values.data() + t.offset, t.size());
    bool is_gain = t.name.size() >= 2 && t.name.compare(t.name.size() - 2, 2, "_g") == 0;
    bool is_bias = t.name == "b_lm" || t.name == "b_val" ||
                   (t.name.find(".b") != std::string::npos);
    if (is_gain) {
      std::fill(dst.begin(), dst.end(), 1.0f);
    } else if (is_bias) {
      std::fill(dst.begin(), dst.end(), 0.0f);
    } else {
      double sigma = 1.0 / std::sqrt(static_cast<double>(t.cols));
      for (auto& w : dst) w = static_cast<float>(rng.normal(0.0, sigma));
    }
  }
  return p;
}

PolicyOutput forward(const PolicyParams& params, std::span<const int> tokens) {
  Workspace ws;
  return forward(params, tokens, ws);
}

PolicyOutput forward(const PolicyParams& params, std::span<const int> tokens, Workspace& ws) {
  if (static_cast<int>(tokens.size()) > params.spec.context_len) {
    throw StageError("context overflow: sequence length " + std::to_string(tokens.size()));
  }
  ensure_workspace(ws, params.spec);
  ws.len = 0;
  for (size_t t = 0; t < tokens.size(); ++t) {
    forward_position(params, ws, static_cast<int>(t), tokens[t]);
    ws.len = static_cast<int>(t) + 1;
  }
  PolicyOutput out;
  out.seq_len = static_cast<int>(tokens.size());
  out.vocab = params.spec.vocab_size;
  out.logits.assign(ws.logits.begin(),
                    ws.logits.begin() + static_cast<std::ptrdiff_t>(tokens.size()) * params.spec.vocab_size);
  out.values.assign(ws.values.begin(), ws.values.begin() + static_cast<std::ptrdiff_t>(tokens.size()));
  return out;
}

std::vector<double> backward(const PolicyParams& params, std::span<const int> tokens,
                             const PolicyOutput& out_grad) {
  Workspace ws;
  forward(params, tokens, ws);
  std::vector<double> grad(params.layout.total, 0.0);
  backward(params, ws, out_grad, grad);
  return grad;
}

void backward(const PolicyParams& p, const Workspace& ws, const PolicyOutput& out_grad,
              std::span<double> grad_accum) {
  const auto& spec = p.spec;
  const int d = spec.embed_dim;
  const int hd = spec.hidden_dim;
  const int v = spec.vocab_size;
  const int T = ws.len;
  if (out_grad.seq_len != T || out_grad.vocab != v) {
    throw std::invalid_argument("backward: output gradient shape mismatch");
  }
  if (grad_accum.size() != p.layout.total) {
    throw std::invalid_argument("backward: gradient accumulator size mismatch");
  }

  auto slice = [&](std::string_view name) {
    const auto& t = p.layout.at(name);
    return grad_accum.subspan(t.offset, t.size());
  };
  auto crow = [&](const std::vector<double>& m, int dim, int r) {
    return m.data() + static_cast<size_t>(r) * static_cast<size_t>(dim);
  };

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  size_t td = static_cast<size_t>(T) * static_cast<size_t>(d);

  // head backward -> dxf
  std::vector<double> dxf(td, 0.0);
  {
    auto dw_lm = slice("w_lm");
    auto db_lm = slice("b_lm");
    auto dw_val = slice("w_val");
    auto db_val = slice("b_val");
    std::span<const float> w_lm = p.tensor("w_lm");
    std::span<const float> w_val = p.tensor("w_val");
    for (int t = 0; t < T; ++t) {
      const double* dl = out_grad.logits.data() + static_cast<size_t>(t) * static_cast<size_t>(v);
      const double* xf = crow(ws.xf, d, t);
      double* dx = dxf.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
      matvec_t(w_lm, dl, dx, v, d);
      outer_acc(dw_lm, dl, xf, v, d);
      for (int i = 0; i < v; ++i) db_lm[static_cast<size_t>(i)] += dl[i];
      double dv = out_grad.values[static_cast<size_t>(t)];
      if (dv != 0.0) {
        for (int i = 0; i < d; ++i) {
          dx[i] += dv * static_cast<double>(w_val[static_cast<size_t>(i)]);
          dw_val[static_cast<size_t>(i)] += dv * xf[i];
        }
        db_val[0] += dv;
      }
    }
  }

  // final rmsnorm backward -> gradient at last layer output
  std::vector<double> dx3(td, 0.0);
  {
    auto dgf = slice("lnf_g");
    std::span<const float> gf = p.tensor("lnf_g");
    const auto& x_top = spec.n_layers > 0 ? ws.layers.back().x3 : ws.x0;
    for (int t = 0; t < T; ++t) {
      rms_backward(dxf.data() + static_cast<size_t>(t) * static_cast<size_t>(d), crow(x_top, d, t),
                   gf, ws.inv_rf[static_cast<size_t>(t)],
                   dx3.data() + static_cast<size_t>(t) * static_cast<size_t>(d), dgf, d);
    }
  }

  std::vector<double> dx2(td, 0.0), dn(td, 0.0), dq(td, 0.0), dk(td, 0.0), dv(td, 0.0),
      da(td, 0.0);
  std::vector<double> dz(static_cast<size_t>(T) * static_cast<size_t>(hd), 0.0);

  for (int li = spec.n_layers - 1; li >= 0; --li) {
    const auto& tape = ws.layers[static_cast<size_t>(li)];
    std::string pre = "l" + std::to_string(li) + ".";
    const auto& xin_m = li == 0 ? ws.x0 : ws.layers[static_cast<size_t>(li - 1)].x3;

    // MLP backward: x3 = x2 + W2 gelu(W1 n2 + b1) + b2
    std::fill(dx2.begin(), dx2.end(), 0.0);
    std::fill(dn.begin(), dn.end(), 0.0);
    std::fill(dz.begin(), dz.end(), 0.0);
    {
      auto dw2 = slice(pre + "w2");
      auto db2 = slice(pre + "b2");
      auto dw1 = slice(pre + "w1");
      auto db1 = slice(pre + "b1");
      std::span<const float> w2 = p.tensor(pre + "w2");
      std::span<const float> w1 = p.tensor(pre + "w1");
      for (int t = 0; t < T; ++t) {
        const double* dm = dx3.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        const double* hrow = crow(tape.h, hd, t);
        const double* zrow = crow(tape.z, hd, t);
        double* dzr = dz.data() + static_cast<size_t>(t) * static_cast<size_t>(hd);
        outer_acc(dw2, dm, hrow, d, hd);
        for (int i = 0; i < d; ++i) db2[static_cast<size_t>(i)] += dm[i];
        matvec_t(w2, dm, dzr, d, hd);  // dh
        for (int i = 0; i < hd; ++i) dzr[i] *= gelu_grad(zrow[i]);
        outer_acc(dw1, dzr, crow(tape.n2, d, t), hd, d);
        for (int i = 0; i < hd; ++i) db1[static_cast<size_t>(i)] += dzr[i];
        matvec_t(w1, dzr, dn.data() + static_cast<size_t>(t) * static_cast<size_t>(d), hd, d);
      }
    }
    {
      auto dg2 = slice(pre + "ln2_g");
      std::span<const float> g2 = p.tensor(pre + "ln2_g");
      for (int t = 0; t < T; ++t) {
        double* dst = dx2.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        const double* src = dx3.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        for (int i = 0; i < d; ++i) dst[i] += src[i];  // residual
        rms_backward(dn.data() + static_cast<size_t>(t) * static_cast<size_t>(d),
                     crow(tape.x2, d, t), g2, tape.inv_r2[static_cast<size_t>(t)], dst, dg2, d);
      }
    }

    // attention backward: x2 = xin + Wo a, a_t = sum_s att[t,s] v_s
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dk.begin(), dk.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    std::fill(da.begin(), da.end(), 0.0);
    {
      auto dwo = slice(pre + "wo");
      std::span<const float> wo = p.tensor(pre + "wo");
      for (int t = 0; t < T; ++t) {
        const double* do_ = dx2.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        outer_acc(dwo, do_, crow(tape.a, d, t), d, d);
        matvec_t(wo, do_, da.data() + static_cast<size_t>(t) * static_cast<size_t>(d), d, d);
      }
      std::vector<double> datt(static_cast<size_t>(T), 0.0);
      for (int t = 0; t < T; ++t) {
        const double* dat = da.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        const double* att = tape.att.data() + static_cast<size_t>(t) * static_cast<size_t>(ws.cap);
        double dot_av = 0.0;
        for (int s = 0; s <= t; ++s) {
          const double* vs = crow(tape.v, d, s);
          double acc = 0.0;
          for (int i = 0; i < d; ++i) acc += dat[i] * vs[i];
          datt[static_cast<size_t>(s)] = acc;
          dot_av += att[s] * acc;
          double* dvs = dv.data() + static_cast<size_t>(s) * static_cast<size_t>(d);
          double w = att[s];
          for (int i = 0; i < d; ++i) dvs[i] += w * dat[i];
        }
        const double* qt = crow(tape.q, d, t);
        double* dqt = dq.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        for (int s = 0; s <= t; ++s) {
          double dsc = att[s] * (datt[static_cast<size_t>(s)] - dot_av) * inv_sqrt_d;
          if (dsc == 0.0) continue;
          const double* ks = crow(tape.k, d, s);
          double* dks = dk.data() + static_cast<size_t>(s) * static_cast<size_t>(d);
          for (int i = 0; i < d; ++i) {
            dqt[i] += dsc * ks[i];
            dks[i] += dsc * qt[i];
          }
        }
      }
    }

    // project q/k/v gradients back to n1, then rmsnorm to the layer input
    std::fill(dn.begin(), dn.end(), 0.0);
    {
      auto dwq = slice(pre + "wq");
      auto dwk = slice(pre + "wk");
      auto dwv = slice(pre + "wv");
      std::span<const float> wq = p.tensor(pre + "wq");
      std::span<const float> wk = p.tensor(pre + "wk");
      std::span<const float> wv = p.tensor(pre + "wv");
      for (int t = 0; t < T; ++t) {
        const double* n1 = crow(tape.n1, d, t);
        double* dnt = dn.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        const double* dqt = dq.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        const double* dkt = dk.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        const double* dvt = dv.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        outer_acc(dwq, dqt, n1, d, d);
        outer_acc(dwk, dkt, n1, d, d);
        outer_acc(dwv, dvt, n1, d, d);
        matvec_t(wq, dqt, dnt, d, d);
        matvec_t(wk, dkt, dnt, d, d);
        matvec_t(wv, dvt, dnt, d, d);
      }
    }
    {
      auto dg1 = slice(pre + "ln1_g");
      std::span<const float> g1 = p.tensor(pre + "ln1_g");
      for (int t = 0; t < T; ++t) {
        // reuse dx3 as the input gradient of this layer
        double* dst = dx3.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        const double* res = dx2.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
        std::copy(res, res + d, dst);
        rms_backward(dn.data() + static_cast<size_t>(t) * static_cast<size_t>(d),
                     crow(xin_m, d, t), g1, tape.inv_r1[static_cast<size_t>(t)], dst, dg1, d);
      }
    }
  }

  // embeddings
  {
    auto dte = slice("tok_emb");
    auto dpe = slice("pos_emb");
    for (int t = 0; t < T; ++t) {
      const double* dx = dx3.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
      double* te = dte.data() + static_cast<size_t>(ws.tokens[static_cast<size_t>(t)]) * static_cast<size_t>(d);
      double* pe = dpe.data() + static_cast<size_t>(t) * static_cast<size_t>(d);
      for (int i = 0; i < d; ++i) {
        te[i] += dx[i];
        pe[i] += dx[i];
      }
    }
  }
}

Decoder::Decoder(const PolicyParams& params) : params_(params) {
  ensure_workspace(ws_, params_.spec);
}

void Decoder::reset() { ws_.len = 0; }

Decoder::Step Decoder::step(int token) {
  forward_position(params_, ws_, ws_.len, token);
  ws_.len += 1;
  int t = ws_.len - 1;
  Step st;
  st.logits = std::span<const double>(
      ws_.logits.data() + static_cast<size_t>(t) * static_cast<size_t>(params_.spec.vocab_size),
      static_cast<size_t>(params_.spec.vocab_size));
  st.value = ws_.values[static_cast<size_t>(t)];
  return st;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

SampleResult sample(const PolicyParams& params, std::span<const int> prompt, double temperature,
                    int max_gen_len, uint64_t seed, int eos_id) {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  Decoder dec(params);
  Rng rng(seed);
  SampleResult out;

  Decoder::Step st = dec.step(Vocab::kBos);
  for (int tok : prompt) st = dec.step(tok);

  int content = 0;
  while (true) {
    int chosen;
    double logprob;
    if (temperature == 0.0) {
      int arg = 0;
      for (size_t i = 1; i < st.logits.size(); ++i) {
        if (st.logits[i] > st.logits[arg]) arg = static_cast<int>(i);
      }
      chosen = arg;
      logprob = log_softmax(st.logits)[static_cast<size_t>(arg)];
    } else {
      std::vector<double> scaled(st.logits.size());
      for (size_t i = 0; i < st.logits.size(); ++i) scaled[i] = st.logits[i] / temperature;
      std::vector<double> lp = log_softmax(scaled);
      double u = rng.uniform01();
      double acc = 0.0;
      chosen = static_cast<int>(lp.size()) - 1;
      for (size_t i = 0; i < lp.size(); ++i) {
        acc += std::exp(lp[i]);
        if (u < acc) {
          chosen = static_cast<int>(i);
          break;
        }
      }
      logprob = lp[static_cast<size_t>(chosen)];
    }

    out.tokens.push_back(chosen);
    out.logprobs.push_back(logprob);
    out.values.push_back(st.value);
    if (chosen == eos_id) {
      out.hit_eos = true;
      break;
    }
    ++content;
    if (content >= max_gen_len) break;
    st = dec.step(chosen);
  }
  return out;
}

namespace {

void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& s, uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& s;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > s.size()) throw StageError("truncated checkpoint");
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(s[pos++]);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(s[pos++])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(s[pos++])) << (8 * i);
    return v;
  }
};

}  // namespace

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
  std::string out;
  out += "GLDN";
  out.push_back(1);  // version

  std::string header;
  header.push_back(static_cast<char>(params.arch.size()));
  header += params.arch;
  put_u32(header, static_cast<uint32_t>(params.spec.vocab_size));
  put_u32(header, static_cast<uint32_t>(params.spec.embed_dim));
  put_u32(header, static_cast<uint32_t>(params.spec.hidden_dim));
  put_u32(header, static_cast<uint32_t>(params.spec.n_layers));
  put_u32(header, static_cast<uint32_t>(params.spec.context_len));
  put_u64(header, params.spec.seed);

  put_u32(out, static_cast<uint32_t>(header.size()));
  out += header;

  put_u64(out, params.values.size());
  for (float f : params.values) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  write_file(path, out);
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::string data = read_file(path);
  ByteReader r{data};
  r.need(5);
  if (data.compare(0, 4, "GLDN") != 0) throw StageError("bad checkpoint magic: " + path.string());
  r.pos = 4;
  uint8_t version = r.u8();
  if (version != 1) throw StageError("unsupported checkpoint version");
  uint32_t header_len = r.u32();
  size_t header_end = r.pos + header_len;
  uint8_t arch_len = r.u8();
  r.need(arch_len);
  std::string arch = data.substr(r.pos, arch_len);
  r.pos += arch_len;

  PolicySpec spec;
  spec.vocab_size = static_cast<int>(r.u32());
  spec.embed_dim = static_cast<int>(r.u32());
  spec.hidden_dim = static_cast<int>(r.u32());
  spec.n_layers = static_cast<int>(r.u32());
  spec.context_len = static_cast<int>(r.u32());
  spec.seed = r.u64();
  if (r.pos != header_end) throw StageError("checkpoint header size mismatch");
  if (arch != kArchTag) throw StageError("unsupported architecture tag: " + arch);
  spec.validate();

  PolicyParams p;
  p.spec = spec;
  p.arch = arch;
  p.layout = ParamLayout::build(spec);
  uint64_t count = r.u64();
  if (count != p.layout.total) throw StageError("checkpoint parameter count mismatch");
  p.values.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t bits = r.u32();
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f)) throw StageError("non-finite parameter in checkpoint");
    p.values[i] = f;
  }
  return p;
}

}  // namespace golden
