#include "fedpmg/model.hpp"

#include <algorithm>
#include <cmath>

#include "fedpmg/errors.hpp"
#include "fedpmg/rng.hpp"

namespace fedpmg {

namespace {

struct Layout {
    std::size_t w1, b1, w2, b2, w3, b3, total;
};

Layout layout_for(int in_ch) {
    const std::size_t c = kHiddenChannels;
    Layout l;
    l.w1 = 0;
    l.b1 = l.w1 + static_cast<std::size_t>(in_ch) * c * 9;
    l.w2 = l.b1 + c;
    l.b2 = l.w2 + c * c * 9;
    l.w3 = l.b2 + c;
    l.b3 = l.w3 + c * 1 * 9;
    l.total = l.b3 + 1;
    return l;
}

void check_in_ch(int in_ch) {
    if (in_ch != 1 && in_ch != 2) throw InvalidInput("model in_ch must be 1 or 2");
}

void check_batch(const ModelParams& params, const Batch& batch) {
    check_in_ch(params.in_ch);
    if (params.values.size() != param_count(params.in_ch))
        throw ShapeError("parameter vector length does not match in_ch");
    if (batch.n < 1) throw InvalidInput("batch must hold at least one image");
    if (batch.in_ch != params.in_ch) throw ShapeError("batch channels do not match model in_ch");
    if (batch.height < 3 || batch.width < 3) throw InvalidInput("batch images must be at least 3x3");
    const std::size_t hw = static_cast<std::size_t>(batch.height) * batch.width;
    if (batch.inputs.size() != static_cast<std::size_t>(batch.n) * batch.in_ch * hw)
        throw ShapeError("batch input buffer has the wrong size");
    if (!batch.targets.empty() && batch.targets.size() != static_cast<std::size_t>(batch.n) * hw)
        throw ShapeError("batch target buffer has the wrong size");
}

// out[n][oc] = bias[oc] + sum_ic kernel(ic,oc) * in[n][ic], 3x3 taps, zero pad.
// Kernel layout is row-major (ic, oc, ky, kx).
void conv3x3(const double* in, int n, int ic, int oc, int h, int w, const double* kw,
             const double* kb, double* out, bool relu, bool parallel) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
#pragma omp parallel for collapse(2) if (parallel) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int oi = 0; oi < oc; ++oi) {
            double* op = out + (static_cast<std::size_t>(ni) * oc + oi) * hw;
            const double bias = kb ? kb[oi] : 0.0;
            std::fill(op, op + hw, bias);
            for (int ci = 0; ci < ic; ++ci) {
                const double* ip = in + (static_cast<std::size_t>(ni) * ic + ci) * hw;
                const double* kp = kw + (static_cast<std::size_t>(ci) * oc + oi) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int dy = ky - 1;
                    const int y0 = dy < 0 ? 1 : 0;
                    const int y1 = dy > 0 ? h - 1 : h;
                    for (int kx = 0; kx < 3; ++kx) {
                        const double wv = kp[ky * 3 + kx];
                        if (wv == 0.0) continue;
                        const int dx = kx - 1;
                        const int x0 = dx < 0 ? 1 : 0;
                        const int x1 = dx > 0 ? w - 1 : w;
                        for (int y = y0; y < y1; ++y) {
                            const double* src = ip + static_cast<std::size_t>(y + dy) * w + dx;
                            double* dst = op + static_cast<std::size_t>(y) * w;
                            for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
                        }
                    }
                }
            }
            if (relu)
                for (std::size_t i = 0; i < hw; ++i) op[i] = op[i] > 0.0 ? op[i] : 0.0;
        }
    }
}

// Eight-lane dot product: deterministic fixed-order chains that still vectorize.
double dot_shifted(const double* a, const double* b, int len) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    int x = 0;
    for (; x + 8 <= len; x += 8) {
        s0 += a[x] * b[x];
        s1 += a[x + 1] * b[x + 1];
        s2 += a[x + 2] * b[x + 2];
        s3 += a[x + 3] * b[x + 3];
        s4 += a[x + 4] * b[x + 4];
        s5 += a[x + 5] * b[x + 5];
        s6 += a[x + 6] * b[x + 6];
        s7 += a[x + 7] * b[x + 7];
    }
    for (; x < len; ++x) s0 += a[x] * b[x];
    return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
}

// grad_kw[ic][oc][ky][kx] = sum_{n,y,x} gout[n][oc][y][x] * in[n][ic][y+ky-1][x+kx-1]
void conv3x3_grad_weights(const double* in, const double* gout, int n, int ic, int oc, int h,
                          int w, double* gkw, double* gkb, bool parallel) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
#pragma omp parallel for collapse(2) if (parallel) schedule(static)
    for (int ci = 0; ci < ic; ++ci) {
        for (int oi = 0; oi < oc; ++oi) {
            double acc[9] = {};
            for (int ni = 0; ni < n; ++ni) {
                const double* ip = in + (static_cast<std::size_t>(ni) * ic + ci) * hw;
                const double* gp = gout + (static_cast<std::size_t>(ni) * oc + oi) * hw;
                for (int ky = 0; ky < 3; ++ky) {
                    const int dy = ky - 1;
                    const int y0 = dy < 0 ? 1 : 0;
                    const int y1 = dy > 0 ? h - 1 : h;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int dx = kx - 1;
                        const int x0 = dx < 0 ? 1 : 0;
                        const int x1 = dx > 0 ? w - 1 : w;
                        double s = 0.0;
                        for (int y = y0; y < y1; ++y)
                            s += dot_shifted(gp + static_cast<std::size_t>(y) * w + x0,
                                             ip + static_cast<std::size_t>(y + dy) * w + dx + x0,
                                             x1 - x0);
                        acc[ky * 3 + kx] += s;
                    }
                }
            }
            double* dst = gkw + (static_cast<std::size_t>(ci) * oc + oi) * 9;
            for (int t = 0; t < 9; ++t) dst[t] = acc[t];
        }
    }
    if (gkb) {
#pragma omp parallel for if (parallel) schedule(static)
        for (int oi = 0; oi < oc; ++oi) {
            double s = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const double* gp = gout + (static_cast<std::size_t>(ni) * oc + oi) * hw;
                for (std::size_t i = 0; i < hw; ++i) s += gp[i];
            }
            gkb[oi] = s;
        }
    }
}

// grad_in = correlation of gout with the kernel transposed over channels and
// flipped spatially; reuses conv3x3 on a rearranged weight buffer.
void conv3x3_grad_input(const double* gout, int n, int ic, int oc, int h, int w,
                        const double* kw, std::vector<double>& flipped, double* gin,
                        bool parallel) {
    flipped.resize(static_cast<std::size_t>(oc) * ic * 9);
    for (int ci = 0; ci < ic; ++ci)
        for (int oi = 0; oi < oc; ++oi)
            for (int t = 0; t < 9; ++t)
                flipped[(static_cast<std::size_t>(oi) * ic + ci) * 9 + (8 - t)] =
                    kw[(static_cast<std::size_t>(ci) * oc + oi) * 9 + t];
    conv3x3(gout, n, oc, ic, h, w, flipped.data(), nullptr, gin, false, parallel);
}

void forward_impl(const ModelParams& params, const Batch& batch, ForwardTrace& trace,
                  bool parallel) {
    check_batch(params, batch);
    const Layout l = layout_for(params.in_ch);
    const double* p = params.values.data();
    const std::size_t hw = static_cast<std::size_t>(batch.height) * batch.width;
    const std::size_t plane = static_cast<std::size_t>(batch.n) * kHiddenChannels * hw;
    trace.a1.resize(plane);
    trace.a2.resize(plane);
    trace.pred.resize(static_cast<std::size_t>(batch.n) * hw);

    conv3x3(batch.inputs.data(), batch.n, batch.in_ch, kHiddenChannels, batch.height,
            batch.width, p + l.w1, p + l.b1, trace.a1.data(), true, parallel);
    conv3x3(trace.a1.data(), batch.n, kHiddenChannels, kHiddenChannels, batch.height,
            batch.width, p + l.w2, p + l.b2, trace.a2.data(), true, parallel);
    conv3x3(trace.a2.data(), batch.n, kHiddenChannels, 1, batch.height, batch.width, p + l.w3,
            p + l.b3, trace.pred.data(), false, parallel);

    const int n = batch.n;
#pragma omp parallel for if (parallel) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        double* pr = trace.pred.data() + static_cast<std::size_t>(ni) * hw;
        const double* ch0 =
            batch.inputs.data() + static_cast<std::size_t>(ni) * batch.in_ch * hw;
        for (std::size_t i = 0; i < hw; ++i) pr[i] += ch0[i];
    }
}

std::vector<double> backward_impl(const ModelParams& params, const Batch& batch,
                                  const ForwardTrace& trace,
                                  const std::vector<double>& grad_pred, bool parallel) {
    check_batch(params, batch);
    const std::size_t hw = static_cast<std::size_t>(batch.height) * batch.width;
    const std::size_t plane = static_cast<std::size_t>(batch.n) * kHiddenChannels * hw;
    if (grad_pred.size() != static_cast<std::size_t>(batch.n) * hw)
        throw ShapeError("grad_pred has the wrong size");
    if (trace.a1.size() != plane || trace.a2.size() != plane)
        throw ShapeError("forward trace does not match the batch");

    const Layout l = layout_for(params.in_ch);
    const double* p = params.values.data();
    std::vector<double> grads(params.values.size(), 0.0);
    std::vector<double> g_a2(plane), g_a1(plane);
    std::vector<double> scratch;

    // conv3 (residual add contributes nothing to parameter grads)
    conv3x3_grad_weights(trace.a2.data(), grad_pred.data(), batch.n, kHiddenChannels, 1,
                         batch.height, batch.width, grads.data() + l.w3, grads.data() + l.b3,
                         parallel);
    conv3x3_grad_input(grad_pred.data(), batch.n, kHiddenChannels, 1, batch.height, batch.width,
                       p + l.w3, scratch, g_a2.data(), parallel);

    const long long pn = static_cast<long long>(plane);
#pragma omp parallel for if (parallel) schedule(static)
    for (long long i = 0; i < pn; ++i)
        if (trace.a2[static_cast<std::size_t>(i)] <= 0.0) g_a2[static_cast<std::size_t>(i)] = 0.0;

    conv3x3_grad_weights(trace.a1.data(), g_a2.data(), batch.n, kHiddenChannels, kHiddenChannels,
                         batch.height, batch.width, grads.data() + l.w2, grads.data() + l.b2,
                         parallel);
    conv3x3_grad_input(g_a2.data(), batch.n, kHiddenChannels, kHiddenChannels, batch.height,
                       batch.width, p + l.w2, scratch, g_a1.data(), parallel);

#pragma omp parallel for if (parallel) schedule(static)
    for (long long i = 0; i < pn; ++i)
        if (trace.a1[static_cast<std::size_t>(i)] <= 0.0) g_a1[static_cast<std::size_t>(i)] = 0.0;

    conv3x3_grad_weights(batch.inputs.data(), g_a1.data(), batch.n, batch.in_ch, kHiddenChannels,
                         batch.height, batch.width, grads.data() + l.w1, grads.data() + l.b1,
                         parallel);
    return grads;
}

}  // namespace

std::size_t param_count(int in_ch) {
    check_in_ch(in_ch);
    return layout_for(in_ch).total;
}

ModelParams init_params(int in_ch, std::uint64_t seed) {
    check_in_ch(in_ch);
    const Layout l = layout_for(in_ch);
    ModelParams params;
    params.in_ch = in_ch;
    params.values.assign(l.total, 0.0);
    Rng rng(derive_seed(seed, 0x696e6974ULL, static_cast<std::uint64_t>(in_ch)));
    auto fill = [&](std::size_t begin, std::size_t end, int fan_in) {
        const double bound = std::sqrt(1.0 / fan_in);
        for (std::size_t i = begin; i < end; ++i)
            params.values[i] = (2.0 * rng.uniform() - 1.0) * bound;
    };
    fill(l.w1, l.w2, in_ch * 9);            // conv1 kernel + bias
    fill(l.w2, l.w3, kHiddenChannels * 9);  // conv2 kernel + bias
    // conv3 stays zero so the fresh model is the identity on channel 0.
    return params;
}

ModelParams zero_params(int in_ch) {
    check_in_ch(in_ch);
    ModelParams params;
    params.in_ch = in_ch;
    params.values.assign(param_count(in_ch), 0.0);
    return params;
}

std::vector<double> forward(const ModelParams& params, const Batch& batch) {
    ForwardTrace trace;
    forward_impl(params, batch, trace, true);
    return std::move(trace.pred);
}

std::vector<double> forward_serial(const ModelParams& params, const Batch& batch) {
    ForwardTrace trace;
    forward_impl(params, batch, trace, false);
    return std::move(trace.pred);
}

void forward_with_trace(const ModelParams& params, const Batch& batch, ForwardTrace& trace,
                        bool parallel) {
    forward_impl(params, batch, trace, parallel);
}

LossGrad l1_loss(const std::vector<double>& pred, const std::vector<double>& targets) {
    if (pred.size() != targets.size() || pred.empty())
        throw ShapeError("l1 loss needs matching non-empty buffers");
    LossGrad out;
    out.grad_pred.resize(pred.size());
    const double inv = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - targets[i];
        loss += std::abs(d);
        out.grad_pred[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
    }
    out.loss = loss * inv;
    return out;
}

std::vector<double> backward(const ModelParams& params, const Batch& batch,
                             const ForwardTrace& trace, const std::vector<double>& grad_pred) {
    return backward_impl(params, batch, trace, grad_pred, true);
}

std::vector<double> backward_serial(const ModelParams& params, const Batch& batch,
                                    const ForwardTrace& trace,
                                    const std::vector<double>& grad_pred) {
    return backward_impl(params, batch, trace, grad_pred, false);
}

AdamState make_adam_state(std::size_t n_params, double lr) {
    AdamState s;
    s.m.assign(n_params, 0.0);
    s.v.assign(n_params, 0.0);
    s.lr = lr;
    return s;
}

void adam_step(ModelParams& params, const std::vector<double>& grads, AdamState& state) {
    if (grads.size() != params.values.size() || state.m.size() != params.values.size())
        throw InvalidInput("adam buffers must match the parameter length");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.values[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace fedpmg
