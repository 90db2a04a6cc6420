#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fedpmg {

// conv(3x3, pad 1) -> ReLU -> conv -> ReLU -> conv -> + input channel 0.
// Channel 0 of the input is always the under-sampled target image, so the
// all-zero network is the identity on it.
inline constexpr int kHiddenChannels = 16;

struct ModelParams {
    int in_ch = 2;  // 2 = target + auxiliary, 1 = single image
    std::vector<double> values;
};

// Flat layout: conv1 kernel (in_ch x 16 x 3 x 3), conv1 bias (16),
// conv2 kernel (16 x 16 x 3 x 3), conv2 bias (16),
// conv3 kernel (16 x 1 x 3 x 3), conv3 bias (1).
// Kernels are row-major over (in channel, out channel, ky, kx).
std::size_t param_count(int in_ch);

// conv1/conv2 uniform in +-sqrt(1/fan_in); conv3 starts at zero so the fresh
// network is exactly the identity and round 0 metrics equal the zero-filled
// baseline.
ModelParams init_params(int in_ch, std::uint64_t seed);
ModelParams zero_params(int in_ch);

struct Batch {
    int n = 0;
    int in_ch = 0;
    int height = 0;
    int width = 0;
    std::vector<double> inputs;   // n * in_ch * h * w
    std::vector<double> targets;  // n * 1 * h * w
};

struct ForwardTrace {
    std::vector<double> a1;    // post-ReLU conv1 output, n * 16 * h * w
    std::vector<double> a2;    // post-ReLU conv2 output
    std::vector<double> pred;  // n * 1 * h * w
};

std::vector<double> forward(const ModelParams& params, const Batch& batch);
std::vector<double> forward_serial(const ModelParams& params, const Batch& batch);
void forward_with_trace(const ModelParams& params, const Batch& batch, ForwardTrace& trace,
                        bool parallel = true);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_pred;
};

// Mean absolute error; subgradient sign(pred-target)/count with sign(0)=0.
LossGrad l1_loss(const std::vector<double>& pred, const std::vector<double>& targets);

std::vector<double> backward(const ModelParams& params, const Batch& batch,
                             const ForwardTrace& trace, const std::vector<double>& grad_pred);
std::vector<double> backward_serial(const ModelParams& params, const Batch& batch,
                                    const ForwardTrace& trace,
                                    const std::vector<double>& grad_pred);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long t = 0;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(std::size_t n_params, double lr);
void adam_step(ModelParams& params, const std::vector<double>& grads, AdamState& state);

}  // namespace fedpmg
