#include "fedpmg/federation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "fedpmg/errors.hpp"
#include "fedpmg/fft.hpp"
#include "fedpmg/metrics.hpp"
#include "fedpmg/rng.hpp"
#include "fedpmg/tensor_io.hpp"

namespace fedpmg {

namespace {

// seed-derivation tags
constexpr std::uint64_t kTagMask = 0x6d61736bULL;
constexpr std::uint64_t kTagAcq = 0x61637120ULL;
constexpr std::uint64_t kTagInit = 0x696e6974ULL;
constexpr std::uint64_t kTagShuffle = 0x73687566ULL;
constexpr std::uint64_t kTagDraw = 0x64726177ULL;
constexpr std::uint64_t kTagKmeans = 0x6b6d6e73ULL;
constexpr std::uint64_t kTagPseudoAcq = 0x70616371ULL;

}  // namespace

RunMode parse_mode(const std::string& name) {
    if (name == "fedpmg") return RunMode::FedPMG;
    if (name == "ideal") return RunMode::Ideal;
    if (name == "mixup") return RunMode::Mixup;
    if (name == "group") return RunMode::Group;
    if (name == "gather") return RunMode::Gather;
    throw ConfigError("unknown mode: " + name);
}

std::string mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::FedPMG: return "fedpmg";
        case RunMode::Ideal: return "ideal";
        case RunMode::Mixup: return "mixup";
        case RunMode::Group: return "group";
        case RunMode::Gather: return "gather";
    }
    return "?";
}

std::string kind_name(MessageKind kind) {
    switch (kind) {
        case MessageKind::CentroidUpload: return "centroid_upload";
        case MessageKind::ParamUpload: return "param_upload";
        case MessageKind::ParamBroadcast: return "param_broadcast";
        case MessageKind::CentroidBroadcast: return "centroid_broadcast";
    }
    return "?";
}

std::size_t CommLedger::param_bytes_in_round(int round) const {
    std::size_t s = 0;
    for (const auto& m : log)
        if (m.round == round && m.kind == MessageKind::ParamUpload) s += m.payload_bytes;
    return s;
}

std::size_t CommLedger::info_bytes_in_round(int round) const {
    std::size_t s = 0;
    for (const auto& m : log)
        if (m.round == round && m.kind == MessageKind::CentroidUpload) s += m.payload_bytes;
    return s;
}

std::size_t CommLedger::total_param_bytes() const {
    std::size_t s = 0;
    for (const auto& m : log)
        if (m.kind == MessageKind::ParamUpload) s += m.payload_bytes;
    return s;
}

std::size_t CommLedger::total_info_bytes() const {
    std::size_t s = 0;
    for (const auto& m : log)
        if (m.kind == MessageKind::CentroidUpload) s += m.payload_bytes;
    return s;
}

long long CommLedger::naive_spectra() const {
    long long n = 0;
    for (const auto& m : log)
        if (m.kind == MessageKind::CentroidUpload) n += m.n_source;
    return n;
}

long long CommLedger::shipped_centroids() const {
    long long n = 0;
    for (const auto& m : log)
        if (m.kind == MessageKind::CentroidUpload) n += m.k_eff;
    return n;
}

double CommLedger::reduction() const {
    const long long n = naive_spectra();
    if (n == 0) return 0.0;
    return 1.0 - static_cast<double>(shipped_centroids()) / static_cast<double>(n);
}

double CommLedger::client_reduction(int client) const {
    long long n = 0, k = 0;
    for (const auto& m : log)
        if (m.kind == MessageKind::CentroidUpload && m.sender == client) {
            n += m.n_source;
            k += m.k_eff;
        }
    if (n == 0) return 0.0;
    return 1.0 - static_cast<double>(k) / static_cast<double>(n);
}

bool ClientState::has_modality(int m) const {
    return std::find(cfg.modalities.begin(), cfg.modalities.end(), m) != cfg.modalities.end();
}

int ClientState::missing_modality() const {
    if (cfg.modalities.size() >= 2) return 0;
    return cfg.modalities[0] == 1 ? 2 : 1;
}

namespace {

Mask1D make_mask(const ExperimentConfig& cfg, const ClientConfig& cc, int client_id) {
    if (cc.mask.type == "equispaced")
        return make_equispaced_mask(cfg.image_size, cc.mask.accel, cc.mask.center_fraction);
    return make_random_mask(cfg.image_size, cc.mask.accel, cc.mask.center_fraction,
                            derive_seed(cfg.seed, kTagMask, static_cast<std::uint64_t>(client_id)));
}

const Image2D& slice_modality(const PairedSlice& s, int m) {
    return m == 1 ? s.modality1 : s.modality2;
}

std::vector<Image2D> undersample_all(const ExperimentConfig& cfg, const ClientState& client,
                                     const std::vector<PairedSlice>& slices, int split_tag,
                                     int modality) {
    std::vector<Image2D> out;
    out.reserve(slices.size());
    for (std::size_t i = 0; i < slices.size(); ++i) {
        NoiseSpec noise;
        noise.sigma = cfg.noise_sigma;
        noise.seed = derive_seed(cfg.seed, kTagAcq, static_cast<std::uint64_t>(client.id),
                                 static_cast<std::uint64_t>(split_tag),
                                 static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(modality));
        out.push_back(undersample(slice_modality(slices[i], modality), client.mask, noise));
    }
    return out;
}

}  // namespace

ClientState prepare_client(const ExperimentConfig& cfg, int client_id, ClientDataset data) {
    if (client_id < 0 || client_id >= static_cast<int>(cfg.clients.size()))
        throw InvalidInput("client id out of range");
    ClientState st;
    st.id = client_id;
    st.cfg = cfg.clients[static_cast<std::size_t>(client_id)];
    st.data = std::move(data);
    if (st.data.train.empty() || st.data.test.empty())
        throw InvalidInput("client dataset needs non-empty train and test sides");
    st.mask = make_mask(cfg, st.cfg, client_id);
    st.train_under_m1 = undersample_all(cfg, st, st.data.train, 0, 1);
    st.train_under_m2 = undersample_all(cfg, st, st.data.train, 0, 2);
    st.test_under_m1 = undersample_all(cfg, st, st.data.test, 1, 1);
    st.test_under_m2 = undersample_all(cfg, st, st.data.test, 1, 2);
    return st;
}

namespace {

void copy_plane(Batch& batch, int image_slot, int channel, const Image2D& img) {
    const std::size_t hw = static_cast<std::size_t>(batch.height) * batch.width;
    std::copy(img.data.begin(), img.data.end(),
              batch.inputs.begin() +
                  (static_cast<std::size_t>(image_slot) * batch.in_ch + channel) * hw);
}

void copy_target(Batch& batch, int image_slot, const Image2D& img) {
    const std::size_t hw = static_cast<std::size_t>(batch.height) * batch.width;
    std::copy(img.data.begin(), img.data.end(),
              batch.targets.begin() + static_cast<std::size_t>(image_slot) * hw);
}

using BatchFiller = std::function<void(const std::vector<int>&, Batch&, std::uint64_t)>;

// Shared local-training loop: shuffled batches, fresh Adam, per-batch seeds.
void run_epochs(const ExperimentConfig& cfg, int client_tag, int round, int epochs,
                int n_samples, int in_ch, ModelParams& params, const BatchFiller& fill,
                std::vector<double>* losses) {
    if (n_samples < 1) throw InvalidInput("local training needs at least one sample");
    AdamState adam = make_adam_state(params.values.size(), cfg.lr);
    Batch batch;
    batch.in_ch = in_ch;
    batch.height = cfg.image_size;
    batch.width = cfg.image_size;
    ForwardTrace trace;
    std::vector<int> order(static_cast<std::size_t>(n_samples));
    const std::size_t hw = static_cast<std::size_t>(cfg.image_size) * cfg.image_size;
    for (int e = 0; e < epochs; ++e) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuf(derive_seed(cfg.seed, kTagShuffle, static_cast<std::uint64_t>(client_tag),
                             static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(e)));
        for (int i = n_samples - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(shuf.uniform_index(i + 1))]);
        const int n_batches = (n_samples + cfg.batch_size - 1) / cfg.batch_size;
        for (int b = 0; b < n_batches; ++b) {
            const int lo = b * cfg.batch_size;
            const int hi = std::min(n_samples, lo + cfg.batch_size);
            std::vector<int> ids(order.begin() + lo, order.begin() + hi);
            batch.n = hi - lo;
            batch.inputs.assign(static_cast<std::size_t>(batch.n) * in_ch * hw, 0.0);
            batch.targets.assign(static_cast<std::size_t>(batch.n) * hw, 0.0);
            fill(ids, batch,
                 derive_seed(cfg.seed, kTagDraw, static_cast<std::uint64_t>(client_tag),
                             static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(e),
                             static_cast<std::uint64_t>(b)));
            forward_with_trace(params, batch, trace, true);
            LossGrad lg = l1_loss(trace.pred, batch.targets);
            std::vector<double> grads = backward(params, batch, trace, lg.grad_pred);
            adam_step(params, grads, adam);
            if (losses) losses->push_back(lg.loss);
        }
    }
}

ModelParams wire_roundtrip(const ModelParams& params) {
    return deserialize_params(serialize_params(params));
}

}  // namespace

ModelParams local_train_multimodal(const ExperimentConfig& cfg, const ClientState& client,
                                   ModelParams params, int round, int epochs,
                                   std::vector<double>* losses) {
    if (!client.has_modality(1) || !client.has_modality(2))
        throw MissingModalityError("multimodal training needs both modalities");
    if (params.in_ch != 2) throw ShapeError("multimodal training needs a 2-channel model");
    const int d = cfg.direction;
    const int aux = d == 1 ? 2 : 1;
    const auto& under = d == 1 ? client.train_under_m1 : client.train_under_m2;
    const auto& train = client.data.train;
    run_epochs(cfg, client.id, round, epochs, static_cast<int>(train.size()), 2, params,
               [&](const std::vector<int>& ids, Batch& batch, std::uint64_t) {
                   for (std::size_t s = 0; s < ids.size(); ++s) {
                       const auto i = static_cast<std::size_t>(ids[s]);
                       copy_plane(batch, static_cast<int>(s), 0, under[i]);
                       copy_plane(batch, static_cast<int>(s), 1, slice_modality(train[i], aux));
                       copy_target(batch, static_cast<int>(s), slice_modality(train[i], d));
                   }
               },
               losses);
    return params;
}

ModelParams local_train_single_with_pseudo(const ExperimentConfig& cfg,
                                           const ClientState& client, ModelParams params,
                                           const CentroidMemory& memory, int round, int epochs,
                                           std::vector<double>* losses) {
    if (client.cfg.modalities.size() != 1)
        throw InvalidInput("pseudo-modality training is for single-modal clients");
    if (params.in_ch != 2) throw ShapeError("pseudo-modality training needs a 2-channel model");
    const int p = client.cfg.modalities[0];
    const int h = client.missing_modality();
    if (memory.for_modality(h).empty())
        throw MissingModalityError("centroid memory is empty for the missing modality");
    const int d = cfg.direction;
    const BlendParams blend{cfg.alpha};
    const auto& train = client.data.train;
    const auto& under_p = p == 1 ? client.train_under_m1 : client.train_under_m2;

    run_epochs(cfg, client.id, round, epochs, static_cast<int>(train.size()), 2, params,
               [&](const std::vector<int>& ids, Batch& batch, std::uint64_t draw_seed) {
                   const AmplitudeSpectrum& z = sample_centroid(memory, h, draw_seed);
                   for (std::size_t s = 0; s < ids.size(); ++s) {
                       const auto i = static_cast<std::size_t>(ids[s]);
                       const Image2D& own = slice_modality(train[i], p);
                       const Image2D pseudo = generate_pseudo(own, z, blend);
                       if (h == d) {
                           // the target itself is synthetic; its real twin is never read
                           NoiseSpec noise;
                           noise.sigma = cfg.noise_sigma;
                           noise.seed = derive_seed(draw_seed, kTagPseudoAcq,
                                                    static_cast<std::uint64_t>(i));
                           const Image2D under = undersample(pseudo, client.mask, noise);
                           copy_plane(batch, static_cast<int>(s), 0, under);
                           copy_plane(batch, static_cast<int>(s), 1, own);
                           copy_target(batch, static_cast<int>(s), pseudo);
                       } else {
                           copy_plane(batch, static_cast<int>(s), 0, under_p[i]);
                           copy_plane(batch, static_cast<int>(s), 1, pseudo);
                           copy_target(batch, static_cast<int>(s), own);
                       }
                   }
               },
               losses);
    return params;
}

ModelParams local_train_images(const ExperimentConfig& cfg, const ClientState& client,
                               ModelParams params, const std::vector<int>& modalities, int round,
                               int epochs, std::vector<double>* losses) {
    if (params.in_ch != 1) throw ShapeError("image-wise training needs a 1-channel model");
    struct Ref {
        const Image2D* under;
        const Image2D* full;
    };
    std::vector<Ref> samples;
    for (int m : modalities) {
        if (!client.has_modality(m))
            throw MissingModalityError("client does not own the requested modality");
        const auto& under = m == 1 ? client.train_under_m1 : client.train_under_m2;
        for (std::size_t i = 0; i < client.data.train.size(); ++i)
            samples.push_back({&under[i], &slice_modality(client.data.train[i], m)});
    }
    run_epochs(cfg, client.id, round, epochs, static_cast<int>(samples.size()), 1, params,
               [&](const std::vector<int>& ids, Batch& batch, std::uint64_t) {
                   for (std::size_t s = 0; s < ids.size(); ++s) {
                       const auto& ref = samples[static_cast<std::size_t>(ids[s])];
                       copy_plane(batch, static_cast<int>(s), 0, *ref.under);
                       copy_target(batch, static_cast<int>(s), *ref.full);
                   }
               },
               losses);
    return params;
}

CentroidMemory aggregate_centroids(const ExperimentConfig& cfg,
                                   const std::vector<ClientState>& clients, CommLedger& ledger) {
    bool any1 = false, any2 = false;
    for (const auto& c : clients) {
        any1 = any1 || c.has_modality(1);
        any2 = any2 || c.has_modality(2);
    }
    if (!any1 || !any2)
        throw MissingModalityError("every modality must exist at some client in the federation");

    ledger.beta = tensor_byte_size(std::vector<std::uint32_t>{
        static_cast<std::uint32_t>(cfg.image_size), static_cast<std::uint32_t>(cfg.image_size)});

    CentroidMemory memory;
    for (const auto& client : clients) {
        std::vector<int> mods = client.cfg.modalities;
        std::sort(mods.begin(), mods.end());
        for (int m : mods) {
            std::vector<AmplitudeSpectrum> spectra;
            spectra.reserve(client.data.train.size());
            for (const auto& s : client.data.train)
                spectra.push_back(decompose(fft2(slice_modality(s, m))).first);
            ClusterConfig kc;
            kc.k = cfg.k;
            kc.max_iter = cfg.cluster_max_iter;
            kc.tol = cfg.cluster_tol;
            kc.restarts = cfg.cluster_restarts;
            kc.seed = derive_seed(cfg.seed, kTagKmeans, static_cast<std::uint64_t>(client.id),
                                  static_cast<std::uint64_t>(m));
            CentroidSet set = kmeans(spectra, kc);
            set.modality = m;
            set.source_client = client.id;

            std::size_t bytes = 0;
            for (const auto& cent : set.centroids) {
                const auto buf = serialize_tensor(tensor_from_amplitude(cent));
                bytes += buf.size();
                std::size_t off = 0;
                memory.for_modality(m).push_back(amplitude_from_tensor(deserialize_tensor(buf, &off)));
            }
            Message msg;
            msg.round = 0;
            msg.sender = client.id;
            msg.receiver = kServerId;
            msg.kind = MessageKind::CentroidUpload;
            msg.payload_bytes = bytes;
            msg.modality = m;
            msg.k_eff = set.k;
            msg.n_source = static_cast<int>(spectra.size());
            ledger.log.push_back(msg);
        }
    }
    for (const auto& client : clients) {
        if (client.cfg.modalities.size() != 1) continue;
        const int h = client.missing_modality();
        Message msg;
        msg.round = 0;
        msg.sender = kServerId;
        msg.receiver = client.id;
        msg.kind = MessageKind::CentroidBroadcast;
        msg.payload_bytes = memory.for_modality(h).size() * ledger.beta;
        msg.modality = h;
        msg.k_eff = static_cast<int>(memory.for_modality(h).size());
        ledger.log.push_back(msg);
    }
    return memory;
}

std::vector<double> fedavg_weights(const std::vector<long long>& counts) {
    if (counts.empty()) throw InvalidInput("fedavg needs at least one client");
    long long total = 0;
    for (long long c : counts) {
        if (c <= 0) throw InvalidInput("fedavg sample counts must be positive");
        total += c;
    }
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        w[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return w;
}

ModelParams fedavg(const std::vector<ModelParams>& params, const std::vector<double>& weights) {
    if (params.empty() || params.size() != weights.size())
        throw InvalidInput("fedavg needs one weight per parameter vector");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (std::abs(wsum - 1.0) > 1e-12) throw InvalidInput("fedavg weights must sum to 1");
    for (const auto& p : params) {
        if (p.in_ch != params[0].in_ch)
            throw AggregationError("cannot average models with different in_ch");
        if (p.values.size() != params[0].values.size())
            throw AggregationError("cannot average parameter vectors of different lengths");
    }
    ModelParams out;
    out.in_ch = params[0].in_ch;
    out.values.assign(params[0].values.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t j = 0; j < out.values.size(); ++j)
            out.values[j] += weights[i] * params[i].values[j];
    return out;
}

namespace {

Image2D pred_to_image(const std::vector<double>& pred, int slot, int h, int w) {
    Image2D img(h, w);
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::copy(pred.begin() + static_cast<std::size_t>(slot) * hw,
              pred.begin() + static_cast<std::size_t>(slot + 1) * hw, img.data.begin());
    return img;
}

struct EvalAccum {
    double psnr_sum = 0.0, ssim_sum = 0.0;
    int n = 0;
    void add(const Image2D& ref, const Image2D& pred) {
        psnr_sum += psnr(ref, pred);
        ssim_sum += ssim(ref, pred);
        ++n;
    }
};

// Evaluate a 2-channel model on a client's real held-out pairs.
ClientMetric eval_pairs(const ExperimentConfig& cfg, const ClientState& client,
                        const ModelParams& params, int round) {
    const int d = cfg.direction;
    const int aux = d == 1 ? 2 : 1;
    const auto& under = d == 1 ? client.test_under_m1 : client.test_under_m2;
    const auto& test = client.data.test;
    EvalAccum acc;
    Batch batch;
    batch.in_ch = 2;
    batch.height = cfg.image_size;
    batch.width = cfg.image_size;
    const std::size_t hw = static_cast<std::size_t>(cfg.image_size) * cfg.image_size;
    const int chunk = std::max(1, cfg.batch_size);
    for (std::size_t lo = 0; lo < test.size(); lo += static_cast<std::size_t>(chunk)) {
        const std::size_t hi = std::min(test.size(), lo + static_cast<std::size_t>(chunk));
        batch.n = static_cast<int>(hi - lo);
        batch.inputs.assign(static_cast<std::size_t>(batch.n) * 2 * hw, 0.0);
        batch.targets.clear();
        for (std::size_t i = lo; i < hi; ++i) {
            copy_plane(batch, static_cast<int>(i - lo), 0, under[i]);
            copy_plane(batch, static_cast<int>(i - lo), 1, slice_modality(test[i], aux));
        }
        const std::vector<double> pred = forward(params, batch);
        for (std::size_t i = lo; i < hi; ++i)
            acc.add(slice_modality(test[i], d),
                    pred_to_image(pred, static_cast<int>(i - lo), cfg.image_size, cfg.image_size));
    }
    return {round, client.id, d, acc.psnr_sum / acc.n, acc.ssim_sum / acc.n};
}

// Evaluate a 1-channel model on one modality of the client's held-out pairs.
ClientMetric eval_single(const ExperimentConfig& cfg, const ClientState& client,
                         const ModelParams& params, int modality, int round) {
    const auto& under = modality == 1 ? client.test_under_m1 : client.test_under_m2;
    const auto& test = client.data.test;
    EvalAccum acc;
    Batch batch;
    batch.in_ch = 1;
    batch.height = cfg.image_size;
    batch.width = cfg.image_size;
    const std::size_t hw = static_cast<std::size_t>(cfg.image_size) * cfg.image_size;
    const int chunk = std::max(1, cfg.batch_size);
    for (std::size_t lo = 0; lo < test.size(); lo += static_cast<std::size_t>(chunk)) {
        const std::size_t hi = std::min(test.size(), lo + static_cast<std::size_t>(chunk));
        batch.n = static_cast<int>(hi - lo);
        batch.inputs.assign(static_cast<std::size_t>(batch.n) * hw, 0.0);
        batch.targets.clear();
        for (std::size_t i = lo; i < hi; ++i)
            copy_plane(batch, static_cast<int>(i - lo), 0, under[i]);
        const std::vector<double> pred = forward(params, batch);
        for (std::size_t i = lo; i < hi; ++i)
            acc.add(slice_modality(test[i], modality),
                    pred_to_image(pred, static_cast<int>(i - lo), cfg.image_size, cfg.image_size));
    }
    return {round, client.id, modality, acc.psnr_sum / acc.n, acc.ssim_sum / acc.n};
}

void log_param_broadcast(CommLedger& ledger, int round, int client, std::size_t bytes) {
    Message m;
    m.round = round;
    m.sender = kServerId;
    m.receiver = client;
    m.kind = MessageKind::ParamBroadcast;
    m.payload_bytes = bytes;
    ledger.log.push_back(m);
}

void log_param_upload(CommLedger& ledger, int round, int client, std::size_t bytes) {
    Message m;
    m.round = round;
    m.sender = client;
    m.receiver = kServerId;
    m.kind = MessageKind::ParamUpload;
    m.payload_bytes = bytes;
    ledger.log.push_back(m);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    return run_experiment(cfg, build_datasets(cfg));
}

RunReport run_experiment(const ExperimentConfig& cfg,
                         const std::vector<ClientDataset>& datasets) {
    validate_config(cfg);
    if (datasets.size() != cfg.clients.size())
        throw InvalidInput("dataset count does not match client count");
    const RunMode mode = parse_mode(cfg.mode);

    std::vector<ClientState> clients;
    clients.reserve(cfg.clients.size());
    for (std::size_t q = 0; q < cfg.clients.size(); ++q)
        clients.push_back(prepare_client(cfg, static_cast<int>(q), datasets[q]));

    RunReport rep;
    rep.mode = cfg.mode;
    rep.seed = cfg.seed;
    rep.rounds = cfg.rounds;
    for (const auto& c : clients) rep.client_modalities.push_back(c.cfg.modalities);
    CommLedger& ledger = rep.ledger;
    ledger.beta = tensor_byte_size(std::vector<std::uint32_t>{
        static_cast<std::uint32_t>(cfg.image_size), static_cast<std::uint32_t>(cfg.image_size)});

    const std::uint64_t init_seed = derive_seed(cfg.seed, kTagInit);
    const int final_round = cfg.rounds;

    if (mode == RunMode::FedPMG || mode == RunMode::Ideal) {
        CentroidMemory memory;
        if (mode == RunMode::FedPMG) memory = aggregate_centroids(cfg, clients, ledger);
        if (mode == RunMode::Ideal)  // unused real modalities become available
            for (auto& c : clients) c.cfg.modalities = {1, 2};
        ModelParams global = init_params(2, init_seed);
        for (int r = 1; r <= cfg.rounds; ++r) {
            std::vector<ModelParams> locals;
            std::vector<long long> counts;
            const auto wire = serialize_params(global);
            for (const auto& client : clients) {
                log_param_broadcast(ledger, r, client.id, wire.size());
                ModelParams local = deserialize_params(wire);
                if (client.cfg.modalities.size() == 2)
                    local = local_train_multimodal(cfg, client, std::move(local), r,
                                                   cfg.local_epochs);
                else
                    local = local_train_single_with_pseudo(cfg, client, std::move(local), memory,
                                                           r, cfg.local_epochs);
                const auto up = serialize_params(local);
                log_param_upload(ledger, r, client.id, up.size());
                locals.push_back(deserialize_params(up));
                counts.push_back(client.data.train.size());
            }
            global = fedavg(locals, fedavg_weights(counts));
        }
        for (const auto& client : clients)
            rep.metrics.push_back(eval_pairs(cfg, client, global, final_round));
        rep.final_params.push_back(std::move(global));
    } else if (mode == RunMode::Mixup) {
        ModelParams global = init_params(1, init_seed);
        for (int r = 1; r <= cfg.rounds; ++r) {
            std::vector<ModelParams> locals;
            std::vector<long long> counts;
            const auto wire = serialize_params(global);
            for (const auto& client : clients) {
                log_param_broadcast(ledger, r, client.id, wire.size());
                ModelParams local = local_train_images(cfg, client, deserialize_params(wire),
                                                       client.cfg.modalities, r,
                                                       cfg.local_epochs);
                const auto up = serialize_params(local);
                log_param_upload(ledger, r, client.id, up.size());
                locals.push_back(deserialize_params(up));
                counts.push_back(static_cast<long long>(client.data.train.size()) *
                                 static_cast<long long>(client.cfg.modalities.size()));
            }
            global = fedavg(locals, fedavg_weights(counts));
        }
        for (const auto& client : clients)
            for (int m : {1, 2})
                rep.metrics.push_back(eval_single(cfg, client, global, m, final_round));
        rep.final_params.push_back(std::move(global));
    } else if (mode == RunMode::Group) {
        ModelParams g1 = init_params(1, derive_seed(init_seed, 1ULL));
        ModelParams g2 = init_params(1, derive_seed(init_seed, 2ULL));
        for (int r = 1; r <= cfg.rounds; ++r) {
            for (int m : {1, 2}) {
                ModelParams& global = m == 1 ? g1 : g2;
                std::vector<ModelParams> locals;
                std::vector<long long> counts;
                const auto wire = serialize_params(global);
                for (const auto& client : clients) {
                    if (!client.has_modality(m)) continue;
                    log_param_broadcast(ledger, r, client.id, wire.size());
                    ModelParams local = local_train_images(cfg, client, deserialize_params(wire),
                                                           {m}, r, cfg.local_epochs);
                    const auto up = serialize_params(local);
                    log_param_upload(ledger, r, client.id, up.size());
                    locals.push_back(deserialize_params(up));
                    counts.push_back(client.data.train.size());
                }
                if (!locals.empty()) global = fedavg(locals, fedavg_weights(counts));
            }
        }
        for (const auto& client : clients)
            for (int m : {1, 2})
                rep.metrics.push_back(
                    eval_single(cfg, client, m == 1 ? g1 : g2, m, final_round));
        rep.final_params.push_back(std::move(g1));
        rep.final_params.push_back(std::move(g2));
    } else {  // Gather: centralized training, no per-round traffic
        ModelParams global = init_params(2, init_seed);
        struct PoolRef {
            const ClientState* client;
            int index;
        };
        std::vector<PoolRef> pool;
        for (const auto& client : clients)
            for (std::size_t i = 0; i < client.data.train.size(); ++i)
                pool.push_back({&client, static_cast<int>(i)});
        const int d = cfg.direction;
        const int aux = d == 1 ? 2 : 1;
        const int total_epochs = cfg.rounds * cfg.local_epochs;
        if (total_epochs > 0) {
            run_epochs(cfg, kServerId, 0, total_epochs, static_cast<int>(pool.size()), 2, global,
                       [&](const std::vector<int>& ids, Batch& batch, std::uint64_t) {
                           for (std::size_t s = 0; s < ids.size(); ++s) {
                               const PoolRef& ref = pool[static_cast<std::size_t>(ids[s])];
                               const auto& under = d == 1 ? ref.client->train_under_m1
                                                          : ref.client->train_under_m2;
                               const auto& slice =
                                   ref.client->data.train[static_cast<std::size_t>(ref.index)];
                               copy_plane(batch, static_cast<int>(s), 0,
                                          under[static_cast<std::size_t>(ref.index)]);
                               copy_plane(batch, static_cast<int>(s), 1,
                                          slice_modality(slice, aux));
                               copy_target(batch, static_cast<int>(s), slice_modality(slice, d));
                           }
                       },
                       nullptr);
        }
        for (const auto& client : clients)
            rep.metrics.push_back(eval_pairs(cfg, client, global, final_round));
        rep.final_params.push_back(std::move(global));
    }

    for (int r = 0; r <= cfg.rounds; ++r)
        rep.traffic.push_back(
            {r, ledger.param_bytes_in_round(r), ledger.info_bytes_in_round(r)});
    return rep;
}

double RunReport::mean_psnr(int modality) const {
    double s = 0.0;
    int n = 0;
    for (const auto& m : metrics)
        if (m.modality == modality) {
            s += m.psnr;
            ++n;
        }
    return n ? s / n : 0.0;
}

double RunReport::mean_ssim(int modality) const {
    double s = 0.0;
    int n = 0;
    for (const auto& m : metrics)
        if (m.modality == modality) {
            s += m.ssim;
            ++n;
        }
    return n ? s / n : 0.0;
}

std::string metrics_csv_text(const RunReport& report) {
    std::string out = "round,client,modality,psnr,ssim\n";
    for (const auto& m : report.metrics) {
        out += std::to_string(m.round) + "," + std::to_string(m.client) + "," +
               std::to_string(m.modality) + "," + format_double(m.psnr) + "," +
               format_double(m.ssim) + "\n";
    }
    return out;
}

std::string ledger_csv_text(const RunReport& report) {
    std::string out = "round,param_bytes,info_bytes\n";
    for (const auto& t : report.traffic)
        out += std::to_string(t.round) + "," + std::to_string(t.param_bytes) + "," +
               std::to_string(t.info_bytes) + "\n";
    return out;
}

std::string report_text(const ExperimentConfig& cfg, const RunReport& report) {
    std::ostringstream os;
    os << "mode=" << report.mode << " seed=" << report.seed << " rounds=" << report.rounds
       << " direction=" << cfg.direction << "\n\n";
    os << "client  modality  psnr      ssim\n";
    for (const auto& m : report.metrics) {
        char line[96];
        std::snprintf(line, sizeof(line), "%-7d %-9d %-9.4f %-8.6f\n", m.client, m.modality,
                      m.psnr, m.ssim);
        os << line;
    }
    for (int m : {1, 2}) {
        bool any = false;
        for (const auto& row : report.metrics) any = any || row.modality == m;
        if (!any) continue;
        char line[96];
        std::snprintf(line, sizeof(line), "mean    %-9d %-9.4f %-8.6f\n", m,
                      report.mean_psnr(m), report.mean_ssim(m));
        os << line;
    }
    os << "\nparam_upload_bytes=" << report.ledger.total_param_bytes() << "\n";
    os << "info_upload_bytes=" << report.ledger.total_info_bytes() << "\n";
    const long long naive = report.ledger.naive_spectra();
    if (naive > 0) {
        os << "beta_bytes_per_spectrum=" << report.ledger.beta << "\n";
        os << "naive_info_bytes=" << static_cast<unsigned long long>(naive) * report.ledger.beta
           << "\n";
        os << "shipped_centroids=" << report.ledger.shipped_centroids() << "\n";
        os << "naive_spectra=" << naive << "\n";
        os << "info_reduction=" << format_double(report.ledger.reduction()) << "\n";
        for (std::size_t q = 0; q < report.client_modalities.size(); ++q) {
            const double r = report.ledger.client_reduction(static_cast<int>(q));
            os << "client." << q << ".info_reduction=" << format_double(r) << "\n";
        }
    }
    return os.str();
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw FormatError("cannot write " + path);
    f << text;
    if (!f) throw FormatError("short write: " + path);
}

}  // namespace

void write_metrics_csv(const std::string& path, const RunReport& report) {
    write_text(path, metrics_csv_text(report));
}

void write_ledger_csv(const std::string& path, const RunReport& report) {
    write_text(path, ledger_csv_text(report));
}

void write_report_txt(const std::string& path, const ExperimentConfig& cfg,
                      const RunReport& report) {
    write_text(path, report_text(cfg, report));
}

}  // namespace fedpmg
