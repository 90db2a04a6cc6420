#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedpmg/clustering.hpp"
#include "fedpmg/config.hpp"
#include "fedpmg/dataset.hpp"
#include "fedpmg/model.hpp"
#include "fedpmg/pmg.hpp"
#include "fedpmg/sampling.hpp"

namespace fedpmg {

inline constexpr int kServerId = -1;

enum class RunMode { FedPMG, Ideal, Mixup, Group, Gather };
RunMode parse_mode(const std::string& name);
std::string mode_name(RunMode mode);

// Payload kinds are the schema-level privacy guarantee: centroid messages can
// carry only amplitude tensors, parameter messages only weight vectors.
enum class MessageKind { CentroidUpload, ParamUpload, ParamBroadcast, CentroidBroadcast };
std::string kind_name(MessageKind kind);

struct Message {
    int round = 0;  // 0 = the one-shot phase before training
    int sender = kServerId;
    int receiver = kServerId;
    MessageKind kind = MessageKind::ParamBroadcast;
    std::size_t payload_bytes = 0;
    int modality = 0;  // centroid messages only
    int k_eff = 0;     // centroids shipped in a CentroidUpload
    int n_source = 0;  // spectra a naive upload would have shipped instead
};

struct CommLedger {
    std::vector<Message> log;
    std::size_t beta = 0;  // serialized bytes of one amplitude spectrum

    // Uploads only; broadcasts stay in the log but are not billed.
    std::size_t param_bytes_in_round(int round) const;
    std::size_t info_bytes_in_round(int round) const;
    std::size_t total_param_bytes() const;
    std::size_t total_info_bytes() const;
    long long naive_spectra() const;      // sum of n_source over centroid uploads
    long long shipped_centroids() const;  // sum of k_eff
    double reduction() const;             // 1 - shipped/naive
    double client_reduction(int client) const;
};

// Per-client runtime bundle: config, data, fixed mask, and the undersampled
// copies of every image (measurement noise included), computed once.
struct ClientState {
    int id = 0;
    ClientConfig cfg;
    ClientDataset data;
    Mask1D mask;
    std::vector<Image2D> train_under_m1, train_under_m2;
    std::vector<Image2D> test_under_m1, test_under_m2;

    bool has_modality(int m) const;
    int missing_modality() const;  // 0 when multi-modal
};

ClientState prepare_client(const ExperimentConfig& cfg, int client_id, ClientDataset data);

struct ClientMetric {
    int round = 0;
    int client = 0;
    int modality = 0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct RoundTraffic {
    int round = 0;
    std::size_t param_bytes = 0;
    std::size_t info_bytes = 0;
};

struct RunReport {
    std::string mode;
    std::uint64_t seed = 0;
    int rounds = 0;
    std::vector<ClientMetric> metrics;
    std::vector<RoundTraffic> traffic;
    CommLedger ledger;
    std::vector<std::vector<int>> client_modalities;
    // one entry for most modes; per-modality pair for group mode
    std::vector<ModelParams> final_params;

    double mean_psnr(int modality) const;
    double mean_ssim(int modality) const;
};

// One-shot upload of per-modality k-means centroids from every client.
// Throws MissingModalityError when a modality exists at no client.
CentroidMemory aggregate_centroids(const ExperimentConfig& cfg,
                                   const std::vector<ClientState>& clients, CommLedger& ledger);

// Trainers return the locally updated parameters; optional per-batch losses.
ModelParams local_train_multimodal(const ExperimentConfig& cfg, const ClientState& client,
                                   ModelParams params, int round, int epochs,
                                   std::vector<double>* losses = nullptr);
ModelParams local_train_single_with_pseudo(const ExperimentConfig& cfg, const ClientState& client,
                                           ModelParams params, const CentroidMemory& memory,
                                           int round, int epochs,
                                           std::vector<double>* losses = nullptr);
// 1-channel training on the client's own images of the listed modalities.
ModelParams local_train_images(const ExperimentConfig& cfg, const ClientState& client,
                               ModelParams params, const std::vector<int>& modalities, int round,
                               int epochs, std::vector<double>* losses = nullptr);

std::vector<double> fedavg_weights(const std::vector<long long>& counts);
ModelParams fedavg(const std::vector<ModelParams>& params, const std::vector<double>& weights);

RunReport run_experiment(const ExperimentConfig& cfg);
RunReport run_experiment(const ExperimentConfig& cfg, const std::vector<ClientDataset>& datasets);

std::string metrics_csv_text(const RunReport& report);
std::string ledger_csv_text(const RunReport& report);
std::string report_text(const ExperimentConfig& cfg, const RunReport& report);
void write_metrics_csv(const std::string& path, const RunReport& report);
void write_ledger_csv(const std::string& path, const RunReport& report);
void write_report_txt(const std::string& path, const ExperimentConfig& cfg,
                      const RunReport& report);

}  // namespace fedpmg
