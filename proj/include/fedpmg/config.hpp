#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedpmg/phantom.hpp"

namespace fedpmg {

struct MaskConfig {
    std::string type = "equispaced";  // or "random"
    double accel = 4.0;
    double center_fraction = 0.08;
};

// center_fraction when the config leaves it out: 0.08 below 6x, 0.06 from 6x up.
double default_center_fraction(double accel);

struct ClientConfig {
    std::vector<int> modalities{1, 2};
    int n_train = 192;
    MaskConfig mask;
    std::string site_name = "fastmri_3t";
    SiteParams site = site_preset("fastmri_3t");
};

struct ExperimentConfig {
    int rounds = 50;
    int local_epochs = 5;
    int batch_size = 8;
    double lr = 1e-4;
    int k = 50;
    double alpha = 0.09;
    std::string mode = "fedpmg";
    int direction = 1;  // modality to reconstruct
    std::uint64_t seed = 0;
    int image_size = 32;
    int slices_per_subject = 16;
    double split_ratio = 0.7;
    int cluster_max_iter = 100;
    double cluster_tol = 1e-6;
    int cluster_restarts = 3;
    double noise_sigma = 0.0;  // k-space measurement noise
    std::string data_dir = "data";
    std::vector<double> sweep_alpha{0.0, 0.01, 0.05, 0.09, 1.0};
    std::vector<int> sweep_k{1, 10, 50, 100, 200};
    std::vector<ClientConfig> clients;
};

// One multi-modal client plus two single-modal clients on distinct sites.
ExperimentConfig default_config();

// Strict flat key=value text. Unknown or duplicate keys are ConfigError;
// parse(serialize(cfg)) is a fixpoint.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

// Shared helpers for the manifest and CSV plumbing.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
std::string format_double(double v);
std::string join_csv(const std::vector<double>& v);
std::string join_csv(const std::vector<int>& v);

}  // namespace fedpmg
