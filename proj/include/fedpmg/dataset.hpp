#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedpmg/config.hpp"
#include "fedpmg/phantom.hpp"

namespace fedpmg {

struct ClientDataset {
    std::vector<PairedSlice> train;
    std::vector<PairedSlice> test;
};

// Subject-level split: no subject straddles train/test. Deterministic per
// seed; both sides non-empty. Fewer than two subjects is InvalidInput.
std::pair<std::vector<PairedSlice>, std::vector<PairedSlice>> split_dataset(
    const std::vector<PairedSlice>& slices, double ratio, std::uint64_t seed);

// Generates just enough subjects that the train side holds n_train slices
// (the train list is truncated to exactly n_train; the test side keeps all
// of its slices).
ClientDataset generate_client_dataset(const ExperimentConfig& cfg, int client_id);

// Layout: <dir>/client_<q>/{train,test}/subj_<i>_slice_<j>_m<p>.fpmg
void save_client_dataset(const std::string& dir, int client_id, const ClientDataset& ds);
ClientDataset load_client_dataset(const std::string& dir, int client_id);

// Writes every client plus dataset_manifest.txt; returns the manifest path.
std::string generate_dataset_tree(const ExperimentConfig& cfg);
bool dataset_exists(const ExperimentConfig& cfg);
std::vector<ClientDataset> load_dataset_tree(const ExperimentConfig& cfg);

// Canonical description of everything that shapes the generated tree. A
// manifest whose recorded fingerprint differs was made by another config,
// so loading it would silently swap the data under the experiment.
std::string dataset_fingerprint(const ExperimentConfig& cfg);
bool dataset_matches(const ExperimentConfig& cfg);

// In-memory equivalent of generate+load, bypassing disk.
std::vector<ClientDataset> build_datasets(const ExperimentConfig& cfg);

}  // namespace fedpmg
