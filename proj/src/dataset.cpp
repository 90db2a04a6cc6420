#include "fedpmg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fedpmg/errors.hpp"
#include "fedpmg/rng.hpp"
#include "fedpmg/tensor_io.hpp"

namespace fs = std::filesystem;

namespace fedpmg {

namespace {

// deterministic Fisher-Yates
template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
        std::swap(v[static_cast<std::size_t>(i)],
                  v[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
}

int train_subject_count(int n_subjects, double ratio) {
    int n = static_cast<int>(std::floor(n_subjects * ratio + 0.5));
    if (n < 1) n = 1;
    if (n > n_subjects - 1) n = n_subjects - 1;
    return n;
}

void sort_slices(std::vector<PairedSlice>& v) {
    std::sort(v.begin(), v.end(), [](const PairedSlice& a, const PairedSlice& b) {
        return a.subject_id != b.subject_id ? a.subject_id < b.subject_id
                                            : a.slice_index < b.slice_index;
    });
}

std::uint64_t client_data_seed(const ExperimentConfig& cfg, int client_id) {
    return derive_seed(cfg.seed, 0x64617461ULL, static_cast<std::uint64_t>(client_id));
}

}  // namespace

std::pair<std::vector<PairedSlice>, std::vector<PairedSlice>> split_dataset(
    const std::vector<PairedSlice>& slices, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw InvalidInput("split ratio must lie strictly inside (0, 1)");
    std::vector<int> subjects;
    for (const auto& s : slices)
        if (std::find(subjects.begin(), subjects.end(), s.subject_id) == subjects.end())
            subjects.push_back(s.subject_id);
    if (subjects.size() < 2) throw InvalidInput("subject-level split needs at least 2 subjects");
    std::sort(subjects.begin(), subjects.end());

    Rng rng(derive_seed(seed, 0x73706c69ULL));  // "spli"
    shuffle_vec(subjects, rng);
    const int n_train = train_subject_count(static_cast<int>(subjects.size()), ratio);
    std::vector<int> train_ids(subjects.begin(), subjects.begin() + n_train);

    std::pair<std::vector<PairedSlice>, std::vector<PairedSlice>> out;
    for (const auto& s : slices) {
        const bool in_train =
            std::find(train_ids.begin(), train_ids.end(), s.subject_id) != train_ids.end();
        (in_train ? out.first : out.second).push_back(s);
    }
    sort_slices(out.first);
    sort_slices(out.second);
    return out;
}

ClientDataset generate_client_dataset(const ExperimentConfig& cfg, int client_id) {
    if (client_id < 0 || client_id >= static_cast<int>(cfg.clients.size()))
        throw InvalidInput("client id out of range");
    const ClientConfig& cc = cfg.clients[static_cast<std::size_t>(client_id)];
    const std::uint64_t seed = client_data_seed(cfg, client_id);

    // smallest subject count whose train side covers n_train slices
    int n_subjects = 2;
    while (train_subject_count(n_subjects, cfg.split_ratio) * cfg.slices_per_subject <
           cc.n_train)
        ++n_subjects;

    std::vector<PairedSlice> all;
    all.reserve(static_cast<std::size_t>(n_subjects) * cfg.slices_per_subject);
    for (int i = 0; i < n_subjects; ++i) {
        PhantomSpec spec;
        spec.size = cfg.image_size;
        spec.slices = cfg.slices_per_subject;
        spec.site = cc.site;
        spec.seed = derive_seed(seed, 0x73756271ULL, static_cast<std::uint64_t>(i));
        auto slices = generate_subject(spec, i);
        for (auto& s : slices) all.push_back(std::move(s));
    }

    ClientDataset ds;
    auto [train, test] = split_dataset(all, cfg.split_ratio, seed);
    if (static_cast<int>(train.size()) < cc.n_train)
        throw InvalidInput("internal: train split smaller than requested n_train");
    train.resize(static_cast<std::size_t>(cc.n_train));
    ds.train = std::move(train);
    ds.test = std::move(test);
    return ds;
}

namespace {

std::string slice_file(const PairedSlice& s, int modality) {
    return "subj_" + std::to_string(s.subject_id) + "_slice_" + std::to_string(s.slice_index) +
           "_m" + std::to_string(modality) + ".fpmg";
}

void save_split(const fs::path& dir, const std::vector<PairedSlice>& slices) {
    fs::create_directories(dir);
    for (const auto& s : slices) {
        save_tensor((dir / slice_file(s, 1)).string(), tensor_from_image(s.modality1));
        save_tensor((dir / slice_file(s, 2)).string(), tensor_from_image(s.modality2));
    }
}

std::vector<PairedSlice> load_split(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw FormatError("missing dataset directory: " + dir.string());
    std::map<std::pair<int, int>, PairedSlice> by_key;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        int subj = 0, slice = 0, modality = 0;
        if (std::sscanf(name.c_str(), "subj_%d_slice_%d_m%d.fpmg", &subj, &slice, &modality) != 3)
            continue;
        auto& ps = by_key[{subj, slice}];
        ps.subject_id = subj;
        ps.slice_index = slice;
        Image2D img = image_from_tensor(load_tensor(entry.path().string()));
        if (modality == 1)
            ps.modality1 = std::move(img);
        else if (modality == 2)
            ps.modality2 = std::move(img);
        else
            throw FormatError("unexpected modality tag in " + name);
    }
    std::vector<PairedSlice> out;
    out.reserve(by_key.size());
    for (auto& [key, ps] : by_key) {
        if (ps.modality1.data.empty() || ps.modality2.data.empty())
            throw FormatError("dataset slice missing one modality file in " + dir.string());
        out.push_back(std::move(ps));
    }
    sort_slices(out);
    return out;
}

}  // namespace

void save_client_dataset(const std::string& dir, int client_id, const ClientDataset& ds) {
    const fs::path root = fs::path(dir) / ("client_" + std::to_string(client_id));
    save_split(root / "train", ds.train);
    save_split(root / "test", ds.test);
}

ClientDataset load_client_dataset(const std::string& dir, int client_id) {
    const fs::path root = fs::path(dir) / ("client_" + std::to_string(client_id));
    ClientDataset ds;
    ds.train = load_split(root / "train");
    ds.test = load_split(root / "test");
    return ds;
}

std::string dataset_fingerprint(const ExperimentConfig& cfg) {
    std::ostringstream s;
    s << cfg.image_size << '/' << cfg.slices_per_subject << '/' << format_double(cfg.split_ratio);
    for (std::size_t q = 0; q < cfg.clients.size(); ++q) {
        const auto& cc = cfg.clients[q];
        s << ';' << join_csv(cc.modalities) << ',' << cc.n_train << ','
          << client_data_seed(cfg, static_cast<int>(q)) << ',' << format_double(cc.site.gain)
          << ',' << format_double(cc.site.gamma) << ',' << format_double(cc.site.noise_sigma)
          << ',' << format_double(cc.site.bias_smoothness);
    }
    return s.str();
}

bool dataset_matches(const ExperimentConfig& cfg) {
    const fs::path path = fs::path(cfg.data_dir) / "dataset_manifest.txt";
    std::ifstream f(path);
    if (!f) return false;
    const std::string want = "fingerprint=" + dataset_fingerprint(cfg);
    std::string line;
    while (std::getline(f, line))
        if (line == want) return true;
    return false;
}

std::string generate_dataset_tree(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.data_dir);
    std::ostringstream manifest;
    manifest << "fingerprint=" << dataset_fingerprint(cfg) << "\n";
    manifest << "seed=" << cfg.seed << "\n";
    manifest << "image_size=" << cfg.image_size << "\n";
    manifest << "slices_per_subject=" << cfg.slices_per_subject << "\n";
    manifest << "split_ratio=" << format_double(cfg.split_ratio) << "\n";
    manifest << "clients=" << cfg.clients.size() << "\n";
    for (std::size_t q = 0; q < cfg.clients.size(); ++q) {
        const ClientDataset ds = generate_client_dataset(cfg, static_cast<int>(q));
        // drop leftovers from any previous tree so loads see exactly this data
        fs::remove_all(fs::path(cfg.data_dir) / ("client_" + std::to_string(q)));
        save_client_dataset(cfg.data_dir, static_cast<int>(q), ds);
        const auto& cc = cfg.clients[q];
        const std::string prefix = "client." + std::to_string(q) + ".";
        manifest << prefix << "modalities=" << join_csv(cc.modalities) << "\n";
        manifest << prefix << "n_train=" << ds.train.size() << "\n";
        manifest << prefix << "n_test=" << ds.test.size() << "\n";
        manifest << prefix << "seed=" << client_data_seed(cfg, static_cast<int>(q)) << "\n";
        manifest << prefix << "gain=" << format_double(cc.site.gain) << "\n";
        manifest << prefix << "gamma=" << format_double(cc.site.gamma) << "\n";
        manifest << prefix << "noise_sigma=" << format_double(cc.site.noise_sigma) << "\n";
        manifest << prefix << "bias_smoothness=" << format_double(cc.site.bias_smoothness)
                 << "\n";
    }
    const std::string path = (fs::path(cfg.data_dir) / "dataset_manifest.txt").string();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw FormatError("cannot write manifest: " + path);
    f << manifest.str();
    return path;
}

bool dataset_exists(const ExperimentConfig& cfg) {
    return fs::exists(fs::path(cfg.data_dir) / "dataset_manifest.txt");
}

std::vector<ClientDataset> load_dataset_tree(const ExperimentConfig& cfg) {
    std::vector<ClientDataset> out;
    out.reserve(cfg.clients.size());
    for (std::size_t q = 0; q < cfg.clients.size(); ++q)
        out.push_back(load_client_dataset(cfg.data_dir, static_cast<int>(q)));
    return out;
}

std::vector<ClientDataset> build_datasets(const ExperimentConfig& cfg) {
    std::vector<ClientDataset> out;
    out.reserve(cfg.clients.size());
    for (std::size_t q = 0; q < cfg.clients.size(); ++q)
        out.push_back(generate_client_dataset(cfg, static_cast<int>(q)));
    return out;
}

}  // namespace fedpmg
