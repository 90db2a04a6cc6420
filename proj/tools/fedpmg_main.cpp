#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "fedpmg/clustering.hpp"
#include "fedpmg/config.hpp"
#include "fedpmg/dataset.hpp"
#include "fedpmg/errors.hpp"
#include "fedpmg/fft.hpp"
#include "fedpmg/federation.hpp"
#include "fedpmg/pmg.hpp"
#include "fedpmg/rng.hpp"
#include "fedpmg/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace fedpmg;

namespace {

ExperimentConfig load_or_default(const std::string& path) {
    if (path.empty()) return default_config();
    return load_config(path);
}

void apply_seed_env(ExperimentConfig& cfg) {
    const char* env = std::getenv("FEDPMG_SEED");
    if (!env) return;
    std::uint64_t seed = 0;
    const std::string s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("FEDPMG_SEED is not an unsigned integer: " + s);
    cfg.seed = seed;
}

std::vector<ClientDataset> ensure_datasets(const ExperimentConfig& cfg) {
    if (!dataset_exists(cfg)) {
        std::cout << "dataset missing under " << cfg.data_dir << ", generating\n";
        generate_dataset_tree(cfg);
    } else if (!dataset_matches(cfg)) {
        std::cout << "dataset under " << cfg.data_dir
                  << " was generated from a different config, regenerating\n";
        generate_dataset_tree(cfg);
    }
    return load_dataset_tree(cfg);
}

void write_run_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                       const RunReport& rep) {
    fs::create_directories(out_dir);
    save_config((fs::path(out_dir) / "config.txt").string(), cfg);
    write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), rep);
    write_ledger_csv((fs::path(out_dir) / "ledger.csv").string(), rep);
    write_report_txt((fs::path(out_dir) / "report.txt").string(), cfg, rep);
    if (rep.final_params.size() == 1) {
        save_checkpoint((fs::path(out_dir) / "checkpoint_final.fpmg").string(),
                        rep.final_params[0]);
    } else if (rep.final_params.size() == 2) {
        save_checkpoint((fs::path(out_dir) / "checkpoint_m1.fpmg").string(),
                        rep.final_params[0]);
        save_checkpoint((fs::path(out_dir) / "checkpoint_m2.fpmg").string(),
                        rep.final_params[1]);
    }
}

int cmd_gen_data(const std::string& config_path) {
    ExperimentConfig cfg = load_or_default(config_path);
    apply_seed_env(cfg);
    const std::string manifest = generate_dataset_tree(cfg);
    std::cout << "wrote " << manifest << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& mode, bool seed_given,
            std::uint64_t seed, const std::string& out_dir) {
    ExperimentConfig cfg = load_or_default(config_path);
    apply_seed_env(cfg);
    if (!mode.empty()) cfg.mode = mode;
    if (seed_given) cfg.seed = seed;
    validate_config(cfg);
    const auto datasets = ensure_datasets(cfg);
    const RunReport rep = run_experiment(cfg, datasets);
    write_run_outputs(out_dir, cfg, rep);
    std::cout << "mode=" << rep.mode << " mean_psnr_m1=" << format_double(rep.mean_psnr(1))
              << " mean_psnr_m2=" << format_double(rep.mean_psnr(2)) << "\n";
    std::cout << "outputs in " << out_dir << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, const std::string& out_dir) {
    ExperimentConfig cfg = load_or_default(config_path);
    apply_seed_env(cfg);
    if (param != "alpha" && param != "k")
        throw ConfigError("sweep --param must be alpha or k");
    std::vector<std::string> values;
    if (!values_csv.empty()) {
        std::stringstream ss(values_csv);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) values.push_back(item);
    } else {
        if (param == "alpha")
            for (double a : cfg.sweep_alpha) values.push_back(format_double(a));
        else
            for (int k : cfg.sweep_k) values.push_back(std::to_string(k));
    }
    if (values.empty()) throw ConfigError("sweep needs at least one value");

    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / "sweep.csv";
    std::map<std::string, bool> done;
    std::string existing;
    if (fs::exists(csv_path)) {
        std::ifstream f(csv_path);
        std::string line;
        bool header = true;
        while (std::getline(f, line)) {
            if (header) {
                header = false;
                continue;
            }
            const auto c1 = line.find(',');
            if (c1 == std::string::npos) continue;
            const auto c2 = line.find(',', c1 + 1);
            if (c2 == std::string::npos) continue;
            if (line.substr(0, c1) == param) done[line.substr(c1 + 1, c2 - c1 - 1)] = true;
            existing += line + "\n";
        }
    }

    const auto datasets = ensure_datasets(cfg);
    std::ofstream csv(csv_path, std::ios::trunc);
    csv << "param,value,mean_psnr_m1,mean_ssim_m1,mean_psnr_m2,mean_ssim_m2,param_bytes,"
           "info_bytes\n"
        << existing;
    for (const auto& v : values) {
        if (done.count(v)) {
            std::cout << param << "=" << v << " already done, skipping\n";
            continue;
        }
        ExperimentConfig run_cfg = cfg;
        if (param == "alpha") {
            double a = 0.0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), a);
            if (ec != std::errc() || p != v.data() + v.size())
                throw ConfigError("bad alpha value: " + v);
            run_cfg.alpha = a;
        } else {
            int k = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), k);
            if (ec != std::errc() || p != v.data() + v.size())
                throw ConfigError("bad k value: " + v);
            run_cfg.k = k;
        }
        validate_config(run_cfg);
        const RunReport rep = run_experiment(run_cfg, datasets);
        write_run_outputs((fs::path(out_dir) / (param + "_" + v)).string(), run_cfg, rep);
        csv << param << "," << v << "," << format_double(rep.mean_psnr(1)) << ","
            << format_double(rep.mean_ssim(1)) << "," << format_double(rep.mean_psnr(2)) << ","
            << format_double(rep.mean_ssim(2)) << "," << rep.ledger.total_param_bytes() << ","
            << rep.ledger.total_info_bytes() << "\n";
        csv.flush();
        std::cout << param << "=" << v << " mean_psnr_m1=" << format_double(rep.mean_psnr(1))
                  << "\n";
    }
    std::cout << "sweep table: " << csv_path.string() << "\n";
    return 0;
}

struct MetricRow {
    int round, client, modality;
    double psnr, ssim;
};

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("missing metrics file: " + path);
    std::ifstream f(path);
    std::string line;
    std::vector<MetricRow> rows;
    bool header = true;
    while (std::getline(f, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        MetricRow r{};
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw ConfigError("malformed metrics row: " + line);
        r.round = std::stoi(fields[0]);
        r.client = std::stoi(fields[1]);
        r.modality = std::stoi(fields[2]);
        r.psnr = std::stod(fields[3]);
        r.ssim = std::stod(fields[4]);
        rows.push_back(r);
    }
    return rows;
}

int cmd_report(const std::vector<std::string>& run_dirs) {
    struct Column {
        std::string name;
        std::map<std::pair<int, int>, MetricRow> rows;
    };
    std::vector<Column> cols;
    for (const auto& dir : run_dirs) {
        Column c;
        c.name = fs::path(dir).filename().string();
        if (c.name.empty()) c.name = dir;
        for (const auto& r : read_metrics_csv((fs::path(dir) / "metrics.csv").string()))
            c.rows[{r.client, r.modality}] = r;
        cols.push_back(std::move(c));
    }
    std::map<std::pair<int, int>, bool> keys;
    for (const auto& c : cols)
        for (const auto& [key, row] : c.rows) keys[key] = true;

    std::cout << "client modality";
    for (const auto& c : cols) std::cout << "  " << c.name << "(psnr/ssim)";
    std::cout << "\n";
    for (const auto& [key, unused] : keys) {
        std::cout << key.first << "      " << key.second << "       ";
        double best = -1e300;
        for (const auto& c : cols) {
            auto it = c.rows.find(key);
            if (it != c.rows.end()) best = std::max(best, it->second.psnr);
        }
        for (const auto& c : cols) {
            auto it = c.rows.find(key);
            if (it == c.rows.end()) {
                std::cout << "  -";
                continue;
            }
            char buf[64];
            std::snprintf(buf, sizeof(buf), "  %.4f/%.4f%s", it->second.psnr, it->second.ssim,
                          it->second.psnr == best ? "*" : "");
            std::cout << buf;
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_cluster_inspect(const std::string& config_path, int client_id, int modality,
                        const std::string& out_dir, int n_pseudo) {
    ExperimentConfig cfg = load_or_default(config_path);
    apply_seed_env(cfg);
    validate_config(cfg);
    if (client_id < 0 || client_id >= static_cast<int>(cfg.clients.size()))
        throw ConfigError("cluster-inspect client id out of range");
    if (modality != 1 && modality != 2) throw ConfigError("modality must be 1 or 2");
    const auto datasets = ensure_datasets(cfg);

    const auto& ds = datasets[static_cast<std::size_t>(client_id)];
    std::vector<AmplitudeSpectrum> spectra;
    for (const auto& s : ds.train)
        spectra.push_back(decompose(fft2(modality == 1 ? s.modality1 : s.modality2)).first);
    ClusterConfig kc;
    kc.k = cfg.k;
    kc.max_iter = cfg.cluster_max_iter;
    kc.tol = cfg.cluster_tol;
    kc.restarts = cfg.cluster_restarts;
    kc.seed = cfg.seed;
    const CentroidSet set = kmeans(spectra, kc);
    const std::vector<int> labels = assign(spectra, set.centroids);

    fs::create_directories(out_dir);
    std::vector<int> counts(static_cast<std::size_t>(set.k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    std::ofstream txt(fs::path(out_dir) / "assignments.txt");
    txt << "k=" << set.k << " spectra=" << spectra.size() << "\n";
    for (int c = 0; c < set.k; ++c) txt << "cluster " << c << ": " << counts[static_cast<std::size_t>(c)] << "\n";

    // log-scaled centroid amplitudes render better than raw spectra
    const int dump = std::min(set.k, 8);
    for (int c = 0; c < dump; ++c) {
        const auto& cent = set.centroids[static_cast<std::size_t>(c)];
        Image2D img(cent.height, cent.width);
        double mx = 0.0;
        for (double v : cent.data) mx = std::max(mx, std::log1p(v));
        for (std::size_t i = 0; i < cent.data.size(); ++i)
            img.data[i] = mx > 0.0 ? std::log1p(cent.data[i]) / mx : 0.0;
        export_pgm(img, (fs::path(out_dir) / ("centroid_m" + std::to_string(modality) + "_" +
                                              std::to_string(c) + ".pgm"))
                            .string());
    }
    CentroidMemory mem;
    mem.for_modality(modality) = set.centroids;
    for (int i = 0; i < n_pseudo && i < static_cast<int>(ds.train.size()); ++i) {
        const auto& z = sample_centroid(mem, modality, derive_seed(cfg.seed, 0x70736575ULL,
                                                                   static_cast<std::uint64_t>(i)));
        const Image2D& src =
            modality == 1 ? ds.train[static_cast<std::size_t>(i)].modality2
                          : ds.train[static_cast<std::size_t>(i)].modality1;
        export_pgm(generate_pseudo(src, z, BlendParams{cfg.alpha}),
                   (fs::path(out_dir) / ("pseudo_m" + std::to_string(modality) + "_" +
                                         std::to_string(i) + ".pgm"))
                       .string());
    }
    std::cout << "inspection artifacts in " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incomplete multi-modal federated MRI reconstruction testbed"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "run_out", mode, sweep_param = "alpha", sweep_values;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int client_id = 0, modality = 1, n_pseudo = 4;
    std::vector<std::string> run_dirs;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic client datasets");
    gen->add_option("--config", config_path, "config file (defaults built in)");

    auto* run = app.add_subcommand("run", "execute one experiment");
    run->add_option("--config", config_path, "config file (defaults built in)");
    run->add_option("--mode", mode, "fedpmg|ideal|mixup|group|gather (overrides config)");
    run->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        seed_given = true;
    });
    run->add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run a hyperparameter sweep");
    sweep->add_option("--config", config_path, "config file (defaults built in)");
    sweep->add_option("--param", sweep_param, "alpha or k")->required();
    sweep->add_option("--values", sweep_values, "comma list (defaults to config sweep lists)");
    sweep->add_option("--out", out_dir, "output directory");

    auto* rep = app.add_subcommand("report", "tabulate one or more finished runs");
    rep->add_option("dirs", run_dirs, "run directories")->required();

    auto* inspect = app.add_subcommand("cluster-inspect", "dump centroids and pseudo samples");
    inspect->add_option("--config", config_path, "config file (defaults built in)");
    inspect->add_option("--client", client_id, "client id");
    inspect->add_option("--modality", modality, "modality tag (1 or 2)");
    inspect->add_option("--out", out_dir, "output directory");
    inspect->add_option("--pseudo", n_pseudo, "number of pseudo samples to dump");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path);
        if (run->parsed()) return cmd_run(config_path, mode, seed_given, seed, out_dir);
        if (sweep->parsed()) return cmd_sweep(config_path, sweep_param, sweep_values, out_dir);
        if (rep->parsed()) return cmd_report(run_dirs);
        if (inspect->parsed())
            return cmd_cluster_inspect(config_path, client_id, modality, out_dir, n_pseudo);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
