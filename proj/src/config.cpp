#include "fedpmg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fedpmg/errors.hpp"

namespace fedpmg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double d = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("bad numeric value for " + key + ": " + v);
    return d;
}

long long to_int(const std::string& key, const std::string& v) {
    long long n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("bad integer value for " + key + ": " + v);
    return n;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("bad seed value for " + key + ": " + v);
    return n;
}

class KvReader {
  public:
    explicit KvReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string take(const std::string& key, const std::string& fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    void reject_unused() const {
        for (const auto& [key, value] : kv_)
            if (!used_.count(key)) throw ConfigError("unknown config key: " + key);
    }

  private:
    std::map<std::string, std::string> kv_;
    std::set<std::string> used_;
};

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + " is not key=value: " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key on line " + std::to_string(lineno));
        if (!kv.emplace(key, value).second)
            throw ConfigError("duplicate config key: " + key);
    }
    return kv;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

std::string join_csv(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

std::string join_csv(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

double default_center_fraction(double accel) { return accel >= 6.0 ? 0.06 : 0.08; }

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    ClientConfig full;
    full.modalities = {1, 2};
    full.site_name = "fastmri_3t";
    full.site = site_preset("fastmri_3t");
    ClientConfig t1;
    t1.modalities = {1};
    t1.site_name = "fastmri_15t";
    t1.site = site_preset("fastmri_15t");
    ClientConfig t2;
    t2.modalities = {2};
    t2.site_name = "umr";
    t2.site = site_preset("umr");
    cfg.clients = {full, t1, t2};
    return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
    KvReader kv(parse_kv_text(text));
    ExperimentConfig cfg;
    const ExperimentConfig defaults = default_config();

    cfg.rounds = static_cast<int>(to_int("rounds", kv.take("rounds", "50")));
    cfg.local_epochs = static_cast<int>(to_int("local_epochs", kv.take("local_epochs", "5")));
    cfg.batch_size = static_cast<int>(to_int("batch_size", kv.take("batch_size", "8")));
    cfg.lr = to_double("lr", kv.take("lr", "0.0001"));
    cfg.k = static_cast<int>(to_int("k", kv.take("k", "50")));
    cfg.alpha = to_double("alpha", kv.take("alpha", "0.09"));
    cfg.mode = kv.take("mode", "fedpmg");
    cfg.direction = static_cast<int>(to_int("direction", kv.take("direction", "1")));
    cfg.seed = to_u64("seed", kv.take("seed", "0"));
    cfg.image_size = static_cast<int>(to_int("image_size", kv.take("image_size", "32")));
    cfg.slices_per_subject =
        static_cast<int>(to_int("slices_per_subject", kv.take("slices_per_subject", "16")));
    cfg.split_ratio = to_double("split_ratio", kv.take("split_ratio", "0.7"));
    cfg.cluster_max_iter =
        static_cast<int>(to_int("cluster_max_iter", kv.take("cluster_max_iter", "100")));
    cfg.cluster_tol = to_double("cluster_tol", kv.take("cluster_tol", "1e-06"));
    cfg.cluster_restarts =
        static_cast<int>(to_int("cluster_restarts", kv.take("cluster_restarts", "3")));
    cfg.noise_sigma = to_double("noise_sigma", kv.take("noise_sigma", "0"));
    cfg.data_dir = kv.take("data_dir", "data");

    cfg.sweep_alpha.clear();
    for (const auto& s : split_list(kv.take("sweep.alpha", "0,0.01,0.05,0.09,1")))
        cfg.sweep_alpha.push_back(to_double("sweep.alpha", s));
    cfg.sweep_k.clear();
    for (const auto& s : split_list(kv.take("sweep.k", "1,10,50,100,200")))
        cfg.sweep_k.push_back(static_cast<int>(to_int("sweep.k", s)));

    const int n_clients =
        static_cast<int>(to_int("clients", kv.take("clients", std::to_string(defaults.clients.size()))));
    if (n_clients < 1 || n_clients > 64) throw ConfigError("clients must lie in [1, 64]");
    cfg.clients.clear();
    for (int q = 0; q < n_clients; ++q) {
        const std::string prefix = "client." + std::to_string(q) + ".";
        ClientConfig cc =
            q < static_cast<int>(defaults.clients.size()) ? defaults.clients[static_cast<std::size_t>(q)]
                                                          : defaults.clients.back();
        const std::string mods = kv.take(prefix + "modalities", join_csv(cc.modalities));
        cc.modalities.clear();
        for (const auto& m : split_list(mods))
            cc.modalities.push_back(static_cast<int>(to_int(prefix + "modalities", m)));
        cc.n_train = static_cast<int>(to_int(prefix + "n_train",
                                             kv.take(prefix + "n_train", std::to_string(cc.n_train))));
        cc.mask.type = kv.take(prefix + "mask_type", cc.mask.type);
        cc.mask.accel = to_double(prefix + "accel",
                                  kv.take(prefix + "accel", format_double(cc.mask.accel)));
        if (kv.has(prefix + "center_fraction"))
            cc.mask.center_fraction = to_double(prefix + "center_fraction",
                                                kv.take(prefix + "center_fraction", ""));
        else
            cc.mask.center_fraction = default_center_fraction(cc.mask.accel);
        if (kv.has(prefix + "site")) {
            cc.site_name = kv.take(prefix + "site", "");
            cc.site = site_preset(cc.site_name);
        }
        cc.site.gain =
            to_double(prefix + "gain", kv.take(prefix + "gain", format_double(cc.site.gain)));
        cc.site.gamma =
            to_double(prefix + "gamma", kv.take(prefix + "gamma", format_double(cc.site.gamma)));
        cc.site.noise_sigma = to_double(
            prefix + "noise_sigma", kv.take(prefix + "noise_sigma", format_double(cc.site.noise_sigma)));
        cc.site.bias_smoothness =
            to_double(prefix + "bias_smoothness",
                      kv.take(prefix + "bias_smoothness", format_double(cc.site.bias_smoothness)));
        cfg.clients.push_back(std::move(cc));
    }

    kv.reject_unused();
    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.rounds < 0) throw ConfigError("rounds must be non-negative");
    if (cfg.local_epochs < 1) throw ConfigError("local_epochs must be positive");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(cfg.lr > 0.0)) throw ConfigError("lr must be positive");
    if (cfg.k < 1) throw ConfigError("k must be positive");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    static const std::set<std::string> kModes{"fedpmg", "ideal", "mixup", "group", "gather"};
    if (!kModes.count(cfg.mode)) throw ConfigError("unknown mode: " + cfg.mode);
    if (cfg.direction != 1 && cfg.direction != 2) throw ConfigError("direction must be 1 or 2");
    if (cfg.image_size < 16) throw ConfigError("image_size must be at least 16");
    if (cfg.slices_per_subject < 1) throw ConfigError("slices_per_subject must be positive");
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0))
        throw ConfigError("split_ratio must lie strictly inside (0, 1)");
    if (cfg.cluster_max_iter < 1) throw ConfigError("cluster_max_iter must be positive");
    if (!(cfg.cluster_tol >= 0.0)) throw ConfigError("cluster_tol must be non-negative");
    if (cfg.cluster_restarts < 1) throw ConfigError("cluster_restarts must be positive");
    if (!(cfg.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
    if (cfg.clients.empty()) throw ConfigError("at least one client is required");
    for (std::size_t q = 0; q < cfg.clients.size(); ++q) {
        const auto& cc = cfg.clients[q];
        const std::string who = "client." + std::to_string(q);
        if (cc.modalities.empty()) throw ConfigError(who + " needs at least one modality");
        for (int m : cc.modalities)
            if (m != 1 && m != 2) throw ConfigError(who + " modalities must be 1 or 2");
        if (cc.modalities.size() == 2 && cc.modalities[0] == cc.modalities[1])
            throw ConfigError(who + " lists a modality twice");
        if (cc.modalities.size() > 2) throw ConfigError(who + " lists too many modalities");
        if (cc.n_train < 1) throw ConfigError(who + ".n_train must be positive");
        if (cc.mask.type != "equispaced" && cc.mask.type != "random")
            throw ConfigError(who + ".mask_type must be equispaced or random");
        if (!(cc.mask.accel >= 1.0)) throw ConfigError(who + ".accel must be at least 1");
        if (!(cc.mask.center_fraction >= 0.0 && cc.mask.center_fraction <= 1.0))
            throw ConfigError(who + ".center_fraction must lie in [0, 1]");
        if (!(cc.site.gain > 0.0) || !(cc.site.gamma > 0.0))
            throw ConfigError(who + " site gain and gamma must be positive");
        if (!(cc.site.noise_sigma >= 0.0))
            throw ConfigError(who + ".noise_sigma must be non-negative");
        if (!(cc.site.bias_smoothness > 0.0))
            throw ConfigError(who + ".bias_smoothness must be positive");
    }
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    auto put = [&](const std::string& key, const std::string& value) {
        out += key;
        out += "=";
        out += value;
        out += "\n";
    };
    put("rounds", std::to_string(cfg.rounds));
    put("local_epochs", std::to_string(cfg.local_epochs));
    put("batch_size", std::to_string(cfg.batch_size));
    put("lr", format_double(cfg.lr));
    put("k", std::to_string(cfg.k));
    put("alpha", format_double(cfg.alpha));
    put("mode", cfg.mode);
    put("direction", std::to_string(cfg.direction));
    put("seed", std::to_string(cfg.seed));
    put("image_size", std::to_string(cfg.image_size));
    put("slices_per_subject", std::to_string(cfg.slices_per_subject));
    put("split_ratio", format_double(cfg.split_ratio));
    put("cluster_max_iter", std::to_string(cfg.cluster_max_iter));
    put("cluster_tol", format_double(cfg.cluster_tol));
    put("cluster_restarts", std::to_string(cfg.cluster_restarts));
    put("noise_sigma", format_double(cfg.noise_sigma));
    put("data_dir", cfg.data_dir);
    put("sweep.alpha", join_csv(cfg.sweep_alpha));
    put("sweep.k", join_csv(cfg.sweep_k));
    put("clients", std::to_string(cfg.clients.size()));
    for (std::size_t q = 0; q < cfg.clients.size(); ++q) {
        const auto& cc = cfg.clients[q];
        const std::string prefix = "client." + std::to_string(q) + ".";
        put(prefix + "modalities", join_csv(cc.modalities));
        put(prefix + "n_train", std::to_string(cc.n_train));
        put(prefix + "mask_type", cc.mask.type);
        put(prefix + "accel", format_double(cc.mask.accel));
        put(prefix + "center_fraction", format_double(cc.mask.center_fraction));
        put(prefix + "gain", format_double(cc.site.gain));
        put(prefix + "gamma", format_double(cc.site.gamma));
        put(prefix + "noise_sigma", format_double(cc.site.noise_sigma));
        put(prefix + "bias_smoothness", format_double(cc.site.bias_smoothness));
    }
    return out;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write config: " + path);
    f << serialize_config(cfg);
    if (!f) throw ConfigError("short config write: " + path);
}

}  // namespace fedpmg
