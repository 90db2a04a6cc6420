#include <cmath>
#include <set>

#include "doctest.h"
#include "fedpmg/federation.hpp"
#include "fedpmg/fft.hpp"
#include "fedpmg/metrics.hpp"
#include "fedpmg/rng.hpp"
#include "fedpmg/tensor_io.hpp"

using namespace fedpmg;

namespace {

// Small shared fixture: 3 clients (paired, m1-only, m2-only) with tiny data.
ExperimentConfig tiny_config() {
    ExperimentConfig cfg = default_config();
    cfg.rounds = 1;
    cfg.local_epochs = 1;
    cfg.batch_size = 4;
    cfg.k = 4;
    cfg.image_size = 16;
    cfg.slices_per_subject = 4;
    cfg.cluster_restarts = 1;
    cfg.cluster_max_iter = 10;
    for (auto& c : cfg.clients) c.n_train = 8;
    return cfg;
}

std::vector<ClientState> make_clients(const ExperimentConfig& cfg) {
    auto datasets = build_datasets(cfg);
    std::vector<ClientState> out;
    for (std::size_t q = 0; q < datasets.size(); ++q)
        out.push_back(prepare_client(cfg, int(q), datasets[q]));
    return out;
}

ModelParams const_params(int in_ch, double v) {
    ModelParams p = zero_params(in_ch);
    for (double& x : p.values) x = v;
    return p;
}

}  // namespace

TEST_CASE("fedavg weights follow sample counts and always sum to one") {
    auto w = fedavg_weights({100, 300});
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-15));
    auto w3 = fedavg_weights({5, 5, 5});
    for (double x : w3) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-15));
    double total = 0.0;
    for (double x : fedavg_weights({7, 11, 13, 3})) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(fedavg_weights({0, 4}), InvalidInput);
    CHECK_THROWS_AS(fedavg_weights({}), InvalidInput);
}

TEST_CASE("weighted averaging matches hand arithmetic") {
    std::vector<ModelParams> ps = {const_params(2, 0.0), const_params(2, 4.0)};
    ModelParams avg = fedavg(ps, fedavg_weights({100, 300}));
    for (double v : avg.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
    // single client: identity
    ModelParams one = fedavg({const_params(1, 1.25)}, {1.0});
    for (double v : one.values) CHECK(v == 1.25);
}

TEST_CASE("averaging is independent of client order") {
    ModelParams a = init_params(2, 1), b = init_params(2, 2), c = init_params(2, 3);
    auto w = fedavg_weights({10, 20, 70});
    ModelParams x = fedavg({a, b, c}, w);
    ModelParams y = fedavg({c, a, b}, {w[2], w[0], w[1]});
    for (std::size_t i = 0; i < x.values.size(); ++i)
        CHECK(std::abs(x.values[i] - y.values[i]) <= 1e-12);
}

TEST_CASE("averaging rejects mismatched channel counts and bad weights") {
    std::vector<ModelParams> mixed = {init_params(1, 1), init_params(2, 1)};
    CHECK_THROWS_AS(fedavg(mixed, {0.5, 0.5}), AggregationError);
    std::vector<ModelParams> fine = {init_params(2, 1), init_params(2, 2)};
    CHECK_THROWS_AS(fedavg(fine, {0.5, 0.6}), InvalidInput);
    CHECK_THROWS_AS(fedavg(fine, {0.5}), InvalidInput);
}

TEST_CASE("centroid aggregation counts uploads per present modality") {
    ExperimentConfig cfg = tiny_config();
    auto clients = make_clients(cfg);
    CommLedger ledger;
    ledger.beta = tensor_byte_size(std::vector<std::uint32_t>{16, 16});
    CentroidMemory mem = aggregate_centroids(cfg, clients, ledger);
    // paired client + m1-only contribute to z1; paired + m2-only to z2
    CHECK(mem.z1.size() == 8);  // k=4 from two clients
    CHECK(mem.z2.size() == 8);
    int uploads = 0;
    for (const auto& m : ledger.log)
        if (m.kind == MessageKind::CentroidUpload) {
            ++uploads;
            CHECK(m.round == 0);
            CHECK(m.k_eff == 4);
            CHECK(m.n_source == 8);
            CHECK(m.payload_bytes == 4 * ledger.beta);
        }
    CHECK(uploads == 4);
    CHECK(ledger.total_info_bytes() == 16 * ledger.beta);
    CHECK(ledger.naive_spectra() == 32);
    CHECK(ledger.shipped_centroids() == 16);
    CHECK(ledger.reduction() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("clients with fewer images than clusters ship what they have") {
    ExperimentConfig cfg = tiny_config();
    cfg.k = 50;  // > n_train = 8
    auto clients = make_clients(cfg);
    CommLedger ledger;
    ledger.beta = tensor_byte_size(std::vector<std::uint32_t>{16, 16});
    CentroidMemory mem = aggregate_centroids(cfg, clients, ledger);
    CHECK(mem.z1.size() == 16);  // clamped to 8 each
    for (const auto& m : ledger.log)
        if (m.kind == MessageKind::CentroidUpload) CHECK(m.k_eff == 8);
    CHECK(ledger.reduction() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ledger byte totals equal the serialized payload sizes exactly") {
    ExperimentConfig cfg = tiny_config();
    auto clients = make_clients(cfg);
    CommLedger ledger;
    ledger.beta = tensor_byte_size(std::vector<std::uint32_t>{16, 16});
    CentroidMemory mem = aggregate_centroids(cfg, clients, ledger);
    std::size_t recount = 0;
    for (const auto& z : mem.z1) recount += serialize_tensor(tensor_from_amplitude(z)).size();
    for (const auto& z : mem.z2) recount += serialize_tensor(tensor_from_amplitude(z)).size();
    CHECK(ledger.total_info_bytes() == recount);
}

TEST_CASE("a modality nobody owns aborts aggregation") {
    ExperimentConfig cfg = tiny_config();
    cfg.clients.resize(2);
    cfg.clients[0].modalities = {1};
    cfg.clients[1].modalities = {1};
    auto clients = make_clients(cfg);
    CommLedger ledger;
    CHECK_THROWS_AS(aggregate_centroids(cfg, clients, ledger), MissingModalityError);
}

TEST_CASE("first multimodal loss with a fresh model is the zero-fill error") {
    ExperimentConfig cfg = tiny_config();
    cfg.batch_size = 64;  // one batch per epoch
    auto clients = make_clients(cfg);
    const ClientState& paired = clients[0];
    std::vector<double> losses;
    local_train_multimodal(cfg, paired, init_params(2, derive_seed(cfg.seed, 0x696e6974ULL)), 1,
                           1, &losses);
    REQUIRE(!losses.empty());
    // identity network => first-batch loss = mean |undersampled - target|
    double want = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < paired.data.train.size(); ++i) {
        const Image2D& x = paired.train_under_m1[i];
        const Image2D& y = paired.data.train[i].modality1;
        for (std::size_t j = 0; j < x.data.size(); ++j) {
            want += std::abs(x.data[j] - y.data[j]);
            ++count;
        }
    }
    want /= double(count);
    CHECK(losses.front() == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("local training is reproducible and changes the parameters") {
    ExperimentConfig cfg = tiny_config();
    auto clients = make_clients(cfg);
    ModelParams start = init_params(2, 42);
    ModelParams a = local_train_multimodal(cfg, clients[0], start, 1, 2);
    ModelParams b = local_train_multimodal(cfg, clients[0], start, 1, 2);
    CHECK(a.values == b.values);
    CHECK(a.values != start.values);
}

TEST_CASE("training loss trends down on repeated epochs") {
    ExperimentConfig cfg = tiny_config();
    cfg.lr = 2e-3;
    auto clients = make_clients(cfg);
    std::vector<double> losses;
    local_train_multimodal(cfg, clients[0], init_params(2, 1), 1, 30, &losses);
    REQUIRE(losses.size() >= 20);
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < 5; ++i) head += losses[i];
    for (std::size_t i = losses.size() - 5; i < losses.size(); ++i) tail += losses[i];
    CHECK(tail < head);
}

TEST_CASE("pseudo training for a target-missing client never reads the real target") {
    ExperimentConfig cfg = tiny_config();
    auto clients = make_clients(cfg);
    CommLedger ledger;
    CentroidMemory mem = aggregate_centroids(cfg, clients, ledger);

    // client 2 owns modality 2 only; direction 1 means the target is missing
    ClientState poisoned = clients[2];
    const double nan = std::nan("");
    for (auto& s : poisoned.data.train) s.modality1 = Image2D(16, 16, nan);
    for (auto& img : poisoned.train_under_m1) img = Image2D(16, 16, nan);

    ModelParams start = init_params(2, 7);
    ModelParams clean = local_train_single_with_pseudo(cfg, clients[2], start, mem, 1, 1);
    ModelParams dirty = local_train_single_with_pseudo(cfg, poisoned, start, mem, 1, 1);
    for (double v : dirty.values) CHECK(std::isfinite(v));
    CHECK(clean.values == dirty.values);
}

TEST_CASE("pseudo training with the auxiliary missing uses the real target") {
    ExperimentConfig cfg = tiny_config();
    auto clients = make_clients(cfg);
    CommLedger ledger;
    CentroidMemory mem = aggregate_centroids(cfg, clients, ledger);
    // client 1 owns modality 1 only; direction 1 -> auxiliary (m2) is pseudo
    std::vector<double> losses;
    ModelParams out = local_train_single_with_pseudo(cfg, clients[1], init_params(2, 3), mem, 1,
                                                     1, &losses);
    for (double v : out.values) CHECK(std::isfinite(v));
    CHECK(!losses.empty());
    // multi-modal clients are rejected here
    CHECK_THROWS_AS(
        local_train_single_with_pseudo(cfg, clients[0], init_params(2, 3), mem, 1, 1),
        InvalidInput);
    // and an empty memory for the missing modality is an error
    CentroidMemory empty;
    CHECK_THROWS_AS(
        local_train_single_with_pseudo(cfg, clients[1], init_params(2, 3), empty, 1, 1),
        MissingModalityError);
}

TEST_CASE("a full run is reproducible down to the serialized artifacts") {
    ExperimentConfig cfg = tiny_config();
    auto datasets = build_datasets(cfg);
    RunReport a = run_experiment(cfg, datasets);
    RunReport b = run_experiment(cfg, datasets);
    CHECK(metrics_csv_text(a) == metrics_csv_text(b));
    CHECK(ledger_csv_text(a) == ledger_csv_text(b));
    REQUIRE(a.final_params.size() == b.final_params.size());
    for (std::size_t i = 0; i < a.final_params.size(); ++i)
        CHECK(a.final_params[i].values == b.final_params[i].values);
}

TEST_CASE("zero rounds leaves the identity model and zero-fill metrics") {
    ExperimentConfig cfg = tiny_config();
    cfg.rounds = 0;
    auto datasets = build_datasets(cfg);
    RunReport rep = run_experiment(cfg, datasets);
    // recompute the zero-filled baseline for client 0 directly
    auto clients = make_clients(cfg);
    double want_psnr = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < clients[0].data.test.size(); ++i) {
        want_psnr += psnr(clients[0].data.test[i].modality1, clients[0].test_under_m1[i]);
        ++n;
    }
    want_psnr /= n;
    for (const auto& m : rep.metrics)
        if (m.client == 0 && m.modality == 1)
            CHECK(m.psnr == doctest::Approx(want_psnr).epsilon(1e-12));
}

TEST_CASE("single-modal clients never send anything but centroids and weights") {
    ExperimentConfig cfg = tiny_config();
    cfg.rounds = 2;
    RunReport rep = run_experiment(cfg, build_datasets(cfg));
    std::set<int> single = {1, 2};
    for (const auto& m : rep.ledger.log) {
        if (single.count(m.sender)) {
            bool ok = m.kind == MessageKind::CentroidUpload ||
                      m.kind == MessageKind::ParamUpload;
            CHECK(ok);
        }
        if (m.kind == MessageKind::CentroidUpload) CHECK(m.round == 0);
    }
}

TEST_CASE("per-round traffic matches the ledger sums") {
    ExperimentConfig cfg = tiny_config();
    cfg.rounds = 2;
    RunReport rep = run_experiment(cfg, build_datasets(cfg));
    for (const auto& row : rep.traffic) {
        CHECK(row.param_bytes == rep.ledger.param_bytes_in_round(row.round));
        CHECK(row.info_bytes == rep.ledger.info_bytes_in_round(row.round));
    }
    // round 0 carries only centroid traffic; training rounds only parameters
    CHECK(rep.traffic[0].param_bytes == 0);
    CHECK(rep.traffic[0].info_bytes > 0);
    for (std::size_t r = 1; r < rep.traffic.size(); ++r) {
        CHECK(rep.traffic[r].info_bytes == 0);
        CHECK(rep.traffic[r].param_bytes > 0);
    }
}

TEST_CASE("every run mode produces finite metrics and the right model shapes") {
    ExperimentConfig cfg = tiny_config();
    auto datasets = build_datasets(cfg);
    for (const char* mode : {"fedpmg", "ideal", "mixup", "group", "gather"}) {
        cfg.mode = mode;
        RunReport rep = run_experiment(cfg, datasets);
        CHECK(!rep.metrics.empty());
        for (const auto& m : rep.metrics) {
            CHECK(std::isfinite(m.psnr));
            CHECK(m.ssim >= -1.0);
            CHECK(m.ssim <= 1.0);
        }
        if (std::string(mode) == "group") {
            REQUIRE(rep.final_params.size() == 2);
            CHECK(rep.final_params[0].in_ch == 1);
        } else if (std::string(mode) == "mixup") {
            REQUIRE(rep.final_params.size() == 1);
            CHECK(rep.final_params[0].in_ch == 1);
        } else {
            REQUIRE(rep.final_params.size() == 1);
            CHECK(rep.final_params[0].in_ch == 2);
        }
        // gather is communication-free
        if (std::string(mode) == "gather") {
            CHECK(rep.ledger.total_param_bytes() == 0);
            CHECK(rep.ledger.total_info_bytes() == 0);
        }
    }
}

TEST_CASE("direction two swaps the reconstruction target") {
    ExperimentConfig cfg = tiny_config();
    cfg.direction = 2;
    RunReport rep = run_experiment(cfg, build_datasets(cfg));
    for (const auto& m : rep.metrics) CHECK(m.modality == 2);
    CHECK(rep.mean_psnr(2) > 0.0);
}

TEST_CASE("csv writers emit one row per metric and per round") {
    ExperimentConfig cfg = tiny_config();
    cfg.rounds = 2;
    RunReport rep = run_experiment(cfg, build_datasets(cfg));
    std::string mcsv = metrics_csv_text(rep);
    std::string lcsv = ledger_csv_text(rep);
    auto count_lines = [](const std::string& s) {
        std::size_t n = 0;
        for (char c : s) n += c == '\n';
        return n;
    };
    CHECK(count_lines(mcsv) == rep.metrics.size() + 1);
    CHECK(count_lines(lcsv) == std::size_t(cfg.rounds) + 2);  // header + rounds 0..R
    CHECK(mcsv.rfind("round,client,modality,psnr,ssim", 0) == 0);
    CHECK(lcsv.rfind("round,param_bytes,info_bytes", 0) == 0);
}
