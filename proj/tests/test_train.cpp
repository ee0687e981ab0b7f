#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "simper/eval.hpp"
#include "simper/synthdata.hpp"
#include "simper/train.hpp"

using namespace simper;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("simper_train_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

DatasetManifest tiny_sine_dataset(const std::string& tag, std::size_t n, std::uint64_t seed,
                                  std::size_t frames = 150) {
    GenOptions opt;
    opt.dir = fresh_dir(tag);
    opt.num_frames = frames;
    return generate_sine1d(n, 0.8, 2.2, 0.0, seed, opt);
}

PipelineConfig tiny_pipeline(std::size_t epochs, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.train.epochs = epochs;
    cfg.train.batch_size = 4;
    cfg.train.seed = seed;
    cfg.speed.num_views = 2;
    cfg.speed.target_len = 70;
    cfg.invariant.target_len = 64;
    cfg.invariant.max_delay = 6;
    cfg.invariant.noise_sigma = 0.01;
    cfg.loss.similarity = SimilarityKind::NPsdCos;
    cfg.encoder.frame_input_dim = 1;
    cfg.encoder.hidden_dims = {6};
    cfg.encoder.feature_channels = 2;
    cfg.encoder.temporal_context = 3;
    return cfg;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("adam single step approximates -lr * sign(g)") {
    ParamSet ps;
    ps.add("w", Tensor::from_values({1}, {0.0}, true));
    AdamState adam;
    adam.init_for(ps);
    ps.find("w").accumulate_grad({0.37});
    adam_step(ps, adam, 1e-3);
    // bias correction makes the first update magnitude ~ lr exactly
    CHECK_THAT(ps.find("w").values()[0], Catch::Matchers::WithinAbs(-1e-3, 1e-8));

    // zero gradient leaves parameters unchanged
    ParamSet ps2;
    ps2.add("w", Tensor::from_values({2}, {1.5, -0.5}, true));
    AdamState adam2;
    adam2.init_for(ps2);
    ps2.find("w").accumulate_grad({0.0, 0.0});
    adam_step(ps2, adam2, 1e-3);
    CHECK(ps2.find("w").values() == std::vector<double>{1.5, -0.5});

    ParamSet ps3;
    ps3.add("w", Tensor::from_values({1}, {0.0}, true));
    AdamState adam3;
    adam3.init_for(ps3);
    ps3.find("w").accumulate_grad({std::nan("")});
    CHECK_THROWS_AS(adam_step(ps3, adam3, 1e-3), divergence_error);
}

TEST_CASE("lr schedule decays at the listed epochs") {
    LrSchedule s;
    s.initial = 1e-3;
    s.decay_epochs = {40, 50};
    s.decay_factor = 0.1;
    CHECK(s.at_epoch(0) == 1e-3);
    CHECK(s.at_epoch(39) == 1e-3);
    CHECK_THAT(s.at_epoch(40), Catch::Matchers::WithinRel(1e-4, 1e-12));
    CHECK_THAT(s.at_epoch(55), Catch::Matchers::WithinRel(1e-5, 1e-12));
}

TEST_CASE("checkpoint round trip is byte-identical") {
    const std::string dir = fresh_dir("ckpt");
    ParamSet ps;
    ps.add("enc.w0", Tensor::from_values({2, 3}, {0.1, -0.25, 3.0, 4.5, -1e-9, 7.25}, true));
    ps.add("enc.b0", Tensor::from_values({1, 3}, {0.0, 1.0, -2.0}, true));
    ps.add("scalar", Tensor::scalar(0.125, true));
    save_checkpoint(ps, dir + "/a");
    ParamSet loaded = load_checkpoint(dir + "/a");
    save_checkpoint(loaded, dir + "/b");
    CHECK(file_bytes(dir + "/a.txt") == file_bytes(dir + "/b.txt"));
    CHECK(file_bytes(dir + "/a.bin") == file_bytes(dir + "/b.bin"));
    CHECK(loaded.find("enc.w0").values() == ps.find("enc.w0").values());
    CHECK_THROWS_AS(load_checkpoint(dir + "/missing"), io_error);
}

TEST_CASE("simper pretraining: smoke run, determinism, loss curve shape") {
    auto data = tiny_sine_dataset("smoke", 8, 17);
    auto cfg = tiny_pipeline(3, 5);

    auto r1 = pretrain_simper(data, cfg);
    REQUIRE(r1.curve.size() == 3);
    for (const auto& s : r1.curve) {
        CHECK(std::isfinite(s.mean_loss));
        CHECK(s.lr == 1e-3);
    }

    auto r2 = pretrain_simper(data, cfg);
    for (std::size_t e = 0; e < 3; ++e) CHECK(r1.curve[e].mean_loss == r2.curve[e].mean_loss);
    for (std::size_t p = 0; p < r1.params.items.size(); ++p)
        CHECK(r1.params.items[p].second.values() == r2.params.items[p].second.values());

    // checkpoint round trip through disk
    const std::string dir = fresh_dir("smoke_ckpt");
    save_checkpoint(r1.params, dir + "/ck");
    auto loaded = load_checkpoint(dir + "/ck");
    save_checkpoint(loaded, dir + "/ck2");
    CHECK(file_bytes(dir + "/ck.bin") == file_bytes(dir + "/ck2.bin"));
}

TEST_CASE("thread fan-out does not change the result") {
    auto data = tiny_sine_dataset("threads", 6, 23);
    auto cfg = tiny_pipeline(2, 9);
    auto serial = pretrain_simper(data, cfg);
    cfg.train.threads = 2;
    auto parallel = pretrain_simper(data, cfg);
    for (std::size_t e = 0; e < serial.curve.size(); ++e)
        CHECK(serial.curve[e].mean_loss == parallel.curve[e].mean_loss);
    for (std::size_t p = 0; p < serial.params.items.size(); ++p)
        CHECK(serial.params.items[p].second.values() == parallel.params.items[p].second.values());
}

TEST_CASE("simper pretraining reduces its loss on an easy dataset") {
    auto data = tiny_sine_dataset("descent", 8, 29);
    auto cfg = tiny_pipeline(10, 3);
    cfg.speed.num_views = 3;
    auto r = pretrain_simper(data, cfg);
    CHECK(r.curve.back().mean_loss < r.curve.front().mean_loss);
}

TEST_CASE("instance discrimination baseline trains and validates its preconditions") {
    auto data = tiny_sine_dataset("instdisc", 8, 31);
    auto cfg = tiny_pipeline(2, 7);
    auto r = pretrain_instance_discrimination(data, cfg);
    REQUIRE(r.curve.size() == 2);
    for (const auto& s : r.curve) CHECK(std::isfinite(s.mean_loss));

    cfg.train.batch_size = 1;
    CHECK_THROWS_AS(pretrain_instance_discrimination(data, cfg), config_error);
}

TEST_CASE("instance discrimination with tied features yields log(2n-1) at symmetry") {
    // two identical samples and augmentations off: every pairwise similarity
    // is 1, so each anchor's loss is log(#denominator terms) = log 3
    GenOptions opt;
    opt.dir = fresh_dir("tied");
    opt.num_frames = 80;
    auto data = generate_sine1d(1, 1.0, 1.001, 0.0, 3, opt);
    // duplicate the sample entry: same file, same label
    data.entries.push_back(data.entries[0]);
    data.entries.back().id = 1;

    auto cfg = tiny_pipeline(1, 11);
    cfg.train.batch_size = 2;
    cfg.invariant.p_reverse = 0.0;
    cfg.invariant.max_delay = 0;
    cfg.invariant.noise_sigma = 0.0;
    cfg.invariant.brightness_jitter = 0.0;
    cfg.invariant.crop_lo = cfg.invariant.crop_hi = 1.0;
    auto r = pretrain_instance_discrimination(data, cfg);
    CHECK_THAT(r.curve[0].mean_loss, Catch::Matchers::WithinAbs(std::log(3.0), 1e-9));
}

TEST_CASE("supervised training fits an easy mapping") {
    // constant-valued clips whose level encodes the label: with the input
    // this informative, the pipeline must reach a small train MAE
    GenOptions opt;
    opt.dir = fresh_dir("sup");
    opt.num_frames = 16;
    auto data = generate_sine1d(24, 0.5, 5.0, 0.0, 37, opt);
    for (std::size_t i = 0; i < data.entries.size(); ++i) {
        Clip c = load_sample(data, i);
        for (double& v : c.data) v = data.entries[i].spec.freq_hz / 5.0;
        save_clip_f32((fs::path(data.dir) / data.entries[i].file).string(), c);
        std::ostringstream os;
        os << std::hex << clip_file_checksum((fs::path(data.dir) / data.entries[i].file).string());
        data.entries[i].checksum = os.str();
    }

    PipelineConfig cfg;
    cfg.train.epochs = 200;
    cfg.train.batch_size = 8;
    cfg.train.seed = 5;
    cfg.train.lr.decay_epochs = {120, 170};
    cfg.encoder.frame_input_dim = 1;
    cfg.encoder.hidden_dims = {8};
    cfg.encoder.feature_channels = 4;
    cfg.encoder.temporal_context = 1;

    auto r = train_supervised(data, cfg);
    CHECK(r.curve.back().mean_loss < 0.05);  // train MAE in Hz

    // predictions come from the head path
    ParamSet params = r.params;
    double mae = 0.0;
    for (std::size_t i = 0; i < data.entries.size(); ++i)
        mae += std::fabs(predict_supervised(load_sample(data, i), params, cfg.encoder) -
                         data.entries[i].spec.freq_hz);
    CHECK(mae / 24.0 < 0.05);
}

TEST_CASE("supervised training supports checkpoint init and frozen encoders") {
    auto data = tiny_sine_dataset("sup2", 6, 41, 80);
    auto cfg = tiny_pipeline(2, 13);
    auto pre = pretrain_simper(data, cfg);

    SupervisedOptions opt;
    opt.init = traindetail::clone_params(pre.params);
    auto fine = train_supervised(data, cfg, opt);
    REQUIRE(fine.curve.size() == 2);
    CHECK(std::isfinite(fine.curve.back().mean_loss));

    SupervisedOptions frozen;
    frozen.init = traindetail::clone_params(pre.params);
    frozen.freeze_encoder = true;
    auto probe = train_supervised(data, cfg, frozen);
    // encoder untouched, head moved
    CHECK(probe.params.find("enc.w0").values() == pre.params.find("enc.w0").values());
    CHECK(probe.params.find("head.w").grad().empty());
    CHECK(std::isfinite(probe.curve.back().mean_loss));

    // from-scratch supervised run on the same data also works
    auto scratch = train_supervised(data, cfg);
    CHECK(std::isfinite(scratch.curve.back().mean_loss));
}
