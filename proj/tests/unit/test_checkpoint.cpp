#include <filesystem>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "cadgl/checkpoint.hpp"
#include "cadgl/error.hpp"
#include "cadgl/synth.hpp"

using namespace cadgl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cadgl_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_.epochs = 3;
    config_.latent_dim = 8;
    config_.d_hid = 6;
    config_.d_out = 6;
    config_.t_dim = 4;
    config_.max_degree_bucket = 3;
    config_.lr = 0.01;
  }
  void TearDown() override { fs::remove_all(dir_); }

  const DDIDataset& dataset() {
    static const DDIDataset ds =
        synth_generate({.n_drugs = 30, .n_types = 2, .n_blocks = 2, .f_dim = 6, .p_in = 0.3,
                        .p_out = 0.03, .seed = 4});
    return ds;
  }

  TrainResult trained() {
    const Split split = split_edges(dataset(), {0.6, 0.2, 0.2}, 1);
    return train(dataset(), split, config_);
  }

  fs::path dir_;
  TrainConfig config_;
};

}  // namespace

TEST_F(CheckpointTest, RoundTripPreservesPredictionsBitwise) {
  TrainResult r = trained();
  const fs::path path = dir_ / "model.bin";
  save_checkpoint(path, make_checkpoint(r.model, r.optimizer, r.best_epoch, r.history,
                                        {{"note", "x"}}));
  const Checkpoint loaded = load_checkpoint(path);
  const CadglModel restored = model_from_checkpoint(loaded);

  const Split split = split_edges(dataset(), {0.6, 0.2, 0.2}, 1);
  const MessageGraph g = build_message_graph(dataset(), split.train);
  const auto pairs = labelled_pairs(dataset(), split.test, 3);
  EXPECT_EQ(r.model.predict_proba(dataset().features(), g, pairs),
            restored.predict_proba(dataset().features(), g, pairs));
  EXPECT_TRUE(loaded.config == config_);
  EXPECT_EQ(loaded.epoch, r.best_epoch);
  EXPECT_EQ(loaded.history.size(), r.history.size());
  EXPECT_EQ(loaded.history.back().loss.total, r.history.back().loss.total);
  EXPECT_TRUE(loaded.optimizer == r.optimizer);
  EXPECT_EQ(loaded.metadata.at("note"), "x");
}

TEST_F(CheckpointTest, SaveLoadSaveIsByteIdentical) {
  TrainResult r = trained();
  const fs::path a = dir_ / "a.bin", b = dir_ / "b.bin";
  save_checkpoint(a, make_checkpoint(r.model, r.optimizer, 2, r.history));
  save_checkpoint(b, load_checkpoint(a));
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(sidecar_path(a)), slurp(sidecar_path(b)));
}

TEST_F(CheckpointTest, CorruptionIsDetected) {
  TrainResult r = trained();
  const fs::path path = dir_ / "m.bin";
  save_checkpoint(path, make_checkpoint(r.model, r.optimizer, 1, r.history));
  const std::string good = slurp(path);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  spit(path, bad_magic);
  EXPECT_THROW(load_checkpoint(path), CheckpointError);

  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  spit(path, flipped);
  EXPECT_THROW(load_checkpoint(path), CheckpointError);

  spit(path, good.substr(0, good.size() - 9));
  EXPECT_THROW(load_checkpoint(path), CheckpointError);

  std::string version = good;
  version[8] = 7;
  spit(path, version);
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }

  spit(path, good);
  EXPECT_NO_THROW(load_checkpoint(path));
  fs::remove(sidecar_path(path));
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
}

TEST_F(CheckpointTest, MissingProcessorNamesTheParameter) {
  config_.use_mcp = false;
  TrainResult r = trained();
  const Checkpoint ckpt = make_checkpoint(r.model, r.optimizer, 1, r.history);
  TrainConfig full = config_;
  full.use_mcp = true;
  CadglModel expecting_mcp(full, dims_of(dataset()));
  const auto before = expecting_mcp.snapshot();
  try {
    restore_parameters(expecting_mcp, ckpt);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder."), std::string::npos) << e.what();
  }
  EXPECT_EQ(expecting_mcp.snapshot(), before);
}

TEST_F(CheckpointTest, ShapeMismatchNamesTheParameter) {
  TrainResult r = trained();
  const Checkpoint ckpt = make_checkpoint(r.model, r.optimizer, 1, r.history);
  TrainConfig wider = config_;
  wider.d_out = 7;
  CadglModel other(wider, dims_of(dataset()));
  try {
    restore_parameters(other, ckpt);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch for parameter"), std::string::npos);
  }
}

TEST(MetricsLog, EpochRecordRoundTrips) {
  EpochRecord rec;
  rec.epoch = 7;
  rec.loss = {0.125, 0.5, 0.25, 0.875};
  rec.train_accuracy = 0.75;
  rec.val_loss = 0.3;
  rec.val.accuracy = 0.6;
  rec.val.auroc = 0.71;
  rec.val.n_pos = 5;
  rec.val.n_neg = 5;
  const auto j = to_json(rec);
  EXPECT_EQ(j.begin().key(), "epoch");
  const EpochRecord back = epoch_record_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.loss.ce, rec.loss.ce);
  EXPECT_EQ(back.loss.kl, rec.loss.kl);
  EXPECT_EQ(back.loss.ss, rec.loss.ss);
  EXPECT_EQ(back.loss.total, rec.loss.total);
  EXPECT_EQ(back.val.auroc, rec.val.auroc);
  EXPECT_FALSE(back.val.auprc.has_value());
  EXPECT_TRUE(j.at("val_auprc").is_null());
}
