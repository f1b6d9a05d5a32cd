#include <gtest/gtest.h>

#include <fstream>

#include "pcm/checkpoint.hpp"
#include "pcm/error.hpp"
#include "support.hpp"

namespace pcm {
namespace {

void expect_same(const DenseLayer& a, const DenseLayer& b) {
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.activation.slope, b.activation.slope);
}

void expect_same(const Network& a, const Network& b) {
  ASSERT_EQ(a.mode, b.mode);
  ASSERT_EQ(a.hidden.size(), b.hidden.size());
  ASSERT_EQ(a.input_kernel.has_value(), b.input_kernel.has_value());
  if (a.input_kernel) expect_same(*a.input_kernel, *b.input_kernel);
  EXPECT_EQ(a.mask, b.mask);
  for (std::size_t k = 0; k < a.hidden.size(); ++k) expect_same(a.hidden[k], b.hidden[k]);
  expect_same(a.output, b.output);
}

TEST(Checkpoint, RoundTripIsBitExactInBothModes) {
  const auto dir = testing::fresh_dir("ckpt_roundtrip");
  for (Mode mode : {Mode::kPreMask, Mode::kMask}) {
    const auto net = testing::random_network(7, {5, 3}, mode, 11);
    save_checkpoint(dir / "n.ckpt", net, 1234);
    const auto back = load_checkpoint(dir / "n.ckpt");
    EXPECT_EQ(back.seed, 1234u);
    expect_same(net, back.network);
    const Matrix x = testing::random_matrix(9, 7, 3);
    EXPECT_EQ(predict(net, x), predict(back.network, x));
  }
}

TEST(Checkpoint, BadMagicIsParseError) {
  const auto dir = testing::fresh_dir("ckpt_magic");
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << "NOTACKPT and some more bytes";
  try {
    load_checkpoint(dir / "bad.ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(Checkpoint, TrailingBytesAreRejected) {
  const auto dir = testing::fresh_dir("ckpt_trailing");
  save_checkpoint(dir / "n.ckpt", testing::random_network(3, {2}, Mode::kPreMask, 1), 0);
  std::ofstream(dir / "n.ckpt", std::ios::binary | std::ios::app) << 'x';
  EXPECT_THROW(load_checkpoint(dir / "n.ckpt"), ParseError);
}

TEST(Checkpoint, TruncationIsRejected) {
  const auto dir = testing::fresh_dir("ckpt_truncated");
  save_checkpoint(dir / "n.ckpt", testing::random_network(3, {2}, Mode::kMask, 1), 0);
  const auto bytes = testing::read_file(dir / "n.ckpt");
  std::ofstream(dir / "n.ckpt", std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(load_checkpoint(dir / "n.ckpt"), Error);
}

TEST(Checkpoint, MissingFileIsIoError) {
  try {
    load_checkpoint(testing::fresh_dir("ckpt_missing") / "absent.ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace pcm
