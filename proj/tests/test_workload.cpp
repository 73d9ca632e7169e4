// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

#include "sparsegrid/errors.hpp"
#include "sparsegrid/oracle.hpp"
#include "sparsegrid/tensor_io.hpp"
#include "sparsegrid/workload.hpp"

namespace sparsegrid {
namespace {

namespace fs = std::filesystem;

WorkloadSpec small_spec(Pattern p, std::uint64_t seed = 1) {
  WorkloadSpec s;
  s.seq_len = 256;
  s.head_dim = 64;
  s.num_heads = 2;
  s.num_layers = 2;
  s.pattern = p;
  s.seed = seed;
  return s;
}

TEST(CounterRng, FrozenReferenceValues) {
  // First outputs of the reference SplitMix64 stream seeded with 0.
  const CounterRng rng(0);
  EXPECT_EQ(rng.at(0), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(rng.at(1), 0x6E789E6AA1B965F4ull);
  EXPECT_EQ(rng.at(2), 0x06C45D188009454Full);
}

TEST(CounterRng, SymmetricDrawHasUnitVariance) {
  const CounterRng rng(42);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, lo = 0.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.symmetric(static_cast<std::uint64_t>(i));
    sum += x;
    sq += x * x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
  EXPECT_GE(lo, -std::sqrt(3.0));
  EXPECT_LT(hi, std::sqrt(3.0));
}

TEST(Generate, DeterministicPerSeed) {
  const WorkloadSpec s = small_spec(Pattern::kScatter, 9);
  EXPECT_EQ(generate(s), generate(s));
  WorkloadSpec other = s;
  other.seed = 10;
  EXPECT_FALSE(generate(s) == generate(other));
}

TEST(Generate, HeadsAreIndependentStreams) {
  const Workload w = generate(small_spec(Pattern::kRandom));
  EXPECT_FALSE(w.at(0, 0).q() == w.at(0, 1).q());
  EXPECT_FALSE(w.at(0, 0).q() == w.at(1, 0).q());
  EXPECT_FALSE(w.at(0, 0).q() == w.at(0, 0).k());
}

TEST(Generate, RandomPatternPlantsNothing) {
  const WorkloadSpec s = small_spec(Pattern::kRandom);
  for (std::size_t i = 0; i < s.seq_len; ++i) EXPECT_TRUE(planted_keys(s, 0, 0, i).empty());
  WorkloadSpec zero = small_spec(Pattern::kVertical);
  zero.signal_gain = 0.0;
  const Workload w = generate(zero);
  // With no gain, the column axis carries no signal at all.
  for (std::size_t i = 0; i < zero.seq_len; ++i) EXPECT_EQ(w.at(0, 0).q()(i, 0), 0.0f);
}

TEST(Generate, VerticalSinkDominatesGroundTruth) {
  WorkloadSpec s = small_spec(Pattern::kVertical, 3);
  s.num_heads = 1;
  s.num_layers = 1;
  const Workload w = generate(s);
  const GroundTruth g = ground_truth_sets(w.at(0, 0), 0.95);
  std::size_t hits = 0;
  for (std::size_t i = 1; i < s.seq_len; ++i)
    if (!g.key_sets[i].empty() && g.key_sets[i].front() == 0) ++hits;
  EXPECT_GE(static_cast<double>(hits), 0.99 * static_cast<double>(s.seq_len - 1));
}

class SelfCheckTest : public ::testing::TestWithParam<Pattern> {};

TEST_P(SelfCheckTest, PlantedKeysCarryTheTruthMass) {
  const WorkloadSpec s = small_spec(GetParam(), 5);
  const SelfCheckReport r = self_check(s, generate(s));
  EXPECT_GT(r.eligible_queries, 0u);
  EXPECT_TRUE(r.passed) << "min share " << r.min_share << " mean " << r.mean_share << " passing "
                        << r.passing_queries << "/" << r.eligible_queries;
}

INSTANTIATE_TEST_SUITE_P(Patterns, SelfCheckTest,
                         ::testing::Values(Pattern::kLocal, Pattern::kVertical, Pattern::kSlash,
                                           Pattern::kScatter),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(AdversarialFixture, SelfCheckAndBlindRows) {
  const WorkloadSpec s = adversarial_vertical_fixture();
  const SelfCheckReport r = self_check(s, generate(s));
  EXPECT_TRUE(r.passed) << "min share " << r.min_share;
  EXPECT_FALSE(is_blind_query(s, 0, 7));
  EXPECT_TRUE(is_blind_query(s, 1, 7));
  EXPECT_TRUE(is_blind_query(s, 3, 15));
  EXPECT_FALSE(is_blind_query(s, 3, 14));
  EXPECT_EQ(planted_keys(s, 0, 1, 7).size(), 8u);
  EXPECT_EQ(planted_keys(s, 0, 1, 6), (std::vector<std::size_t>{0}));
}

TEST(WorkloadSpec, RejectsBadParameters) {
  WorkloadSpec s = small_spec(Pattern::kLocal);
  s.window = s.seq_len;
  EXPECT_THROW(generate(s), ParamError);
  s = small_spec(Pattern::kVertical);
  s.sink_column = 999;
  EXPECT_THROW(generate(s), ParamError);
  s = small_spec(Pattern::kScatter);
  s.scatter_count = 0;
  EXPECT_THROW(generate(s), ParamError);
  s = small_spec(Pattern::kRandom);
  s.seq_len = 0;
  EXPECT_THROW(generate(s), ParamError);
  s = small_spec(Pattern::kRandom);
  s.signal_gain = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(generate(s), ParamError);
  s = small_spec(Pattern::kSlash);
  s.blind_stride = 4;
  EXPECT_THROW(generate(s), ParamError);
}

TEST(PatternNames, RoundTrip) {
  for (Pattern p : {Pattern::kRandom, Pattern::kLocal, Pattern::kVertical, Pattern::kSlash,
                    Pattern::kScatter})
    EXPECT_EQ(parse_pattern(to_string(p)), p);
  EXPECT_FALSE(parse_pattern("diagonal").has_value());
}

// --- tensor files ---------------------------------------------------------

class TensorFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sparsegrid_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  fs::path dir_;
};

TEST_F(TensorFileTest, RoundTripIsBitExact) {
  WorkloadSpec s = small_spec(Pattern::kSlash, 4);
  s.seq_len = 33;
  s.head_dim = 7;
  const Workload w = generate(s);
  const fs::path p = dir_ / "w.bin";
  save_tensors(p, w);
  EXPECT_EQ(fs::file_size(p), kTensorHeaderBytes + 4u * 3 * 33 * 7 * 4);
  const Workload back = load_tensors(p);
  ASSERT_EQ(back.heads.size(), w.heads.size());
  for (std::size_t h = 0; h < w.heads.size(); ++h) {
    for (const auto& [a, b] : {std::pair{&w.heads[h].q(), &back.heads[h].q()},
                               std::pair{&w.heads[h].k(), &back.heads[h].k()},
                               std::pair{&w.heads[h].v(), &back.heads[h].v()}}) {
      ASSERT_EQ(0, std::memcmp(a->data().data(), b->data().data(), a->size() * sizeof(float)));
    }
  }
  EXPECT_EQ(back, w);
}

TEST_F(TensorFileTest, HeaderLayout) {
  WorkloadSpec s = small_spec(Pattern::kRandom);
  s.seq_len = 5;
  s.head_dim = 3;
  const fs::path p = dir_ / "w.bin";
  save_tensors(p, generate(s));
  const auto bytes = read_bytes(p);
  ASSERT_GE(bytes.size(), 24u);
  EXPECT_EQ(std::string(bytes.data(), 4), "RRTN");
  const auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(bytes[off + b]);
    return v;
  };
  EXPECT_EQ(u32(4), 1u);
  EXPECT_EQ(u32(8), 2u);
  EXPECT_EQ(u32(12), 2u);
  EXPECT_EQ(u32(16), 5u);
  EXPECT_EQ(u32(20), 3u);
}

TEST_F(TensorFileTest, BadMagic) {
  const fs::path p = dir_ / "w.bin";
  WorkloadSpec s = small_spec(Pattern::kRandom);
  s.seq_len = 4;
  save_tensors(p, generate(s));
  auto bytes = read_bytes(p);
  bytes[0] = 'X';
  write_bytes(p, bytes);
  try {
    load_tensors(p);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST_F(TensorFileTest, BadVersion) {
  const fs::path p = dir_ / "w.bin";
  WorkloadSpec s = small_spec(Pattern::kRandom);
  s.seq_len = 4;
  save_tensors(p, generate(s));
  auto bytes = read_bytes(p);
  bytes[4] = 2;
  write_bytes(p, bytes);
  try {
    load_tensors(p);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST_F(TensorFileTest, TrailingBytesAndTruncation) {
  const fs::path p = dir_ / "w.bin";
  WorkloadSpec s = small_spec(Pattern::kRandom);
  s.seq_len = 4;
  save_tensors(p, generate(s));
  auto bytes = read_bytes(p);
  auto longer = bytes;
  longer.push_back(0);
  write_bytes(p, longer);
  EXPECT_THROW(load_tensors(p), FormatError);
  auto shorter = bytes;
  shorter.pop_back();
  write_bytes(p, shorter);
  EXPECT_THROW(load_tensors(p), IoError);
  write_bytes(p, std::vector<char>(bytes.begin(), bytes.begin() + 10));
  EXPECT_THROW(load_tensors(p), IoError);
}

TEST_F(TensorFileTest, ZeroDimension) {
  const fs::path p = dir_ / "w.bin";
  WorkloadSpec s = small_spec(Pattern::kRandom);
  s.seq_len = 4;
  save_tensors(p, generate(s));
  auto bytes = read_bytes(p);
  std::fill(bytes.begin() + 16, bytes.begin() + 20, 0);
  bytes.resize(24);
  write_bytes(p, bytes);
  EXPECT_THROW(load_tensors(p), FormatError);
}

TEST_F(TensorFileTest, MissingFileAndUnwritablePath) {
  EXPECT_THROW(load_tensors(dir_ / "missing.bin"), IoError);
  WorkloadSpec s = small_spec(Pattern::kRandom);
  s.seq_len = 4;
  EXPECT_THROW(save_tensors(dir_ / "no" / "such" / "dir" / "w.bin", generate(s)), IoError);
}

}  // namespace
}  // namespace sparsegrid
