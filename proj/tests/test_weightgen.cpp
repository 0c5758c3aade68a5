#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "ternconv/rng.hpp"
#include "ternconv/weightgen.hpp"

using namespace ternconv;

// Expected constants below were produced by an arbitrary-precision evaluation
// of the finalizer pipeline, independent of this implementation.

TEST_CASE("mix64 frozen values") {
  REQUIRE(mix64(0) == 0ULL);
  REQUIRE(mix64(1) == 0x5692161D100B05E5ULL);
  REQUIRE(mix64(kGoldenGamma) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("mix64 bit balance over consecutive inputs") {
  constexpr int kSamples = 1'000'000;
  int counts[64] = {};
  for (std::uint64_t x = 0; x < kSamples; ++x) {
    const std::uint64_t z = mix64(x);
    for (int b = 0; b < 64; ++b) counts[b] += static_cast<int>((z >> b) & 1);
  }
  for (int b = 0; b < 64; ++b) {
    const double frac = static_cast<double>(counts[b]) / kSamples;
    REQUIRE(frac >= 0.49);
    REQUIRE(frac <= 0.51);
  }
}

TEST_CASE("stream_word frozen values for seed 0") {
  REQUIRE(stream_word(0, 0) == 0xE220A8397B1DCDAFULL);
  REQUIRE(stream_word(0, 1) == 0x6E789E6AA1B965F4ULL);
  REQUIRE(stream_word(0, 2) == 0x06C45D188009454FULL);
  REQUIRE(stream_word(0, 3) == 0xF88BB8A8724C81ECULL);
}

TEST_CASE("stream_word definition unfolding and counter shift identity") {
  REQUIRE(stream_word(0, 0) == mix64(kGoldenGamma));
  SplitMixStream seeds(99);
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t s = seeds.next_word();
    const std::uint64_t idx = seeds.next_word() % 1000 + 1;
    REQUIRE(stream_word(s, idx) == stream_word(s + kGoldenGamma, idx - 1));
  }
}

TEST_CASE("word_to_uniform endpoints are exact") {
  REQUIRE(word_to_uniform(0) == -1.0);
  REQUIRE(word_to_uniform(1ULL << 63) == 0.0);
  REQUIRE(word_to_uniform(~0ULL) == 1.0 - 0x1.0p-52);
}

TEST_CASE("ternarize thresholding rule") {
  REQUIRE(ternarize(0.5, 0.9) == 0);
  REQUIRE(ternarize(-0.95, 0.9) == -1);
  REQUIRE(ternarize(0.95, 0.9) == 1);
  // non-strict comparison: |w| == t maps to zero
  REQUIRE(ternarize(0.9, 0.9) == 0);
  REQUIRE(ternarize(-0.9, 0.9) == 0);
  // endpoints: t = 1 zeroes everything, t = 0 keeps every nonzero sign
  SplitMixStream rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double w = rng.next_uniform();
    REQUIRE(ternarize(w, 1.0) == 0);
    if (w != 0.0) REQUIRE(ternarize(w, 0.0) == (w > 0 ? 1 : -1));
  }
}

TEST_CASE("expected_sparsity is the threshold") {
  REQUIRE(expected_sparsity(0.0) == 0.0);
  REQUIRE(expected_sparsity(1.0) == 1.0);
  REQUIRE(expected_sparsity(0.9) == 0.9);
  REQUIRE_THROWS_AS(expected_sparsity(-0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(expected_sparsity(1.5), std::invalid_argument);
}

TEST_CASE("coord_word rejects out-of-range coordinates") {
  WeightSpec spec{.seed = 1, .layer_tag = 0, .rows = 4, .cols = 4};
  REQUIRE_THROWS_AS(coord_word(spec, 4, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(coord_word(spec, 0, 4), std::invalid_argument);
}

TEST_CASE("coord_word distinctness over a 64x64 matrix") {
  WeightSpec spec{.seed = 42, .layer_tag = 0, .rows = 64, .cols = 64};
  std::set<std::uint64_t> words;
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) words.insert(coord_word(spec, r, c));
  REQUIRE(words.size() >= 4095);
}

TEST_CASE("layer_tag avalanche flips a large fraction of entries") {
  WeightSpec a{.seed = 7, .layer_tag = 0, .rows = 128, .cols = 128,
               .threshold = 0.5, .generator = GeneratorKind::CoordinateHash};
  WeightSpec b = a;
  b.layer_tag = 1;
  const DenseTernary ma = generate(a), mb = generate(b);
  int changed = 0;
  for (int r = 0; r < 128; ++r)
    for (int c = 0; c < 128; ++c) changed += (ma.at(r, c) != mb.at(r, c));
  REQUIRE(changed >= 128 * 128 / 4);
}

TEST_CASE("generate with t=1 is the zero matrix") {
  for (auto kind : {GeneratorKind::SequentialStream, GeneratorKind::CoordinateHash}) {
    WeightSpec spec{.seed = 11, .layer_tag = 3, .rows = 33, .cols = 17,
                    .threshold = 1.0, .generator = kind};
    const DenseTernary m = generate(spec);
    const SparsityStats s = sparsity_stats(m);
    REQUIRE(s.zeros == 33u * 17u);
  }
}

TEST_CASE("statistical sparsity tracks the threshold") {
  // |empirical zero fraction - t| <= 3 sqrt(t(1-t)) / 512 on a 512x512 matrix
  for (auto kind : {GeneratorKind::SequentialStream, GeneratorKind::CoordinateHash}) {
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      WeightSpec spec{.seed = 3, .layer_tag = 0, .rows = 512, .cols = 512,
                      .threshold = t, .generator = kind};
      const SparsityStats s = sparsity_stats(generate(spec));
      const double band = 3.0 * std::sqrt(t * (1.0 - t)) / 512.0;
      REQUIRE(std::abs(s.zero_fraction() - t) <= band);
    }
  }
}

TEST_CASE("sign balance among nonzeros at t=0.5") {
  WeightSpec spec{.seed = 3, .layer_tag = 0, .rows = 512, .cols = 512, .threshold = 0.5};
  const SparsityStats s = sparsity_stats(generate(spec));
  const double nnz = static_cast<double>(s.plus + s.minus);
  const double band = 3.0 * std::sqrt(0.25 / nnz);
  REQUIRE(std::abs(s.plus_fraction_of_nonzeros() - 0.5) <= band);
}

TEST_CASE("random access equals streaming") {
  WeightSpec spec{.seed = 77, .layer_tag = 5, .rows = 20, .cols = 31, .threshold = 0.4};
  const DenseTernary m = generate(spec);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) REQUIRE(generate_entry(spec, r, c) == m.at(r, c));
}

TEST_CASE("coordinate hash entries do not depend on matrix dimensions") {
  WeightSpec small{.seed = 13, .layer_tag = 2, .rows = 8, .cols = 8,
                   .threshold = 0.5, .generator = GeneratorKind::CoordinateHash};
  WeightSpec large = small;
  large.rows = 32;
  large.cols = 32;
  const DenseTernary ms = generate(small), ml = generate(large);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) REQUIRE(ms.at(r, c) == ml.at(r, c));
}

TEST_CASE("generate is deterministic for every generator kind") {
  for (auto kind : {GeneratorKind::SequentialStream, GeneratorKind::CoordinateHash,
                    GeneratorKind::StructuredNofM}) {
    WeightSpec spec{.seed = 123, .layer_tag = 9, .rows = 24, .cols = 24,
                    .threshold = 0.3, .generator = kind, .n = 2, .m = 4};
    REQUIRE(generate(spec) == generate(spec));
  }
}

TEST_CASE("structured 2:4 pattern has exactly two nonzeros per group") {
  WeightSpec spec{.seed = 5, .layer_tag = 0, .rows = 16, .cols = 32,
                  .threshold = 0.5, .generator = GeneratorKind::StructuredNofM,
                  .n = 2, .m = 4};
  const DenseTernary m = generate(spec);
  for (int r = 0; r < spec.rows; ++r) {
    for (int g = 0; g < spec.cols / 4; ++g) {
      int nnz = 0;
      for (int j = 0; j < 4; ++j) nnz += (m.at(r, g * 4 + j) != 0);
      REQUIRE(nnz == 2);
    }
  }
}

TEST_CASE("structured pattern rejects cols not divisible by m") {
  WeightSpec spec{.seed = 5, .layer_tag = 0, .rows = 4, .cols = 30,
                  .threshold = 0.5, .generator = GeneratorKind::StructuredNofM,
                  .n = 2, .m = 4};
  REQUIRE_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("spec validation") {
  WeightSpec bad;
  bad.rows = 0;
  REQUIRE_THROWS_AS(validate(bad), std::invalid_argument);
  bad = WeightSpec{};
  bad.threshold = 1.0001;
  REQUIRE_THROWS_AS(validate(bad), std::invalid_argument);
  bad = WeightSpec{};
  bad.generator = GeneratorKind::StructuredNofM;
  bad.n = 5;
  bad.m = 4;
  bad.cols = 8;
  REQUIRE_THROWS_AS(validate(bad), std::invalid_argument);
}
