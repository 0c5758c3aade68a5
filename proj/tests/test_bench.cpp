#include <catch2/catch_amalgamated.hpp>

#include "ternconv/bench.hpp"

using namespace ternconv;

TEST_CASE("bench_matvec validates and reports all kernel variants") {
  const auto rows = bench_matvec({{64, 64}}, {0.0, 1.0}, 3, /*seed=*/9);
  REQUIRE(rows.size() == 10);  // 5 kernels x 2 thresholds

  for (const auto& row : rows) {
    REQUIRE(row.reps == 3);
    if (row.kernel == "float_reference") {
      REQUIRE(row.ops.multiplications == 64u * 64u);
    } else {
      REQUIRE(row.ops.multiplications == 0);
    }
    if (row.kernel == "on_the_fly") REQUIRE(row.ops.weight_bytes_read == 0);
    if (row.t == 1.0 && row.kernel != "float_reference") {
      // both accumulators empty: one final subtraction per row
      REQUIRE(row.ops.additions == 64);
    }
  }
}

TEST_CASE("addition counters scale with density across the bench table") {
  const auto rows = bench_matvec({{512, 512}}, {0.0, 0.9}, 1, /*seed=*/3);
  std::uint64_t dense_adds = 0, sparse_adds = 0;
  for (const auto& row : rows) {
    if (row.kernel != "dense") continue;
    if (row.t == 0.0) dense_adds = row.ops.additions;
    if (row.t == 0.9) sparse_adds = row.ops.additions;
  }
  REQUIRE(dense_adds > 0);
  const double ratio = static_cast<double>(sparse_adds) / static_cast<double>(dense_adds);
  REQUIRE(ratio > 0.09);
  REQUIRE(ratio < 0.11);
}

TEST_CASE("bench CSV format") {
  const auto rows = bench_matvec({{8, 8}}, {0.5}, 1);
  const std::string csv = bench_csv(rows);
  REQUIRE(csv.rfind("kernel,rows,cols,t,reps,median_ns,multiplications,additions,"
                    "weight_bytes_read\n",
                    0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + rows.size());
}

TEST_CASE("parallel pointwise application is identical across thread counts") {
  const auto rows = bench_pointwise_scaling(32, 32, 0.5, 4, 16, 2, 4);
  REQUIRE(rows.size() == 4);  // validated internally against the serial kernel
  for (const auto& row : rows) REQUIRE(row.ops.multiplications == 0);
  REQUIRE(rows[0].ops.additions == rows[3].ops.additions);
}
