// Command-line front end: deterministic generation, inspection, parameter
// counting, training, sparsity sweeps, and kernel benchmarks. All randomness
// flows from explicit seed flags; identical invocations produce byte-identical
// outputs. Exit codes: 0 success, 1 usage/config error, 2 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ternconv/bench.hpp"
#include "ternconv/config_json.hpp"
#include "ternconv/io.hpp"
#include "ternconv/network.hpp"
#include "ternconv/sweep.hpp"
#include "ternconv/train.hpp"

namespace {

using namespace ternconv;

std::vector<double> parse_t_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string tok = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad t value '" + tok + "' in --t-list");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("--t-list must not be empty");
  return out;
}

std::vector<std::pair<int, int>> parse_shapes(const std::string& csv) {
  std::vector<std::pair<int, int>> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string tok = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
    const std::size_t x = tok.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument(tok);
      out.push_back({std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1))});
    } catch (const std::exception&) {
      throw std::invalid_argument("bad shape '" + tok + "' in --shapes (want RxC)");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("--shapes must not be empty");
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

void print_stats(const DenseTernary& m) {
  const SparsityStats s = sparsity_stats(m);
  std::printf("zero_fraction %.9f\n", s.zero_fraction());
  std::printf("plus_fraction_of_nonzeros %.9f\n", s.plus_fraction_of_nonzeros());
}

struct GenArgs {
  std::uint64_t seed = 0;
  std::uint64_t layer_tag = 0;
  int rows = 1;
  int cols = 1;
  double t = 0.5;
  std::string generator = "stream";
  int n = 0;
  int m = 0;
  std::string out;
  std::string format = "tern1";
};

int run_gen(const GenArgs& a) {
  WeightSpec spec{.seed = a.seed, .layer_tag = a.layer_tag, .rows = a.rows, .cols = a.cols,
                  .threshold = a.t, .generator = generator_from_string(a.generator),
                  .n = a.n, .m = a.m};
  validate(spec);
  if (a.format != "tern1" && a.format != "text")
    throw std::invalid_argument("--format must be tern1 or text");

  nlohmann::json resolved{{"seed", a.seed}, {"layer_tag", a.layer_tag}, {"rows", a.rows},
                          {"cols", a.cols}, {"t", a.t}, {"generator", a.generator},
                          {"n", a.n}, {"m", a.m}, {"out", a.out}, {"format", a.format}};
  std::printf("resolved config:\n%s\n", resolved.dump(2).c_str());

  const DenseTernary matrix = generate(spec);
  if (a.format == "tern1") {
    write_tern1(a.out, spec, matrix);
  } else {
    write_text_file(a.out, to_text(matrix));
  }
  print_stats(matrix);
  std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

int run_inspect(const std::string& path) {
  const Tern1File file = read_tern1(path);
  std::printf("seed %llu\n", static_cast<unsigned long long>(file.spec.seed));
  std::printf("layer_tag %llu\n", static_cast<unsigned long long>(file.spec.layer_tag));
  std::printf("rows %d\n", file.spec.rows);
  std::printf("cols %d\n", file.spec.cols);
  std::printf("generator %s\n", to_string(file.spec.generator).c_str());
  std::printf("n %d\n", file.spec.n);
  std::printf("m %d\n", file.spec.m);
  std::printf("threshold %.9f\n", file.spec.threshold);
  print_stats(file.matrix);
  return 0;
}

ModelConfig load_model(const std::string& path) {
  if (path.empty()) return resolve(ModelConfig{});
  return load_model_config(path);
}

TrainConfig load_train(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  return load_train_config(path);
}

void print_resolved(const ModelConfig& cfg) {
  std::printf("resolved model config:\n%s\n", to_json(cfg).dump(2).c_str());
}

void print_resolved(const TrainConfig& tc) {
  std::printf("resolved train config:\n%s\n", to_json(tc).dump(2).c_str());
}

int run_count(const std::string& config_path) {
  const ModelConfig cfg = load_model(config_path);
  print_resolved(cfg);
  Network<float> net(cfg);
  std::printf("%s\n", to_json(count_params(net)).dump(2).c_str());
  return 0;
}

int run_train(const std::string& config_path, const std::string& train_path,
              const std::string& metrics_out) {
  const ModelConfig cfg = load_model(config_path);
  const TrainConfig tc = load_train(train_path);
  print_resolved(cfg);
  print_resolved(tc);
  const SyntheticDataset<float> ds = make_synthetic<float>(tc, cfg.in_channels);
  Network<float> net(cfg);
  const MetricsHistory history = train(net, ds, tc);
  write_text_file(metrics_out, metrics_csv(history));
  std::printf("final train_accuracy %.9f\n", history.final_train_accuracy());
  std::printf("final val_accuracy %.9f\n", history.final_val_accuracy());
  std::printf("wrote %s\n", metrics_out.c_str());
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& train_path,
              const std::string& t_list_csv, const std::string& out, int jobs) {
  const ModelConfig cfg = load_model(config_path);
  const TrainConfig tc = load_train(train_path);
  print_resolved(cfg);
  print_resolved(tc);
  const std::vector<double> t_list = parse_t_list(t_list_csv);
  if (jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
  const auto rows = sparsity_sweep<float>(cfg, t_list, tc, jobs);
  write_text_file(out, sweep_csv(rows));
  for (const auto& row : rows)
    std::printf("t %.4f params %llu accuracy %.9f\n", row.t,
                static_cast<unsigned long long>(row.params_trainable), row.accuracy);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_bench(const std::string& shapes_csv, const std::string& t_list_csv, int reps,
              const std::string& out, int threads) {
  if (reps < 1) throw std::invalid_argument("--reps must be >= 1");
  if (threads < 1) throw std::invalid_argument("--threads must be >= 1");
  nlohmann::json resolved{{"shapes", shapes_csv}, {"t_list", t_list_csv}, {"reps", reps},
                          {"threads", threads}, {"out", out}};
  std::printf("resolved config:\n%s\n", resolved.dump(2).c_str());
  const auto shapes = parse_shapes(shapes_csv);
  const auto t_list = parse_t_list(t_list_csv);
  auto rows = bench_matvec(shapes, t_list, reps);
  if (threads > 1) {
    const auto scaling =
        bench_pointwise_scaling(shapes[0].first, shapes[0].second, t_list[0], 8, 128, reps, threads);
    rows.insert(rows.end(), scaling.begin(), scaling.end());
  }
  write_text_file(out, bench_csv(rows));
  std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constant sparse random ternary 1x1-convolutions"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a ternary matrix file");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--layer-tag", gen.layer_tag, "layer tag mixed into the seed");
  gen_cmd->add_option("--rows", gen.rows, "output channels")->required();
  gen_cmd->add_option("--cols", gen.cols, "input channels")->required();
  gen_cmd->add_option("--t", gen.t, "sparsity threshold in [0,1]");
  gen_cmd->add_option("--generator", gen.generator, "stream | hash | structured");
  gen_cmd->add_option("--n", gen.n, "structured: nonzeros per group");
  gen_cmd->add_option("--m", gen.m, "structured: group width");
  gen_cmd->add_option("--out", gen.out, "output path")->required();
  gen_cmd->add_option("--format", gen.format, "tern1 | text");

  std::string inspect_in;
  CLI::App* inspect_cmd = app.add_subcommand("inspect", "print TERN1 header and statistics");
  inspect_cmd->add_option("--in", inspect_in, "TERN1 file")->required();

  std::string count_config;
  CLI::App* count_cmd = app.add_subcommand("count", "print the parameter report of a model");
  count_cmd->add_option("--config", count_config, "model config JSON (defaults when omitted)");

  std::string train_config, train_tc, train_metrics;
  CLI::App* train_cmd = app.add_subcommand("train", "train on the synthetic task");
  train_cmd->add_option("--config", train_config, "model config JSON");
  train_cmd->add_option("--train-config", train_tc, "train config JSON");
  train_cmd->add_option("--metrics-out", train_metrics, "metrics CSV path")->required();

  std::string sweep_config, sweep_tc, sweep_tlist = "0.0,0.5,0.9", sweep_out;
  int sweep_jobs = 1;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train one model per sparsity threshold");
  sweep_cmd->add_option("--config", sweep_config, "model config JSON");
  sweep_cmd->add_option("--train-config", sweep_tc, "train config JSON");
  sweep_cmd->add_option("--t-list", sweep_tlist, "comma-separated thresholds");
  sweep_cmd->add_option("--out", sweep_out, "sweep CSV path")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "parallel trainings");

  std::string bench_shapes = "512x512", bench_tlist = "0.0,0.5,0.9", bench_out;
  int bench_reps = 9, bench_threads = 1;
  CLI::App* bench_cmd = app.add_subcommand("bench", "kernel micro-benchmarks");
  bench_cmd->add_option("--shapes", bench_shapes, "comma-separated RxC shapes");
  bench_cmd->add_option("--t-list", bench_tlist, "comma-separated thresholds");
  bench_cmd->add_option("--reps", bench_reps, "timing repetitions");
  bench_cmd->add_option("--out", bench_out, "bench CSV path")->required();
  bench_cmd->add_option("--threads", bench_threads, "also time parallel pointwise apply");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (inspect_cmd->parsed()) return run_inspect(inspect_in);
    if (count_cmd->parsed()) return run_count(count_config);
    if (train_cmd->parsed()) return run_train(train_config, train_tc, train_metrics);
    if (sweep_cmd->parsed()) return run_sweep(sweep_config, sweep_tc, sweep_tlist, sweep_out, sweep_jobs);
    if (bench_cmd->parsed())
      return run_bench(bench_shapes, bench_tlist, bench_reps, bench_out, bench_threads);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
