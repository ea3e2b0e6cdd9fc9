// Command-line front end: run emulated-encrypted inference beside the
// plaintext oracle, benchmark operation counts, reproduce the polynomial
// approximation table, and print rotation decompositions.

#include "shardnn/act.hpp"
#include "shardnn/io.hpp"
#include "shardnn/net.hpp"
#include "shardnn/oracle.hpp"
#include "shardnn/rot.hpp"

#include "CLI11.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace shardnn;

namespace {

int cmd_run(const std::string& spec_path, const std::string& input_path, double max_residual) {
    NetworkSpec spec = load_network(spec_path);
    ImageTensor input = load_tensor(input_path);
    RunReport report = run_network(spec, input);
    std::printf("%s", report.to_text().c_str());
    if (max_residual > 0.0 && report.residual_max > max_residual) {
        std::printf("FAIL: residual max %.3e exceeds threshold %.3e\n", report.residual_max,
                    max_residual);
        return 2;
    }
    return 0;
}

int cmd_bench(const std::string& spec_path, const std::string& input_path, std::size_t reps) {
    NetworkSpec spec = load_network(spec_path);
    ImageTensor input = load_tensor(input_path);
    BenchReport report = bench_network(spec, input, reps);
    std::printf("%s", report.to_text().c_str());
    return report.deterministic ? 0 : 2;
}

int cmd_poly_table(std::size_t grid) {
    auto gelu = [](double x) { return oracle_gelu(x); };
    auto relu = [](double x) { return oracle_relu(x); };
    std::printf("max abs error of activation approximations on [-16, 16]\n");
    std::printf("%-18s %6s %10s %10s\n", "method", "degree", "ReLU", "GELU");
    for (std::size_t deg : {27u, 59u}) {
        const double r = max_abs_error(cheb_interpolate(relu, deg, 16.0), relu, grid);
        const double g = max_abs_error(cheb_interpolate(gelu, deg, 16.0), gelu, grid);
        std::printf("%-18s %6zu %10.4f %10.4f\n", "Chebyshev nodes", deg, r, g);
    }
    for (std::size_t deg : {27u, 59u}) {
        const double r = remez_minimax(relu, deg, 16.0).max_error;
        const double g = remez_minimax(gelu, deg, 16.0).max_error;
        std::printf("%-18s %6zu %10.4f %10.4f\n", "Minimax", deg, r, g);
    }
    return 0;
}

int cmd_decomp(std::size_t lo, std::size_t hi, std::size_t modulus) {
    std::printf("%6s %10s %10s  %s\n", "n", "positive", "signed", "signed steps");
    for (std::size_t n = lo; n <= hi && n < modulus; ++n) {
        auto pos = decompose_positive(n, modulus);
        auto sgn = decompose_signed(n, modulus);
        std::string steps;
        for (long s : sgn) steps += (steps.empty() ? "" : " ") + std::to_string(s);
        std::printf("%6zu %10zu %10zu  [%s]\n", n, pos.size(), sgn.size(), steps.c_str());
    }
    return 0;
}

/// Writes a ready-to-run demo network (the desk-scale two-conv net) into
/// the given directory.
int cmd_demo(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    FilterTensor conv1(4, 8, 3);
    for (double& w : conv1.weights) w = 0.15 * unit(rng);
    std::vector<double> bias1(8);
    for (double& b : bias1) b = 0.1 * unit(rng);
    save_filter((fs::path(dir) / "conv1.filt").string(), conv1, bias1);

    FilterTensor conv2(8, 8, 3);
    for (double& w : conv2.weights) w = 0.08 * unit(rng);
    std::vector<double> bias2(8);
    for (double& b : bias2) b = 0.1 * unit(rng);
    save_filter((fs::path(dir) / "conv2.filt").string(), conv2, bias2);

    LinearWeights head(10, 8);
    for (double& w : head.w) w = unit(rng);
    for (double& b : head.b) b = unit(rng);
    save_linear((fs::path(dir) / "head.lin").string(), head);

    ImageTensor input(4, 8);
    for (double& v : input.data) v = unit(rng);
    save_tensor((fs::path(dir) / "input.tensor").string(), input);

    std::ofstream spec(fs::path(dir) / "net.json");
    spec << R"({
  "shard_size": 256,
  "initial_level": 8,
  "seed": 1,
  "noise": {"enabled": false, "sigma": 1e-6, "metabts": false},
  "bootstrap": {"auto": true, "target_level": 8},
  "layers": [
    {"type": "conv", "name": "conv1", "filter": "conv1.filt",
     "bn_scale": [1, 1, 1, 1, 1, 1, 1, 1],
     "bn_bias": [0, 0, 0, 0, 0, 0, 0, 0]},
    {"type": "conv", "name": "conv2", "filter": "conv2.filt"},
    {"type": "pool"},
    {"type": "gelu", "degree": 27, "bound": 10.0},
    {"type": "pool_linear", "name": "head", "weights": "head.lin"}
  ]
}
)";
    std::printf("demo network written to %s (run: shardnn run %s/net.json %s/input.tensor)\n",
                dir.c_str(), dir.c_str(), dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emulated SIMD packed-tensor inference with a plaintext oracle"};
    app.require_subcommand(1);

    std::string spec_path, input_path, demo_dir = "demo";
    double max_residual = 0.0;
    std::size_t reps = 3, grid = 100000, lo = 0, hi = 130, modulus = 4096;

    auto* run = app.add_subcommand("run", "run a network beside the oracle and report");
    run->add_option("spec", spec_path, "network JSON")->required();
    run->add_option("input", input_path, "input tensor fixture")->required();
    run->add_option("--max-residual", max_residual, "fail if |residual| exceeds this");

    auto* bench = app.add_subcommand("bench", "aggregate ledger counts per layer type");
    bench->add_option("spec", spec_path, "network JSON")->required();
    bench->add_option("input", input_path, "input tensor fixture")->required();
    bench->add_option("-n,--repetitions", reps, "number of repetitions");

    auto* poly = app.add_subcommand("poly-table", "print the activation error table");
    poly->add_option("--grid", grid, "grid points for the error measurement");

    auto* decomp = app.add_subcommand("decomp", "rotation decomposition table");
    decomp->add_option("lo", lo, "range start");
    decomp->add_option("hi", hi, "range end (inclusive)");
    decomp->add_option("--modulus", modulus, "slot count");

    auto* demo = app.add_subcommand("demo", "write a runnable demo network");
    demo->add_option("dir", demo_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(spec_path, input_path, max_residual);
        if (bench->parsed()) return cmd_bench(spec_path, input_path, reps);
        if (poly->parsed()) return cmd_poly_table(grid);
        if (decomp->parsed()) return cmd_decomp(lo, hi, modulus);
        if (demo->parsed()) return cmd_demo(demo_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
