#include "shardnn/net.hpp"

#include "shardnn/conv.hpp"
#include "shardnn/io.hpp"
#include "shardnn/oracle.hpp"
#include "shardnn/pool.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace shardnn {

std::string layer_type_name(LayerType t) {
    switch (t) {
        case LayerType::Conv: return "conv";
        case LayerType::Pool: return "pool";
        case LayerType::Gelu: return "gelu";
        case LayerType::Linear: return "linear";
        case LayerType::PoolLinear: return "pool_linear";
    }
    return "?";
}

namespace {

int required_level(const LayerSpec& layer, bool prescaled) {
    switch (layer.type) {
        case LayerType::Conv: return layer.stride == 2 ? 3 : 1;
        case LayerType::Pool: return 3;
        case LayerType::Gelu: return chebyshev_required_level(layer.degree) + (prescaled ? 0 : 1);
        case LayerType::Linear:
        case LayerType::PoolLinear: return 2;
    }
    return 0;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9e", v);
    return buf;
}

}  // namespace

NetworkSpec load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    const auto dir = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& f) { return (dir / f).string(); };

    NetworkSpec spec;
    spec.shard_size = j.value("shard_size", std::size_t{4096});
    spec.initial_level = j.value("initial_level", 30);
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("noise")) {
        spec.noise.enabled = j["noise"].value("enabled", false);
        spec.noise.sigma = j["noise"].value("sigma", 0.0);
        spec.noise.metabts = j["noise"].value("metabts", false);
    }
    if (j.contains("bootstrap")) {
        spec.bootstrap.auto_insert = j["bootstrap"].value("auto", true);
        spec.bootstrap.target_level = j["bootstrap"].value("target_level", 0);
    }
    for (const auto& lj : j.at("layers")) {
        LayerSpec layer;
        const std::string type = lj.at("type");
        layer.name = lj.value("name", type);
        if (type == "conv") {
            layer.type = LayerType::Conv;
            FilterFixture fx = load_filter(resolve(lj.at("filter")));
            layer.filter = std::move(fx.filter);
            layer.bias = std::move(fx.bias);
            layer.stride = lj.value("stride", 1);
            if (lj.contains("bn_scale")) {
                AffineParams bn;
                bn.scale = lj.at("bn_scale").get<std::vector<double>>();
                bn.bias = lj.at("bn_bias").get<std::vector<double>>();
                layer.bn = std::move(bn);
            }
        } else if (type == "pool") {
            layer.type = LayerType::Pool;
        } else if (type == "gelu") {
            layer.type = LayerType::Gelu;
            layer.degree = lj.value("degree", std::size_t{59});
            layer.bound = lj.value("bound", 10.0);
            if (lj.contains("poly")) {
                layer.poly = load_poly(resolve(lj.at("poly")));
                if (lj.contains("bound") && layer.poly->bound != layer.bound)
                    throw std::runtime_error("layer bound does not match its polynomial fixture");
                layer.bound = layer.poly->bound;
                layer.degree = layer.poly->degree();
            }
        } else if (type == "linear" || type == "pool_linear") {
            layer.type = type == "linear" ? LayerType::Linear : LayerType::PoolLinear;
            layer.weights = load_linear(resolve(lj.at("weights")));
        } else {
            throw std::runtime_error("unknown layer type: " + type);
        }
        spec.layers.push_back(std::move(layer));
    }
    return spec;
}

RunReport run_network(const NetworkSpec& spec, const ImageTensor& input,
                      const RunOptions& options) {
    if (spec.layers.empty()) throw std::invalid_argument("network has no layers");
    Engine eng(EngineConfig{spec.initial_level, spec.noise, spec.seed});
    const int target =
        spec.bootstrap.target_level > 0 ? spec.bootstrap.target_level : spec.initial_level;

    // Activation bounds fold into the closest preceding conv or pool, so
    // the activation input arrives pre-scaled to [-1, 1] at no level cost.
    const std::size_t n = spec.layers.size();
    std::vector<double> fold_scale(n, 1.0);
    std::vector<bool> prescaled(n, false);
    std::vector<ChebPoly> gelu_polys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (layer.type != LayerType::Gelu) continue;
        gelu_polys[i] = layer.poly ? *layer.poly
                                   : cheb_interpolate([](double x) { return oracle_gelu(x); },
                                                      layer.degree, layer.bound);
        if (i > 0 && (spec.layers[i - 1].type == LayerType::Conv ||
                      spec.layers[i - 1].type == LayerType::Pool)) {
            fold_scale[i - 1] = 1.0 / layer.bound;
            prescaled[i] = true;
        }
    }

    RunReport report;
    PackedImage p = pack(eng, input, spec.shard_size);
    ImageTensor mirror = input;
    double carried = 1.0;
    bool terminal = false;
    SlotVector logits_vec = eng.zeros(1);

    for (std::size_t i = 0; i < n; ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (terminal) throw std::invalid_argument("linear layers must come last");
        LayerReport lr;
        lr.name = layer.name.empty() ? layer_type_name(layer.type) : layer.name;
        lr.type = layer_type_name(layer.type);
        lr.level_before = p.min_level();

        const int need = required_level(layer, prescaled[i]);
        const bool scheduled = options.bootstrap_schedule
                                   ? std::find(options.bootstrap_schedule->begin(),
                                               options.bootstrap_schedule->end(),
                                               i) != options.bootstrap_schedule->end()
                                   : (spec.bootstrap.auto_insert && lr.level_before < need);
        if (scheduled) {
            for (auto& sh : p.shards) sh = eng.bootstrap(sh, target);
            lr.bootstrapped = true;
            report.bootstrap_layers.push_back(i);
        }
        if (p.min_level() < need) {
            throw std::runtime_error("level underflow at layer " + std::to_string(i) + " (" +
                                     lr.name + "): need " + std::to_string(need) + ", have " +
                                     std::to_string(p.min_level()));
        }

        const auto before = eng.ledger().snapshot();
        const int depth_before = p.min_level();

        switch (layer.type) {
            case LayerType::Conv: {
                FilterTensor k = layer.filter;
                std::vector<double> bias = layer.bias;
                if (layer.bn) {
                    auto folded = fold_bn(k, bias, *layer.bn);
                    k = std::move(folded.first);
                    bias = std::move(folded.second);
                }
                p = convolve(eng, p, k, bias, fold_scale[i]);
                if (layer.stride == 2) p = subsample_stride2(eng, p, 1.0);
                mirror = oracle_conv(mirror, k, layer.stride);
                if (!bias.empty()) {
                    AffineParams add_bias{std::vector<double>(k.c_out, 1.0), bias};
                    mirror = oracle_affine(mirror, add_bias);
                }
                carried *= fold_scale[i];
                break;
            }
            case LayerType::Pool: {
                p = pool(eng, p, fold_scale[i]);
                mirror = oracle_avgpool2x2(mirror);
                carried *= fold_scale[i];
                break;
            }
            case LayerType::Gelu: {
                const ChebPoly& poly = gelu_polys[i];
                p = apply_activation(eng, p, poly, prescaled[i]);
                for (double& v : mirror.data) v = cheb_eval(poly, v);
                carried = 1.0;
                break;
            }
            case LayerType::Linear:
            case LayerType::PoolLinear: {
                logits_vec = layer.type == LayerType::Linear ? linear(eng, p, layer.weights)
                                                             : pool_linear(eng, p, layer.weights);
                report.oracle_logits = layer.type == LayerType::Linear
                                           ? oracle_linear(flatten(mirror), layer.weights)
                                           : oracle_pool_linear(mirror, layer.weights);
                terminal = true;
                break;
            }
        }

        lr.ops = eng.ledger().snapshot() - before;
        if (terminal) {
            lr.level_after = logits_vec.level;
            report.logits.assign(logits_vec.slots.begin(),
                                 logits_vec.slots.begin() +
                                     static_cast<long>(layer.weights.out_features));
            double worst = 0.0;
            for (std::size_t o = 0; o < report.oracle_logits.size(); ++o)
                worst = std::max(worst, std::abs(report.logits[o] - report.oracle_logits[o]));
            lr.max_abs_err = worst;
        } else {
            lr.level_after = p.min_level();
            const ImageTensor decoded = unpack(p);
            double worst = 0.0;
            for (std::size_t idx = 0; idx < decoded.data.size(); ++idx)
                worst = std::max(worst, std::abs(decoded.data[idx] - mirror.data[idx] * carried));
            lr.max_abs_err = worst;
        }
        lr.depth_consumed = depth_before - lr.level_after;
        report.layers.push_back(std::move(lr));
    }
    if (!terminal) throw std::invalid_argument("network must end with a linear layer");

    report.totals = eng.ledger().snapshot();
    const std::size_t outs = report.logits.size();
    double mean = 0.0;
    for (std::size_t o = 0; o < outs; ++o) {
        const double r = report.logits[o] - report.oracle_logits[o];
        mean += r;
        report.residual_max = std::max(report.residual_max, std::abs(r));
    }
    mean /= static_cast<double>(outs);
    double var = 0.0;
    for (std::size_t o = 0; o < outs; ++o) {
        const double r = report.logits[o] - report.oracle_logits[o] - mean;
        var += r * r;
    }
    report.residual_mean = mean;
    report.residual_std = std::sqrt(var / static_cast<double>(outs));
    return report;
}

std::string RunReport::to_text() const {
    std::ostringstream out;
    out << "layer                 type         lvl before->after  boot  max|err|\n";
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        char line[160];
        std::snprintf(line, sizeof(line), "%-2zu %-18s %-12s %3d -> %-3d        %-5s %s\n", i,
                      l.name.c_str(), l.type.c_str(), l.level_before, l.level_after,
                      l.bootstrapped ? "yes" : "no", fmt(l.max_abs_err).c_str());
        out << line;
    }
    out << "logits:";
    for (double v : logits) out << " " << fmt(v);
    out << "\noracle:";
    for (double v : oracle_logits) out << " " << fmt(v);
    out << "\nresidual mean " << fmt(residual_mean) << " std " << fmt(residual_std) << " max "
        << fmt(residual_max) << "\n";
    out << "ledger: rot " << totals.rotations << " hoisted " << totals.hoisted_rotations
        << " ct_pt " << totals.ct_pt_mults << " ct_ct " << totals.ct_ct_mults << " add "
        << totals.adds << " boot " << totals.bootstraps << " depth " << totals.max_depth_consumed
        << "\n";
    return out.str();
}

BenchReport bench_network(const NetworkSpec& spec, const ImageTensor& input,
                          std::size_t repetitions) {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    BenchReport bench;
    bench.repetitions = repetitions;
    bench.deterministic = true;
    std::optional<RunReport> first;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        RunReport r = run_network(spec, input);
        if (!first) {
            first = r;
        } else {
            bool same = first->totals == r.totals && first->layers.size() == r.layers.size();
            for (std::size_t i = 0; same && i < r.layers.size(); ++i)
                same = first->layers[i].ops == r.layers[i].ops;
            bench.deterministic = bench.deterministic && same;
        }
    }
    for (const auto& l : first->layers) {
        auto& agg = bench.per_type[l.type];
        agg.rotations += l.ops.rotations;
        agg.hoisted_rotations += l.ops.hoisted_rotations;
        agg.hoist_groups += l.ops.hoist_groups;
        agg.ct_pt_mults += l.ops.ct_pt_mults;
        agg.ct_ct_mults += l.ops.ct_ct_mults;
        agg.adds += l.ops.adds;
        agg.bootstraps += l.ops.bootstraps;
    }
    bench.totals = first->totals;
    return bench;
}

std::string BenchReport::to_text() const {
    std::ostringstream out;
    out << "layer type    rotations  hoisted  ct_pt  ct_ct   adds  bootstraps\n";
    for (const auto& [type, ops] : per_type) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-12s %9llu %8llu %6llu %6llu %6llu %8llu\n",
                      type.c_str(), static_cast<unsigned long long>(ops.rotations),
                      static_cast<unsigned long long>(ops.hoisted_rotations),
                      static_cast<unsigned long long>(ops.ct_pt_mults),
                      static_cast<unsigned long long>(ops.ct_ct_mults),
                      static_cast<unsigned long long>(ops.adds),
                      static_cast<unsigned long long>(ops.bootstraps));
        out << line;
    }
    out << "total: rot " << totals.rotations << " hoisted " << totals.hoisted_rotations
        << " ct_pt " << totals.ct_pt_mults << " ct_ct " << totals.ct_ct_mults << " add "
        << totals.adds << " boot " << totals.bootstraps << "\n";
    out << "deterministic across " << repetitions << " runs: " << (deterministic ? "yes" : "no")
        << "\n";
    return out.str();
}

}  // namespace shardnn
