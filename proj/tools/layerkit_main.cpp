// layerkit: verification suites, architecture counting, matrix dumps and
// micro-benchmarks for the windowed-aggregation layer family.
//
// Exit codes: 0 success, 1 one or more checks failed, 2 usage/config error.

#include <fstream>
#include <map>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "layerkit/arch.hpp"
#include "layerkit/bench.hpp"
#include "layerkit/suites.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

// flat key=value config files; '#' starts a comment, blank lines ignored
std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw layerkit::ConfigError("cannot read config file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(f, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (!key.empty()) out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

void assign_config(const std::string& value, std::string& target) { target = value; }

void assign_config(const std::string& value, std::vector<std::string>& target) {
    target.clear();
    std::istringstream is(value);
    std::string item;
    while (std::getline(is, item, ','))
        if (!item.empty()) target.push_back(item);
}

template <typename T>
void assign_config(const std::string& value, T& target) {
    std::istringstream is(value);
    T parsed{};
    if (!(is >> parsed)) throw layerkit::ConfigError("bad config value: " + value);
    target = parsed;
}

void write_or_print(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw layerkit::ConfigError("cannot open output file " + out_path);
    f << text << '\n';
}

int cmd_verify(const std::vector<std::string>& suites, const std::string& layer,
               std::uint64_t seed, const std::string& out_path) {
    const auto& registry = layerkit::suite_registry();
    std::vector<std::string> selected;
    if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) {
        for (const auto& [name, fn] : registry) selected.push_back(name);
    } else {
        for (const std::string& s : suites) {
            if (!registry.count(s)) {
                std::cerr << "unknown suite: " << s << "\n";
                return kExitUsage;
            }
            selected.push_back(s);
        }
    }
    nlohmann::json doc;
    doc["seed"] = seed;
    doc["suites"] = nlohmann::json::array();
    std::size_t failed = 0, total = 0;
    for (const std::string& name : selected) {
        std::vector<layerkit::CheckReport> reports =
            name == "grad" && !layer.empty() ? layerkit::suite_grad(seed, layer)
                                             : registry.at(name)(seed);
        for (const auto& r : reports)
            if (!r.pass) ++failed;
        total += reports.size();
        doc["suites"].push_back(layerkit::reports_json(name, seed, reports));
    }
    doc["total"] = total;
    doc["failed"] = failed;
    write_or_print(out_path, doc.dump(2));
    return failed == 0 ? kExitOk : kExitCheckFailure;
}

int cmd_count(const std::string& arch, const std::vector<std::string>& compare,
              std::size_t input, const std::string& out_path) {
    using layerkit::build_arch;
    using layerkit::count_arch;
    if (!compare.empty()) {
        const layerkit::CountReport a = count_arch(build_arch(compare[0]), input);
        const layerkit::CountReport b = count_arch(build_arch(compare[1]), input);
        const double dp = 100.0 * (double(a.params_total) - double(b.params_total)) /
                          double(a.params_total);
        const double df = 100.0 * (double(a.flops_total) - double(b.flops_total)) /
                          double(a.flops_total);
        nlohmann::json doc = {{"input_size", input},
                              {"first", layerkit::count_report_json(a)},
                              {"second", layerkit::count_report_json(b)},
                              {"param_reduction_percent", dp},
                              {"flop_reduction_percent", df}};
        write_or_print(out_path, doc.dump(2));
        std::cout << std::fixed << std::setprecision(1) << compare[0] << " "
                  << a.params_total / 1e6 << "M/" << a.flops_total / 1e9 << "G vs " << compare[1]
                  << " " << b.params_total / 1e6 << "M/" << b.flops_total / 1e9
                  << "G: params -" << dp << "%, flops -" << df << "%\n";
        return kExitOk;
    }
    const layerkit::CountReport r = count_arch(build_arch(arch), input);
    write_or_print(out_path, layerkit::count_report_json(r).dump(2));
    return kExitOk;
}

int cmd_bench(std::size_t reps, std::size_t warmup, std::uint64_t seed,
              const std::string& precision, const std::string& out_path) {
    if (precision != "f32" && precision != "fp32")
        throw layerkit::ConfigError("bench supports fp32 only");
    layerkit::BenchShape shape;
    std::vector<layerkit::BenchReport> reports;
    for (const char* kind : {"depthwise_conv", "local_attention"})
        reports.push_back(layerkit::run_bench(kind, shape, reps, warmup, seed));
    std::string csv = layerkit::bench_csv_header();
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : reports) {
        csv += "\n" + layerkit::bench_csv_row(r);
        doc.push_back(layerkit::bench_report_json(r));
    }
    if (!out_path.empty() && out_path.size() > 4 &&
        out_path.substr(out_path.size() - 4) == ".csv")
        write_or_print(out_path, csv);
    else
        write_or_print(out_path, doc.dump(2));
    if (out_path.empty()) std::cout << csv << '\n';
    return kExitOk;
}

int cmd_matrix_dump(const std::string& kind, int kernel, std::size_t n, std::uint64_t seed,
                    const std::string& out_path) {
    using namespace layerkit;
    const std::size_t kSizeCap = 4096;
    DenseOperator op;
    Rng rng(seed);
    if (kind == "circulant") {
        if (n > kSizeCap) throw ConfigError("matrix-dump: size cap exceeded");
        std::vector<double> k((std::size_t)kernel);
        for (double& v : k) v = rng.uniform(1.0);
        op = circulant_from_kernel(k, n);
    } else if (kind == "depthwise" || kind == "pointwise" || kind == "token_mixing" ||
               kind == "local_attention" || kind == "static_local_attention") {
        const std::size_t C = 4;
        if (n * n * C > kSizeCap) throw ConfigError("matrix-dump: size cap exceeded (N*C)");
        LayerSpec spec;
        spec.channels = (int)C;
        spec.geometry.window_h = kernel;
        spec.geometry.window_w = kernel;
        if (kind == "depthwise") {
            spec.kind = LayerKind::depthwise_conv;
            spec.geometry.mode = WindowMode::dense_sliding;
            spec.geometry.padding = Padding::circular;
        } else if (kind == "local_attention" || kind == "static_local_attention") {
            spec.kind = kind == "local_attention" ? LayerKind::local_attention
                                                  : LayerKind::static_local_attention;
            spec.heads_or_groups = 2;
            spec.geometry.mode = WindowMode::non_overlapping_partition;
        } else {
            spec.kind =
                kind == "pointwise" ? LayerKind::pointwise_conv : LayerKind::token_mixing_mlp;
        }
        const LayerParams params = make_random_params(spec, n, n, rng);
        const Tensor input = tensor_random({1, n, n, C}, rng, 1.0);
        op = dense_operator_for(spec, params, input);
    } else {
        std::cerr << "unknown matrix kind: " << kind << "\n";
        return kExitUsage;
    }

    std::ostringstream os;
    os << "# kind: " << op.provenance << "\n";
    os << "# layout: "
       << (op.layout == OperatorLayout::channel_major ? "channel_major" : "position_major")
       << "\n";
    os << "# rows: " << op.rows << " cols: " << op.cols << "\n";
    const std::size_t nnz = op.nonzeros();
    os << "# nonzeros: " << nnz << " sparsity: " << std::setprecision(6)
       << 1.0 - double(nnz) / double(op.rows * op.cols) << "\n";
    os << std::setprecision(4);
    for (std::size_t r = 0; r < op.rows; ++r) {
        for (std::size_t c = 0; c < op.cols; ++c)
            os << (c ? " " : "") << std::setw(8) << op.at(r, c);
        os << "\n";
    }
    std::string text = os.str();
    text.pop_back();
    write_or_print(out_path, text);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layer-algebra verification toolkit"};
    app.require_subcommand(1);

    std::vector<std::string> suites;
    std::string layer, arch, out_path, precision = "f32", kind = "circulant";
    std::vector<std::string> compare;
    std::uint64_t seed = 42;
    std::size_t input = 224, reps = 50, warmup = 10, n = 4;
    int kernel = 3;

    std::string config_path;
    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    verify->add_option("--config", config_path, "flat key=value config file; flags override it");
    verify->add_option("--suite", suites, "suite names or 'all'");
    verify->add_option("--layer", layer, "restrict grad suite to one layer kind");
    verify->add_option("--seed", seed, "rng seed");
    verify->add_option("--out", out_path, "write the JSON report here");

    CLI::App* count = app.add_subcommand("count", "parameter and FLOP counts");
    count->add_option("--config", config_path, "flat key=value config file; flags override it");
    count->add_option("--arch", arch, "architecture name");
    count->add_option("--compare", compare, "two architecture names")->expected(2);
    count->add_option("--input", input, "input resolution");
    count->add_option("--out", out_path, "write the JSON report here");

    CLI::App* bench = app.add_subcommand("bench", "micro-benchmark forward passes");
    bench->add_option("--config", config_path, "flat key=value config file; flags override it");
    bench->add_option("--reps", reps, "timed repetitions (>= 30)");
    bench->add_option("--warmup", warmup, "warmup repetitions");
    bench->add_option("--seed", seed, "rng seed");
    bench->add_option("--precision", precision, "f32 only");
    bench->add_option("--out", out_path, "write CSV (.csv) or JSON report here");

    CLI::App* dump = app.add_subcommand("matrix-dump", "write a dense operator as text");
    dump->add_option("--config", config_path, "flat key=value config file; flags override it");
    dump->add_option("--kind", kind,
                     "circulant | depthwise | pointwise | token_mixing | local_attention | "
                     "static_local_attention");
    dump->add_option("--kernel", kernel, "kernel / window extent");
    dump->add_option("--n", n, "positions (circulant) or map side (2-d kinds)");
    dump->add_option("--seed", seed, "rng seed");
    dump->add_option("--out", out_path, "write the grid here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        if (!config_path.empty()) {
            const auto file = load_config(config_path);
            const auto apply = [&](const char* key, auto& target) {
                const auto it = file.find(key);
                if (it == file.end()) return;
                if (active->count(std::string("--") + key) > 0) return;  // flag wins
                assign_config(it->second, target);
            };
            apply("suite", suites);
            apply("layer", layer);
            apply("seed", seed);
            apply("out", out_path);
            apply("arch", arch);
            apply("compare", compare);
            apply("input", input);
            apply("reps", reps);
            apply("warmup", warmup);
            apply("precision", precision);
            apply("kind", kind);
            apply("kernel", kernel);
            apply("n", n);
        }
        if (verify->parsed()) return cmd_verify(suites, layer, seed, out_path);
        if (count->parsed()) {
            if (compare.empty() && arch.empty()) {
                std::cerr << "count: --arch or --compare required\n";
                return kExitUsage;
            }
            return cmd_count(arch, compare, input, out_path);
        }
        if (bench->parsed()) return cmd_bench(reps, warmup, seed, precision, out_path);
        if (dump->parsed()) return cmd_matrix_dump(kind, kernel, n, seed, out_path);
    } catch (const layerkit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const layerkit::GeometryError& e) {
        std::cerr << "geometry error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
