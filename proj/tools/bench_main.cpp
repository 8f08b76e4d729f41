#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nitro/nitro.hpp"

namespace {

nitro::SortedColumn load_data(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        return nitro::import_csv_file(path);
    return nitro::read_column_file(path);
}

std::size_t env_icache_budget() {
    const char* env = std::getenv("NITRO_ICACHE_BUDGET");
    if (env == nullptr || *env == '\0')
        return 32768;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
        return 32768;
    return static_cast<std::size_t>(v);
}

void write_rows(const std::string& out_path, const std::vector<nitro::BenchRow>& rows) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path);
        if (!file)
            throw std::runtime_error("cannot open output file: " + out_path);
        out = &file;
    }
    *out << nitro::bench_csv_header() << "\n";
    for (const nitro::BenchRow& row : rows)
        *out << nitro::to_csv(row) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"main-memory index search benchmark"};
    app.require_subcommand(1);
    const std::size_t default_budget = env_icache_budget();

    // run
    auto* run = app.add_subcommand("run", "build one index and time a workload against it");
    nitro::BenchSpec spec;
    std::string structure_name = "binary";
    std::string workload_name = "uniform";
    std::string data_path, out_path;
    long long levels_flag = -1;
    spec.icache_budget = default_budget;
    run->add_option("--structure", structure_name,
                    "binary|bplus|css|csb|kary|fast|ng_binary|ng_css")
        ->required();
    run->add_option("--n", spec.n, "synthetic dataset size (keys)");
    run->add_option("--f,--fanout", spec.fanout, "tree fanout (keys per node + 1)");
    run->add_option("--lc,--leaf-keys", spec.leaf_keys, "keys per leaf block");
    run->add_option("--k", spec.k, "keys per node of the k-ary search");
    run->add_option("--ds", spec.ds, "binary levels per SIMD node");
    run->add_option("--dc", spec.dc, "SIMD levels per cache-line node");
    run->add_option("--dp", spec.dp, "cache-line levels per page node");
    run->add_option("--L,--levels", levels_flag, "compiled levels, -1 = fit to budget");
    run->add_option("--cutoff", spec.cutoff, "binary search linear scan cutoff");
    run->add_option("--workload", workload_name, "uniform|zipf");
    run->add_option("--s,--zipf-s", spec.workload.zipf_s, "zipf exponent");
    run->add_option("--hit-fraction", spec.workload.hit_fraction, "fraction of present keys");
    run->add_option("--seed", spec.workload.seed, "workload seed");
    run->add_option("--queries", spec.workload.query_count, "queries per repetition");
    run->add_option("--reps", spec.repetitions, "timed repetitions");
    run->add_option("--warmup", spec.warmup_rounds, "discarded warmup rounds");
    run->add_option("--threads", spec.threads, "independent query threads");
    run->add_option("--trace-sample", spec.trace_sample, "queries re-run under the tracer");
    run->add_option("--icache-budget", spec.icache_budget,
                    "instruction budget for compiled levels (bytes)");
    run->add_option("--data", data_path, "dataset file (.csv or NTRC), replaces --n");
    run->add_option("--out", out_path, "output CSV path, default stdout");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a preset experiment grid");
    std::string preset;
    std::string exp_out;
    std::size_t exp_queries = 100000;
    std::uint64_t exp_seed = 42;
    std::size_t exp_budget = default_budget;
    bool with_ng = false;
    std::uint64_t fig53_n = std::uint64_t{1} << 24;
    std::vector<std::size_t> fig51_sizes = {1, 2, 4, 8, 16, 32};
    exp->add_option("preset", preset, "fig5.1|fig5.2|fig5.3")->required();
    exp->add_option("--out", exp_out, "output CSV path, default stdout");
    exp->add_option("--queries", exp_queries, "queries per cell");
    exp->add_option("--seed", exp_seed, "workload seed");
    exp->add_option("--icache-budget", exp_budget, "instruction budget (bytes)");
    exp->add_flag("--with-ng", with_ng, "fig5.2: add compiled-tree rows");
    exp->add_option("--n", fig53_n, "fig5.3: dataset size (keys)");
    exp->add_option("--sizes", fig51_sizes, "fig5.1: data sizes in MB");

    // verify
    auto* ver = app.add_subcommand("verify", "check every structure against a linear scan");
    bool verify_all_flag = true;
    std::uint64_t verify_seed = 42;
    ver->add_flag("--all", verify_all_flag, "verify all structures (default)");
    ver->add_option("--seed", verify_seed, "randomization seed");

    // emit
    auto* emit = app.add_subcommand("emit", "compile an index into assembler text");
    std::string emit_structure = "ng_css";
    std::string emit_data, emit_out, emit_report, emit_symbol = "nitro_search";
    std::uint64_t emit_n = 4096;
    std::size_t emit_f = 16, emit_lc = 64;
    long long emit_levels = -1;
    std::size_t emit_budget = default_budget;
    emit->add_option("--structure", emit_structure, "ng_binary|ng_css");
    emit->add_option("--n", emit_n, "synthetic dataset size (keys)");
    emit->add_option("--data", emit_data, "dataset file (.csv or NTRC), replaces --n");
    emit->add_option("--f,--fanout", emit_f, "tree fanout");
    emit->add_option("--lc,--leaf-keys", emit_lc, "keys per leaf block");
    emit->add_option("--L,--levels", emit_levels, "compiled levels, -1 = fit to budget");
    emit->add_option("--icache-budget", emit_budget, "instruction budget (bytes)");
    emit->add_option("--symbol", emit_symbol, "exported function name");
    emit->add_option("--out", emit_out, "assembler output path, default stdout");
    emit->add_option("--report", emit_report, "size report CSV path, default stderr");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            spec.structure = nitro::structure_from_name(structure_name);
            spec.workload.distribution =
                workload_name == "zipf" ? nitro::Distribution::zipf : nitro::Distribution::uniform;
            if (workload_name != "zipf" && workload_name != "uniform")
                throw std::invalid_argument("unknown workload: " + workload_name);
            if (levels_flag >= 0)
                spec.levels = static_cast<std::size_t>(levels_flag);
            nitro::BenchRow row;
            if (!data_path.empty()) {
                const nitro::SortedColumn col = load_data(data_path);
                spec.n = col.size();
                row = nitro::run_bench(spec, col);
            } else {
                row = nitro::run_bench(spec);
            }
            write_rows(out_path, {row});
            std::cerr << "checksum=" << row.checksum << "\n";
        } else if (exp->parsed()) {
            std::vector<nitro::BenchRow> rows;
            if (preset == "fig5.1") {
                rows = nitro::experiment_fig5_1(fig51_sizes, exp_queries, exp_seed, exp_budget);
                write_rows(exp_out, rows);
            } else if (preset == "fig5.2") {
                rows = nitro::experiment_fig5_2(with_ng, exp_queries, exp_seed, exp_budget);
                write_rows(exp_out, rows);
            } else if (preset == "fig5.3") {
                const nitro::SortedColumn col = nitro::make_synthetic_column(fig53_n);
                nitro::Workload w;
                w.query_count = exp_queries;
                w.seed = exp_seed;
                const auto report = nitro::fast_feature_report(col, w);
                std::ostream* out = &std::cout;
                std::ofstream file;
                if (!exp_out.empty() && exp_out != "-") {
                    file.open(exp_out);
                    if (!file)
                        throw std::runtime_error("cannot open output file: " + exp_out);
                    out = &file;
                }
                *out << nitro::fast_feature_csv_header() << "\n";
                for (const auto& r : report)
                    *out << nitro::to_csv(r) << "\n";
            } else {
                throw std::invalid_argument("unknown preset: " + preset);
            }
        } else if (ver->parsed()) {
            const nitro::VerifyReport rep = nitro::verify_all(verify_seed);
            std::cout << (rep.pass ? "PASS" : "FAIL") << " " << rep.checks << " checks\n";
            for (const std::string& f : rep.failures)
                std::cout << "mismatch: " << f << "\n";
            return rep.pass ? 0 : 1;
        } else if (emit->parsed()) {
            nitro::SortedColumn col;
            if (!emit_data.empty())
                col = load_data(emit_data);
            else
                col = nitro::make_synthetic_column(emit_n);
            nitro::Program prog;
            if (emit_structure == "ng_binary") {
                std::size_t levels;
                if (emit_levels >= 0) {
                    levels = static_cast<std::size_t>(emit_levels);
                } else {
                    std::size_t max_levels = 1;
                    while ((std::uint64_t{1} << max_levels) < col.size() + 1 && max_levels < 40)
                        ++max_levels;
                    levels = nitro::choose_levels(
                        [&](std::size_t l) { return nitro::compile_binary(col, l); },
                        max_levels + 1, emit_budget);
                }
                prog = nitro::compile_binary(col, levels);
            } else if (emit_structure == "ng_css") {
                const nitro::CssTree tree = nitro::build_css(col, emit_f, emit_lc);
                std::size_t levels;
                if (emit_levels >= 0)
                    levels = std::min<std::size_t>(static_cast<std::size_t>(emit_levels),
                                                   tree.depth + 1);
                else
                    levels = nitro::choose_levels(
                        [&](std::size_t l) { return nitro::compile_css(tree, col, l); },
                        tree.depth + 1, emit_budget);
                prog = nitro::compile_css(tree, col, levels);
            } else {
                throw std::invalid_argument("emit expects ng_binary or ng_css");
            }
            nitro::EmitOptions opt;
            opt.symbol = emit_symbol;
            const nitro::EmitResult res = nitro::emit_native(prog, opt);
            if (emit_out.empty() || emit_out == "-") {
                std::cout << res.text;
            } else {
                std::ofstream file(emit_out);
                if (!file)
                    throw std::runtime_error("cannot open output file: " + emit_out);
                file << res.text;
            }
            const std::string report = nitro::size_report_csv(res);
            if (emit_report.empty()) {
                std::cerr << report;
            } else {
                std::ofstream file(emit_report);
                if (!file)
                    throw std::runtime_error("cannot open output file: " + emit_report);
                file << report;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
