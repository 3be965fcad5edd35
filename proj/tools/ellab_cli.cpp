// Command-line front end: train runs from a config file, aggregate recorded
// runs into a bootstrap report, micro-benchmark the tracker, and re-verify
// logged bonuses offline.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ellab/bench.hpp"
#include "ellab/records.hpp"
#include "ellab/stats.hpp"
#include "ellab/trainer.hpp"

namespace fs = std::filesystem;
using namespace ellab;

namespace {

int cmd_train(const std::string& config_path, long seed_override, const std::string& out_dir) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file '" + config_path + "'");
    const ConfigMap map = parse_config_file(in);

    long num_seeds = 1;
    if (const auto it = map.find("seeds"); it != map.end()) num_seeds = std::stol(it->second);
    TrainConfig base = train_config_from(map);
    if (seed_override >= 0) {
        base.seed = static_cast<std::uint64_t>(seed_override);
        num_seeds = 1;
    }

    fs::create_directories(out_dir);
    // hash of the fully resolved config, matching the record header
    const std::string prefix = config_fingerprint(to_config_map(base)).substr(0, 8);
    int failures = 0;
    for (long k = 0; k < num_seeds; ++k) {
        TrainConfig cfg = base;
        cfg.seed = base.seed + static_cast<std::uint64_t>(k);
        Trainer trainer(cfg);
        const RunRecord rec = trainer.train();

        const fs::path rec_path =
            fs::path(out_dir) / ("run_" + prefix + "_seed" + std::to_string(cfg.seed) + ".jsonl");
        std::ofstream out(rec_path);
        write_run_record(out, rec);
        std::cout << "seed " << cfg.seed << ": " << rec.status << ", final score "
                  << final_score(rec) << " -> " << rec_path.string() << "\n";
        if (rec.status != "completed") {
            std::cerr << "  error: " << rec.error << "\n";
            ++failures;
        }
        if (cfg.trace) {
            const fs::path trace_path =
                fs::path(out_dir) /
                ("trace_" + prefix + "_seed" + std::to_string(cfg.seed) + ".jsonl");
            std::ofstream tout(trace_path);
            write_bonus_trace(tout, trainer.trace_header(), trainer.trace_buffer());
            std::cout << "  trace -> " << trace_path.string() << "\n";
        }
        if (trainer.bonus_engine().has_encoder() &&
            trainer.bonus_engine().encoder().kind() != EncoderKind::OneHot) {
            const fs::path ckpt_path =
                fs::path(out_dir) /
                ("encoder_" + prefix + "_seed" + std::to_string(cfg.seed) + ".ckpt");
            std::ofstream cout_(ckpt_path, std::ios::binary);
            save_mlp(cout_, trainer.bonus_engine().encoder().phi(), cfg.seed);
        }
    }
    return failures == 0 ? 0 : 2;
}

int cmd_eval(const std::string& records_dir, const std::string& report_path) {
    std::vector<RunRecord> records;
    for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
        if (entry.path().filename().string().rfind("run_", 0) != 0) continue;
        std::ifstream in(entry.path());
        records.push_back(read_run_record(in));
    }
    if (records.empty())
        throw std::invalid_argument("no run_*.jsonl records found in '" + records_dir + "'");
    const AggregateReport report = aggregate(records);
    std::ofstream out(report_path);
    if (!out) throw std::invalid_argument("cannot write report to '" + report_path + "'");
    write_report(out, report);
    print_report(std::cout, report);
    std::cout << "report -> " << report_path << "\n";
    return 0;
}

int cmd_replay(const std::string& record_path) {
    std::ifstream in(record_path);
    if (!in) throw std::invalid_argument("cannot open trace '" + record_path + "'");
    const ReplayResult result = replay_bonus_trace(in);
    std::cout << "replayed " << result.steps << " steps, max |logged - recomputed| = "
              << result.max_abs_diff << "\n";
    if (result.max_abs_diff > 1e-9) {
        std::cerr << "replay mismatch beyond 1e-9\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"elliptical-bonus exploration lab"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "runs";
    long seed_override = -1;
    CLI::App* train = app.add_subcommand("train", "run training from a config file");
    train->add_option("--config", config_path, "key = value config file")->required();
    train->add_option("--seed", seed_override, "override the config seed and run once");
    train->add_option("--out", out_dir, "output directory for run records");

    std::string records_dir, report_path = "report.json";
    CLI::App* eval = app.add_subcommand("eval", "aggregate run records into a report");
    eval->add_option("--records", records_dir, "directory of run_*.jsonl files")->required();
    eval->add_option("--report", report_path, "report output path");

    CLI::App* bench = app.add_subcommand("bench", "micro-benchmarks");
    int dim = 512, steps = 200, repeats = 3;
    CLI::App* bench_ellipse_cmd = bench->add_subcommand("ellipse", "rank-1 vs naive inversion");
    bench_ellipse_cmd->add_option("--dim", dim, "feature dimension");
    bench_ellipse_cmd->add_option("--steps", steps, "updates per repeat");
    bench_ellipse_cmd->add_option("--repeats", repeats, "repeats (median reported)");
    bench->require_subcommand(1);

    std::string trace_path;
    CLI::App* replay = app.add_subcommand("replay", "re-verify logged bonuses offline");
    replay->add_option("--record", trace_path, "trace_*.jsonl file")->required();

    try {
        app.parse(argc, argv);
        if (*train) return cmd_train(config_path, seed_override, out_dir);
        if (*eval) return cmd_eval(records_dir, report_path);
        if (*bench) {
            const EllipseBenchReport report = bench_ellipse(dim, steps, repeats);
            print_bench(std::cout, report);
            return 0;
        }
        if (*replay) return cmd_replay(trace_path);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
}
