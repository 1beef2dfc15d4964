// intentgan: data preparation, label masking, training, evaluation, prediction
// and report export for the semi-supervised GAN intent classifier.
//
// Exit codes: 0 ok, 2 config, 3 data, 4 checkpoint, 5 numeric abort.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "intentgan/commands.hpp"
#include "intentgan/errors.hpp"
#include "intentgan/run_config.hpp"
#include "json.hpp"

namespace {

using intentgan::ConfigKey;

std::string flag_name(std::string_view key) {
    std::string out(key);
    for (auto& c : out) {
        if (c == '_') c = '-';
    }
    return "--" + out;
}

// Collects per-key override flags and turns them into a JSON object.
struct ConfigFlags {
    std::optional<std::string> config_file;
    std::map<std::string, std::string> values;

    void attach(CLI::App& app) {
        app.add_option("-c,--config", config_file, "JSON config file");
        for (const auto& key : intentgan::config_keys()) {
            app.add_option(flag_name(key.name), values[std::string(key.name)],
                           std::string(key.description) + " [" + std::string(key.type) + "]");
        }
        app.footer(intentgan::config_help());
    }

    std::string overrides_json(const CLI::App& app) const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& key : intentgan::config_keys()) {
            if (app.count(flag_name(key.name)) == 0) continue;
            const auto& raw = values.at(std::string(key.name));
            const bool textual = key.type.starts_with("path") || key.type == "string";
            if (raw == "null" && key.type.ends_with("|null")) {
                j[std::string(key.name)] = nullptr;
            } else if (textual) {
                j[std::string(key.name)] = raw;
            } else {
                auto parsed = nlohmann::json::parse(raw, nullptr, false);
                if (parsed.is_discarded()) {
                    throw intentgan::ConfigError("flag " + flag_name(key.name) + ": '" + raw + "' is not a value");
                }
                j[std::string(key.name)] = parsed;
            }
        }
        return j.dump();
    }

    intentgan::RunConfig resolve(const CLI::App& app) const {
        std::optional<std::filesystem::path> file;
        if (config_file) file = *config_file;
        return intentgan::resolve_config(file, overrides_json(app));
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised GAN intent classification toolkit"};
    app.require_subcommand(1);

    auto* prepare = app.add_subcommand("prepare-data", "CLINC150 JSON -> class subset -> cleaned canonical JSONL");
    std::string clinc_in, class_file, jsonl_out;
    std::size_t min_tokens = 2;
    prepare->add_option("--clinc", clinc_in, "CLINC150-layout JSON input")->required();
    prepare->add_option("--classes", class_file, "class-list file, one name per line")->required();
    prepare->add_option("--out", jsonl_out, "canonical JSONL output")->required();
    prepare->add_option("--min-tokens", min_tokens, "drop utterances with fewer whitespace tokens")
        ->capture_default_str();

    auto* mask = app.add_subcommand("mask-labels", "stratified labeled/unlabeled split of the train set");
    std::string mask_dataset, mask_out;
    std::optional<std::string> mask_classes;
    double fraction = 1.0;
    std::uint64_t mask_seed = 0;
    mask->add_option("--dataset", mask_dataset, "canonical JSONL dataset")->required();
    mask->add_option("--class-list", mask_classes, "class-list file fixing label order");
    mask->add_option("--fraction", fraction, "labeled fraction per class, in (0, 1]")->capture_default_str();
    mask->add_option("--seed", mask_seed, "shuffle seed")->capture_default_str();
    mask->add_option("--out", mask_out, "output JSON with labeled_ids/unlabeled_ids")->required();

    auto* train = app.add_subcommand("train", "train generator and discriminator; writes checkpoint and curves");
    ConfigFlags train_flags;
    train_flags.attach(*train);

    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint; writes metrics, confusion and misclassifications");
    ConfigFlags eval_flags;
    eval_flags.attach(*evaluate);
    std::optional<std::string> eval_checkpoint;
    evaluate->add_option("--checkpoint", eval_checkpoint, "GBNB checkpoint (default: <output_dir>/checkpoint.gbnb)");

    auto* predict = app.add_subcommand("predict", "classify newline-delimited texts; emits JSON lines");
    std::string predict_checkpoint;
    std::optional<std::string> predict_input;
    predict->add_option("--checkpoint", predict_checkpoint, "GBNB checkpoint")->required();
    predict->add_option("--input", predict_input, "text file (default: standard input)");

    auto* report = app.add_subcommand("export-report", "summarize an output directory into report.md");
    ConfigFlags report_flags;
    report_flags.attach(*report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*prepare) {
            const auto bundle = intentgan::commands::prepare_data(clinc_in, class_file, jsonl_out, min_tokens);
            std::cerr << "wrote " << bundle.utterances.size() << " utterances, K=" << bundle.num_classes()
                      << " (" << bundle.provenance << ")\n";
        } else if (*mask) {
            std::optional<std::filesystem::path> classes;
            if (mask_classes) classes = *mask_classes;
            const auto view = intentgan::commands::mask_labels(mask_dataset, classes, fraction, mask_seed, mask_out);
            std::cerr << "labeled " << view.labeled_ids.size() << ", unlabeled " << view.unlabeled_ids.size() << "\n";
        } else if (*train) {
            const auto config = train_flags.resolve(*train);
            const auto result = intentgan::commands::train(config);
            std::cerr << "trained " << result.logs.size() << " epochs -> " << config.output_dir.string() << "\n";
        } else if (*evaluate) {
            const auto config = eval_flags.resolve(*evaluate);
            const std::filesystem::path ckpt = eval_checkpoint ? std::filesystem::path(*eval_checkpoint)
                                                               : config.output_dir / intentgan::commands::kCheckpointFile;
            const auto r = intentgan::commands::evaluate(config, ckpt);
            std::cerr << "accuracy " << r.accuracy << ", macro F1 " << r.macro_f1 << ", MCC " << r.mcc << "\n";
        } else if (*predict) {
            if (predict_input) {
                std::ifstream in(*predict_input);
                if (!in) throw intentgan::DataError("cannot open '" + *predict_input + "'");
                intentgan::commands::predict(predict_checkpoint, in, std::cout);
            } else {
                intentgan::commands::predict(predict_checkpoint, std::cin, std::cout);
            }
        } else if (*report) {
            const auto config = report_flags.resolve(*report);
            intentgan::commands::export_report(config.output_dir);
        }
    } catch (const intentgan::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
