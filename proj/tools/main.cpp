#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "mmt/checkpoint.hpp"
#include "mmt/io.hpp"
#include "mmt/selftest.hpp"
#include "mmt/transfer.hpp"

namespace {

using namespace mmt;

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string checkpoint_path;
    std::string modality = "image";
    std::string input_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int precision = 0;  // 0 = keep config value
};

RunConfig effective_config(const CliOptions& opt) {
    RunConfig cfg = opt.config_path.empty() ? RunConfig{} : load_run_config(opt.config_path);
    if (opt.seed_set) cfg.seed = opt.seed;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.precision != 0) cfg.precision = static_cast<std::uint8_t>(opt.precision);
    cfg.validate();
    return cfg;
}

void check_encoder_match(const EncoderConfig& from_checkpoint, const EncoderConfig& from_config) {
    auto mismatch = [](const char* field, std::size_t a, std::size_t b) {
        throw ConfigError(std::string("checkpoint/config mismatch on encoder.") + field + ": " +
                          std::to_string(a) + " vs " + std::to_string(b));
    };
    if (from_checkpoint.depth != from_config.depth)
        mismatch("depth", from_checkpoint.depth, from_config.depth);
    if (from_checkpoint.heads != from_config.heads)
        mismatch("heads", from_checkpoint.heads, from_config.heads);
    if (from_checkpoint.dim != from_config.dim)
        mismatch("dim", from_checkpoint.dim, from_config.dim);
    if (from_checkpoint.mlp_dim != from_config.mlp_dim)
        mismatch("mlp_dim", from_checkpoint.mlp_dim, from_config.mlp_dim);
    if (from_checkpoint.n_max != from_config.n_max)
        mismatch("n_max", from_checkpoint.n_max, from_config.n_max);
}

int cmd_pretrain(const CliOptions& opt) {
    const RunConfig cfg = effective_config(opt);
    Pipeline pipe = build_pipeline(cfg);

    StageResult stage = pretrain_images(pipe);

    const std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    write_metrics_csv((out / "metrics_pretrain.csv").string(), stage.run.history);

    const Rng rng(cfg.seed);
    const std::string ckpt_path =
        opt.checkpoint_path.empty() ? (out / "checkpoint.mtfc").string() : opt.checkpoint_path;
    const CheckpointData data = snapshot_checkpoint(
        cfg.encoder, std::as_const(pipe).all_params(), &rng, nullptr, cfg.precision);
    save_checkpoint(ckpt_path, data);
    pipe.vocab.save((out / "vocab.txt").string());

    std::cout << "pretrain: train acc " << format_double(stage.train_accuracy) << ", held-out acc "
              << format_double(stage.heldout_accuracy) << ", floor "
              << format_double(stage.floor) << (stage.floor_met ? " met" : " MISSED") << "\n";
    std::cout << "backbone digest: " << pipe.backbone_digest() << "\n";
    std::cout << "checkpoint: " << ckpt_path << "\n";
    return 0;
}

int cmd_transfer(const CliOptions& opt) {
    if (opt.checkpoint_path.empty()) {
        throw ConfigError("transfer: --checkpoint is required");
    }
    const RunConfig cfg = effective_config(opt);
    const CheckpointData data = load_checkpoint(opt.checkpoint_path);
    check_encoder_match(data.encoder, cfg.encoder);

    Pipeline pipe = build_pipeline(cfg);
    restore_parameters(data, pipe.all_params());
    const std::string loaded_digest = pipe.backbone_digest();

    ExperimentReport report = run_transfer_stages(pipe);
    write_report_files(report, pipe, cfg.out_dir);

    std::cout << "loaded backbone digest: " << loaded_digest << "\n";
    for (const StageResult& s : report.stages) {
        std::cout << s.name << ": held-out acc " << format_double(s.heldout_accuracy)
                  << " (floor " << format_double(s.floor) << (s.floor_met ? " met" : " MISSED")
                  << ")\n";
    }
    std::cout << "freeze invariant: "
              << (report.digest_before == report.digest_after ? "held" : "VIOLATED") << "\n";
    std::cout << "report: " << cfg.out_dir << "/report.csv\n";
    return 0;  // missed floors are reported, not raised
}

int cmd_eval(const CliOptions& opt) {
    if (opt.checkpoint_path.empty()) throw ConfigError("eval: --checkpoint is required");
    const RunConfig cfg = effective_config(opt);
    const CheckpointData data = load_checkpoint(opt.checkpoint_path);
    check_encoder_match(data.encoder, cfg.encoder);

    Pipeline pipe = build_pipeline(cfg);
    restore_parameters(data, pipe.all_params());

    const Modality m = modality_from_string(opt.modality);
    Dataset* test = nullptr;
    switch (m) {
        case Modality::image: test = &pipe.image_test; break;
        case Modality::point_cloud: test = &pipe.point_test; break;
        case Modality::audio: test = &pipe.audio_test; break;
        case Modality::text: test = &pipe.text_test; break;
        case Modality::fused: test = &pipe.fused_test; break;
        default:
            throw ConfigError(std::string("eval: no synthetic task for modality '") +
                              to_string(m) + "'");
    }
    const EvalResult r = evaluate(pipe.task(m), *test);
    std::cout << to_string(m) << ": accuracy " << format_double(r.accuracy) << ", mean loss "
              << format_double(r.mean_loss) << " over " << test->items.size() << " samples\n";
    return 0;
}

int cmd_tokenize(const CliOptions& opt) {
    if (opt.input_path.empty()) throw ConfigError("tokenize: an input file is required");
    const RunConfig cfg = effective_config(opt);
    Pipeline pipe = build_pipeline(cfg);
    const Modality m = modality_from_string(opt.modality);

    TokenSequence seq;
    switch (m) {
        case Modality::text: {
            seq = pipe.text_tok->tokenize(read_text_file(opt.input_path));
            break;
        }
        case Modality::image:
        case Modality::infrared:
        case Modality::xray: {
            seq = pipe.image_tok->tokenize(load_tensor_blob(opt.input_path), m);
            break;
        }
        case Modality::point_cloud: {
            seq = pipe.point_tok->tokenize(load_xyz(opt.input_path));
            break;
        }
        case Modality::audio: {
            const AudioInput wave = load_wav(opt.input_path);
            seq = pipe.audio_tok->tokenize(compute_log_mel_spectrogram(wave, cfg.mel));
            break;
        }
        case Modality::video: {
            seq = pipe.video_tok->tokenize(load_tensor_blob(opt.input_path));
            break;
        }
        case Modality::hyperspectral: {
            seq = pipe.hyper_tok->tokenize(load_tensor_blob(opt.input_path));
            break;
        }
        case Modality::fused:
            throw ConfigError("tokenize: fused sequences come from two files; tokenize the "
                              "image and audio inputs separately");
    }

    std::ostringstream out;
    out << "modality,n,dim\n"
        << to_string(seq.modality) << ',' << seq.count() << ',' << seq.dim() << "\n";
    for (std::size_t i = 0; i < seq.count(); ++i) {
        for (std::size_t j = 0; j < seq.dim(); ++j) {
            if (j) out << ',';
            out << format_double(seq.embeddings(i, j));
        }
        out << '\n';
    }
    if (opt.out_dir.empty()) {
        std::cout << out.str();
    } else {
        std::filesystem::path path(opt.out_dir);
        if (std::filesystem::is_directory(path) || path.extension().empty()) {
            std::filesystem::create_directories(path);
            path /= "tokens.csv";
        }
        write_text_file_atomic(path.string(), out.str());
        std::cout << "tokens: " << path.string() << " (" << seq.count() << " x " << seq.dim()
                  << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale multimodal transformer: shared frozen encoder, per-modality "
                 "tokenizers, trainable task heads"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", opt.seed, "override the config seed");
    app.add_option("--out", opt.out_dir, "output directory (or file for tokenize)");
    app.add_option("--checkpoint", opt.checkpoint_path, "checkpoint path");
    app.add_option("--precision", opt.precision, "checkpoint storage precision")
        ->check(CLI::IsMember({32, 64}));
    app.add_option("--modality", opt.modality, "modality name");

    auto* pretrain = app.add_subcommand("pretrain", "stage-1 supervised pretraining on images");
    auto* transfer =
        app.add_subcommand("transfer", "frozen-backbone transfer across modalities");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a synthetic task");
    auto* tokenize = app.add_subcommand("tokenize", "debug-dump a token sequence for a file");
    tokenize->add_option("input", opt.input_path, "input file (txt/xyz/wav/MTTB blob)");
    auto* selftest = app.add_subcommand("selftest", "run built-in verification suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage errors
    }
    opt.seed_set = seed_opt->count() > 0;

    try {
        if (pretrain->parsed()) return cmd_pretrain(opt);
        if (transfer->parsed()) return cmd_transfer(opt);
        if (eval->parsed()) return cmd_eval(opt);
        if (tokenize->parsed()) return cmd_tokenize(opt);
        if (selftest->parsed()) return run_selftest(std::cout);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
