#include "mmt/transfer.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

#include "mmt/io.hpp"

namespace mmt {

namespace {

// Fixed stream ids; changing these reshuffles every dataset.
enum Stream : std::uint64_t {
    kImagesData = 1,
    kPointsData = 2,
    kAudioData = 3,
    kTextData = 4,
    kFusedData = 5,
    kParams = 10,
    kPretrainBatches = 20,
    kPointBatches = 21,
    kAudioBatches = 22,
    kTextBatches = 23,
    kFusionBatches = 24,
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// First train_per_class items of each class train, the rest test.
void split_dataset(const Dataset& full, std::size_t per_class, std::size_t test_per_class,
                   Dataset& train, Dataset& test) {
    if (test_per_class >= per_class) {
        throw ConfigError("config: test_per_class must be smaller than per_class");
    }
    const std::size_t train_per_class = per_class - test_per_class;
    train.classes = test.classes = full.classes;
    train.items.clear();
    test.items.clear();
    std::vector<std::size_t> seen(full.classes, 0);
    for (const LabeledSample& item : full.items) {
        auto& n = seen[static_cast<std::size_t>(item.label)];
        (n < train_per_class ? train : test).items.push_back(item);
        ++n;
    }
}

Dataset make_fused_dataset(const RunConfig& cfg, std::uint64_t seed) {
    const std::size_t classes = std::min(cfg.images.classes, cfg.audio.classes);
    ImageTaskSpec img = cfg.images;
    img.classes = classes;
    AudioTaskSpec aud = cfg.audio;
    aud.classes = classes;
    const Dataset images = gen_images(img, Rng(seed).fork(1).seed());
    const Dataset sounds = gen_audio(aud, Rng(seed).fork(2).seed(), cfg.mel);
    if (images.items.size() != sounds.items.size()) {
        throw InvariantError("fused dataset: image and audio sample counts differ");
    }
    Dataset fused;
    fused.classes = classes;
    for (std::size_t i = 0; i < images.items.size(); ++i) {
        const auto& img_s = std::get<ImageSample>(images.items[i].input);
        const auto& aud_s = std::get<AudioSample>(sounds.items[i].input);
        if (images.items[i].label != sounds.items[i].label) {
            throw InvariantError("fused dataset: label streams out of step");
        }
        fused.items.push_back(
            {FusedSample{img_s.pixels, aud_s.spectrogram}, images.items[i].label});
    }
    return fused;
}

StageResult make_stage(Pipeline& pipe, const std::string& name, Modality modality,
                       TaskModel model, Dataset& train, Dataset& test, double baseline,
                       double floor, std::size_t steps, std::uint64_t batch_stream) {
    StageResult stage;
    stage.name = name;
    stage.modality = modality;
    stage.baseline_accuracy = baseline;
    stage.floor = floor;

    std::vector<std::string> prefixes;
    switch (modality) {
        case Modality::image: prefixes = {"encoder.", "tok.image.", "head.image."}; break;
        case Modality::point_cloud: prefixes = {"tok.point.", "head.point_cloud."}; break;
        case Modality::audio: prefixes = {"tok.audio.", "head.audio."}; break;
        case Modality::text: prefixes = {"tok.text.", "head.text."}; break;
        case Modality::fused:
            prefixes = {"tok.image.", "tok.audio.", "tok.fused.", "head.fused."};
            break;
        default: throw ConfigError("stage: unsupported modality");
    }
    AdamOptimizer optimizer(pipe.params_with_prefixes(prefixes), {.lr = pipe.cfg.lr});

    const double t0 = now_seconds();
    TrainOptions opt;
    opt.steps = steps;
    opt.batch_size = pipe.cfg.batch;
    opt.seed = Rng(pipe.cfg.seed).fork(batch_stream).seed();
    stage.run = run_training(model, train, optimizer, opt);
    stage.seconds = now_seconds() - t0;

    stage.train_accuracy = evaluate(model, train).accuracy;
    stage.heldout_accuracy = evaluate(model, test).accuracy;
    stage.trainable_params = stage.run.trainable_params;
    stage.backbone_digest_after = pipe.backbone_digest();
    return stage;
}

}  // namespace

std::string Pipeline::backbone_digest() const {
    return digest_params_prefix(params.all(), "encoder.");
}

std::vector<const Parameter*> Pipeline::all_params() const { return params.all(); }
std::vector<Parameter*> Pipeline::all_params() { return params.all(); }

std::vector<Parameter*> Pipeline::params_with_prefixes(const std::vector<std::string>& prefixes) {
    std::vector<Parameter*> out;
    for (Parameter* p : params.all()) {
        for (const std::string& prefix : prefixes) {
            if (p->name.starts_with(prefix)) {
                out.push_back(p);
                break;
            }
        }
    }
    return out;
}

TaskModel Pipeline::task(Modality m) {
    TaskModel model;
    model.encoder = encoder.get();
    switch (m) {
        case Modality::image:
            model.adapter = image_adapter.get();
            model.head = image_head.get();
            break;
        case Modality::point_cloud:
            model.adapter = point_adapter.get();
            model.head = point_head.get();
            break;
        case Modality::audio:
            model.adapter = audio_adapter.get();
            model.head = audio_head.get();
            break;
        case Modality::text:
            model.adapter = text_adapter.get();
            model.head = text_head.get();
            break;
        case Modality::fused:
            model.adapter = fused_adapter.get();
            model.head = fused_head.get();
            model.pooled = true;  // global average pooling over fused tokens
            break;
        default:
            throw ConfigError(std::string("task: no trained head for modality '") + to_string(m) +
                              "'");
    }
    return model;
}

Pipeline build_pipeline(const RunConfig& cfg) {
    cfg.validate();
    Pipeline pipe;
    pipe.cfg = cfg;
    const Rng root(cfg.seed);

    // datasets first; the text corpus defines the vocabulary
    {
        ImageTaskSpec spec = cfg.images;
        spec.per_class += cfg.test_per_class;
        const Dataset full = gen_images(spec, root.fork(kImagesData).seed());
        split_dataset(full, spec.per_class, cfg.test_per_class, pipe.image_train,
                      pipe.image_test);
    }
    {
        PointCloudTaskSpec spec = cfg.point_clouds;
        spec.per_class += cfg.test_per_class;
        const Dataset full = gen_point_clouds(spec, root.fork(kPointsData).seed());
        split_dataset(full, spec.per_class, cfg.test_per_class, pipe.point_train,
                      pipe.point_test);
    }
    {
        AudioTaskSpec spec = cfg.audio;
        spec.per_class += cfg.test_per_class;
        const Dataset full = gen_audio(spec, root.fork(kAudioData).seed(), cfg.mel);
        split_dataset(full, spec.per_class, cfg.test_per_class, pipe.audio_train,
                      pipe.audio_test);
    }
    {
        TextTaskSpec spec = cfg.text;
        spec.per_class += cfg.test_per_class;
        TextTaskData text = gen_text(spec, root.fork(kTextData).seed());
        split_dataset(text.dataset, spec.per_class, cfg.test_per_class, pipe.text_train,
                      pipe.text_test);
        pipe.text_lexicons = std::move(text.lexicons);
        pipe.vocab = cfg.vocab_file.empty() ? std::move(text.vocab)
                                            : Vocabulary::from_file(cfg.vocab_file);
    }
    if (cfg.run_fusion) {
        const Dataset full = make_fused_dataset(cfg, root.fork(kFusedData).seed());
        const std::size_t per_class = cfg.images.per_class;  // images drive fused counts
        if (cfg.test_per_class >= per_class) {
            throw ConfigError("config: test_per_class must be below images.per_class for fusion");
        }
        split_dataset(full, per_class, cfg.test_per_class, pipe.fused_train, pipe.fused_test);
    }

    // parameters in one fixed order; same config + seed => same bytes
    Rng prng = root.fork(kParams);
    const std::size_t dim = cfg.encoder.dim;
    pipe.encoder = std::make_unique<Encoder>(cfg.encoder, pipe.params, prng);
    pipe.image_tok = std::make_unique<ImageTokenizer>(cfg.images.channels, cfg.image_patch, dim,
                                                      cfg.image_n_max, pipe.params, prng);
    pipe.point_tok = std::make_unique<PointCloudTokenizer>(0, dim, cfg.point_k, cfg.point_n_max,
                                                           pipe.params, prng);
    const std::size_t freq_stride = cfg.audio_freq_stride
                                        ? cfg.audio_freq_stride
                                        : AudioTokenizer::default_freq_stride(cfg.mel.mel_bins);
    pipe.audio_tok = std::make_unique<AudioTokenizer>(cfg.audio_patch, cfg.audio_time_stride,
                                                      freq_stride, dim, cfg.audio_n_max,
                                                      pipe.params, prng);
    pipe.text_tok =
        std::make_unique<TextTokenizer>(pipe.vocab, dim, cfg.text_n_max, pipe.params, prng);
    pipe.video_tok = std::make_unique<VideoTokenizer>(cfg.images.channels, cfg.video_patch_t,
                                                      cfg.video_patch, dim, cfg.video_n_max,
                                                      pipe.params, prng);
    pipe.hyper_tok = std::make_unique<HyperspectralTokenizer>(cfg.hyper_bands, dim,
                                                              cfg.hyper_n_max, pipe.params, prng);

    pipe.image_adapter = std::make_unique<ImageAdapter>(*pipe.image_tok);
    pipe.point_adapter = std::make_unique<PointCloudAdapter>(*pipe.point_tok);
    pipe.audio_adapter = std::make_unique<AudioAdapter>(*pipe.audio_tok);
    pipe.text_adapter = std::make_unique<TextAdapter>(*pipe.text_tok);
    const std::size_t fused_n_max = cfg.image_n_max + cfg.audio_n_max;
    pipe.fused_adapter = std::make_unique<FusedAdapter>(*pipe.image_tok, *pipe.audio_tok, dim,
                                                        fused_n_max, pipe.params, prng);

    pipe.image_head = std::make_unique<ClassificationHead>("image", dim, cfg.images.classes,
                                                           pipe.params, prng);
    pipe.point_head = std::make_unique<ClassificationHead>(
        "point_cloud", dim, cfg.point_clouds.classes, pipe.params, prng);
    pipe.audio_head =
        std::make_unique<ClassificationHead>("audio", dim, cfg.audio.classes, pipe.params, prng);
    pipe.text_head =
        std::make_unique<ClassificationHead>("text", dim, cfg.text.classes, pipe.params, prng);
    const std::size_t fused_classes = std::min(cfg.images.classes, cfg.audio.classes);
    pipe.fused_head =
        std::make_unique<ClassificationHead>("fused", dim, fused_classes, pipe.params, prng);
    return pipe;
}

StageResult pretrain_images(Pipeline& pipe) {
    TaskModel model = pipe.task(Modality::image);
    StageResult stage = make_stage(pipe, "pretrain_images", Modality::image, model,
                                   pipe.image_train, pipe.image_test,
                                   image_linear_baseline(pipe.image_train), kPretrainFloor,
                                   pipe.cfg.pretrain_steps, kPretrainBatches);
    stage.floor_met = stage.train_accuracy >= stage.floor;  // pretrain floor is on train accuracy
    return stage;
}

StageResult run_transfer_stage(Pipeline& pipe, Modality modality) {
    if (!pipe.encoder->frozen()) {
        throw TrainingError("transfer stage: backbone must be frozen before stage 3");
    }
    switch (modality) {
        case Modality::point_cloud: {
            StageResult stage = make_stage(
                pipe, "transfer_point_cloud", modality, pipe.task(modality), pipe.point_train,
                pipe.point_test, point_cloud_centroid_baseline(pipe.point_train), kTransferFloor,
                pipe.cfg.transfer_steps, kPointBatches);
            stage.floor_met = stage.heldout_accuracy >= stage.floor;
            return stage;
        }
        case Modality::audio: {
            StageResult stage = make_stage(pipe, "transfer_audio", modality, pipe.task(modality),
                                           pipe.audio_train, pipe.audio_test,
                                           audio_centroid_baseline(pipe.audio_train),
                                           kTransferFloor, pipe.cfg.transfer_steps, kAudioBatches);
            stage.floor_met = stage.heldout_accuracy >= stage.floor;
            return stage;
        }
        case Modality::text: {
            StageResult stage = make_stage(
                pipe, "transfer_text", modality, pipe.task(modality), pipe.text_train,
                pipe.text_test, text_bag_of_words_baseline(pipe.text_train, pipe.text_lexicons),
                kTransferFloor, pipe.cfg.transfer_steps, kTextBatches);
            stage.floor_met = stage.heldout_accuracy >= stage.floor;
            return stage;
        }
        default:
            throw ConfigError(std::string("transfer stage: unsupported modality '") +
                              to_string(modality) + "'");
    }
}

StageResult run_fusion_stage(Pipeline& pipe) {
    if (!pipe.encoder->frozen()) {
        throw TrainingError("fusion stage: backbone must be frozen");
    }
    if (pipe.fused_train.items.empty()) {
        throw ConfigError("fusion stage: run_fusion is disabled in the config");
    }
    const double chance = 1.0 / static_cast<double>(pipe.fused_train.classes);
    // the pairs are separable through the audio stream alone
    Dataset audio_view;
    audio_view.classes = pipe.fused_train.classes;
    for (const LabeledSample& item : pipe.fused_train.items) {
        const auto& fused = std::get<FusedSample>(item.input);
        audio_view.items.push_back({AudioSample{fused.spectrogram}, item.label});
    }
    StageResult stage =
        make_stage(pipe, "fusion_pooled", Modality::fused, pipe.task(Modality::fused),
                   pipe.fused_train, pipe.fused_test, audio_centroid_baseline(audio_view),
                   chance + kFusionMarginOverChance, pipe.cfg.fusion_steps, kFusionBatches);
    stage.floor_met = stage.heldout_accuracy >= stage.floor;
    return stage;
}

ExperimentReport run_transfer_experiment(Pipeline& pipe) {
    ExperimentReport report;
    report.seed = pipe.cfg.seed;
    const double t0 = now_seconds();

    report.pretrain = pretrain_images(pipe);
    report.pretrain.floor_met = report.pretrain.train_accuracy >= report.pretrain.floor;
    report.pretrained = true;

    pipe.encoder->freeze();
    report.digest_before = pipe.backbone_digest();

    for (const std::string& name : pipe.cfg.transfer_modalities) {
        report.stages.push_back(run_transfer_stage(pipe, modality_from_string(name)));
    }
    if (pipe.cfg.run_fusion) report.stages.push_back(run_fusion_stage(pipe));

    report.digest_after = pipe.backbone_digest();
    report.total_seconds = now_seconds() - t0;
    return report;
}

ExperimentReport run_transfer_stages(Pipeline& pipe) {
    ExperimentReport report;
    report.seed = pipe.cfg.seed;
    const double t0 = now_seconds();
    pipe.encoder->freeze();
    report.digest_before = pipe.backbone_digest();
    for (const std::string& name : pipe.cfg.transfer_modalities) {
        report.stages.push_back(run_transfer_stage(pipe, modality_from_string(name)));
    }
    if (pipe.cfg.run_fusion) report.stages.push_back(run_fusion_stage(pipe));
    report.digest_after = pipe.backbone_digest();
    report.total_seconds = now_seconds() - t0;
    return report;
}

void write_report_files(const ExperimentReport& report, const Pipeline& pipe,
                        const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    auto stage_rows = [&](std::ostringstream& csv, const StageResult& s) {
        csv << s.name << ',' << to_string(s.modality) << ',' << format_double(s.train_accuracy)
            << ',' << format_double(s.heldout_accuracy) << ','
            << format_double(s.baseline_accuracy) << ',' << format_double(s.floor) << ','
            << (s.floor_met ? "yes" : "no") << ',' << s.trainable_params << ','
            << s.backbone_digest_after << ',' << format_double(s.seconds) << '\n';
    };

    std::ostringstream csv;
    csv << "stage,modality,train_accuracy,heldout_accuracy,baseline_accuracy,floor,floor_met,"
           "trainable_params,backbone_digest,seconds\n";
    if (report.pretrained) stage_rows(csv, report.pretrain);
    for (const StageResult& s : report.stages) stage_rows(csv, s);
    write_text_file_atomic((dir / "report.csv").string(), csv.str());

    if (report.pretrained) {
        write_metrics_csv((dir / "metrics_pretrain.csv").string(), report.pretrain.run.history);
    }
    for (const StageResult& s : report.stages) {
        write_metrics_csv((dir / ("metrics_" + s.name + ".csv")).string(), s.run.history);
    }

    std::ostringstream summary;
    summary << "experiment: " << pipe.cfg.experiment << "\n";
    summary << "seed: " << report.seed << "\n";
    summary << "note: stage 1 is supervised pretraining on synthetic images; the large-scale\n";
    summary << "      contrastive pretraining of the original recipe is out of scope here.\n";
    summary << "backbone digest at freeze: " << report.digest_before << "\n";
    summary << "backbone digest at end:    " << report.digest_after << "\n";
    summary << "freeze invariant: "
            << (report.digest_before == report.digest_after ? "held" : "VIOLATED") << "\n";
    if (report.pretrained) {
        summary << "pretrain (images): train acc " << format_double(report.pretrain.train_accuracy)
                << ", held-out acc " << format_double(report.pretrain.heldout_accuracy)
                << ", floor " << format_double(report.pretrain.floor)
                << (report.pretrain.floor_met ? " met" : " MISSED") << "\n";
    }
    for (const StageResult& s : report.stages) {
        summary << s.name << ": held-out acc " << format_double(s.heldout_accuracy) << " (floor "
                << format_double(s.floor) << (s.floor_met ? " met" : " MISSED") << ", baseline "
                << format_double(s.baseline_accuracy) << ", trainable params "
                << s.trainable_params << ")\n";
    }
    summary << "total seconds: " << format_double(report.total_seconds) << "\n";
    write_text_file_atomic((dir / "summary.txt").string(), summary.str());
}

}  // namespace mmt
