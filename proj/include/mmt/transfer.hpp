#pragma once

#include <memory>

#include "mmt/checkpoint.hpp"
#include "mmt/digest.hpp"
#include "mmt/heads.hpp"
#include "mmt/run_config.hpp"

namespace mmt {

// Accuracy floors for the canned experiment. The synthetic generators are
// separable by construction (their closed-form baselines sit near 1.0),
// so these floors leave a wide margin; they are recorded in the report
// next to the measured baseline rather than raised as errors.
inline constexpr double kPretrainFloor = 0.95;      // train accuracy, stage 1
inline constexpr double kTransferFloor = 0.80;      // held-out accuracy, stage 3
inline constexpr double kFusionMarginOverChance = 0.20;

// Everything one experiment needs: datasets, tokenizers, the shared
// encoder, and per-task heads, all built deterministically from one
// config + seed.
struct Pipeline {
    RunConfig cfg;
    ParameterSet params;

    std::unique_ptr<Encoder> encoder;
    std::unique_ptr<ImageTokenizer> image_tok;
    std::unique_ptr<PointCloudTokenizer> point_tok;
    std::unique_ptr<AudioTokenizer> audio_tok;
    std::unique_ptr<TextTokenizer> text_tok;
    std::unique_ptr<VideoTokenizer> video_tok;
    std::unique_ptr<HyperspectralTokenizer> hyper_tok;

    std::unique_ptr<ImageAdapter> image_adapter;
    std::unique_ptr<PointCloudAdapter> point_adapter;
    std::unique_ptr<AudioAdapter> audio_adapter;
    std::unique_ptr<TextAdapter> text_adapter;
    std::unique_ptr<FusedAdapter> fused_adapter;

    std::unique_ptr<ClassificationHead> image_head;
    std::unique_ptr<ClassificationHead> point_head;
    std::unique_ptr<ClassificationHead> audio_head;
    std::unique_ptr<ClassificationHead> text_head;
    std::unique_ptr<ClassificationHead> fused_head;

    Dataset image_train, image_test;
    Dataset point_train, point_test;
    Dataset audio_train, audio_test;
    Dataset text_train, text_test;
    Dataset fused_train, fused_test;
    Vocabulary vocab;
    std::vector<std::vector<std::string>> text_lexicons;

    std::string backbone_digest() const;
    std::vector<const Parameter*> all_params() const;
    std::vector<Parameter*> all_params();
    std::vector<Parameter*> params_with_prefixes(const std::vector<std::string>& prefixes);

    TaskModel task(Modality m);
};

Pipeline build_pipeline(const RunConfig& cfg);

struct StageResult {
    std::string name;
    Modality modality = Modality::image;
    TrainRun run;
    double train_accuracy = 0.0;
    double heldout_accuracy = 0.0;
    double baseline_accuracy = 0.0;  // closed-form generator baseline
    double floor = 0.0;
    bool floor_met = false;
    std::string backbone_digest_after;
    std::size_t trainable_params = 0;
    double seconds = 0.0;
};

// Stage 1: supervised pretraining of backbone + image tokenizer + head.
StageResult pretrain_images(Pipeline& pipe);

// Stage 3 for one modality; the backbone must already be frozen. Trains
// only that modality's tokenizer and head.
StageResult run_transfer_stage(Pipeline& pipe, Modality modality);

// Fused audio+image task with mean pooling; frozen backbone.
StageResult run_fusion_stage(Pipeline& pipe);

struct ExperimentReport {
    std::uint64_t seed = 0;
    std::string digest_before;  // backbone digest when freeze was switched on
    std::string digest_after;   // backbone digest at the end of the run
    StageResult pretrain;
    bool pretrained = false;  // false when stages ran from a loaded checkpoint
    std::vector<StageResult> stages;
    double total_seconds = 0.0;
};

// Stages 1-4 end to end: pretrain, freeze, per-modality transfer, fusion.
ExperimentReport run_transfer_experiment(Pipeline& pipe);

// Transfer stages only, for a pipeline restored from a checkpoint.
ExperimentReport run_transfer_stages(Pipeline& pipe);

// report.csv, summary.txt, and one metrics CSV per stage. Metrics CSVs
// contain no timing, so same-seed runs produce identical bytes.
void write_report_files(const ExperimentReport& report, const Pipeline& pipe,
                        const std::string& out_dir);

}  // namespace mmt
