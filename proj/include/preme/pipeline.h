#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "preme/http_providers.h"
#include "preme/question_gen.h"
#include "preme/segmentation.h"
#include "preme/subject_network.h"
#include "preme/tagger.h"
#include "preme/transcript.h"

namespace preme {

// kind: "mock" (offline local implementation) or "http".
struct ProviderSpec {
  std::string kind = "mock";
  HttpEndpoint endpoint;
  int k = 1;  // locator only: turns returned per question by the local locator
};

struct PipelineConfig {
  uint64_t seed = 0;
  std::filesystem::path output_dir = "preme-out";
  ProviderSpec embedding;
  ProviderSpec generation;
  ProviderSpec locator;
  ProviderSpec qa;
  ProviderSpec pos;
  SegmentationConfig segmentation;
  GenerationConfig generation_config;
  std::filesystem::path tagger_model;
  std::filesystem::path tagger_training_data;
  TrainConfig train;
  NormalizationConfig normalization;
  bool evaluate = true;

  void Validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json ConfigToJson(const PipelineConfig& config);
PipelineConfig LoadConfig(const std::filesystem::path& path);

enum class Stage {
  kSegmenting,
  kGenerating,
  kTagging,
  kNormalizing,
  kAssembling,
  kEvaluating,
  kDone,
  kFailed
};

std::string_view StageName(Stage stage);
Stage ParseStage(std::string_view name);

struct JobRecord {
  std::string job_id;
  std::string meeting_id;
  Stage stage = Stage::kSegmenting;
  std::string created_at;
  std::string updated_at;
  std::string error;
  std::vector<std::string> skipped_stages;
  std::map<std::string, std::string> artifacts;  // name -> path

  // Forward-only, except that any stage may move to Failed. Throws
  // IllegalTransition otherwise.
  void Advance(Stage next);
};

nlohmann::json JobToJson(const JobRecord& job);
JobRecord JobFromJson(const nlohmann::json& j);

struct Providers {
  std::unique_ptr<EmbeddingProvider> embedding;
  std::unique_ptr<GenerationProvider> generation;
  std::unique_ptr<LocatorProvider> locator;
  std::unique_ptr<QaProvider> qa;
  std::unique_ptr<PosProvider> pos;
};

Providers MakeProviders(const PipelineConfig& config);

// Reads QMSUM-style JSON (".json") or "speaker<TAB>text" lines; the meeting id
// defaults to the file stem.
Transcript LoadTranscript(const std::filesystem::path& path);

// Loads the configured model, or trains one from the configured annotations.
// Throws Configuration when neither is available.
CrfModel LoadOrTrainTagger(const PipelineConfig& config);

struct RunResult {
  std::filesystem::path questionnaire_path;
  JobRecord job;
};

// Runs every stage for one transcript under output_dir/<meeting_id>/ and
// writes segments.json, pool.json, tagged.json, normalized.json,
// questionnaire.json, reports.json and job.json. A stage whose artifact
// already exists is skipped as long as every earlier stage was skipped too,
// unless `force` is set. On failure the job record names the failed stage,
// earlier artifacts are kept, and the error is rethrown.
RunResult RunPipeline(const std::filesystem::path& transcript_path,
                      const PipelineConfig& config, Providers* providers = nullptr,
                      bool force = false);

// Meetings in parallel, each with its own providers. Returns one result per
// input in input order; failures are reported in the job record.
std::vector<RunResult> RunPipelines(const std::vector<std::filesystem::path>& transcripts,
                                    const PipelineConfig& config, int max_parallel,
                                    bool force = false);

}  // namespace preme
