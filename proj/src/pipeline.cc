#include "preme/pipeline.h"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <mutex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "preme/artifacts.h"
#include "preme/error.h"
#include "preme/evaluation.h"
#include "preme/local_providers.h"
#include "preme/pos_tagger.h"
#include "preme/questionnaire.h"

namespace preme {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void CheckKeys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::kConfiguration, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorCode::kConfiguration, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ProviderSpec ReadProvider(const json& j, const std::string& name, const std::string& key_env) {
  ProviderSpec spec;
  spec.endpoint.api_key_env = key_env;
  if (j.is_string()) {
    spec.kind = j.get<std::string>();
    return spec;
  }
  CheckKeys(j, "providers." + name, {"kind", "url", "api_key_env", "timeout_ms", "k"});
  Read(j, "kind", spec.kind);
  Read(j, "url", spec.endpoint.url);
  Read(j, "api_key_env", spec.endpoint.api_key_env);
  if (j.contains("timeout_ms")) {
    spec.endpoint.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<int>());
  }
  Read(j, "k", spec.k);
  return spec;
}

json ProviderJson(const ProviderSpec& spec) {
  json j{{"kind", spec.kind}};
  if (spec.kind == "http") {
    j["url"] = spec.endpoint.url;
    j["api_key_env"] = spec.endpoint.api_key_env;
    j["timeout_ms"] = spec.endpoint.timeout.count();
  }
  j["k"] = spec.k;
  return j;
}

std::string Now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void PipelineConfig::Validate() const {
  segmentation.Validate();
  generation_config.Validate();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfiguration, what); };
  for (const auto* p : {&embedding, &generation, &locator, &qa, &pos}) {
    if (p->kind != "mock" && p->kind != "http") fail("provider kind must be 'mock' or 'http'");
    if (p->kind == "http" && p->endpoint.url.empty()) fail("http provider without a url");
    if (p->endpoint.timeout.count() <= 0) fail("provider timeout must be positive");
  }
  if (locator.k < 1) fail("locator k must be at least 1");
  if (!(normalization.merge_threshold >= 0.0 && normalization.merge_threshold <= 1.0)) {
    fail("merge_threshold must lie in [0, 1]");
  }
  if (!(normalization.jaccard_threshold >= 0.0 && normalization.jaccard_threshold <= 1.0)) {
    fail("jaccard_threshold must lie in [0, 1]");
  }
  const auto& pr = normalization.pagerank;
  if (!(pr.damping > 0.0 && pr.damping < 1.0)) fail("damping must lie in (0, 1)");
  if (!(pr.tol > 0.0) || pr.max_iter < 1) fail("pagerank tolerance and max_iterations must be positive");
  if (!(train.l2_lambda >= 0.0) || train.max_iterations < 1 || train.threads < 1) {
    fail("tagger training settings out of range");
  }
  if (segmentation.retry.retries < 0 || segmentation.retry.backoff.count() < 0) {
    fail("retry settings must be non-negative");
  }
}

PipelineConfig ConfigFromJson(const json& j) {
  try {
    CheckKeys(j, "config", {"seed", "output_dir", "providers", "segmentation", "generation",
                            "tagger", "subject_network", "retry", "evaluate"});
    PipelineConfig c;
    Read(j, "seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    Read(j, "evaluate", c.evaluate);
    const json providers = j.value("providers", json::object());
    CheckKeys(providers, "providers", {"embedding", "generation", "locator", "qa", "pos"});
    auto provider = [&](const char* name, const char* env) {
      return ReadProvider(providers.value(name, json::object()), name, env);
    };
    c.embedding = provider("embedding", "PREME_EMBEDDING_KEY");
    c.generation = provider("generation", "PREME_GENERATION_KEY");
    c.locator = provider("locator", "PREME_LOCATOR_KEY");
    c.qa = provider("qa", "PREME_QA_KEY");
    c.pos = provider("pos", "PREME_POS_KEY");

    const json seg = j.value("segmentation", json::object());
    CheckKeys(seg, "segmentation", {"block_size", "threshold", "min_segment_turns", "batch_size"});
    Read(seg, "block_size", c.segmentation.block_size);
    Read(seg, "threshold", c.segmentation.threshold);
    Read(seg, "min_segment_turns", c.segmentation.min_segment_turns);
    Read(seg, "batch_size", c.segmentation.batch_size);

    const json gen = j.value("generation", json::object());
    CheckKeys(gen, "generation",
              {"temperatures", "trials_per_temperature", "max_output_tokens",
               "context_window_tokens", "stride_tokens", "min_question_tokens",
               "max_question_tokens", "prompt_template", "parallelism"});
    auto& g = c.generation_config;
    Read(gen, "temperatures", g.temperatures);
    Read(gen, "trials_per_temperature", g.trials_per_temperature);
    Read(gen, "max_output_tokens", g.max_output_tokens);
    Read(gen, "context_window_tokens", g.context_window_tokens);
    Read(gen, "stride_tokens", g.stride_tokens);
    Read(gen, "min_question_tokens", g.min_question_tokens);
    Read(gen, "max_question_tokens", g.max_question_tokens);
    Read(gen, "prompt_template", g.prompt_template);
    Read(gen, "parallelism", g.parallelism);

    const json tagger = j.value("tagger", json::object());
    CheckKeys(tagger, "tagger", {"model", "training_data", "l2_lambda", "max_iterations",
                                 "convergence_tol", "threads"});
    if (tagger.contains("model")) c.tagger_model = tagger.at("model").get<std::string>();
    if (tagger.contains("training_data")) {
      c.tagger_training_data = tagger.at("training_data").get<std::string>();
    }
    Read(tagger, "l2_lambda", c.train.l2_lambda);
    Read(tagger, "max_iterations", c.train.max_iterations);
    Read(tagger, "convergence_tol", c.train.convergence_tol);
    Read(tagger, "threads", c.train.threads);
    c.train.seed = c.seed;

    const json net = j.value("subject_network", json::object());
    CheckKeys(net, "subject_network", {"merge_threshold", "jaccard_threshold", "damping",
                                       "tolerance", "max_iterations"});
    Read(net, "merge_threshold", c.normalization.merge_threshold);
    Read(net, "jaccard_threshold", c.normalization.jaccard_threshold);
    Read(net, "damping", c.normalization.pagerank.damping);
    Read(net, "tolerance", c.normalization.pagerank.tol);
    Read(net, "max_iterations", c.normalization.pagerank.max_iter);

    const json retry = j.value("retry", json::object());
    CheckKeys(retry, "retry", {"retries", "backoff_ms"});
    RetryPolicy policy;
    Read(retry, "retries", policy.retries);
    if (retry.contains("backoff_ms")) {
      policy.backoff = std::chrono::milliseconds(retry.at("backoff_ms").get<int>());
    }
    c.segmentation.retry = policy;
    c.generation_config.retry = policy;
    c.normalization.retry = policy;
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("config: ") + e.what());
  }
}

json ConfigToJson(const PipelineConfig& c) {
  const auto& g = c.generation_config;
  return json{
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"evaluate", c.evaluate},
      {"providers",
       {{"embedding", ProviderJson(c.embedding)},
        {"generation", ProviderJson(c.generation)},
        {"locator", ProviderJson(c.locator)},
        {"qa", ProviderJson(c.qa)},
        {"pos", ProviderJson(c.pos)}}},
      {"segmentation",
       {{"block_size", c.segmentation.block_size},
        {"threshold", c.segmentation.threshold},
        {"min_segment_turns", c.segmentation.min_segment_turns},
        {"batch_size", c.segmentation.batch_size}}},
      {"generation",
       {{"temperatures", g.temperatures},
        {"trials_per_temperature", g.trials_per_temperature},
        {"max_output_tokens", g.max_output_tokens},
        {"context_window_tokens", g.context_window_tokens},
        {"stride_tokens", g.stride_tokens},
        {"min_question_tokens", g.min_question_tokens},
        {"max_question_tokens", g.max_question_tokens},
        {"prompt_template", g.prompt_template},
        {"parallelism", g.parallelism}}},
      {"tagger",
       {{"model", c.tagger_model.string()},
        {"training_data", c.tagger_training_data.string()},
        {"l2_lambda", c.train.l2_lambda},
        {"max_iterations", c.train.max_iterations},
        {"convergence_tol", c.train.convergence_tol},
        {"threads", c.train.threads}}},
      {"subject_network",
       {{"merge_threshold", c.normalization.merge_threshold},
        {"jaccard_threshold", c.normalization.jaccard_threshold},
        {"damping", c.normalization.pagerank.damping},
        {"tolerance", c.normalization.pagerank.tol},
        {"max_iterations", c.normalization.pagerank.max_iter}}},
      {"retry",
       {{"retries", c.segmentation.retry.retries},
        {"backoff_ms", c.segmentation.retry.backoff.count()}}}};
}

PipelineConfig LoadConfig(const fs::path& path) {
  PipelineConfig c = ConfigFromJson(ReadJson(path));
  const fs::path base = path.parent_path();
  auto resolve = [&](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(c.output_dir);
  resolve(c.tagger_model);
  resolve(c.tagger_training_data);
  return c;
}

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kSegmenting: return "Segmenting";
    case Stage::kGenerating: return "Generating";
    case Stage::kTagging: return "Tagging";
    case Stage::kNormalizing: return "Normalizing";
    case Stage::kAssembling: return "Assembling";
    case Stage::kEvaluating: return "Evaluating";
    case Stage::kDone: return "Done";
    case Stage::kFailed: return "Failed";
  }
  return "Failed";
}

Stage ParseStage(std::string_view name) {
  for (int s = 0; s <= static_cast<int>(Stage::kFailed); ++s) {
    if (StageName(static_cast<Stage>(s)) == name) return static_cast<Stage>(s);
  }
  throw Error(ErrorCode::kMalformedInput, "unknown stage '" + std::string(name) + "'");
}

void JobRecord::Advance(Stage next) {
  const bool ok = next == Stage::kFailed
                      ? stage != Stage::kDone && stage != Stage::kFailed
                      : stage != Stage::kFailed && static_cast<int>(next) >= static_cast<int>(stage);
  if (!ok) {
    throw Error(ErrorCode::kIllegalTransition,
                "job cannot move from " + std::string(StageName(stage)) + " to " +
                    std::string(StageName(next)));
  }
  stage = next;
  updated_at = Now();
}

json JobToJson(const JobRecord& job) {
  return json{{"job_id", job.job_id},
              {"meeting_id", job.meeting_id},
              {"stage", std::string(StageName(job.stage))},
              {"created_at", job.created_at},
              {"updated_at", job.updated_at},
              {"error", job.error},
              {"skipped_stages", job.skipped_stages},
              {"artifacts", job.artifacts}};
}

JobRecord JobFromJson(const json& j) {
  return ParseArtifact("job", [&] {
    JobRecord job;
    job.job_id = j.at("job_id").get<std::string>();
    job.meeting_id = j.at("meeting_id").get<std::string>();
    job.stage = ParseStage(j.at("stage").get<std::string>());
    job.created_at = j.at("created_at").get<std::string>();
    job.updated_at = j.at("updated_at").get<std::string>();
    job.error = j.at("error").get<std::string>();
    job.skipped_stages = j.at("skipped_stages").get<std::vector<std::string>>();
    job.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    return job;
  });
}

Providers MakeProviders(const PipelineConfig& config) {
  Providers p;
  if (config.embedding.kind == "http") {
    p.embedding = std::make_unique<HttpEmbeddingProvider>(config.embedding.endpoint);
  } else {
    p.embedding = std::make_unique<HashEmbeddingProvider>();
  }
  if (config.generation.kind == "http") {
    p.generation = std::make_unique<HttpGenerationProvider>(config.generation.endpoint);
  } else {
    p.generation = std::make_unique<MockGenerationProvider>(config.seed);
  }
  if (config.locator.kind == "http") {
    p.locator = std::make_unique<HttpLocatorProvider>(config.locator.endpoint);
  } else {
    p.locator = std::make_unique<BaselineLocator>(config.locator.k);
  }
  if (config.qa.kind == "http") {
    p.qa = std::make_unique<HttpQaProvider>(config.qa.endpoint);
  } else {
    p.qa = std::make_unique<BaselineQa>();
  }
  if (config.pos.kind == "http") {
    p.pos = std::make_unique<HttpPosProvider>(config.pos.endpoint);
  } else {
    p.pos = std::make_unique<RulePosTagger>();
  }
  return p;
}

Transcript LoadTranscript(const fs::path& path) {
  const std::string raw = ReadFile(path);
  const auto format = path.extension() == ".json" ? TranscriptFormat::kQmsumJson
                                                  : TranscriptFormat::kPlainTurns;
  return ParseTranscript(raw, format, path.stem().string());
}

CrfModel LoadOrTrainTagger(const PipelineConfig& config) {
  if (!config.tagger_model.empty() && fs::exists(config.tagger_model)) {
    return ModelFromJson(ReadJson(config.tagger_model));
  }
  if (!config.tagger_training_data.empty() && fs::exists(config.tagger_training_data)) {
    const AnnotationSet data = ParseAnnotations(ReadFile(config.tagger_training_data));
    for (const auto& w : data.warnings) spdlog::warn("annotations: {}", w.message);
    TrainResult result = Train(data.questions, config.train);
    for (const auto& w : result.warnings) spdlog::warn("tagger: {}", w);
    if (!result.converged) {
      spdlog::warn("tagger training stopped after {} iterations without converging",
                   result.iterations);
    }
    return std::move(result.model);
  }
  throw Error(ErrorCode::kConfiguration,
              "no tagger model at '" + config.tagger_model.string() +
                  "' and no training data at '" + config.tagger_training_data.string() + "'");
}

RunResult RunPipeline(const fs::path& transcript_path, const PipelineConfig& config,
                      Providers* providers, bool force) {
  config.Validate();
  const bool have_model = !config.tagger_model.empty() && fs::exists(config.tagger_model);
  const bool have_data =
      !config.tagger_training_data.empty() && fs::exists(config.tagger_training_data);
  if (!have_model && !have_data) {
    throw Error(ErrorCode::kConfiguration,
                "a tagger model or tagger training data is required");
  }
  const Transcript transcript = LoadTranscript(transcript_path);
  const fs::path dir = config.output_dir / transcript.meeting_id;
  fs::create_directories(dir);

  Providers owned;
  if (providers == nullptr) {
    owned = MakeProviders(config);
    providers = &owned;
  }

  JobRecord job;
  job.job_id = transcript.meeting_id;
  job.meeting_id = transcript.meeting_id;
  job.created_at = Now();
  job.updated_at = job.created_at;
  const fs::path job_path = dir / "job.json";
  auto save_job = [&] { WriteJson(job_path, JobToJson(job)); };
  auto artifact = [&](const std::string& name) {
    const fs::path p = dir / name;
    job.artifacts[name] = p.string();
    return p;
  };

  WriteJson(artifact("transcript.json"), TranscriptToJson(transcript));
  save_job();

  bool reuse = !force;
  // Loads an existing artifact when every earlier stage was also reused.
  auto try_reuse = [&](const fs::path& path, auto&& load) -> bool {
    if (!reuse || !fs::exists(path)) {
      reuse = false;
      return false;
    }
    try {
      load(ReadJson(path));
    } catch (const Error& e) {
      spdlog::warn("recomputing {}: {}", path.string(), e.what());
      reuse = false;
      return false;
    }
    job.skipped_stages.emplace_back(StageName(job.stage));
    return true;
  };

  std::vector<Segment> segments;
  std::vector<QuestionPool> pools;
  std::vector<std::vector<TaggedQuestion>> tagged;
  std::vector<NormalizationResult> normalized;
  Questionnaire questionnaire;
  const fs::path questionnaire_path = artifact("questionnaire.json");

  try {
    const fs::path seg_path = artifact("segments.json");
    if (!try_reuse(seg_path, [&](const json& j) { segments = SegmentsFromJson(j); })) {
      segments = SegmentTranscript(transcript, config.segmentation, *providers->embedding);
      WriteJson(seg_path, SegmentsToJson(segments));
    }
    if (segments.empty() || segments.back().turns.end != transcript.size()) {
      throw Error(ErrorCode::kInconsistentInputs, "segments do not cover the transcript");
    }

    job.Advance(Stage::kGenerating);
    save_job();
    const fs::path pool_path = artifact("pool.json");
    if (!try_reuse(pool_path, [&](const json& j) { pools = PoolsFromJson(j); })) {
      pools.clear();
      for (const auto& seg : segments) {
        pools.push_back(BuildPool(seg.segment_id, SegmentText(transcript, seg),
                                  *providers->generation, config.generation_config));
        for (const auto& w : pools.back().warnings) spdlog::warn("{}: {}", seg.segment_id, w);
      }
      WriteJson(pool_path, PoolsToJson(pools));
    }

    job.Advance(Stage::kTagging);
    save_job();
    const fs::path tagged_path = artifact("tagged.json");
    if (!try_reuse(tagged_path, [&](const json& j) { tagged = TaggedFromJson(j); })) {
      const CrfModel model = LoadOrTrainTagger(config);
      tagged.clear();
      for (const auto& pool : pools) {
        std::vector<TaggedQuestion> out;
        for (const auto& q : pool.questions) {
          out.push_back(TagQuestion(model, *providers->pos, q.id, q.text));
        }
        tagged.push_back(std::move(out));
      }
      WriteJson(tagged_path, TaggedToJson(tagged));
    }

    job.Advance(Stage::kNormalizing);
    save_job();
    const fs::path norm_path = artifact("normalized.json");
    if (!try_reuse(norm_path, [&](const json& j) {
          normalized.clear();
          ParseArtifact("normalized", [&] {
            for (const auto& s : j.at("segments")) normalized.push_back(NormalizationFromJson(s));
            return 0;
          });
        })) {
      normalized.clear();
      json arr = json::array();
      for (size_t i = 0; i < segments.size(); ++i) {
        normalized.push_back(NormalizeSegment(segments[i].segment_id, tagged.at(i),
                                              *providers->embedding, config.normalization));
        arr.push_back(NormalizationToJson(normalized.back()));
      }
      WriteJson(norm_path, json{{"version", kArtifactVersion}, {"segments", std::move(arr)}});
    }

    job.Advance(Stage::kAssembling);
    save_job();
    if (!try_reuse(questionnaire_path,
                   [&](const json& j) { questionnaire = QuestionnaireFromJson(j); })) {
      std::vector<std::string> warnings;
      questionnaire = Assemble(transcript, segments, normalized, pools,
                               providers->locator.get(), &warnings);
      const auto problems =
          ValidateQuestionnaireJson(QuestionnaireToJson(questionnaire), transcript.size());
      if (!problems.empty()) {
        throw Error(ErrorCode::kInconsistentInputs, "assembled questionnaire: " + problems.front());
      }
      WriteJson(questionnaire_path, QuestionnaireToJson(questionnaire));
    }

    job.Advance(Stage::kEvaluating);
    save_job();
    if (config.evaluate) {
      const fs::path reports_path = artifact("reports.json");
      if (!try_reuse(reports_path, [](const json&) {})) {
        const CoverageReport coverage = Coverage(questionnaire, transcript, *providers->locator,
                                                 config.segmentation.retry);
        std::vector<std::pair<std::string, std::string>> questions;
        for (const auto& [id, rec] : questionnaire.questions) questions.emplace_back(id, rec.text);
        const AnswerabilityReport answerability =
            Answerability(questions, transcript, *providers->qa, kDefaultConfidenceThresholds,
                          config.segmentation.retry);
        const MeetingSummary summary{transcript.meeting_id, transcript.category,
                                     transcript.size(),
                                     static_cast<int>(questionnaire.questions.size()),
                                     coverage.coverage};
        WriteJson(reports_path, json{{"version", kArtifactVersion},
                                     {"meeting_id", transcript.meeting_id},
                                     {"coverage", CoverageToJson(coverage)},
                                     {"answerability", AnswerabilityToJson(answerability)},
                                     {"table", CoverageTable({summary})}});
      }
    }
    job.Advance(Stage::kDone);
    save_job();
  } catch (const std::exception& e) {
    job.error = std::string(StageName(job.stage)) + ": " + e.what();
    job.Advance(Stage::kFailed);
    save_job();
    throw;
  }
  return RunResult{questionnaire_path, job};
}

std::vector<RunResult> RunPipelines(const std::vector<fs::path>& transcripts,
                                    const PipelineConfig& config, int max_parallel,
                                    bool force) {
  std::vector<RunResult> results(transcripts.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < transcripts.size(); i = next++) {
      try {
        results[i] = RunPipeline(transcripts[i], config, nullptr, force);
      } catch (const std::exception& e) {
        spdlog::error("{}: {}", transcripts[i].string(), e.what());
        results[i].job.meeting_id = transcripts[i].stem().string();
        results[i].job.stage = Stage::kFailed;
        results[i].job.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(max_parallel, static_cast<int>(transcripts.size())));
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
  }
  return results;
}

}  // namespace preme
