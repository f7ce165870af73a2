#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "preme/artifacts.h"
#include "preme/error.h"
#include "preme/evaluation.h"
#include "preme/local_providers.h"
#include "preme/pipeline.h"
#include "preme/service.h"
#include "preme/tagger.h"
#include "preme/text.h"

#ifndef PREME_DATA_DIR
#define PREME_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace preme;

namespace {

struct RunOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> tagger_model;
  std::optional<std::string> tagger_data;
  std::optional<int> block_size;
  std::optional<double> threshold;
  std::optional<int> min_segment_turns;
  std::optional<int> trials;
  std::optional<int> parallelism;
  std::optional<double> merge_threshold;
  std::optional<double> jaccard_threshold;
  std::optional<std::string> embedding_url;
  std::optional<std::string> generation_url;
  std::optional<std::string> locator_url;
  std::optional<std::string> qa_url;
  std::optional<std::string> pos_url;
};

void AddOverrides(CLI::App* app, RunOverrides& o) {
  app->add_option("--seed", o.seed, "Seed for every stage");
  app->add_option("--out", o.output_dir, "Output directory");
  app->add_option("--tagger-model", o.tagger_model, "Trained tagger model (JSON)");
  app->add_option("--tagger-data", o.tagger_data, "Annotated questions to train on");
  app->add_option("--block-size", o.block_size, "Utterances per segmentation block");
  app->add_option("--threshold", o.threshold, "Segmentation boundary threshold");
  app->add_option("--min-segment-turns", o.min_segment_turns, "Shortest segment kept");
  app->add_option("--trials", o.trials, "Generation trials per temperature");
  app->add_option("--parallelism", o.parallelism, "Concurrent generation calls");
  app->add_option("--merge-threshold", o.merge_threshold, "Subject merge cosine");
  app->add_option("--jaccard-threshold", o.jaccard_threshold, "N-gram dedupe threshold");
  app->add_option("--embedding-url", o.embedding_url, "HTTP embedding provider");
  app->add_option("--generation-url", o.generation_url, "HTTP generation provider");
  app->add_option("--locator-url", o.locator_url, "HTTP locator provider");
  app->add_option("--qa-url", o.qa_url, "HTTP QA provider");
  app->add_option("--pos-url", o.pos_url, "HTTP POS provider");
}

void Apply(const RunOverrides& o, PipelineConfig& c) {
  if (o.seed) {
    c.seed = *o.seed;
    c.train.seed = *o.seed;
  }
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.tagger_model) c.tagger_model = *o.tagger_model;
  if (o.tagger_data) c.tagger_training_data = *o.tagger_data;
  if (o.block_size) c.segmentation.block_size = *o.block_size;
  if (o.threshold) c.segmentation.threshold = *o.threshold;
  if (o.min_segment_turns) c.segmentation.min_segment_turns = *o.min_segment_turns;
  if (o.trials) c.generation_config.trials_per_temperature = *o.trials;
  if (o.parallelism) c.generation_config.parallelism = *o.parallelism;
  if (o.merge_threshold) c.normalization.merge_threshold = *o.merge_threshold;
  if (o.jaccard_threshold) c.normalization.jaccard_threshold = *o.jaccard_threshold;
  auto http = [](ProviderSpec& spec, const std::optional<std::string>& url) {
    if (!url) return;
    spec.kind = "http";
    spec.endpoint.url = *url;
  };
  http(c.embedding, o.embedding_url);
  http(c.generation, o.generation_url);
  http(c.locator, o.locator_url);
  http(c.qa, o.qa_url);
  http(c.pos, o.pos_url);
  c.Validate();
}

PipelineConfig ConfigOrDefault(const std::string& path) {
  if (path.empty()) {
    PipelineConfig c;
    return c;
  }
  return LoadConfig(path);
}

std::vector<fs::path> MeetingDirs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (fs::exists(dir / "questionnaire.json")) return {dir};
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "questionnaire.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void PrintSummary(const RunResult& result) {
  const Questionnaire q = QuestionnaireFromJson(ReadJson(result.questionnaire_path));
  std::cout << "meeting " << q.meeting_id << ": " << q.entries.size() << " subjects, "
            << q.questions.size() << " questions\n";
  for (const auto& e : q.entries) {
    std::cout << "  " << e.subject << " [" << e.segment_id << "]:";
    for (const auto& a : e.aspects) std::cout << " " << a.aspect << "(" << a.question_ids.size() << ")";
    std::cout << "\n";
  }
  if (!result.job.skipped_stages.empty()) {
    std::cout << "  reused:";
    for (const auto& s : result.job.skipped_stages) std::cout << " " << s;
    std::cout << "\n";
  }
  std::cout << "  questionnaire: " << result.questionnaire_path.string() << "\n";
}

int Serve(const fs::path& dir, const std::string& host, int port) {
  auto service = std::make_shared<QuestionnaireService>(dir);
  ApiServer server(service);
  spdlog::info("serving {} on http://{}:{}", dir.string(), host, port);
  server.Run(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"preme: meeting transcripts to interactive questionnaires"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a transcript and store it as JSON");
  std::string ingest_in;
  std::string ingest_format = "auto";
  std::string ingest_id;
  std::string ingest_category;
  std::string ingest_out = "preme-out";
  ingest->add_option("transcript", ingest_in, "Transcript file")->required();
  ingest->add_option("--format", ingest_format, "auto, json or plain")
      ->check(CLI::IsMember({"auto", "json", "plain"}));
  ingest->add_option("--meeting-id", ingest_id, "Meeting id (default: file stem)");
  ingest->add_option("--category", ingest_category, "Academic, Committee, Product or Other");
  ingest->add_option("--out", ingest_out, "Output directory");

  // run
  auto* run = app.add_subcommand("run", "Run the pipeline on one or more transcripts");
  std::vector<std::string> run_inputs;
  std::string run_config;
  bool run_force = false;
  int run_parallel = 1;
  RunOverrides run_overrides;
  run->add_option("transcripts", run_inputs, "Transcript files")->required();
  run->add_option("--config", run_config, "Pipeline config (JSON)");
  run->add_flag("--force", run_force, "Recompute every stage");
  run->add_option("--parallel", run_parallel, "Meetings processed at once");
  AddOverrides(run, run_overrides);

  // train-tagger
  auto* train = app.add_subcommand("train-tagger", "Train the subject/aspect tagger");
  std::string train_data;
  std::string train_out = "tagger.json";
  int train_cv = 0;
  TrainConfig train_config;
  train->add_option("--data", train_data, "Annotated questions (TOKEN POS LABEL)")->required();
  train->add_option("--out", train_out, "Model output path");
  train->add_option("--cv", train_cv, "Also report k-fold cross-validation");
  train->add_option("--l2", train_config.l2_lambda, "L2 regularization strength");
  train->add_option("--max-iter", train_config.max_iterations, "L-BFGS iterations");
  train->add_option("--seed", train_config.seed, "Fold shuffling seed");
  train->add_option("--threads", train_config.threads, "Gradient threads");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Coverage, answerability, gold matching, agreement");
  std::string eval_dir;
  std::string eval_config;
  std::string eval_gold;
  std::string eval_meeting;
  std::vector<std::string> eval_annotations;
  evaluate->add_option("--dir", eval_dir, "Pipeline output directory");
  evaluate->add_option("--config", eval_config, "Pipeline config for providers");
  evaluate->add_option("--gold", eval_gold, "Gold questions, one per line");
  evaluate->add_option("--meeting", eval_meeting, "Meeting whose pool is matched against --gold");
  evaluate->add_option("--annotations", eval_annotations, "Two or more annotation files");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve questionnaires over HTTP");
  std::string serve_dir = "preme-out";
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  serve->add_option("--dir", serve_dir, "Directory of meeting outputs");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Port");

  // demo
  auto* demo = app.add_subcommand("demo", "Run the bundled meeting offline");
  std::string demo_data = PREME_DATA_DIR;
  std::string demo_out = "demo-out";
  bool demo_serve = false;
  int demo_port = 8080;
  demo->add_option("--data-dir", demo_data, "Directory with the bundled data");
  demo->add_option("--out", demo_out, "Output directory");
  demo->add_flag("--serve", demo_serve, "Serve the result afterwards");
  demo->add_option("--port", demo_port, "Port for --serve");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*ingest) {
      const fs::path in(ingest_in);
      TranscriptFormat format = in.extension() == ".json" ? TranscriptFormat::kQmsumJson
                                                          : TranscriptFormat::kPlainTurns;
      if (ingest_format == "json") format = TranscriptFormat::kQmsumJson;
      if (ingest_format == "plain") format = TranscriptFormat::kPlainTurns;
      Transcript t = ParseTranscript(ReadFile(in),
                                     format, ingest_id.empty() ? in.stem().string() : ingest_id);
      if (!ingest_id.empty()) t.meeting_id = ingest_id;
      if (!ingest_category.empty()) t.category = ParseCategory(ingest_category);
      const fs::path out = fs::path(ingest_out) / t.meeting_id / "transcript.json";
      WriteJson(out, TranscriptToJson(t));
      std::cout << t.meeting_id << ": " << t.size() << " turns ("
                << t.degenerate_turns.size() << " degenerate) -> " << out.string() << "\n";
      return 0;
    }
    if (*run) {
      PipelineConfig config = ConfigOrDefault(run_config);
      Apply(run_overrides, config);
      std::vector<fs::path> inputs(run_inputs.begin(), run_inputs.end());
      const auto results = RunPipelines(inputs, config, run_parallel, run_force);
      int failures = 0;
      for (const auto& r : results) {
        if (r.job.stage == Stage::kDone) {
          PrintSummary(r);
        } else {
          ++failures;
          std::cerr << r.job.meeting_id << ": failed: " << r.job.error << "\n";
        }
      }
      return failures == 0 ? 0 : 1;
    }
    if (*train) {
      const AnnotationSet data = ParseAnnotations(ReadFile(train_data));
      for (const auto& w : data.warnings) spdlog::warn("{}", w.message);
      const auto start = std::chrono::steady_clock::now();
      TrainResult result = Train(data.questions, train_config);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      WriteJson(train_out, ModelToJson(result.model));
      std::cout << "trained on " << data.questions.size() << " questions in " << secs
                << " s, " << result.iterations << " iterations, final loss "
                << (result.loss_history.empty() ? 0.0 : result.loss_history.back())
                << (result.converged ? "" : " (not converged)") << " -> " << train_out << "\n";
      if (train_cv > 1) {
        const auto cv = CrossValidate(data.questions, train_cv, train_config);
        const char* names[] = {"Subject", "Aspect", "N/A"};
        std::printf("%d-fold cross-validation\n%-8s %9s %9s %9s\n", train_cv, "", "Precision",
                    "Recall", "F1");
        for (int c = 0; c < 3; ++c) {
          std::printf("%-8s %9.3f %9.3f %9.3f\n", names[c], cv.mean[c].precision,
                      cv.mean[c].recall, cv.mean[c].f1);
        }
      }
      return 0;
    }
    if (*evaluate) {
      PipelineConfig config = ConfigOrDefault(eval_config);
      Providers providers = MakeProviders(config);
      json out = json::object();
      if (!eval_dir.empty()) {
        std::vector<MeetingSummary> summaries;
        json meetings = json::object();
        for (const auto& dir : MeetingDirs(eval_dir)) {
          const Questionnaire q = QuestionnaireFromJson(ReadJson(dir / "questionnaire.json"));
          const Transcript t = TranscriptFromJson(ReadJson(dir / "transcript.json"), q.meeting_id);
          const CoverageReport cov = Coverage(q, t, *providers.locator);
          std::vector<std::pair<std::string, std::string>> questions;
          for (const auto& [id, rec] : q.questions) questions.emplace_back(id, rec.text);
          const AnswerabilityReport ans = Answerability(questions, t, *providers.qa);
          summaries.push_back({q.meeting_id, t.category, t.size(),
                               static_cast<int>(q.questions.size()), cov.coverage});
          meetings[q.meeting_id] = {{"coverage", CoverageToJson(cov)},
                                    {"answerability", AnswerabilityToJson(ans)}};
          std::cout << q.meeting_id << ": answerability";
          for (const auto& [th, f] : ans.fraction_ge) std::cout << " >=" << th << ": " << f;
          std::cout << "\n";
        }
        std::cout << CoverageTable(summaries);
        out["meetings"] = std::move(meetings);
        out["table"] = CoverageTable(summaries);
      }
      if (!eval_gold.empty()) {
        if (eval_dir.empty() || eval_meeting.empty()) {
          throw Error(ErrorCode::kConfiguration, "--gold needs --dir and --meeting");
        }
        std::vector<std::string> gold;
        std::istringstream lines(ReadFile(eval_gold));
        for (std::string line; std::getline(lines, line);) {
          if (!Trim(line).empty()) gold.push_back(std::string(Trim(line)));
        }
        std::vector<std::string> generated;
        for (const auto& pool : PoolsFromJson(ReadJson(fs::path(eval_dir) / eval_meeting / "pool.json"))) {
          for (const auto& pq : pool.questions) generated.push_back(pq.text);
        }
        json matches = json::array();
        for (MatchMetric m : {MatchMetric::kEmbeddingCosine, MatchMetric::kRouge1F1, MatchMetric::kBleu4}) {
          const MatchReport r = GoldMatch(generated, gold, m, DefaultMatchThresholds(),
                                          providers.embedding.get());
          std::cout << MatchMetricName(m) << ":";
          for (double t : r.thresholds) std::printf(" %.1f=%.3f", t, r.covered_fraction_at.at(t));
          std::cout << "\n";
          matches.push_back(MatchToJson(r));
        }
        out["gold_match"] = std::move(matches);
      }
      if (!eval_annotations.empty()) {
        std::vector<AnnotationSet> sets;
        for (const auto& p : eval_annotations) sets.push_back(ParseAnnotations(ReadFile(p)));
        const AgreementReport r = Agreement(sets);
        std::printf("agreement      Hard    Soft\nsubject   %8.3f %7.3f\naspect    %8.3f %7.3f\n",
                    r.alpha_subject_hard, r.alpha_subject_soft, r.alpha_aspect_hard,
                    r.alpha_aspect_soft);
        out["agreement"] = AgreementToJson(r);
      }
      if (!eval_dir.empty()) WriteJson(fs::path(eval_dir) / "evaluation.json", out);
      return 0;
    }
    if (*serve) return Serve(serve_dir, serve_host, serve_port);
    if (*demo) {
      const fs::path data(demo_data);
      PipelineConfig config = LoadConfig(data / "demo_config.json");
      config.output_dir = demo_out;
      const auto start = std::chrono::steady_clock::now();
      const RunResult result = RunPipeline(data / "demo_meeting.json", config, nullptr, true);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      PrintSummary(result);
      const json reports = ReadJson(fs::path(demo_out) / result.job.meeting_id / "reports.json");
      std::cout << reports.at("table").get<std::string>();
      std::printf("finished in %.2f s\n", secs);
      if (demo_serve) return Serve(demo_out, "127.0.0.1", demo_port);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
