#include <fstream>

#include "doctest.h"
#include "preme/artifacts.h"
#include "preme/local_providers.h"
#include "preme/pipeline.h"
#include "support.h"

using namespace preme;
using namespace preme::testing;
namespace fs = std::filesystem;

namespace {

PipelineConfig DemoConfig(const fs::path& out) {
  PipelineConfig c = LoadConfig(DataDir() / "demo_config.json");
  c.output_dir = out;
  return c;
}

class BrokenGeneration : public GenerationProvider {
 public:
  std::string Generate(const GenerationRequest&) override {
    throw Error(ErrorCode::kMalformedInput, "model returned garbage");
  }
};

std::map<std::string, std::string> ReadAll(const fs::path& dir, bool skip_job) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (skip_job && e.path().filename() == "job.json") continue;
    out[e.path().filename().string()] = ReadFile(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("config json round trip and strictness") {
  PipelineConfig c = DemoConfig("out");
  CHECK(c.segmentation.threshold == 0.3);
  CHECK(c.tagger_training_data.is_absolute());
  const auto j = ConfigToJson(c);
  const PipelineConfig back = ConfigFromJson(j);
  CHECK(ConfigToJson(back) == j);

  auto bad = j;
  bad["segmentation"]["blok_size"] = 3;
  CHECK_THROWS_AS(ConfigFromJson(bad), Error);
  bad = j;
  bad["providers"]["embedding"]["kind"] = "grpc";
  CHECK_THROWS_AS(ConfigFromJson(bad).Validate(), Error);
  bad = j;
  bad["subject_network"]["merge_threshold"] = 1.5;
  CHECK_THROWS_AS(ConfigFromJson(bad).Validate(), Error);
}

TEST_CASE("job stages only move forward") {
  JobRecord job;
  job.Advance(Stage::kGenerating);
  job.Advance(Stage::kGenerating);
  CHECK_THROWS_AS(job.Advance(Stage::kSegmenting), Error);
  job.Advance(Stage::kFailed);
  CHECK_THROWS_AS(job.Advance(Stage::kDone), Error);
  CHECK(ParseStage(StageName(Stage::kNormalizing)) == Stage::kNormalizing);
  JobRecord done;
  done.Advance(Stage::kDone);
  CHECK_THROWS_AS(done.Advance(Stage::kFailed), Error);
  job.artifacts["a"] = "b";
  CHECK(JobToJson(JobFromJson(JobToJson(job))) == JobToJson(job));
}

TEST_CASE("missing tagger fails before any provider call") {
  TempDir tmp;
  PipelineConfig c;
  c.output_dir = tmp.path();
  Providers p = MakeProviders(c);
  auto counting = std::make_unique<Counting<HashEmbeddingProvider>>();
  auto* counter = counting.get();
  p.embedding = std::move(counting);
  try {
    RunPipeline(DataDir() / "demo_meeting.json", c, &p);
    FAIL("expected Configuration");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfiguration);
  }
  CHECK(counter->embed_calls == 0);
}

TEST_CASE("resume skips stages whose artifacts exist") {
  TempDir tmp;
  const PipelineConfig c = DemoConfig(tmp.path());
  Providers p = MakeProviders(c);
  p.generation = std::make_unique<BrokenGeneration>();
  CHECK_THROWS_AS(RunPipeline(DataDir() / "demo_meeting.json", c, &p), Error);
  const fs::path dir = tmp.path() / "demo_product_meeting";
  const JobRecord failed = JobFromJson(ReadJson(dir / "job.json"));
  CHECK(failed.stage == Stage::kFailed);
  CHECK(failed.error.rfind("Generating", 0) == 0);
  CHECK(fs::exists(dir / "segments.json"));
  CHECK_FALSE(fs::exists(dir / "pool.json"));

  Providers fresh = MakeProviders(c);
  auto counting = std::make_unique<Counting<HashEmbeddingProvider>>();
  auto* counter = counting.get();
  fresh.embedding = std::move(counting);
  const RunResult r = RunPipeline(DataDir() / "demo_meeting.json", c, &fresh);
  CHECK(r.job.stage == Stage::kDone);
  CHECK(r.job.skipped_stages == std::vector<std::string>{"Segmenting"});
  // Only normalization embeds; segmentation was reused.
  CHECK(counter->embed_calls == 3);

  const RunResult again = RunPipeline(DataDir() / "demo_meeting.json", c);
  CHECK(again.job.skipped_stages.size() == 6);
  const RunResult forced = RunPipeline(DataDir() / "demo_meeting.json", c, nullptr, true);
  CHECK(forced.job.skipped_stages.empty());
}

TEST_CASE("a corrupt artifact is recomputed along with everything after it") {
  TempDir tmp;
  const PipelineConfig c = DemoConfig(tmp.path());
  RunPipeline(DataDir() / "demo_meeting.json", c);
  const fs::path dir = tmp.path() / "demo_product_meeting";
  const std::string before = ReadFile(dir / "questionnaire.json");
  WriteFileAtomic(dir / "tagged.json", "{\"version\": 1, \"segments\": 7}");
  const RunResult r = RunPipeline(DataDir() / "demo_meeting.json", c);
  CHECK(r.job.skipped_stages == std::vector<std::string>{"Segmenting", "Generating"});
  CHECK(ReadFile(dir / "questionnaire.json") == before);
}

TEST_CASE("runs are deterministic and parallel runs match sequential ones") {
  TempDir a;
  TempDir b;
  TempDir d;
  fs::copy_file(DataDir() / "demo_meeting.json", d.path() / "first.json");
  auto j = ReadJson(DataDir() / "demo_meeting.json");
  j.erase("meeting_id");
  j["meeting_transcripts"].erase(j["meeting_transcripts"].begin(), j["meeting_transcripts"].begin() + 21);
  WriteJson(d.path() / "second.json", j);
  std::ofstream(d.path() / "broken.txt") << "no tab here\n";

  const auto seq = RunPipelines({d.path() / "first.json", d.path() / "second.json"}, DemoConfig(a.path()), 1);
  const auto par = RunPipelines({d.path() / "first.json", d.path() / "second.json", d.path() / "broken.txt"},
                                DemoConfig(b.path()), 3);
  REQUIRE(par.size() == 3);
  CHECK(par[0].job.stage == Stage::kDone);
  CHECK(par[1].job.meeting_id == "second");
  CHECK(par[2].job.stage == Stage::kFailed);
  for (const std::string m : {"demo_product_meeting", "second"}) {
    CHECK(ReadAll(a.path() / m, true) == ReadAll(b.path() / m, true));
  }
  CHECK(seq[0].questionnaire_path.filename() == "questionnaire.json");
}

TEST_CASE("artifact loaders validate") {
  const std::vector<Segment> segs = {{"seg-01", {0, 4}, "m"}, {"seg-02", {4, 9}, "m"}};
  CHECK(SegmentsFromJson(SegmentsToJson(segs)) == segs);
  const std::vector<Segment> gap = {{"seg-01", {0, 4}, "m"}, {"seg-02", {5, 9}, "m"}};
  CHECK_THROWS_AS(SegmentsFromJson(SegmentsToJson(gap)), Error);
  CHECK_THROWS_AS(SegmentsFromJson(nlohmann::json{{"version", 1}}), Error);

  QuestionPool pool;
  pool.segment_id = "seg-01";
  pool.questions.push_back(PooledQuestion{"seg-01-q0000", "Why?", {{0.25, 2, 0}}});
  pool.calls_total = 4;
  const auto back = PoolsFromJson(PoolsToJson({pool}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].questions[0].provenance == pool.questions[0].provenance);
  CHECK(back[0].calls_total == 4);

  TempDir tmp;
  CHECK_THROWS_AS(ReadFile(tmp.path() / "missing.json"), Error);
  WriteFileAtomic(tmp.path() / "x.json", "{\"a\": 1}");
  CHECK(ReadJson(tmp.path() / "x.json")["a"] == 1);
}

TEST_CASE("plain transcripts load with the file stem as id") {
  TempDir tmp;
  std::ofstream(tmp.path() / "standup.txt") << "Ann\tMorning all.\nBo\tHi.\n";
  const Transcript t = LoadTranscript(tmp.path() / "standup.txt");
  CHECK(t.meeting_id == "standup");
  CHECK(t.size() == 2);
}
