#include "preme/artifacts.h"

#include <fstream>
#include <sstream>

#include "preme/labels.h"

namespace preme {

using nlohmann::json;

namespace {

void CheckVersion(const json& j, const std::string& what) {
  if (!j.is_object() || j.value("version", 0) != kArtifactVersion) {
    throw Error(ErrorCode::kMalformedInput, what + ": missing or unsupported version");
  }
}

}  // namespace

json SegmentsToJson(const std::vector<Segment>& segments) {
  json arr = json::array();
  for (const auto& s : segments) {
    arr.push_back({{"segment_id", s.segment_id},
                   {"meeting_id", s.meeting_id},
                   {"turns", {s.turns.start, s.turns.end}}});
  }
  return json{{"version", kArtifactVersion}, {"segments", std::move(arr)}};
}

std::vector<Segment> SegmentsFromJson(const json& j) {
  return ParseArtifact("segments", [&] {
    CheckVersion(j, "segments");
    std::vector<Segment> out;
    int expected_start = 0;
    for (const auto& s : j.at("segments")) {
      Segment seg;
      seg.segment_id = s.at("segment_id").get<std::string>();
      seg.meeting_id = s.at("meeting_id").get<std::string>();
      const auto t = s.at("turns").get<std::vector<int>>();
      if (t.size() != 2 || t[0] != expected_start || t[1] <= t[0]) {
        throw Error(ErrorCode::kMalformedInput, "segments: turns do not partition the transcript");
      }
      seg.turns = TurnRange{t[0], t[1]};
      expected_start = t[1];
      out.push_back(std::move(seg));
    }
    return out;
  });
}

json PoolsToJson(const std::vector<QuestionPool>& pools) {
  json arr = json::array();
  for (const auto& p : pools) {
    json questions = json::array();
    for (const auto& q : p.questions) {
      json prov = json::array();
      for (const auto& c : q.provenance) {
        prov.push_back({{"temperature", c.temperature}, {"trial", c.trial}, {"window", c.window}});
      }
      questions.push_back({{"id", q.id}, {"text", q.text}, {"provenance", std::move(prov)}});
    }
    arr.push_back({{"segment_id", p.segment_id},
                   {"questions", std::move(questions)},
                   {"calls_total", p.calls_total},
                   {"calls_failed", p.calls_failed},
                   {"calls_empty", p.calls_empty},
                   {"warnings", p.warnings}});
  }
  return json{{"version", kArtifactVersion}, {"pools", std::move(arr)}};
}

std::vector<QuestionPool> PoolsFromJson(const json& j) {
  return ParseArtifact("pool", [&] {
    CheckVersion(j, "pool");
    std::vector<QuestionPool> out;
    for (const auto& p : j.at("pools")) {
      QuestionPool pool;
      pool.segment_id = p.at("segment_id").get<std::string>();
      for (const auto& q : p.at("questions")) {
        PooledQuestion pq;
        pq.id = q.at("id").get<std::string>();
        pq.text = q.at("text").get<std::string>();
        for (const auto& c : q.at("provenance")) {
          pq.provenance.push_back(CallRecord{c.at("temperature").get<double>(),
                                             c.at("trial").get<int>(), c.at("window").get<int>()});
        }
        pool.questions.push_back(std::move(pq));
      }
      pool.calls_total = p.at("calls_total").get<int>();
      pool.calls_failed = p.at("calls_failed").get<int>();
      pool.calls_empty = p.at("calls_empty").get<int>();
      pool.warnings = p.at("warnings").get<std::vector<std::string>>();
      out.push_back(std::move(pool));
    }
    return out;
  });
}

json TaggedToJson(const std::vector<std::vector<TaggedQuestion>>& per_segment) {
  json segments = json::array();
  for (const auto& questions : per_segment) {
    json arr = json::array();
    for (const auto& q : questions) {
      std::vector<std::string> labels;
      for (Label l : q.tags.labels) labels.emplace_back(LabelName(l));
      arr.push_back({{"id", q.id},
                     {"text", q.text},
                     {"tokens", q.tokens},
                     {"pos", q.pos},
                     {"labels", labels},
                     {"subjects", q.Subjects()},
                     {"aspects", q.Aspects()},
                     {"sequence_log_prob", q.tags.sequence_log_prob}});
    }
    segments.push_back(std::move(arr));
  }
  return json{{"version", kArtifactVersion}, {"segments", std::move(segments)}};
}

std::vector<std::vector<TaggedQuestion>> TaggedFromJson(const json& j) {
  return ParseArtifact("tagged", [&] {
    CheckVersion(j, "tagged");
    std::vector<std::vector<TaggedQuestion>> out;
    for (const auto& seg : j.at("segments")) {
      std::vector<TaggedQuestion> questions;
      for (const auto& q : seg) {
        TaggedQuestion t;
        t.id = q.at("id").get<std::string>();
        t.text = q.at("text").get<std::string>();
        t.tokens = q.at("tokens").get<std::vector<std::string>>();
        t.pos = q.at("pos").get<std::vector<std::string>>();
        for (const auto& name : q.at("labels").get<std::vector<std::string>>()) {
          auto label = ParseLabel(name);
          if (!label) throw Error(ErrorCode::kUnknownLabel, "tagged: '" + name + "'");
          t.tags.labels.push_back(*label);
        }
        if (t.tags.labels.size() != t.tokens.size() || t.pos.size() != t.tokens.size()) {
          throw Error(ErrorCode::kMalformedInput, "tagged: length mismatch in " + t.id);
        }
        if (!SatisfiesBio(t.tags.labels)) {
          throw Error(ErrorCode::kMalformedInput, "tagged: invalid BIO sequence in " + t.id);
        }
        const SpanSet spans = SpansFromLabels(t.tags.labels);
        t.tags.subject_spans = spans.subjects;
        t.tags.aspect_spans = spans.aspects;
        t.tags.sequence_log_prob = q.at("sequence_log_prob").get<double>();
        questions.push_back(std::move(t));
      }
      out.push_back(std::move(questions));
    }
    return out;
  });
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileAtomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kConfiguration, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::kConfiguration, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void WriteJson(const std::filesystem::path& path, const json& j) {
  WriteFileAtomic(path, j.dump(2) + "\n");
}

json ReadJson(const std::filesystem::path& path) {
  const std::string raw = ReadFile(path);
  try {
    return json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, path.string() + ": " + e.what());
  }
}

}  // namespace preme
