#include "preme/transcript.h"

#include <sstream>

#include "preme/error.h"
#include "preme/text.h"

namespace preme {

using nlohmann::json;

std::string_view CategoryName(Category category) {
  switch (category) {
    case Category::kAcademic: return "Academic";
    case Category::kCommittee: return "Committee";
    case Category::kProduct: return "Product";
    case Category::kOther: return "Other";
  }
  return "Other";
}

Category ParseCategory(std::string_view name) {
  const std::string lower = CaseFold(name);
  if (lower == "academic") return Category::kAcademic;
  if (lower == "committee") return Category::kCommittee;
  if (lower == "product") return Category::kProduct;
  return Category::kOther;
}

bool IsValidUtf8(std::string_view bytes) {
  size_t i = 0;
  const size_t n = bytes.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    int extra = 0;
    uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= n) return false;
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(bytes[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
        (extra == 3 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

namespace {

Transcript Finish(Transcript t) {
  if (t.turns.empty()) {
    throw Error(ErrorCode::kEmptyTranscript,
                "transcript '" + t.meeting_id + "' has no turns");
  }
  t.degenerate_turns.clear();
  for (size_t i = 0; i < t.turns.size(); ++i) {
    t.turns[i].index = static_cast<int>(i);
    if (Trim(t.turns[i].text).empty()) {
      t.degenerate_turns.push_back(static_cast<int>(i));
    }
  }
  return t;
}

Transcript ParsePlainTurns(std::string_view raw, std::string_view meeting_id) {
  Transcript t;
  t.meeting_id = std::string(meeting_id);
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= raw.size()) {
    size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty()) {
      if (nl == raw.size()) break;
      continue;
    }
    const size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kMalformedInput,
                  "line " + std::to_string(line_no) + ": missing TAB");
    }
    std::string speaker = Trim(line.substr(0, tab));
    if (speaker.empty()) {
      throw Error(ErrorCode::kMalformedInput,
                  "line " + std::to_string(line_no) + ": empty speaker");
    }
    t.turns.push_back(Turn{0, std::move(speaker),
                           std::string(line.substr(tab + 1))});
    if (nl == raw.size()) break;
  }
  return Finish(std::move(t));
}

}  // namespace

Transcript TranscriptFromJson(const json& j, std::string_view fallback_id) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedInput, "transcript must be a JSON object");
  }
  auto it = j.find("meeting_transcripts");
  if (it == j.end() || !it->is_array()) {
    throw Error(ErrorCode::kMalformedInput,
                "missing 'meeting_transcripts' array");
  }
  Transcript t;
  t.meeting_id = std::string(fallback_id);
  if (auto id = j.find("meeting_id"); id != j.end() && id->is_string()) {
    t.meeting_id = id->get<std::string>();
  }
  if (auto cat = j.find("category"); cat != j.end() && cat->is_string()) {
    t.category = ParseCategory(cat->get<std::string>());
  }
  size_t k = 0;
  for (const json& turn : *it) {
    const std::string where = "turn " + std::to_string(k++);
    if (!turn.is_object()) {
      throw Error(ErrorCode::kMalformedInput, where + " is not an object");
    }
    auto sp = turn.find("speaker");
    auto ct = turn.find("content");
    if (sp == turn.end() || !sp->is_string()) {
      throw Error(ErrorCode::kMalformedInput, where + ": missing 'speaker'");
    }
    if (ct == turn.end() || !ct->is_string()) {
      throw Error(ErrorCode::kMalformedInput, where + ": missing 'content'");
    }
    std::string speaker = Trim(sp->get<std::string>());
    if (speaker.empty()) {
      throw Error(ErrorCode::kMalformedInput, where + ": empty speaker");
    }
    t.turns.push_back(Turn{0, std::move(speaker), ct->get<std::string>()});
  }
  return Finish(std::move(t));
}

Transcript ParseTranscript(std::string_view raw, TranscriptFormat format,
                           std::string_view meeting_id) {
  if (!IsValidUtf8(raw)) {
    throw Error(ErrorCode::kMalformedInput, "input is not valid UTF-8");
  }
  if (format == TranscriptFormat::kPlainTurns) {
    return ParsePlainTurns(raw, meeting_id);
  }
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
  return TranscriptFromJson(j, meeting_id);
}

json TranscriptToJson(const Transcript& transcript) {
  json turns = json::array();
  for (const Turn& turn : transcript.turns) {
    turns.push_back({{"speaker", turn.speaker}, {"content", turn.text}});
  }
  return json{{"meeting_id", transcript.meeting_id},
              {"category", std::string(CategoryName(transcript.category))},
              {"meeting_transcripts", std::move(turns)}};
}

std::string TranscriptToPlainTurns(const Transcript& transcript) {
  std::string out;
  for (const Turn& turn : transcript.turns) {
    out += turn.speaker;
    out += '\t';
    out += turn.text;
    out += '\n';
  }
  return out;
}

AnnotationSet ParseAnnotations(std::string_view raw) {
  if (!IsValidUtf8(raw)) {
    throw Error(ErrorCode::kMalformedInput, "annotations are not valid UTF-8");
  }
  AnnotationSet out;
  AnnotatedQuestion current;
  auto finish = [&] {
    if (current.tokens.empty()) return;
    const int qi = static_cast<int>(out.questions.size());
    for (int p : RepairBio(current.labels)) {
      out.warnings.push_back(AnnotationWarning{
          qi, p, "orphan inside label promoted to begin"});
    }
    out.questions.push_back(std::move(current));
    current = AnnotatedQuestion{};
  };

  std::istringstream in{std::string(raw)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) {
      finish();
      continue;
    }
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw Error(ErrorCode::kMalformedInput,
                  "line " + std::to_string(line_no) +
                      ": expected TOKEN<TAB>POS<TAB>LABEL");
    }
    std::string token = line.substr(0, t1);
    std::string pos = line.substr(t1 + 1, t2 - t1 - 1);
    auto label = ParseLabel(Trim(line.substr(t2 + 1)));
    if (token.empty() || pos.empty() || !label) {
      throw Error(ErrorCode::kMalformedInput,
                  "line " + std::to_string(line_no) + ": bad token, POS or label");
    }
    current.tokens.push_back(std::move(token));
    current.pos.push_back(std::move(pos));
    current.labels.push_back(*label);
  }
  finish();
  return out;
}

std::string SerializeAnnotations(const std::vector<AnnotatedQuestion>& items) {
  std::string out;
  for (size_t q = 0; q < items.size(); ++q) {
    if (q > 0) out += '\n';
    const AnnotatedQuestion& a = items[q];
    for (size_t i = 0; i < a.tokens.size(); ++i) {
      out += a.tokens[i];
      out += '\t';
      out += a.pos[i];
      out += '\t';
      out += LabelName(a.labels[i]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace preme
