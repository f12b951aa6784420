#include "lexdrift/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <sstream>

#include "lexdrift/error.hpp"
#include "lexdrift/unicode.hpp"

namespace lexdrift {
namespace {

constexpr std::array<std::pair<Track, std::string_view>, 6> kTracks{{
    {Track::oral, "oral"},
    {Track::spotlight, "spotlight"},
    {Track::poster, "poster"},
    {Track::reject, "reject"},
    {Track::withdrawn, "withdrawn"},
    {Track::unknown, "unknown"},
}};

constexpr std::array<std::pair<Kind, std::string_view>, 2> kKinds{{
    {Kind::abstract, "abstract"},
    {Kind::transcript, "transcript"},
}};

template <class Set, class Fmt>
std::string join_set(const Set& values, Fmt fmt) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += '|';
    out += fmt(v);
  }
  return out;
}

const nlohmann::json& require(const nlohmann::json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) throw DataError(std::string("missing field ") + field);
  return *it;
}

std::string require_string(const nlohmann::json& record, const char* field) {
  const auto& v = require(record, field);
  if (!v.is_string()) throw DataError(std::string("field ") + field + " must be a string");
  return v.get<std::string>();
}

Document parse_record(const nlohmann::json& record) {
  if (!record.is_object()) throw DataError("record is not a JSON object");
  Document doc;
  doc.id = require_string(record, "id");
  doc.venue = require_string(record, "venue");
  const auto& year = require(record, "year");
  if (!year.is_number_integer()) throw DataError("field year must be an integer");
  doc.year = year.get<int>();
  const auto track = require_string(record, "track");
  auto t = parse_track(track);
  if (!t) throw DataError("unknown track '" + track + "'");
  doc.track = *t;
  const auto kind = require_string(record, "kind");
  auto k = parse_kind(kind);
  if (!k) throw DataError("unknown kind '" + kind + "'");
  doc.kind = *k;
  doc.text = require_string(record, "text");
  validate(doc);
  return doc;
}

}  // namespace

std::string_view to_string(Track track) {
  for (const auto& [t, name] : kTracks) {
    if (t == track) return name;
  }
  return "unknown";
}

std::string_view to_string(Kind kind) {
  return kind == Kind::abstract ? "abstract" : "transcript";
}

std::optional<Track> parse_track(std::string_view s) {
  for (const auto& [t, name] : kTracks) {
    if (name == s) return t;
  }
  return std::nullopt;
}

std::optional<Kind> parse_kind(std::string_view s) {
  for (const auto& [k, name] : kKinds) {
    if (name == s) return k;
  }
  return std::nullopt;
}

void validate(const Document& doc) {
  if (doc.id.empty()) throw DataError("document id is empty");
  if (doc.year < 1900 || doc.year > 2100) {
    throw DataError("document '" + doc.id + "': year " + std::to_string(doc.year) +
                    " outside [1900, 2100]");
  }
  if (!unicode::is_valid_utf8(doc.text) || !unicode::is_valid_utf8(doc.id) ||
      !unicode::is_valid_utf8(doc.venue)) {
    throw DataError("document '" + doc.id + "': invalid UTF-8");
  }
}

Corpus::Corpus(std::string label) : label_(std::move(label)) {
  if (label_.empty()) throw DataError("corpus label is empty");
}

Corpus::Corpus(std::string label, std::vector<Document> documents) : Corpus(std::move(label)) {
  documents_.reserve(documents.size());
  for (auto& d : documents) add(std::move(d));
}

void Corpus::add(Document doc) {
  validate(doc);
  auto [it, inserted] = index_.emplace(doc.id, documents_.size());
  if (!inserted) throw DataError("duplicate id '" + doc.id + "'");
  documents_.push_back(std::move(doc));
}

const Document* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &documents_[it->second];
}

bool CorpusFilter::matches(const Document& doc) const {
  if (venues && !venues->contains(doc.venue)) return false;
  if (years && !years->contains(doc.year)) return false;
  if (tracks && !tracks->contains(doc.track)) return false;
  if (kinds && !kinds->contains(doc.kind)) return false;
  return true;
}

std::string CorpusFilter::describe() const {
  std::vector<std::string> parts;
  if (venues) parts.push_back("venues=" + join_set(*venues, [](const std::string& v) { return v; }));
  if (years) parts.push_back("years=" + join_set(*years, [](int y) { return std::to_string(y); }));
  if (tracks) {
    parts.push_back("tracks=" + join_set(*tracks, [](Track t) { return std::string(to_string(t)); }));
  }
  if (kinds) {
    parts.push_back("kinds=" + join_set(*kinds, [](Kind k) { return std::string(to_string(k)); }));
  }
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ';';
    out += p;
  }
  return out;
}

Corpus ingest_jsonl(std::istream& in, std::string label) {
  Corpus corpus(std::move(label));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
      }
      corpus.add(parse_record(record));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

std::string to_jsonl_line(const Document& doc) {
  nlohmann::ordered_json record;
  record["id"] = doc.id;
  record["venue"] = doc.venue;
  record["year"] = doc.year;
  record["track"] = to_string(doc.track);
  record["kind"] = to_string(doc.kind);
  record["text"] = doc.text;
  return record.dump();
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents()) out << to_jsonl_line(doc) << '\n';
}

Corpus select(const Corpus& corpus, const CorpusFilter& filter) {
  std::string label = corpus.label();
  if (!filter.empty()) {
    const std::string suffix = "{" + filter.describe() + "}";
    if (!label.ends_with(suffix)) label += suffix;
  }
  Corpus out(std::move(label));
  for (const auto& doc : corpus.documents()) {
    if (filter.matches(doc)) out.add(doc);
  }
  return out;
}

}  // namespace lexdrift
