#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexdrift {

enum class Track { oral, spotlight, poster, reject, withdrawn, unknown };
enum class Kind { abstract, transcript };

std::string_view to_string(Track track);
std::string_view to_string(Kind kind);
std::optional<Track> parse_track(std::string_view s);
std::optional<Kind> parse_kind(std::string_view s);

struct Document {
  std::string id;
  std::string venue;
  int year = 0;
  Track track = Track::unknown;
  Kind kind = Kind::abstract;
  std::string text;

  bool operator==(const Document&) const = default;
};

/// Throws DataError when a document violates its field invariants.
void validate(const Document& doc);

/// An ordered, labelled collection of documents with unique ids.
class Corpus {
 public:
  explicit Corpus(std::string label = "corpus");
  Corpus(std::string label, std::vector<Document> documents);

  const std::string& label() const { return label_; }
  std::span<const Document> documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  /// Appends a validated document; throws DataError on a duplicate id.
  void add(Document doc);
  const Document* find(std::string_view id) const;

 private:
  std::string label_;
  std::vector<Document> documents_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Unset dimensions select everything; a set dimension must contain the
/// document's value.
struct CorpusFilter {
  std::optional<std::set<std::string>> venues;
  std::optional<std::set<int>> years;
  std::optional<std::set<Track>> tracks;
  std::optional<std::set<Kind>> kinds;

  bool empty() const { return !venues && !years && !tracks && !kinds; }
  bool matches(const Document& doc) const;
  std::string describe() const;
};

/// Reads one document per nonempty line. Errors carry the 1-based line number.
Corpus ingest_jsonl(std::istream& in, std::string label = "corpus");

/// Writes documents with fields in the order id, venue, year, track, kind, text.
void write_jsonl(const Corpus& corpus, std::ostream& out);
std::string to_jsonl_line(const Document& doc);

Corpus select(const Corpus& corpus, const CorpusFilter& filter);

}  // namespace lexdrift
