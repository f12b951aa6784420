#include "lexdrift/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "lexdrift/control_groups.hpp"
#include "lexdrift/corpus.hpp"
#include "lexdrift/csv.hpp"
#include "lexdrift/error.hpp"
#include "lexdrift/frequency.hpp"
#include "lexdrift/impact.hpp"
#include "lexdrift/latex.hpp"
#include "lexdrift/llm_sim.hpp"
#include "lexdrift/manifest.hpp"
#include "lexdrift/vtt.hpp"

namespace lexdrift::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
std::string join(const std::vector<T>& values, const char* sep = ",") {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << sep;
    if constexpr (std::is_floating_point_v<T>) {
      os << csv::format_number(values[i]);
    } else {
      os << values[i];
    }
  }
  return os.str();
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || fs::is_directory(path)) throw DataError("missing input file: " + path.string());
  return in;
}

std::string read_file(const fs::path& path) {
  auto in = open_input(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool is_corpus_path(const fs::path& p) { return p.extension() == ".jsonl"; }

struct Globals {
  std::string rules_path;
  std::string normalize_to;
  std::string out_dir = "out";
  bool strict = false;
};

struct FilterArgs {
  std::vector<std::string> venues;
  std::vector<int> years;
  std::vector<std::string> tracks;
  std::vector<std::string> kinds;

  void attach(CLI::App* cmd, const std::string& prefix = "") {
    cmd->add_option("--" + prefix + "venues", venues, "Keep only these venues")->delimiter(',');
    cmd->add_option("--" + prefix + "years", years, "Keep only these years")->delimiter(',');
    cmd->add_option("--" + prefix + "tracks", tracks, "Keep only these tracks")->delimiter(',');
    cmd->add_option("--" + prefix + "kinds", kinds, "Keep only these kinds")->delimiter(',');
  }

  CorpusFilter build() const {
    CorpusFilter f;
    if (!venues.empty()) f.venues.emplace(venues.begin(), venues.end());
    if (!years.empty()) f.years.emplace(years.begin(), years.end());
    if (!tracks.empty()) {
      f.tracks.emplace();
      for (const auto& t : tracks) {
        auto parsed = parse_track(t);
        if (!parsed) throw UsageError("unknown track '" + t + "'");
        f.tracks->insert(*parsed);
      }
    }
    if (!kinds.empty()) {
      f.kinds.emplace();
      for (const auto& k : kinds) {
        auto parsed = parse_kind(k);
        if (!parsed) throw UsageError("unknown kind '" + k + "'");
        f.kinds->insert(*parsed);
      }
    }
    return f;
  }
};

class Runner {
 public:
  Runner(const Globals& globals, std::ostream& out, std::ostream& err, std::string command)
      : g_(globals), out_(out), err_(err) {
    manifest_.command = std::move(command);
    manifest_.tool_version = kToolVersion;
    if (!g_.rules_path.empty()) manifest_.parameters["rules"] = g_.rules_path;
    if (!g_.normalize_to.empty()) manifest_.parameters["normalize_to"] = g_.normalize_to;
    manifest_.parameters["strict"] = g_.strict ? "true" : "false";
  }

  const Globals& globals() const { return g_; }
  std::ostream& out() { return out_; }
  RunManifest& manifest() { return manifest_; }

  void warn(const std::string& msg) {
    err_ << "warning: " << msg << '\n';
    manifest_.notes.push_back(msg);
  }

  void param(const std::string& key, const std::string& value) { manifest_.parameters[key] = value; }

  const TokenRules& rules() {
    if (!rules_) {
      if (g_.rules_path.empty()) {
        rules_ = TokenRules{};
      } else {
        rules_ = parse_token_rules(read_file(g_.rules_path));
        manifest_.add_input(g_.rules_path);
      }
      param("token_rules", dump_token_rules(*rules_));
    }
    return *rules_;
  }

  Corpus load_corpus(const fs::path& path, const std::string& label = "corpus") {
    auto in = open_input(path);
    manifest_.add_input(path);
    try {
      return ingest_jsonl(in, label);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }

  FrequencyTable load_table(const fs::path& path, const CorpusFilter& filter = {}) {
    if (is_corpus_path(path)) return count_frequencies(select(load_corpus(path), filter), rules());
    auto in = open_input(path);
    manifest_.add_input(path);
    try {
      return read_frequency_csv(in);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }

  /// Reference total from --normalize-to: a number, or a frequency CSV whose
  /// total is used.
  std::optional<double> normalize_target() {
    if (g_.normalize_to.empty()) return std::nullopt;
    try {
      const double v = csv::parse_number(g_.normalize_to);
      if (!(v > 0)) throw UsageError("--normalize-to must be positive");
      return v;
    } catch (const DataError&) {
      return load_table(g_.normalize_to).total();
    }
  }

  fs::path out_dir() {
    fs::path dir = g_.out_dir;
    fs::create_directories(dir);
    return dir;
  }

  void emit(const std::string& name, const std::function<void(std::ostream&)>& writer) {
    const auto path = out_dir() / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    writer(os);
    if (!os.flush()) throw DataError("cannot write " + path.string());
    manifest_.outputs.push_back(name);
  }

  void finish() {
    manifest_.timestamp = current_timestamp();
    manifest_.write(out_dir());
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
  RunManifest manifest_;
  std::optional<TokenRules> rules_;
};

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string label = "corpus";
  std::string id_prefix;
  std::string vtt_venue = "unknown";
  int vtt_year = 0;
  std::string vtt_track = "unknown";
};

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, Runner& run) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) {
      std::vector<fs::path> entries;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".vtt" || ext == ".jsonl")) entries.push_back(e.path());
      }
      std::sort(entries.begin(), entries.end());
      if (entries.empty()) run.warn("directory " + p.string() + " has no .vtt or .jsonl files");
      files.insert(files.end(), entries.begin(), entries.end());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw DataError("missing input file: " + p.string());
    }
  }
  return files;
}

int cmd_ingest(Runner& run, const IngestArgs& a) {
  run.param("label", a.label);
  run.param("id_prefix", a.id_prefix);
  run.param("vtt_venue", a.vtt_venue);
  run.param("vtt_year", std::to_string(a.vtt_year));
  run.param("vtt_track", a.vtt_track);
  const auto track = parse_track(a.vtt_track);
  if (!track) throw UsageError("unknown track '" + a.vtt_track + "'");

  Corpus corpus(a.label);
  for (const auto& file : expand_inputs(a.inputs, run)) {
    std::vector<Document> docs;
    try {
      if (file.extension() == ".vtt") {
        if (a.vtt_year == 0) throw UsageError("--vtt-year is required to ingest .vtt files");
        Document d;
        d.id = a.id_prefix + file.stem().string();
        d.venue = a.vtt_venue;
        d.year = a.vtt_year;
        d.track = *track;
        d.kind = Kind::transcript;
        d.text = parse_vtt(read_file(file));
        docs.push_back(std::move(d));
      } else {
        auto in = open_input(file);
        const Corpus parsed = ingest_jsonl(in);
        for (auto d : parsed.documents()) {
          d.id = a.id_prefix + d.id;
          if (d.kind == Kind::abstract) {
            auto stripped = strip_latex_artifacts(d.text);
            for (const auto& w : stripped.warnings) run.warn(file.string() + " [" + d.id + "]: " + w);
            d.text = std::move(stripped.text);
          }
          docs.push_back(std::move(d));
        }
      }
    } catch (const DataError& e) {
      if (run.globals().strict) throw DataError(file.string() + ": " + e.what());
      run.warn("skipped " + file.string() + ": " + e.what());
      continue;
    }
    run.manifest().add_input(file);
    for (auto& d : docs) corpus.add(std::move(d));
  }
  if (corpus.empty()) run.warn("no documents ingested");

  run.emit("documents.jsonl", [&](std::ostream& os) { write_jsonl(corpus, os); });
  run.finish();
  run.out() << "documents," << corpus.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- freq

struct FreqArgs {
  std::string corpus;
  FilterArgs filter;
  bool per_document = false;
};

int cmd_freq(Runner& run, const FreqArgs& a) {
  const auto filter = a.filter.build();
  run.param("corpus", a.corpus);
  run.param("filter", filter.describe());
  run.param("per_document", a.per_document ? "true" : "false");

  const auto corpus = select(run.load_corpus(a.corpus), filter);
  auto table = count_frequencies(corpus, run.rules());
  if (a.per_document && !corpus.empty()) {
    table = scaled(table, 1.0 / static_cast<double>(corpus.size()));
  }
  if (auto target = run.normalize_target()) table = normalize_to_total(table, *target);

  const auto ranking = rank_words(table, corpus.label());
  run.emit("freq.csv", [&](std::ostream& os) { write_frequency_csv(table, os); });
  run.emit("ranking.tsv", [&](std::ostream& os) { write_ranking_tsv(ranking, os); });
  run.finish();
  run.out() << "documents," << corpus.size() << "\nwords," << table.size() << "\ntotal,"
            << csv::format_number(table.total()) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- ratio-sweep

std::pair<int, int> parse_shifts(const std::string& range) {
  const auto colon = range.find(':', 1);
  if (colon == std::string::npos) throw UsageError("--shifts expects LO:HI, got '" + range + "'");
  try {
    const auto lo = static_cast<int>(csv::parse_integer(range.substr(0, colon)));
    const auto hi = static_cast<int>(csv::parse_integer(range.substr(colon + 1)));
    if (lo > 0 || hi < 0) throw UsageError("--shifts range must contain 0");
    return {lo, hi};
  } catch (const DataError&) {
    throw UsageError("--shifts expects LO:HI, got '" + range + "'");
  }
}

struct SweepArgs {
  std::string ranking;
  std::string table_s;
  std::string table_sprime;
  std::vector<std::string> words;
  std::string shifts = "-250:250";
  int bin_width = kDefaultBinWidth;
  bool raw_counts = false;
};

int cmd_ratio_sweep(Runner& run, const SweepArgs& a) {
  const auto [lo, hi] = parse_shifts(a.shifts);
  if (a.bin_width < 1) throw UsageError("--bin-width must be positive");
  std::vector<std::string> words = a.words;
  if (words.empty()) words.assign(kExampleWords.begin(), kExampleWords.end());
  run.param("ranking", a.ranking);
  run.param("s", a.table_s);
  run.param("sprime", a.table_sprime);
  run.param("words", join(words));
  run.param("shifts", std::to_string(lo) + ":" + std::to_string(hi));
  run.param("bin_width", std::to_string(a.bin_width));
  run.param("raw_counts", a.raw_counts ? "true" : "false");

  Ranking ranking;
  if (is_corpus_path(a.ranking)) {
    ranking = rank_words(run.load_table(a.ranking), a.ranking);
  } else {
    auto in = open_input(a.ranking);
    run.manifest().add_input(a.ranking);
    ranking = read_ranking_tsv(in, a.ranking);
  }
  auto table_s = run.load_table(a.table_s);
  auto table_sp = run.load_table(a.table_sprime);
  if (!a.raw_counts) {
    const double target = run.normalize_target().value_or(table_sp.total());
    table_s = normalize_to_total(table_s, target);
    table_sp = normalize_to_total(table_sp, target);
  }

  const auto group = build_group(words, ranking);
  const auto sweep = sweep_ratios(group, lo, hi, ranking, table_s, table_sp);
  run.emit("sweep.csv", [&](std::ostream& os) { write_sweep_csv(sweep, os); });
  run.emit("skipped.csv", [&](std::ostream& os) { write_skipped_csv(sweep, os); });

  std::vector<BinStats> bins;
  if (!sweep.points.empty()) bins = bin_stats(sweep, a.bin_width);
  for (const auto& b : bins) {
    if (b.degenerate) {
      run.warn("bin [" + std::to_string(b.bin_lo) + ", " + std::to_string(b.bin_hi) +
               "] has a single control point; std reported as 0");
    }
  }
  run.emit("bins.csv", [&](std::ostream& os) { write_bins_csv(bins, os); });

  std::string zscore = "nan";
  try {
    zscore = csv::format_number(target_zscore(sweep, bins));
  } catch (const DataError& e) {
    if (run.globals().strict) throw;
    run.warn(std::string("z-score undefined: ") + e.what());
  }
  run.param("zscore", zscore);
  run.finish();
  run.out() << "zscore," << zscore << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string corpus;
  FilterArgs filter;
  SimulationConfig config;
  std::string cache_dir;
  std::optional<std::int64_t> seed;
  int timeout_ms = 120000;
  int backoff_ms = 500;
};

int cmd_simulate(Runner& run, SimulateArgs a) {
  const auto filter = a.filter.build();
  auto& cfg = a.config;
  cfg.fixed_seed = a.seed;
  cfg.cache_dir = a.cache_dir.empty() ? run.out_dir() / "cache" : fs::path(a.cache_dir);
  cfg.request_timeout = std::chrono::milliseconds(a.timeout_ms);
  cfg.backoff_initial = std::chrono::milliseconds(a.backoff_ms);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  run.param("corpus", a.corpus);
  run.param("filter", filter.describe());
  run.param("endpoint", cfg.endpoint_url);
  run.param("model", cfg.model_name);
  run.param("prompt", cfg.prompt);
  run.param("temperature", csv::format_number(cfg.temperature));
  run.param("top_p", csv::format_number(cfg.top_p));
  run.param("seed", cfg.fixed_seed ? std::to_string(*cfg.fixed_seed) : "document_index");
  run.param("max_attempts", std::to_string(cfg.max_attempts));
  run.param("cached_only", cfg.cached_only ? "true" : "false");

  const auto corpus = select(run.load_corpus(a.corpus), filter);
  SimulationStats stats;
  const auto pair = revise_corpus(corpus, cfg, &stats);
  write_simulation_pair(pair, run.out_dir());
  for (const char* name : {"original.jsonl", "revised.jsonl", "status.csv"}) {
    run.manifest().outputs.emplace_back(name);
  }
  std::size_t failed = 0;
  for (const auto& s : pair.status) {
    if (!s.ok) {
      ++failed;
      run.warn("document " + s.id + " failed: " + s.reason);
    }
  }
  run.finish();
  run.out() << "revised," << pair.revised.size() << "\nfailed," << failed << "\nrequests,"
            << stats.requests_sent << "\ncache_hits," << stats.cache_hits << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- rates

struct RatesArgs {
  std::string pair_dir;
  std::string original;
  std::string revised;
};

int cmd_rates(Runner& run, const RatesArgs& a) {
  Corpus original, revised;
  if (!a.pair_dir.empty()) {
    run.param("pair", a.pair_dir);
    for (const char* name : {"original.jsonl", "revised.jsonl", "status.csv"}) {
      const auto p = fs::path(a.pair_dir) / name;
      if (fs::exists(p)) run.manifest().add_input(p);
    }
    auto pair = read_simulation_pair(a.pair_dir);
    original = pair.aligned_original();
    revised = std::move(pair.revised);
  } else {
    if (a.original.empty() || a.revised.empty()) {
      throw UsageError("rates needs --pair DIR or both --original and --revised");
    }
    run.param("original", a.original);
    run.param("revised", a.revised);
    const auto full = run.load_corpus(a.original, "original");
    revised = run.load_corpus(a.revised, "revised");
    original = Corpus("original");
    for (const auto& d : full.documents()) {
      if (revised.find(d.id)) {
        original.add(d);
      } else {
        run.warn("document " + d.id + " has no revision; dropped from both sides");
      }
    }
  }
  for (const auto& d : revised.documents()) {
    if (!original.find(d.id)) throw DataError("revised document '" + d.id + "' has no original");
  }

  auto s1 = count_frequencies(original, run.rules());
  auto s2 = count_frequencies(revised, run.rules());
  const double target = run.normalize_target().value_or(s1.total());
  s1 = normalize_to_total(s1, target);
  s2 = normalize_to_total(s2, target);

  const auto rates = change_rates(s1, s2);
  run.emit("rates.csv", [&](std::ostream& os) { write_change_rates_csv(rates, os); });
  run.emit("excluded.csv", [&](std::ostream& os) {
    csv::write_row(os, {"word", "f_s2"});
    for (const auto& w : rates.excluded) csv::write_row(os, {w, csv::format_number(s2.count(w))});
  });
  run.finish();
  run.out() << "documents," << original.size() << "\nrates," << rates.rates.size()
            << "\nexcluded," << rates.excluded.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string observed;
  std::string baseline;
  std::string rates;
  FilterArgs filter;
  FilterArgs star_filter;
  std::vector<double> grid_f = kDefaultGridF;
  std::vector<double> grid_r = kDefaultGridR;
  std::string allowlist;
  double f_unit = 1.0;
  std::string f_bound = "floor";
  std::vector<int> baseline_years;
};

void write_residuals(std::ostream& os, const ImpactEstimate& est) {
  csv::write_row(os, {"word", "residual"});
  for (const auto& [w, d] : est.residuals) csv::write_row(os, {w, csv::format_number(d)});
}

int cmd_estimate(Runner& run, const EstimateArgs& a) {
  GridOptions grid;
  grid.grid_f = a.grid_f;
  grid.grid_r = a.grid_r;
  grid.f_unit = a.f_unit;
  if (a.f_bound == "floor") {
    grid.bound = FrequencyBound::floor;
  } else if (a.f_bound == "ceiling") {
    grid.bound = FrequencyBound::ceiling;
  } else {
    throw UsageError("--f-bound must be floor or ceiling");
  }
  if (grid.grid_f.empty() || grid.grid_r.empty()) throw UsageError("grids must be nonempty");
  if (!(grid.f_unit > 0)) throw UsageError("--f-unit must be positive");
  for (double f : grid.grid_f) {
    if (!(f > 0)) throw UsageError("--grid-f values must be positive");
  }

  const auto obs_filter = a.filter.build();
  const auto star_filter = a.star_filter.build();
  run.param("observed", a.observed);
  run.param("baseline", a.baseline);
  run.param("rates", a.rates);
  run.param("filter", obs_filter.describe());
  run.param("star_filter", star_filter.describe());
  run.param("grid_f", join(grid.grid_f));
  run.param("grid_r", join(grid.grid_r));
  run.param("f_unit", csv::format_number(grid.f_unit));
  run.param("f_bound", a.f_bound);
  run.param("allowlist", a.allowlist);
  run.param("baseline_years", join(a.baseline_years));

  if (!a.allowlist.empty()) {
    auto in = open_input(a.allowlist);
    run.manifest().add_input(a.allowlist);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) grid.allowlist.insert(line);
    }
  }

  auto rates_in = open_input(a.rates);
  run.manifest().add_input(a.rates);
  const auto rates = read_change_rates_csv(rates_in);

  auto f_star = run.load_table(a.baseline, star_filter);
  const double target = run.normalize_target().value_or(f_star.total());
  f_star = normalize_to_total(f_star, target);

  auto estimate_for = [&](const FrequencyTable& observed) {
    EstimationInputs inputs{normalize_to_total(observed, target), f_star, rates};
    return sweep_estimates(inputs, grid);
  };
  auto note_skips = [&](const ImpactEstimate& est, const std::string& where) {
    for (const auto& c : est.cells) {
      if (!c.eta) {
        run.warn(where + "cell 1/f*=" + csv::format_number(c.grid_f) +
                 " r=" + csv::format_number(c.min_r) + " selected no words");
      }
    }
  };

  if (!is_corpus_path(a.observed)) {
    const auto est = estimate_for(run.load_table(a.observed));
    note_skips(est, "");
    run.emit("estimate.csv", [&](std::ostream& os) { write_estimate_csv(est, os); });
    run.emit("residuals.csv", [&](std::ostream& os) { write_residuals(os, est); });
    run.finish();
    run.out() << "eta_mean," << csv::format_number(est.mean_eta) << "\neta_std,"
              << csv::format_number(est.std_eta) << '\n';
    return kExitOk;
  }

  const auto corpus = select(run.load_corpus(a.observed), obs_filter);
  std::set<int> years;
  for (const auto& d : corpus.documents()) years.insert(d.year);
  if (years.empty()) throw DataError("observed corpus is empty after filtering");

  std::map<int, double> series;
  for (int year : years) {
    CorpusFilter by_year;
    by_year.years = std::set<int>{year};
    const auto table = count_frequencies(select(corpus, by_year), run.rules());
    ImpactEstimate est;
    try {
      est = estimate_for(table);
    } catch (const DataError& e) {
      if (run.globals().strict) throw;
      run.warn("year " + std::to_string(year) + ": " + e.what());
      continue;
    }
    note_skips(est, "year " + std::to_string(year) + ": ");
    series[year] = est.mean_eta;
    const auto y = std::to_string(year);
    run.emit("estimate_" + y + ".csv", [&](std::ostream& os) { write_estimate_csv(est, os); });
    run.emit("residuals_" + y + ".csv", [&](std::ostream& os) { write_residuals(os, est); });
    run.out() << "eta_mean_" << y << ',' << csv::format_number(est.mean_eta) << '\n';
  }
  if (series.empty()) throw DataError("no year produced an estimate");

  run.emit("series.csv", [&](std::ostream& os) {
    if (!a.baseline_years.empty()) {
      write_series_csv(calibrate(series, {a.baseline_years.begin(), a.baseline_years.end()}), os);
      return;
    }
    csv::write_row(os, {"year", "eta_raw", "eta_calibrated"});
    for (const auto& [year, v] : series) {
      csv::write_row(os, {std::to_string(year), csv::format_number(v), ""});
    }
  });
  run.finish();
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string corpus;
  std::string sweep_dir;
  std::string estimate_dir;
  std::vector<std::string> words;
  int reference_year = 0;
};

fs::path require_upstream(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing upstream file: " + path.string());
  return path;
}

void write_group_series(Runner& run, const Corpus& corpus, const std::vector<std::string>& words,
                        int reference_year, std::ostream& os) {
  using SeriesKey = std::tuple<std::string, std::string, std::string>;  // venue, kind, track
  std::map<SeriesKey, std::map<int, Corpus>> groups;
  for (const auto& d : corpus.documents()) {
    SeriesKey key{d.venue, std::string(to_string(d.kind)), std::string(to_string(d.track))};
    auto& by_year = groups[key];
    auto it = by_year.try_emplace(d.year, Corpus("series")).first;
    it->second.add(d);
  }
  csv::write_row(os, {"venue", "kind", "track", "year", "word", "frequency"});
  for (const auto& [key, by_year] : groups) {
    std::map<int, FrequencyTable> tables;
    for (const auto& [year, docs] : by_year) tables.emplace(year, count_frequencies(docs, run.rules()));
    int ref = by_year.contains(reference_year) ? reference_year : by_year.begin()->first;
    const double ref_total = tables.at(ref).total();
    for (const auto& [year, raw] : tables) {
      const auto table = (raw.total() > 0 && ref_total > 0) ? normalize_to_total(raw, ref_total) : raw;
      double group = 0.0;
      for (const auto& w : words) {
        const double f = table.count(w);
        group += f;
        csv::write_row(os, {std::get<0>(key), std::get<1>(key), std::get<2>(key),
                            std::to_string(year), w, csv::format_number(f)});
      }
      csv::write_row(os, {std::get<0>(key), std::get<1>(key), std::get<2>(key),
                          std::to_string(year), "(group)", csv::format_number(group)});
    }
  }
}

std::pair<double, double> read_estimate_summary(const fs::path& path) {
  auto in = open_input(path);
  const auto rows = csv::read(in);
  if (rows.size() < 2 || rows.back().size() != 4 || rows.back()[0] != "mean") {
    throw DataError(path.string() + ": missing summary row");
  }
  return {csv::parse_number(rows.back()[1]), csv::parse_number(rows.back()[3])};
}

int cmd_report(Runner& run, const ReportArgs& a) {
  std::vector<std::string> words = a.words;
  if (words.empty()) words.assign(kExampleWords.begin(), kExampleWords.end());
  run.param("corpus", a.corpus);
  run.param("sweep", a.sweep_dir);
  run.param("estimate", a.estimate_dir);
  run.param("words", join(words));
  run.param("reference_year", std::to_string(a.reference_year));

  // Resolve everything first so a missing file leaves no partial bundle.
  std::optional<fs::path> sweep_csv, bins_csv, series_csv;
  std::vector<std::pair<std::string, fs::path>> estimates;  // year label, file
  if (!a.corpus.empty()) require_upstream(a.corpus);
  if (!a.sweep_dir.empty()) {
    sweep_csv = require_upstream(fs::path(a.sweep_dir) / "sweep.csv");
    bins_csv = require_upstream(fs::path(a.sweep_dir) / "bins.csv");
  }
  if (!a.estimate_dir.empty()) {
    const fs::path dir = require_upstream(a.estimate_dir);
    if (fs::exists(dir / "series.csv")) {
      series_csv = dir / "series.csv";
      auto in = open_input(*series_csv);
      for (const auto& row : csv::read_with_header(in, {"year", "eta_raw", "eta_calibrated"})) {
        estimates.emplace_back(row[0], require_upstream(dir / ("estimate_" + row[0] + ".csv")));
      }
    } else {
      estimates.emplace_back("all", require_upstream(dir / "estimate.csv"));
    }
  }

  if (!a.corpus.empty()) {
    const auto corpus = run.load_corpus(a.corpus);
    run.emit("group_frequency_series.csv",
             [&](std::ostream& os) { write_group_series(run, corpus, words, a.reference_year, os); });
  } else {
    run.warn("gap: no --corpus, group_frequency_series.csv not produced");
  }

  if (sweep_csv) {
    for (const auto& [src, name] : {std::pair{*sweep_csv, "ratio_sweep.csv"},
                                    std::pair{*bins_csv, "ratio_bins.csv"}}) {
      run.manifest().add_input(src);
      const auto body = read_file(src);
      run.emit(name, [&](std::ostream& os) { os << body; });
    }
  } else {
    run.warn("gap: no --sweep, ratio_sweep.csv and ratio_bins.csv not produced");
  }

  if (!estimates.empty()) {
    std::map<std::string, std::string> calibrated;
    if (series_csv) {
      run.manifest().add_input(*series_csv);
      auto in = open_input(*series_csv);
      for (const auto& row : csv::read_with_header(in, {"year", "eta_raw", "eta_calibrated"})) {
        calibrated[row[0]] = row[2];
      }
    }
    run.emit("impact_series.csv", [&](std::ostream& os) {
      csv::write_row(os, {"year", "eta_mean", "eta_std", "eta_calibrated"});
      for (const auto& [year, file] : estimates) {
        run.manifest().add_input(file);
        const auto [mean, sd] = read_estimate_summary(file);
        csv::write_row(os, {year, csv::format_number(mean), csv::format_number(sd), calibrated[year]});
      }
    });
  } else {
    run.warn("gap: no --estimate, impact_series.csv not produced");
  }
  run.finish();
  run.out() << "bundle," << run.out_dir().string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lexdrift: word-frequency drift and LLM impact estimation for text corpora",
               "lexdrift"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  Globals g;
  app.add_option("--rules", g.rules_path, "Token rules JSON file");
  app.add_option("--normalize-to", g.normalize_to,
                 "Normalize tables to this total (number) or to the total of a frequency CSV");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_flag("--strict", g.strict, "Treat recoverable data problems as errors");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Build documents.jsonl from .jsonl and .vtt inputs");
  c_ingest->add_option("inputs", ingest.inputs, "Files or directories")->required();
  c_ingest->add_option("--label", ingest.label, "Corpus label")->capture_default_str();
  c_ingest->add_option("--id-prefix", ingest.id_prefix, "Prefix added to every document id");
  c_ingest->add_option("--vtt-venue", ingest.vtt_venue, "Venue of .vtt transcripts")->capture_default_str();
  c_ingest->add_option("--vtt-year", ingest.vtt_year, "Year of .vtt transcripts");
  c_ingest->add_option("--vtt-track", ingest.vtt_track, "Track of .vtt transcripts")->capture_default_str();

  FreqArgs freq;
  auto* c_freq = app.add_subcommand("freq", "Count word frequencies and rank words");
  c_freq->add_option("corpus", freq.corpus, "documents.jsonl")->required();
  c_freq->add_flag("--per-document", freq.per_document, "Average counts per document");
  freq.filter.attach(c_freq);

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("ratio-sweep", "Control-group frequency ratio sweep");
  c_sweep->add_option("--ranking", sweep.ranking, "Ranking TSV (or corpus .jsonl)")->required();
  c_sweep->add_option("--s", sweep.table_s, "Frequency CSV or corpus of S")->required();
  c_sweep->add_option("--sprime", sweep.table_sprime, "Frequency CSV or corpus of S'")->required();
  c_sweep->add_option("--words", sweep.words, "Target words (default: the 8 example words)")
      ->delimiter(',');
  c_sweep->add_option("--shifts", sweep.shifts, "Shift range LO:HI")->capture_default_str();
  c_sweep->add_option("--bin-width", sweep.bin_width, "Shifts per bin")->capture_default_str();
  c_sweep->add_flag("--raw-counts", sweep.raw_counts, "Skip normalization to a common total");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Revise a corpus through a chat-completion endpoint");
  c_sim->add_option("corpus", sim.corpus, "documents.jsonl")->required();
  c_sim->add_option("--endpoint", sim.config.endpoint_url, "Chat-completions URL")->capture_default_str();
  c_sim->add_option("--model", sim.config.model_name, "Model name")->capture_default_str();
  c_sim->add_option("--prompt", sim.config.prompt, "Revision prompt")->capture_default_str();
  c_sim->add_option("--temperature", sim.config.temperature)->capture_default_str();
  c_sim->add_option("--top-p", sim.config.top_p)->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Fixed seed (default: document index)");
  c_sim->add_option("--max-attempts", sim.config.max_attempts)->capture_default_str();
  c_sim->add_option("--concurrency", sim.config.concurrency_limit)->capture_default_str();
  c_sim->add_option("--timeout-ms", sim.timeout_ms)->capture_default_str();
  c_sim->add_option("--backoff-ms", sim.backoff_ms, "Initial retry delay")->capture_default_str();
  c_sim->add_option("--cache-dir", sim.cache_dir, "Response cache (default: OUT/cache)");
  c_sim->add_flag("--cached-only", sim.config.cached_only, "Use cached responses only");
  sim.filter.attach(c_sim);

  RatesArgs rates;
  auto* c_rates = app.add_subcommand("rates", "Per-word change rates between original and revised");
  c_rates->add_option("--pair", rates.pair_dir, "Directory written by simulate");
  c_rates->add_option("--original", rates.original, "Original documents.jsonl");
  c_rates->add_option("--revised", rates.revised, "Revised documents.jsonl");

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "LLM impact estimate over the criteria grid");
  c_est->add_option("--observed", est.observed, "Observed corpus (.jsonl, per year) or frequency CSV")
      ->required();
  c_est->add_option("--baseline", est.baseline, "Counterfactual corpus or frequency CSV")->required();
  c_est->add_option("--rates", est.rates, "rates.csv")->required();
  c_est->add_option("--grid-f", est.grid_f, "1/f* grid")->delimiter(',');
  c_est->add_option("--grid-r", est.grid_r, "Change-rate grid")->delimiter(',');
  c_est->add_option("--allowlist", est.allowlist, "Word-per-line allowlist");
  c_est->add_option("--f-unit", est.f_unit, "Tokens per unit of the 1/f* grid")->capture_default_str();
  c_est->add_option("--f-bound", est.f_bound, "floor or ceiling")->capture_default_str();
  c_est->add_option("--baseline-years", est.baseline_years, "Years calibrated to 0")->delimiter(',');
  est.filter.attach(c_est);
  est.star_filter.attach(c_est, "star-");

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Collect tidy plot data into one bundle");
  c_report->add_option("--corpus", report.corpus, "documents.jsonl for the group-frequency series");
  c_report->add_option("--sweep", report.sweep_dir, "Directory written by ratio-sweep");
  c_report->add_option("--estimate", report.estimate_dir, "Directory written by estimate");
  c_report->add_option("--words", report.words, "Group words")->delimiter(',');
  c_report->add_option("--reference-year", report.reference_year,
                       "Year whose total every year is normalized to (default: earliest)");

  std::vector<std::string> argv_storage{"lexdrift"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kExitUsage;
  }

  auto* sub = app.get_subcommands().front();
  Runner runner(g, out, err, sub->get_name());
  try {
    if (sub == c_ingest) return cmd_ingest(runner, ingest);
    if (sub == c_freq) return cmd_freq(runner, freq);
    if (sub == c_sweep) return cmd_ratio_sweep(runner, sweep);
    if (sub == c_sim) return cmd_simulate(runner, sim);
    if (sub == c_rates) return cmd_rates(runner, rates);
    if (sub == c_est) return cmd_estimate(runner, est);
    if (sub == c_report) return cmd_report(runner, report);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NetworkError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNetwork;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace lexdrift::cli
