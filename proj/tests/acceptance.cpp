// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "lexdrift/control_groups.hpp"
#include "lexdrift/csv.hpp"
#include "lexdrift/impact.hpp"
#include "lexdrift/latex.hpp"
#include "lexdrift/llm_sim.hpp"
#include "lexdrift/vtt.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace lexdrift;
namespace fs = std::filesystem;
using testutil::fixture;
using testutil::read_file;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ 1

Outcome ols_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> nwords(1, 10);
  std::uniform_real_distribution<double> fstar(1, 100), rate(-0.5, 2.0), eta(-0.5, 1.5),
      noise(-0.2, 0.2);
  double worst = 0;
  int instances = 0;
  while (instances < 200) {
    EstimationInputs in;
    FrequencyTable::Counts d, s;
    std::set<std::string> words;
    std::vector<double> y, x;
    const double planted = eta(rng);
    const int n = nwords(rng);
    for (int i = 0; i < n; ++i) {
      const std::string w = "w" + std::to_string(i);
      const double f = fstar(rng), r = rate(rng);
      const double fd = std::max(0.0, f * (1 + planted * r) * (1 + noise(rng)));
      s[w] = f;
      d[w] = fd;
      in.rates.rates[w] = r;
      words.insert(w);
      y.push_back(fd - f);
      x.push_back(f * r);
    }
    in.f_d = FrequencyTable::from_counts(d);
    in.f_star = FrequencyTable::from_counts(s);
    const double got = estimate_eta(in, words).eta;
    worst = std::max(worst, std::fabs(got - oracle::least_squares_slope(y, x)));
    ++instances;
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 1.0,
          "200 instances, max |diff| " + fmt(worst) + ", " + fmt(t) + " s (limits 1e-06, 1 s)"};
}

// ------------------------------------------------------------------ 2

struct PlantedData {
  FrequencyTable f_star;
  ChangeRates rates;
  std::map<double, FrequencyTable> f_d;  // by planted eta
};

PlantedData planted_data() {
  const std::size_t vocab_size = 400;
  const auto vocab = synthetic::vocabulary(vocab_size);
  std::mt19937_64 rng(2);
  const auto s1_docs = synthetic::sample_documents(synthetic::zipf_weights(vocab_size), 1000, 100, rng);
  const auto s2_docs = synthetic::substitute(s1_docs, pipeline::substitution_rules());
  const TokenRules rules;
  PlantedData out;
  out.f_star = count_frequencies(synthetic::make_corpus(s1_docs, vocab, "s1"), rules);
  const auto f_s2 = count_frequencies(synthetic::make_corpus(s2_docs, vocab, "s2"), rules);
  out.rates = change_rates(out.f_star, normalize_to_total(f_s2, out.f_star.total()));
  for (double eta : {0.1, 0.25, 0.5}) {
    std::vector<std::size_t> order(s1_docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 mix_rng(static_cast<std::uint64_t>(eta * 1000));
    std::shuffle(order.begin(), order.end(), mix_rng);
    auto mixed = s1_docs;
    const auto k = static_cast<std::size_t>(std::lround(eta * static_cast<double>(mixed.size())));
    for (std::size_t j = 0; j < k; ++j) mixed[order[j]] = s2_docs[order[j]];
    auto f_d = count_frequencies(synthetic::make_corpus(mixed, vocab, "mix"), rules);
    out.f_d.emplace(eta, normalize_to_total(f_d, out.f_star.total()));
  }
  return out;
}

Outcome planted_mixture() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = planted_data();
  bool ok = true;
  std::string detail;
  for (const auto& [eta, f_d] : data.f_d) {
    const auto est = sweep_estimates({f_d, data.f_star, data.rates}, GridOptions{});
    std::size_t cells = 0;
    for (const auto& c : est.cells) cells += c.eta ? 1 : 0;
    const bool hit = std::fabs(est.mean_eta - eta) <= 0.05;
    ok = ok && hit;
    detail += "eta " + fmt(eta) + " -> " + fmt(est.mean_eta) + " (" + std::to_string(cells) +
              " cells); ";
  }
  const double t = seconds_since(t0);
  return {ok && t < 10.0, detail + fmt(t) + " s (limits +-0.05, 10 s)"};
}

// ------------------------------------------------------------------ 3

Outcome exact_model() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> fstar(1, 100), rate(-0.5, 2.0), eta(0, 1);
  double worst_eta = 0, worst_resid = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double planted = eta(rng);
    EstimationInputs in;
    FrequencyTable::Counts d, s;
    std::set<std::string> words;
    const int n = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      const std::string w = "w" + std::to_string(i);
      const double f = fstar(rng), r = rate(rng);
      s[w] = f;
      d[w] = f * (1 + planted * r);
      in.rates.rates[w] = r;
      words.insert(w);
    }
    in.f_d = FrequencyTable::from_counts(d);
    in.f_star = FrequencyTable::from_counts(s);
    const auto est = estimate_eta(in, words);
    worst_eta = std::max(worst_eta, std::fabs(est.eta - planted));
    for (const auto& [w, delta] : est.residuals) worst_resid = std::max(worst_resid, std::fabs(delta));
  }
  return {worst_eta <= 1e-12 && worst_resid <= 1e-12,
          "200 instances, max |eta diff| " + fmt(worst_eta) + ", max |residual| " +
              fmt(worst_resid) + " (limit 1e-12)"};
}

// ------------------------------------------------------------------ 4

struct NullWorld {
  std::vector<std::string> vocab = synthetic::vocabulary(1500);
  std::vector<double> weights = synthetic::zipf_weights(1500);
  std::map<std::string, std::size_t> index;
  NullWorld() {
    for (std::size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = i;
  }
};

// Target ranks are 70 apart so no control shift inside the target's bin
// reuses a target word.
WordGroup null_target(const Ranking& ranking) {
  std::vector<std::string> words;
  for (std::size_t k = 0; k < 8; ++k) words.push_back(ranking.word_at(260 + 70 * k));
  return build_group(words, ranking);
}

double trial_zscore(const WordGroup& g, const Ranking& ranking, const FrequencyTable& s,
                    const FrequencyTable& sp) {
  const auto s_norm = normalize_to_total(s, sp.total());
  const auto sweep = sweep_ratios(g, kDefaultShiftLo, kDefaultShiftHi, ranking, s_norm, sp);
  return target_zscore(sweep, bin_stats(sweep, kDefaultBinWidth));
}

Outcome control_group_null() {
  const auto t0 = std::chrono::steady_clock::now();
  const NullWorld world;
  const std::size_t tokens = 200000;
  int null_ok = 0, inflated_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(4000 + static_cast<std::uint64_t>(trial));
    const auto ranking =
        rank_words(synthetic::sample_table(world.vocab, world.weights, tokens, rng), "ranking");
    const auto g = null_target(ranking);
    const auto sp = synthetic::sample_table(world.vocab, world.weights, tokens, rng);
    const auto s = synthetic::sample_table(world.vocab, world.weights, tokens, rng);
    if (std::fabs(trial_zscore(g, ranking, s, sp)) < 3) ++null_ok;

    auto boosted = world.weights;
    for (const auto& w : g.words) boosted[world.index.at(w)] *= 1.5;
    const auto s_inflated = synthetic::sample_table(world.vocab, boosted, tokens, rng);
    if (trial_zscore(g, ranking, s_inflated, sp) > 3) ++inflated_ok;
  }
  const double t = seconds_since(t0);
  return {null_ok >= 95 && inflated_ok >= 95 && t < 30.0,
          "null |z|<3 in " + std::to_string(null_ok) + "/100, inflated z>3 in " +
              std::to_string(inflated_ok) + "/100, " + fmt(t) + " s (limits 95, 95, 30 s)"};
}

// ------------------------------------------------------------------ 5

Outcome ratio_identities() {
  const NullWorld world;
  std::mt19937_64 rng(5);
  auto rank_table = synthetic::sample_table(world.vocab, world.weights, 400000, rng);
  for (const auto& w : world.vocab) rank_table.add(w, 0.5);
  const auto ranking = rank_words(rank_table, "ranking");
  const auto g = null_target(ranking);
  const auto s = synthetic::sample_table(world.vocab, world.weights, 200000, rng);
  const auto sp = synthetic::sample_table(world.vocab, world.weights, 150000, rng);

  const auto self = sweep_ratios(g, kDefaultShiftLo, kDefaultShiftHi, ranking, s, s);
  bool unit = self.points.size() == 501;
  for (const auto& p : self.points) unit = unit && p.ratio == 1.0;

  double worst = 0;
  std::size_t pairs = 0;
  auto check_reciprocal = [&](const WordGroup& grp, const Ranking& r, const FrequencyTable& a,
                              const FrequencyTable& b, int lo, int hi) {
    const auto ab = sweep_ratios(grp, lo, hi, r, a, b);
    const auto ba = sweep_ratios(grp, lo, hi, r, b, a);
    for (const auto& p : ab.points) {
      if (const auto* q = ba.at(p.shift)) {
        worst = std::max(worst, std::fabs(p.ratio * q->ratio - 1.0));
        ++pairs;
      }
    }
  };
  check_reciprocal(g, ranking, s, sp, kDefaultShiftLo, kDefaultShiftHi);

  // Bundled document fixture: 2024 versus 2023 abstracts.
  std::ifstream in(fixture("jsonl/documents.jsonl"));
  const auto docs = ingest_jsonl(in, "fixture");
  const TokenRules rules;
  const auto all = count_frequencies(docs, rules);
  const auto r_fix = rank_words(all, "fixture");
  CorpusFilter y24, y23;
  y24.years = std::set<int>{2024};
  y23.years = std::set<int>{2023};
  const auto t24 = count_frequencies(select(docs, y24), rules);
  const auto t23 = normalize_to_total(count_frequencies(select(docs, y23), rules), t24.total());
  const std::vector<std::string> fixture_words{"we"};
  const auto g_fix = build_group(fixture_words, r_fix);
  const int hi = static_cast<int>(r_fix.size() - g_fix.indices[0]);
  check_reciprocal(g_fix, r_fix, t24, t23, 1 - static_cast<int>(g_fix.indices[0]), hi);

  return {unit && worst <= 1e-12,
          "R_n(S,S)=1 at " + std::to_string(self.points.size()) + "/501 shifts; " +
              std::to_string(pairs) + " reciprocal pairs, max |R.R'-1| " + fmt(worst) +
              " (limit 1e-12)"};
}

// ------------------------------------------------------------------ 6

Outcome parser_fixtures() {
  int ok = 0, total = 0;
  std::string failures;
  for (const auto* name : {"vtt/rolling", "vtt/tagged", "vtt/crlf", "vtt_edge/header_only"}) {
    ++total;
    const auto stem = fs::path(name).filename().string();
    if (parse_vtt(read_file(fixture(std::string(name) + ".vtt"))) ==
        read_file(fixture("vtt_golden/" + stem + ".txt"))) {
      ++ok;
    } else {
      failures += std::string(" ") + name;
    }
  }
  for (const auto* name : {"malformed", "badstamp", "noheader"}) {
    ++total;
    const auto msg = testutil::error_of(
        [&] { parse_vtt(read_file(fixture(std::string("vtt_bad/") + name + ".vtt"))); });
    if (msg == read_file(fixture(std::string("vtt_bad/") + name + ".err"))) {
      ++ok;
    } else {
      failures += std::string(" ") + name;
    }
  }
  const std::vector<std::pair<std::string, std::string>> latex{
      {"\\textit{approximately valid}", "approximately valid"},
      {"see \\cite{chen2020learning} for", "see  for"},
      {"plain text", "plain text"}};
  for (const auto& [in, want] : latex) {
    ++total;
    if (strip_latex_artifacts(in).text == want) {
      ++ok;
    } else {
      failures += " latex:" + in;
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                           " fixtures byte-exact" + (failures.empty() ? "" : "; failed:" + failures)};
}

// ------------------------------------------------------------------ 7

Outcome protocol_conformance() {
  ::setenv(std::string(kApiKeyEnv).c_str(), "acceptance-key", 1);
  stub::ChatServer server;
  testutil::TempDir tmp("accept_sim");
  Corpus corpus("protocol");
  for (int i = 0; i < 10; ++i) {
    corpus.add({"p" + std::to_string(i), "V", 2022, Track::poster, Kind::abstract,
                "Abstract number " + std::to_string(i) + " describes a method."});
  }
  SimulationConfig cfg;
  cfg.endpoint_url = server.url();
  cfg.model_name = stub::kModel;
  cfg.cache_dir = tmp / "cache";
  SimulationStats first_stats;
  const auto first = revise_corpus(corpus, cfg, &first_stats);

  std::size_t conforming = 0;
  const auto requests = server.requests();
  for (const auto& body : requests) {
    const auto seed = body.at("seed").get<std::int64_t>();
    const auto& msgs = body.at("messages");
    const bool ok = body.at("temperature") == 1.0 && body.at("top_p") == 0.9 &&
                    body.at("model") == stub::kModel && msgs.size() == 1 &&
                    msgs[0].at("role") == "user" && seed >= 0 && seed < 10 &&
                    msgs[0].at("content") ==
                        "Revise the following sentences\n\n" +
                            corpus.documents()[static_cast<std::size_t>(seed)].text;
    conforming += ok ? 1 : 0;
  }
  const std::size_t before = server.request_count();
  SimulationStats second_stats;
  const auto second = revise_corpus(corpus, cfg, &second_stats);
  const std::size_t extra = server.request_count() - before;
  bool identical = second.revised.size() == first.revised.size();
  for (std::size_t i = 0; identical && i < first.revised.size(); ++i) {
    identical = first.revised.documents()[i] == second.revised.documents()[i];
  }
  ::unsetenv(std::string(kApiKeyEnv).c_str());
  return {requests.size() == 10 && conforming == 10 && first.revised.size() == 10 && extra == 0 &&
              second_stats.requests_sent == 0 && identical,
          std::to_string(conforming) + "/" + std::to_string(requests.size()) +
              " requests conform; cached rerun sent " + std::to_string(extra) + " requests"};
}

// ------------------------------------------------------------------ 8

Outcome grid_shape() {
  const auto data = planted_data();
  testutil::TempDir tmp("accept_grid");
  auto save = [&](const std::string& name, const std::function<void(std::ostream&)>& w) {
    std::ofstream os(tmp / name);
    w(os);
  };
  save("fd.csv", [&](std::ostream& os) { write_frequency_csv(data.f_d.at(0.25), os); });
  save("fstar.csv", [&](std::ostream& os) { write_frequency_csv(data.f_star, os); });
  save("rates.csv", [&](std::ostream& os) { write_change_rates_csv(data.rates, os); });
  const auto r = pipeline::run_cli({"estimate", "--observed", (tmp / "fd.csv").string(),
                                    "--baseline", (tmp / "fstar.csv").string(), "--rates",
                                    (tmp / "rates.csv").string(), "--out", (tmp / "out").string()});
  if (r.code != 0) return {false, "estimate exited " + std::to_string(r.code) + ": " + r.err};
  std::ifstream in(tmp / "out" / "estimate.csv");
  const auto rows = csv::read(in);
  if (rows.size() < 3 || rows.back().size() != 4 || rows.back()[0] != "mean" ||
      rows.back()[2] != "std") {
    return {false, "missing summary row"};
  }
  std::vector<double> etas;
  for (std::size_t k = 1; k + 1 < rows.size(); ++k) etas.push_back(csv::parse_number(rows[k][2]));
  const double reported = csv::parse_number(rows.back()[3]);
  const double hand = etas.size() > 1 ? oracle::sample_std(etas) : 0.0;
  const double diff = std::fabs(reported - hand);
  return {etas.size() <= 40 && diff <= 1e-12,
          std::to_string(etas.size()) + " cells (limit 40), summary std " + fmt(reported) +
              " vs hand " + fmt(hand) + ", |diff| " + fmt(diff) + " (limit 1e-12)"};
}

// ------------------------------------------------------------------ 9

Outcome table_algebra() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(0, 15), word(0, 25);
  std::uniform_real_distribution<double> value(0.0, 1e4), ref(1e-3, 1e8);
  auto random_table = [&] {
    FrequencyTable::Counts c;
    const int n = size(rng);
    for (int k = 0; k < n; ++k) c["w" + std::to_string(word(rng))] = value(rng);
    return FrequencyTable::from_counts(std::move(c));
  };
  auto close = [](const FrequencyTable& a, const FrequencyTable& b) {
    auto near = [](double x, double y) {
      return std::fabs(x - y) <= 1e-9 * std::max({1.0, std::fabs(x), std::fabs(y)});
    };
    if (!near(a.total(), b.total()) || a.size() != b.size()) return false;
    for (const auto& [w, v] : a.counts())
      if (!near(v, b.count(w))) return false;
    return true;
  };
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_table(), b = random_table(), c = random_table();
    bool ok = close(merge(std::vector{a, b}), merge(std::vector{b, a}));
    ok = ok && close(merge(std::vector{merge(std::vector{a, b}), c}),
                     merge(std::vector{a, merge(std::vector{b, c})}));
    if (!a.empty() && a.total() > 0) {
      const auto n = normalize_to_total(a, ref(rng));
      for (const auto& [u, cu] : a.counts()) {
        for (const auto& [v, cv] : a.counts()) {
          if (cu > 0 && cv > 0) {
            const double before = cu / cv;
            ok = ok && std::fabs(n.count(u) / n.count(v) - before) <= 1e-12 * before;
          }
        }
      }
    }
    failures += ok ? 0 : 1;
  }
  const double t = seconds_since(t0);
  return {failures == 0 && t < 5.0, std::to_string(1000 - failures) + "/1000 cases hold, " +
                                        fmt(t) + " s (limit 5 s)"};
}

// ------------------------------------------------------------------ 10

Outcome end_to_end_determinism() {
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  ::setenv(std::string(kApiKeyEnv).c_str(), "acceptance-key", 1);
  stub::ChatServer server(pipeline::substitution_handler());
  testutil::TempDir a("accept_e2e_a"), b("accept_e2e_b");
  for (const auto* dir : {&a, &b}) {
    pipeline::write_inputs(dir->path(), fixture("vtt"));
    pipeline::ScopedCwd cwd(dir->path());
    const auto r = pipeline::run_all(server.url());
    if (r.code != 0) return {false, "pipeline failed: " + r.err};
  }
  ::unsetenv(std::string(kApiKeyEnv).c_str());
  ::unsetenv("SOURCE_DATE_EPOCH");

  auto compare_tree = [&](const fs::path& sub, std::size_t& files, std::size_t& differing) {
    std::size_t other = 0;
    for (const auto& e : fs::recursive_directory_iterator(a / sub.string())) {
      if (!e.is_regular_file()) continue;
      ++files;
      const auto rel = fs::relative(e.path(), a.path());
      if (!fs::exists(b.path() / rel) || read_file(e.path()) != read_file(b.path() / rel)) {
        ++differing;
      }
    }
    for (const auto& e : fs::recursive_directory_iterator(b / sub.string())) other += e.is_regular_file();
    if (other != files) ++differing;
  };
  std::size_t bundle = 0, bundle_diff = 0, all = 0, all_diff = 0;
  compare_tree("report", bundle, bundle_diff);
  compare_tree(".", all, all_diff);
  return {bundle == 5 && bundle_diff == 0 && all_diff == 0,
          std::to_string(bundle) + " bundle files, " + std::to_string(bundle_diff) + " differ; " +
              std::to_string(all) + " files across all stages, " + std::to_string(all_diff) +
              " differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"OLS oracle equivalence", ols_oracle},
      {"planted-mixture recovery", planted_mixture},
      {"exact-model identity", exact_model},
      {"control-group null", control_group_null},
      {"ratio identities", ratio_identities},
      {"parser fixtures", parser_fixtures},
      {"simulation protocol conformance", protocol_conformance},
      {"criteria-grid shape", grid_shape},
      {"frequency-table algebra", table_algebra},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " ("
              << criteria[i].first << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
