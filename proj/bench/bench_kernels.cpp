#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "lexdrift/control_groups.hpp"
#include "lexdrift/frequency.hpp"
#include "lexdrift/impact.hpp"
#include "lexdrift/reference.hpp"

namespace {

using namespace lexdrift;

std::string word_name(std::size_t i) {
  std::string w;
  do {
    w.push_back(static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i);
  return w + "x";
}

Corpus make_corpus(std::size_t docs, std::size_t tokens_per_doc, std::size_t vocab) {
  std::mt19937_64 rng(7);
  std::vector<double> weights(vocab);
  for (std::size_t r = 0; r < vocab; ++r) weights[r] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  Corpus c("bench");
  for (std::size_t d = 0; d < docs; ++d) {
    std::string text;
    for (std::size_t t = 0; t < tokens_per_doc; ++t) text += word_name(pick(rng)) + ' ';
    c.add({"d" + std::to_string(d), "B", 2024, Track::poster, Kind::abstract, text});
  }
  return c;
}

const Corpus& corpus() {
  static const Corpus c = make_corpus(2000, 150, 5000);
  return c;
}

void BM_CountParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(count_frequencies(corpus(), {}));
}
void BM_CountSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reference::count_frequencies_serial(corpus(), {}));
}

struct SweepFixture {
  FrequencyTable s, sp;
  Ranking ranking;
  WordGroup group;
  SweepFixture() {
    const auto half = make_corpus(1000, 150, 5000);
    s = count_frequencies(half, {});
    sp = count_frequencies(corpus(), {});
    sp = normalize_to_total(sp, s.total());
    ranking = rank_words(sp);
    std::vector<std::string> words;
    for (std::size_t r = 300; r < 1100; r += 100) words.push_back(ranking.word_at(r));
    group = build_group(words, ranking);
  }
};

const SweepFixture& sweep_fixture() {
  static const SweepFixture f;
  return f;
}

void BM_SweepParallel(benchmark::State& state) {
  const auto& f = sweep_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep_ratios(f.group, -250, 250, f.ranking, f.s, f.sp));
  }
}
void BM_SweepSerial(benchmark::State& state) {
  const auto& f = sweep_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::sweep_ratios_serial(f.group, -250, 250, f.ranking, f.s, f.sp));
  }
}

// Baseline from the sweep fixture, planted rates spread over [-0.5, 1.5] and
// an observed table following the mixture model at eta = 0.3 plus noise.
EstimationInputs estimation_inputs() {
  const auto& f = sweep_fixture();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rate(-0.5, 1.5), noise(-0.01, 0.01);
  EstimationInputs in;
  in.f_star = f.sp;
  FrequencyTable::Counts observed;
  for (const auto& [word, count] : f.sp.counts()) {
    const double r = rate(rng);
    in.rates.rates[word] = r;
    observed[word] = count * (1 + 0.3 * r + noise(rng));
  }
  in.f_d = normalize_to_total(FrequencyTable::from_counts(std::move(observed)), f.sp.total());
  return in;
}

void BM_GridParallel(benchmark::State& state) {
  const auto inputs = estimation_inputs();
  GridOptions grid;
  for (auto _ : state) benchmark::DoNotOptimize(sweep_estimates(inputs, grid));
}
void BM_GridSerial(benchmark::State& state) {
  const auto inputs = estimation_inputs();
  GridOptions grid;
  for (auto _ : state) benchmark::DoNotOptimize(reference::sweep_estimates_serial(inputs, grid));
}

}  // namespace

BENCHMARK(BM_CountParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CountSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_GridParallel)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_GridSerial)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
