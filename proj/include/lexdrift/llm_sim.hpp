#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lexdrift/corpus.hpp"
#include "lexdrift/frequency.hpp"

namespace lexdrift {

inline constexpr std::string_view kRevisionPrompt = "Revise the following sentences";
inline constexpr std::string_view kApiKeyEnv = "LEXDRIFT_API_KEY";

struct SimulationConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-3.5-turbo-0125";
  std::string prompt{kRevisionPrompt};
  double temperature = 1.0;
  double top_p = 0.9;
  /// Unset: the seed is the document's 0-based index in the corpus.
  std::optional<std::int64_t> fixed_seed;
  int max_attempts = 4;
  int concurrency_limit = 4;

  std::filesystem::path cache_dir;  // empty disables caching
  bool cached_only = false;          // never touch the network
  std::chrono::milliseconds request_timeout{120000};
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{16000};

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
  std::int64_t seed_for(std::size_t document_index) const;
};

struct DocumentStatus {
  std::string id;
  bool ok = false;
  std::string reason;
};

struct SimulationPair {
  Corpus original;
  Corpus revised;
  std::vector<DocumentStatus> status;  // one per original document, same order

  /// The original documents whose revision succeeded.
  Corpus aligned_original() const;
};

struct SimulationStats {
  std::size_t requests_sent = 0;
  std::size_t cache_hits = 0;
};

/// JSON body of one chat-completion request.
std::string build_request_body(const SimulationConfig& config, std::string_view text,
                               std::int64_t seed);

/// Cache file name (without directory) for a request.
std::string cache_key(const SimulationConfig& config, std::string_view text,
                      std::int64_t seed);

/// Sends one request per document (bounded concurrency, exponential backoff)
/// and assembles the revised twin. Throws AuthError on 401/403 or a missing
/// credential; other failures mark the document failed and the run goes on.
SimulationPair revise_corpus(const Corpus& corpus, const SimulationConfig& config,
                             SimulationStats* stats = nullptr);

void write_simulation_pair(const SimulationPair& pair, const std::filesystem::path& dir);
SimulationPair read_simulation_pair(const std::filesystem::path& dir);

struct ChangeRates {
  std::map<std::string, double> rates;
  std::map<std::string, std::pair<double, double>> support;  // (f(S1), f(S2))
  std::vector<std::string> excluded;  // present in S2 only

  std::optional<double> rate(std::string_view word) const;
};

/// r = (f(S2) - f(S1)) / f(S1) for every word with f(S1) > 0.
ChangeRates change_rates(const FrequencyTable& table_s1, const FrequencyTable& table_s2);

/// CSV `word,f_s1,f_s2,rate`.
void write_change_rates_csv(const ChangeRates& rates, std::ostream& out);
ChangeRates read_change_rates_csv(std::istream& in);

}  // namespace lexdrift
