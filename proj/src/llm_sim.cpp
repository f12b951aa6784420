#include "lexdrift/llm_sim.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <unistd.h>

#include "lexdrift/csv.hpp"
#include "lexdrift/digest.hpp"
#include "lexdrift/error.hpp"
#include "lexdrift/unicode.hpp"

namespace lexdrift {
namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint url must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

struct Outcome {
  bool ok = false;
  std::string text;
  std::string reason;
};

// Rejects responses that cannot stand in for a revised abstract.
std::optional<std::string> response_problem(const std::string& content) {
  if (unicode::collapse_whitespace(content).empty()) return "empty response";
  if (unicode::latin_letter_fraction(content) < 0.5) return "non-Latin response";
  return std::nullopt;
}

std::optional<std::string> read_cache(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(in);
    return j.at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void write_cache(const std::filesystem::path& dir, const std::string& key,
                 const std::string& request_body, const std::string& response_body,
                 const std::string& content) {
  nlohmann::ordered_json j;
  j["request"] = nlohmann::json::parse(request_body);
  j["response"] = nlohmann::json::parse(response_body, nullptr, false);
  j["content"] = content;

  static std::atomic<unsigned long long> counter{0};
  const auto final_path = dir / (key + ".json");
  auto tmp = dir / (key + ".json.tmp." + std::to_string(::getpid()) + "." +
                    std::to_string(counter.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write cache file " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out.flush()) throw DataError("cannot write cache file " + tmp.string());
  }
  std::filesystem::rename(tmp, final_path);
}

class Reviser {
 public:
  Reviser(const SimulationConfig& config, std::optional<std::string> api_key)
      : config_(config), endpoint_(parse_endpoint(config.endpoint_url)),
        api_key_(std::move(api_key)) {}

  Outcome revise(std::size_t index, const Document& doc) {
    const auto seed = config_.seed_for(index);
    const auto key = cache_key(config_, doc.text, seed);
    if (!config_.cache_dir.empty()) {
      if (auto cached = read_cache(config_.cache_dir / (key + ".json"))) {
        ++cache_hits;
        return accept(*cached);
      }
    }
    if (config_.cached_only) return {false, {}, "not cached"};
    if (!api_key_) {
      throw AuthError(std::string(kApiKeyEnv) + " is not set");
    }

    const auto body = build_request_body(config_, doc.text, seed);
    httplib::Client client(endpoint_.scheme_host_port);
    client.set_read_timeout(config_.request_timeout);
    client.set_write_timeout(config_.request_timeout);
    client.set_connection_timeout(config_.request_timeout);
    const httplib::Headers headers{{"Authorization", "Bearer " + *api_key_}};

    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
      if (attempt > 1) backoff(attempt - 1);
      ++requests_sent;
      auto res = client.Post(endpoint_.path, headers, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) return {false, {}, "HTTP " + std::to_string(res->status)};

      std::string content;
      try {
        auto j = nlohmann::json::parse(res->body);
        content = j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception&) {
        return {false, {}, "malformed response"};
      }
      auto outcome = accept(content);
      if (outcome.ok && !config_.cache_dir.empty()) {
        write_cache(config_.cache_dir, key, body, res->body, content);
      }
      return outcome;
    }
    return {false, {}, last_error + " after " + std::to_string(config_.max_attempts) + " attempts"};
  }

  std::atomic<std::size_t> requests_sent{0};
  std::atomic<std::size_t> cache_hits{0};

 private:
  static Outcome accept(const std::string& content) {
    if (auto problem = response_problem(content)) return {false, {}, *problem};
    return {true, content, {}};
  }

  void backoff(int retry) const {
    auto delay = config_.backoff_initial;
    for (int k = 1; k < retry && delay < config_.backoff_max; ++k) delay *= 2;
    std::this_thread::sleep_for(std::min(delay, config_.backoff_max));
  }

  const SimulationConfig& config_;
  Endpoint endpoint_;
  std::optional<std::string> api_key_;
};

}  // namespace

void SimulationConfig::validate() const {
  if (!(temperature >= 0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(top_p > 0 && top_p <= 1)) throw std::invalid_argument("top_p must lie in (0, 1]");
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (concurrency_limit < 1) throw std::invalid_argument("concurrency_limit must be >= 1");
  parse_endpoint(endpoint_url);
}

std::int64_t SimulationConfig::seed_for(std::size_t document_index) const {
  return fixed_seed ? *fixed_seed : static_cast<std::int64_t>(document_index);
}

Corpus SimulationPair::aligned_original() const {
  Corpus out(original.label());
  for (const auto& s : status) {
    if (!s.ok) continue;
    if (const Document* d = original.find(s.id)) out.add(*d);
  }
  return out;
}

std::string build_request_body(const SimulationConfig& config, std::string_view text,
                               std::int64_t seed) {
  nlohmann::ordered_json body;
  body["model"] = config.model_name;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"}, {"content", config.prompt + "\n\n" + std::string(text)}}});
  body["temperature"] = config.temperature;
  body["top_p"] = config.top_p;
  body["seed"] = seed;
  return body.dump();
}

std::string cache_key(const SimulationConfig& config, std::string_view text, std::int64_t seed) {
  nlohmann::ordered_json k;
  k["model"] = config.model_name;
  k["prompt"] = config.prompt;
  k["temperature"] = config.temperature;
  k["top_p"] = config.top_p;
  k["seed"] = seed;
  k["text_sha256"] = sha256_hex(text);
  return sha256_hex(k.dump());
}

SimulationPair revise_corpus(const Corpus& corpus, const SimulationConfig& config,
                             SimulationStats* stats) {
  config.validate();
  if (!config.cache_dir.empty()) std::filesystem::create_directories(config.cache_dir);

  std::optional<std::string> api_key;
  if (const char* k = std::getenv(std::string(kApiKeyEnv).c_str()); k && *k) api_key = k;

  Reviser reviser(config, api_key);
  const auto docs = corpus.documents();
  std::vector<Outcome> outcomes(docs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (!abort) {
      const std::size_t i = next.fetch_add(1);
      if (i >= docs.size()) return;
      try {
        outcomes[i] = reviser.revise(i, docs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
    }
  };

  const auto nworkers = std::min<std::size_t>(static_cast<std::size_t>(config.concurrency_limit),
                                              std::max<std::size_t>(docs.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  SimulationPair pair{corpus, Corpus(corpus.label() + "-revised"), {}};
  for (std::size_t i = 0; i < docs.size(); ++i) {
    pair.status.push_back({docs[i].id, outcomes[i].ok, outcomes[i].reason});
    if (outcomes[i].ok) {
      Document revised = docs[i];
      revised.text = std::move(outcomes[i].text);
      pair.revised.add(std::move(revised));
    }
  }
  if (stats) {
    stats->requests_sent = reviser.requests_sent;
    stats->cache_hits = reviser.cache_hits;
  }
  return pair;
}

void write_simulation_pair(const SimulationPair& pair, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "original.jsonl", std::ios::binary);
    write_jsonl(pair.original, out);
  }
  {
    std::ofstream out(dir / "revised.jsonl", std::ios::binary);
    write_jsonl(pair.revised, out);
  }
  std::ofstream out(dir / "status.csv", std::ios::binary);
  csv::write_row(out, {"id", "status", "reason"});
  for (const auto& s : pair.status) csv::write_row(out, {s.id, s.ok ? "ok" : "failed", s.reason});
}

SimulationPair read_simulation_pair(const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw DataError("missing " + (dir / name).string());
    return in;
  };
  auto orig_in = open("original.jsonl");
  auto rev_in = open("revised.jsonl");
  SimulationPair pair{ingest_jsonl(orig_in, "original"), ingest_jsonl(rev_in, "revised"), {}};

  std::ifstream status_in(dir / "status.csv", std::ios::binary);
  if (status_in) {
    for (auto& row : csv::read_with_header(status_in, {"id", "status", "reason"})) {
      pair.status.push_back({row[0], row[1] == "ok", row[2]});
    }
  } else {
    for (const auto& d : pair.original.documents()) {
      const bool ok = pair.revised.find(d.id) != nullptr;
      pair.status.push_back({d.id, ok, ok ? "" : "missing from revised"});
    }
  }
  for (const auto& s : pair.status) {
    if (s.ok != (pair.revised.find(s.id) != nullptr)) {
      throw DataError("simulation pair: status of '" + s.id + "' disagrees with revised corpus");
    }
  }
  return pair;
}

std::optional<double> ChangeRates::rate(std::string_view word) const {
  auto it = rates.find(std::string(word));
  if (it == rates.end()) return std::nullopt;
  return it->second;
}

ChangeRates change_rates(const FrequencyTable& table_s1, const FrequencyTable& table_s2) {
  ChangeRates out;
  for (const auto& [word, f1] : table_s1.counts()) {
    if (!(f1 > 0)) continue;
    const double f2 = table_s2.count(word);
    out.rates.emplace(word, (f2 - f1) / f1);
    out.support.emplace(word, std::make_pair(f1, f2));
  }
  for (const auto& [word, f2] : table_s2.counts()) {
    if (f2 > 0 && !(table_s1.count(word) > 0)) out.excluded.push_back(word);
  }
  return out;
}

void write_change_rates_csv(const ChangeRates& rates, std::ostream& out) {
  csv::write_row(out, {"word", "f_s1", "f_s2", "rate"});
  for (const auto& [word, r] : rates.rates) {
    const auto& [f1, f2] = rates.support.at(word);
    csv::write_row(out, {word, csv::format_number(f1), csv::format_number(f2),
                         csv::format_number(r)});
  }
}

ChangeRates read_change_rates_csv(std::istream& in) {
  ChangeRates out;
  for (const auto& row : csv::read_with_header(in, {"word", "f_s1", "f_s2", "rate"})) {
    const double f1 = csv::parse_number(row[1]);
    if (!(f1 > 0)) throw DataError("rates csv: f_s1 of '" + row[0] + "' must be positive");
    out.rates.emplace(row[0], csv::parse_number(row[3]));
    out.support.emplace(row[0], std::make_pair(f1, csv::parse_number(row[2])));
  }
  return out;
}

}  // namespace lexdrift
