#include <doctest.h>

#include <cstdlib>
#include <mutex>
#include <random>
#include <sstream>

#include "lexdrift/control_groups.hpp"
#include "lexdrift/error.hpp"
#include "lexdrift/llm_sim.hpp"
#include "stub_server.hpp"
#include "test_util.hpp"

using namespace lexdrift;
using testutil::fixture;
using testutil::TempDir;

namespace {

struct ApiKey {
  explicit ApiKey(const char* value = "test-key") {
    if (value) {
      ::setenv(std::string(kApiKeyEnv).c_str(), value, 1);
    } else {
      ::unsetenv(std::string(kApiKeyEnv).c_str());
    }
  }
  ~ApiKey() { ::unsetenv(std::string(kApiKeyEnv).c_str()); }
};

Corpus small_corpus(std::size_t n) {
  Corpus c("small");
  for (std::size_t i = 0; i < n; ++i) {
    c.add({"d" + std::to_string(i), "V", 2022, Track::poster, Kind::abstract,
           "document number " + std::to_string(i) + " studies models"});
  }
  return c;
}

SimulationConfig stub_config(const stub::ChatServer& server) {
  SimulationConfig cfg;
  cfg.endpoint_url = server.url();
  cfg.model_name = stub::kModel;
  cfg.backoff_initial = std::chrono::milliseconds(1);
  cfg.backoff_max = std::chrono::milliseconds(4);
  cfg.request_timeout = std::chrono::milliseconds(5000);
  return cfg;
}

FrequencyTable table(std::initializer_list<std::pair<const std::string, double>> items) {
  return FrequencyTable::from_counts(FrequencyTable::Counts(items));
}

}  // namespace

TEST_CASE("default configuration") {
  SimulationConfig cfg;
  CHECK(cfg.model_name == "gpt-3.5-turbo-0125");
  CHECK(cfg.temperature == 1.0);
  CHECK(cfg.top_p == 0.9);
  CHECK(cfg.prompt == "Revise the following sentences");
  CHECK(cfg.seed_for(7) == 7);
  cfg.fixed_seed = 42;
  CHECK(cfg.seed_for(7) == 42);
  CHECK_NOTHROW(cfg.validate());

  SimulationConfig bad;
  bad.top_p = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SimulationConfig{};
  bad.temperature = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SimulationConfig{};
  bad.max_attempts = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SimulationConfig{};
  bad.concurrency_limit = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("request body wire format") {
  SimulationConfig cfg;
  auto body = nlohmann::json::parse(build_request_body(cfg, "Some text.", 3));
  CHECK(body.at("model") == "gpt-3.5-turbo-0125");
  REQUIRE(body.at("messages").size() == 1);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "Revise the following sentences\n\nSome text.");
  CHECK(body.at("temperature") == 1.0);
  CHECK(body.at("top_p") == 0.9);
  CHECK(body.at("seed") == 3);
}

TEST_CASE("cache key depends on every request parameter") {
  SimulationConfig cfg;
  const auto base = cache_key(cfg, "t", 0);
  CHECK(base.size() == 64);
  CHECK(cache_key(cfg, "t", 0) == base);
  CHECK(cache_key(cfg, "u", 0) != base);
  CHECK(cache_key(cfg, "t", 1) != base);
  auto other = cfg;
  other.model_name = "m2";
  CHECK(cache_key(other, "t", 0) != base);
  other = cfg;
  other.prompt = "Rewrite";
  CHECK(cache_key(other, "t", 0) != base);
  other = cfg;
  other.temperature = 0.5;
  CHECK(cache_key(other, "t", 0) != base);
}

TEST_CASE("all requests succeed and follow the protocol") {
  ApiKey key;
  stub::ChatServer server;
  TempDir dir("sim_ok");
  auto cfg = stub_config(server);
  cfg.cache_dir = dir / "cache";
  const auto corpus = small_corpus(6);
  SimulationStats stats;
  auto pair = revise_corpus(corpus, cfg, &stats);
  CHECK(pair.revised.size() == 6);
  CHECK(stats.requests_sent == 6);
  CHECK(stats.cache_hits == 0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(pair.status[i].ok);
    CHECK(pair.revised.documents()[i].id == corpus.documents()[i].id);
    CHECK(pair.revised.documents()[i].text ==
          corpus.documents()[i].text + " Additionally, this is significant.");
  }
  std::set<std::int64_t> seeds;
  for (const auto& body : server.requests()) {
    CHECK(body.at("temperature") == 1.0);
    CHECK(body.at("top_p") == 0.9);
    CHECK(body.at("model") == stub::kModel);
    const auto text = stub::document_text(body);
    const auto seed = body.at("seed").get<std::int64_t>();
    seeds.insert(seed);
    CHECK(text == corpus.documents()[static_cast<std::size_t>(seed)].text);
  }
  CHECK(seeds.size() == 6);
  for (const auto& h : server.auth_headers()) CHECK(h == "Bearer test-key");

  SUBCASE("second run is served from the cache") {
    SimulationStats again;
    auto second = revise_corpus(corpus, cfg, &again);
    CHECK(server.request_count() == 6);
    CHECK(again.requests_sent == 0);
    CHECK(again.cache_hits == 6);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      CHECK(second.revised.documents()[i] == pair.revised.documents()[i]);
    }
  }
  SUBCASE("cached-only mode needs no key and no network") {
    ::unsetenv(std::string(kApiKeyEnv).c_str());
    cfg.cached_only = true;
    cfg.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";
    auto second = revise_corpus(corpus, cfg);
    CHECK(second.revised.size() == 6);
  }
}

TEST_CASE("one persistently slow document fails while the rest succeed") {
  ApiKey key;
  stub::ChatServer server([](const nlohmann::json& body, httplib::Response& res) {
    if (body.at("seed") == 4) std::this_thread::sleep_for(std::chrono::milliseconds(700));
    stub::ChatServer::revise(body, res);
  });
  auto cfg = stub_config(server);
  cfg.request_timeout = std::chrono::milliseconds(250);
  cfg.max_attempts = 2;
  auto pair = revise_corpus(small_corpus(10), cfg);
  CHECK(pair.revised.size() == 9);
  std::size_t failed = 0;
  for (const auto& s : pair.status) {
    if (!s.ok) {
      ++failed;
      CHECK(s.id == "d4");
      CHECK(s.reason.find("after 2 attempts") != std::string::npos);
    }
  }
  CHECK(failed == 1);
  CHECK_FALSE(pair.revised.find("d4"));
  CHECK(pair.aligned_original().size() == 9);
}

TEST_CASE("transient server errors are retried") {
  ApiKey key;
  std::mutex m;
  std::map<std::int64_t, int> attempts;
  stub::ChatServer server([&](const nlohmann::json& body, httplib::Response& res) {
    int n;
    {
      std::lock_guard lock(m);
      n = ++attempts[body.at("seed").get<std::int64_t>()];
    }
    if (n < 3) {
      res.status = n == 1 ? 503 : 429;
      return;
    }
    stub::ChatServer::revise(body, res);
  });
  auto cfg = stub_config(server);
  SimulationStats stats;
  auto pair = revise_corpus(small_corpus(3), cfg, &stats);
  CHECK(pair.revised.size() == 3);
  CHECK(stats.requests_sent == 9);
}

TEST_CASE("client errors fail the document without retry") {
  ApiKey key;
  stub::ChatServer server([](const nlohmann::json&, httplib::Response& res) { res.status = 400; });
  auto pair = revise_corpus(small_corpus(2), stub_config(server));
  CHECK(pair.revised.empty());
  CHECK(server.request_count() == 2);
  CHECK(pair.status[0].reason == "HTTP 400");
}

TEST_CASE("rejected credentials abort the run") {
  ApiKey key;
  stub::ChatServer server([](const nlohmann::json&, httplib::Response& res) { res.status = 401; });
  CHECK_THROWS_AS(revise_corpus(small_corpus(3), stub_config(server)), AuthError);
}

TEST_CASE("missing credentials abort before any request") {
  ApiKey key(nullptr);
  stub::ChatServer server;
  CHECK_THROWS_AS(revise_corpus(small_corpus(2), stub_config(server)), AuthError);
  CHECK(server.request_count() == 0);
}

TEST_CASE("empty and non-Latin responses are marked failed") {
  ApiKey key;
  stub::ChatServer server([](const nlohmann::json& body, httplib::Response& res) {
    const auto seed = body.at("seed").get<int>();
    if (seed == 0) {
      res.set_content(stub::completion("   "), "application/json");
    } else if (seed == 1) {
      res.set_content(stub::completion("これは改訂された文章です"), "application/json");
    } else if (seed == 2) {
      res.set_content("{\"choices\": []}", "application/json");
    } else {
      stub::ChatServer::revise(body, res);
    }
  });
  auto cfg = stub_config(server);
  auto pair = revise_corpus(small_corpus(4), cfg);
  CHECK_FALSE(pair.status[0].ok);
  CHECK_FALSE(pair.status[1].ok);
  CHECK_FALSE(pair.status[2].ok);
  CHECK(pair.status[3].ok);
  CHECK(pair.revised.size() == 1);
}

TEST_CASE("simulation pair files round-trip") {
  ApiKey key;
  stub::ChatServer server([](const nlohmann::json& body, httplib::Response& res) {
    if (body.at("seed") == 1) {
      res.status = 400;
      return;
    }
    stub::ChatServer::revise(body, res);
  });
  auto pair = revise_corpus(small_corpus(3), stub_config(server));
  TempDir dir("pair");
  write_simulation_pair(pair, dir.path());
  auto back = read_simulation_pair(dir.path());
  REQUIRE(back.status.size() == 3);
  CHECK_FALSE(back.status[1].ok);
  CHECK(back.status[1].reason == "HTTP 400");
  CHECK(back.revised.size() == 2);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(back.original.documents()[i] == pair.original.documents()[i]);
}

TEST_CASE("change_rates examples") {
  auto t = table({{"a", 3}, {"b", 5}});
  auto same = change_rates(t, t);
  for (const auto& [w, r] : same.rates) CHECK(r == 0);

  auto r = change_rates(table({{"a", 4}}), table({{"a", 6}, {"new", 2}}));
  CHECK(*r.rate("a") == 0.5);
  CHECK_FALSE(r.rate("new"));
  CHECK(r.excluded == std::vector<std::string>{"new"});

  auto gone = change_rates(table({{"a", 4}, {"b", 2}}), table({{"a", 4}}));
  CHECK(*gone.rate("b") == -1.0);
}

TEST_CASE("change rate properties") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> v(0, 100);
  for (int trial = 0; trial < 300; ++trial) {
    FrequencyTable::Counts a, b;
    for (int i = 0; i < 10; ++i) {
      const std::string w = "w" + std::to_string(i);
      if (rng() % 4) a[w] = 1 + v(rng);
      if (rng() % 4) b[w] = v(rng);
    }
    auto s1 = FrequencyTable::from_counts(a), s2 = FrequencyTable::from_counts(b);
    auto r = change_rates(s1, s2);
    for (const auto& [w, x] : r.rates) {
      CHECK(x >= -1.0);
      CHECK(s1.count(w) * (1 + x) == doctest::Approx(s2.count(w)).epsilon(1e-12).scale(1));
    }
    for (double c : {0.5, 7.0}) {
      auto rs = change_rates(scaled(s1, c), scaled(s2, c));
      for (const auto& [w, x] : r.rates)
        CHECK(rs.rates.at(w) == doctest::Approx(x).epsilon(1e-12).scale(1));
    }
  }
}

TEST_CASE("change rates csv round-trip") {
  auto r = change_rates(table({{"a", 4}, {"b", 3}}), table({{"a", 6}, {"b", 1}, {"c", 2}}));
  std::stringstream ss;
  write_change_rates_csv(r, ss);
  CHECK(ss.str().rfind("word,f_s1,f_s2,rate\n", 0) == 0);
  auto back = read_change_rates_csv(ss);
  CHECK(back.rates == r.rates);
  CHECK(back.support == r.support);
}

TEST_CASE("recorded revisions raise the example words' total frequency") {
  auto pair = read_simulation_pair(fixture("sim"));
  REQUIRE(pair.original.size() == 6);
  const TokenRules rules;
  auto f1 = count_frequencies(pair.aligned_original(), rules);
  auto f2 = normalize_to_total(count_frequencies(pair.revised, rules), f1.total());
  double before = 0, after = 0;
  for (auto w : kExampleWords) {
    before += f1.count(w);
    after += f2.count(w);
  }
  CHECK(after >= before);
  CHECK(after > 0);
}
