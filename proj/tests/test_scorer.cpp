#include <doctest.h>

#include <httplib.h>

#include <numeric>
#include <thread>

#include "faqfuse/scorer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace faqfuse;

namespace {

void check_distribution(const AnswerDistribution& d, std::size_t size) {
  REQUIRE(d.size() == size);
  CHECK(std::accumulate(d.probs.begin(), d.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  for (double p : d.probs) CHECK(p >= 0.0);
}

/// httplib server on an ephemeral port, stopped on destruction.
class StubServer {
 public:
  template <typename Setup>
  explicit StubServer(Setup setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("baseline distribution equals softmax of hand-computed TF-IDF cosines") {
  // idf(a) = idf(d) = 1 + ln 2, idf(b) = idf(c) = 1 + ln(4/3).
  const auto corpus = fixtures::corpus({{"q0", "a b"}, {"q1", "b c"}, {"q2", "c d"}});
  const auto scorer = BaselineScorer::fit(corpus);
  const auto cos = scorer->cosines("a b");
  CHECK(cos[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cos[1] == doctest::Approx(0.4280460350631185).epsilon(1e-12));
  CHECK(cos[2] == 0.0);
  const auto d = scorer->score_answers("a b", nullptr);
  check_distribution(d, 3);
  CHECK(d[0] == doctest::Approx(0.5175177314932778).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(0.2920981346486625).epsilon(1e-12));
  CHECK(d[2] == doctest::Approx(0.1903841338580596).epsilon(1e-12));
  CHECK(d.argmax() == 0);
}

TEST_CASE("baseline pair similarity") {
  const auto corpus = fixtures::corpus({{"q0", "a b"}, {"q1", "b c"}, {"q2", "c d"}});
  const auto scorer = BaselineScorer::fit(corpus);
  CHECK(scorer->score_pair("how are you", "how are you", nullptr, nullptr).similarity == 1.0);
  CHECK(scorer->score_pair("a b", "c d", nullptr, nullptr).similarity == 0.0);
  CHECK(scorer->score_pair("a b b", "b c", nullptr, nullptr).similarity == doctest::Approx(0.5908524456113747).epsilon(1e-12));
}

TEST_CASE("single-answer corpus always returns probability one") {
  const auto scorer = BaselineScorer::fit(fixtures::corpus({{"q", "only answer"}, {"p", "only answer"}}));
  for (const auto* q : {"anything", "only answer", ""}) {
    const auto d = scorer->score_answers(q, nullptr);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == 1.0);
  }
}

TEST_CASE("query equal to an answer receives the maximal probability") {
  const auto corpus = fixtures::synthetic(40);
  const auto scorer = BaselineScorer::fit(corpus);
  for (AnswerId id = 0; id < corpus.answers().size(); ++id) {
    const auto d = scorer->score_answers(corpus.answers()[id].text, nullptr);
    for (AnswerId other = 0; other < d.size(); ++other) CHECK(d[id] >= d[other]);
  }
}

TEST_CASE("baseline matches a brute-force TF-IDF reimplementation") {
  const auto corpus = fixtures::synthetic(25, 9);
  const auto scorer = BaselineScorer::fit(corpus);
  std::vector<oracle::Tokens> docs;
  for (const auto& a : corpus.answers()) docs.push_back(a.tokens);
  oracle::Fixtures gen(1);
  for (int i = 0; i < 10; ++i) {
    std::string query = "answer topic" + std::to_string(gen.uniform(0, 9)) + " number " + std::to_string(gen.uniform(0, 9));
    const auto qt = tokenize(query, corpus.tokenizer());
    std::vector<double> cos;
    for (const auto& d : docs) cos.push_back(oracle::tfidf_cosine(docs, qt, d));
    const auto expected = oracle::softmax(cos);
    const auto d = scorer->score_answers(query, nullptr);
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(d[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
}

TEST_CASE("baseline is permutation-equivariant") {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"q0", "red apple pie"}, {"q1", "green apple"}, {"q2", "blue sky"}, {"q3", "apple sky"}};
  const auto forward = BaselineScorer::fit(fixtures::corpus(pairs));
  auto reversed_pairs = pairs;
  std::reverse(reversed_pairs.begin(), reversed_pairs.end());
  const auto reversed = BaselineScorer::fit(fixtures::corpus(reversed_pairs));
  for (const auto* q : {"apple", "sky apple", "pie"}) {
    const auto a = forward->score_answers(q, nullptr);
    const auto b = reversed->score_answers(q, nullptr);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[3 - i]).epsilon(1e-15));
  }
}

TEST_CASE("distribution contract on randomized queries") {
  const auto corpus = fixtures::synthetic(30);
  const auto scorer = BaselineScorer::fit(corpus);
  oracle::Fixtures gen(44);
  for (int i = 0; i < 100; ++i) {
    std::string query;
    for (const auto& t : gen.tokens(0, 6, 30)) query += t + " topic" + std::to_string(gen.uniform(0, 12)) + " ";
    check_distribution(scorer->score_answers(query, nullptr), corpus.answers().size());
  }
}

TEST_CASE("softmax") {
  const std::vector<double> logits{1000.0, 1000.0};
  const auto p = softmax(logits);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
}

TEST_CASE("remote scorer receives the stub distribution") {
  nlohmann::json last_request;
  StubServer stub([&](httplib::Server& s) {
    s.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
      last_request = nlohmann::json::parse(req.body);
      if (last_request["mode"] == "faq") {
        res.set_content(R"({"probs": {"0": 0.125, "1": 0.3333333333333333, "2": 0.5416666666666667}})",
                        "application/json");
      } else {
        res.set_content(R"({"similarity": 0.7071067811865476})", "application/json");
      }
    });
    s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status": "ok", "model": "stub-v1"})", "application/json");
    });
  });

  const RemoteScorer scorer(stub.url(), 3);
  CHECK(scorer.health() == "stub-v1");

  const auto d = scorer.score_answers("hello", nullptr);
  CHECK(d[0] == 0.125);
  CHECK(d[1] == doctest::Approx(0.3333333333333333).epsilon(1e-15));
  CHECK(d[2] == doctest::Approx(0.5416666666666667).epsilon(1e-15));
  CHECK(last_request["query"] == "hello");
  CHECK(last_request["injected"].is_null());
  CHECK(last_request["answer_ids"] == nlohmann::json({"0", "1", "2"}));

  const std::vector<std::string> tokens{"w1", "w2"};
  const auto injected = inject(tokens, KnowledgeBase({{"w2", "r", "t"}}, KnowledgeSource::kExternal), {});
  scorer.score_answers("w1 w2", &injected);
  CHECK(last_request["injected"] == to_json(injected));

  CHECK(scorer.score_pair("a", "b", nullptr, &injected).similarity == 0.7071067811865476);
  CHECK(last_request["mode"] == "match");
  CHECK(last_request["injected_left"].is_null());
  CHECK(last_request["injected_right"]["tokens"].size() == 4);
}

TEST_CASE("remote protocol violations") {
  StubServer stub([](httplib::Server& s) {
    s.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
      const auto q = nlohmann::json::parse(req.body)["query"].get<std::string>();
      if (q == "missing") res.set_content(R"({"probs": {"0": 1.0}})", "application/json");
      else if (q == "sum") res.set_content(R"({"probs": {"0": 0.5, "1": 0.4}})", "application/json");
      else if (q == "garbage") res.set_content("not json", "text/plain");
      else if (q == "status") res.status = 500;
      else if (q == "slow") {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(R"({"probs": {"0": 0.5, "1": 0.5}})", "application/json");
      } else res.set_content(R"({"probs": {"0": 0.5004, "1": 0.5}})", "application/json");
    });
  });
  const RemoteScorer scorer(stub.url(), 2, std::chrono::milliseconds(200));
  auto kind_of = [&](const char* query) {
    try {
      scorer.score_answers(query, nullptr);
    } catch (const TransportError& e) {
      return e.kind();
    }
    FAIL("expected a transport error");
    return TransportError::Kind::kUnreachable;
  };
  CHECK(kind_of("missing") == TransportError::Kind::kProtocol);
  CHECK(kind_of("sum") == TransportError::Kind::kProtocol);
  CHECK(kind_of("garbage") == TransportError::Kind::kProtocol);
  CHECK(kind_of("status") == TransportError::Kind::kProtocol);
  CHECK(kind_of("slow") == TransportError::Kind::kTimeout);

  // Within 1e-3 of one: accepted and renormalized.
  const auto d = scorer.score_answers("fine", nullptr);
  CHECK(d[0] + d[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unreachable remote scorer") {
  const RemoteScorer scorer("http://127.0.0.1:1", 2, std::chrono::milliseconds(500));
  try {
    scorer.score_answers("q", nullptr);
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.kind() == TransportError::Kind::kUnreachable);
  }
}

TEST_CASE("parse_probs_response rejects extra ids and bad values") {
  CHECK_THROWS_AS(parse_probs_response(nlohmann::json::parse(R"({"probs": {"0": 0.5, "1": 0.5, "2": 0}})"), 2),
                  TransportError);
  CHECK_THROWS_AS(parse_probs_response(nlohmann::json::parse(R"({"probs": {"0": 1.5, "1": -0.5}})"), 2), TransportError);
  CHECK_THROWS_AS(parse_probs_response(nlohmann::json::parse(R"({"probs": {"0": "x", "1": 1}})"), 2), TransportError);
  CHECK_THROWS_AS(parse_probs_response(nlohmann::json::parse(R"([1, 2])"), 2), TransportError);
}
