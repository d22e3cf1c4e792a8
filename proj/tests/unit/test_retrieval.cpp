#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "hiertt/external_scorer.hpp"
#include "hiertt/retrieval.hpp"
#include "../support/synthetic.hpp"

using namespace hiertt;

namespace {

std::vector<Fact> make_facts(const std::vector<std::string>& texts) {
  std::vector<Fact> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Fact f;
    f.fact_id = "d/para:0:" + std::to_string(i);
    f.text = texts[i];
    f.doc_order = i;
    out.push_back(f);
  }
  return out;
}

std::map<std::string, double> by_id(const std::vector<ScoredFact>& scored) {
  std::map<std::string, double> out;
  for (const auto& s : scored) out[s.fact_id] = s.score;
  return out;
}

const std::vector<std::string> kThree = {"Revenue grew in 2019.", "Revenue fell.", "Costs grew sharply in 2019 and 2020."};
const std::string kQuestion = "How did revenue grow in 2019?";

std::unique_ptr<ExternalScorer> fake(const std::string& mode, std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
  return std::make_unique<ExternalScorer>(std::make_unique<ProcessEndpoint>(std::string(FAKE_SCORER_BIN) + " " + mode),
                                          timeout);
}

}  // namespace

// Reference values computed independently with the same BM25 definition.
TEST(Bm25, HandComputedScores) {
  auto facts = make_facts(kThree);
  auto scored = score_lexical(kQuestion, facts);
  auto s = by_id(scored);
  EXPECT_NEAR(s["d/para:0:0"], 1.4558235158586326, 1e-9);
  EXPECT_NEAR(s["d/para:0:1"], 0.6027849236066385, 1e-9);
  EXPECT_NEAR(s["d/para:0:2"], 0.7509555193535218, 1e-9);
  EXPECT_EQ(scored[0].fact_id, "d/para:0:0");
  EXPECT_EQ(scored[0].rank, 1u);
  EXPECT_EQ(scored[1].fact_id, "d/para:0:2");
  EXPECT_EQ(scored[2].rank, 3u);
}

TEST(Bm25, DuplicateFactsDoNotShiftOthers) {
  auto facts = make_facts(kThree);
  auto base = by_id(score_lexical(kQuestion, facts));
  auto more = facts;
  Fact dup = facts[0];
  dup.fact_id = "d/t0:0:0";
  dup.doc_order = 3;
  more.push_back(dup);
  more.push_back(dup);
  more.back().fact_id = "d/t0:0:1";
  auto s = by_id(score_lexical(kQuestion, more));
  for (const auto& [id, v] : base) EXPECT_DOUBLE_EQ(s[id], v);
  EXPECT_DOUBLE_EQ(s["d/t0:0:0"], base["d/para:0:0"]);
  // equal scores fall back to document order
  auto ranked = score_lexical(kQuestion, more);
  EXPECT_EQ(ranked[0].fact_id, "d/para:0:0");
  EXPECT_EQ(ranked[1].fact_id, "d/t0:0:0");
}

TEST(Bm25, PermutationInvariant) {
  Corpus corpus = synth::make_corpus(20);
  std::mt19937 rng(3);
  for (const auto& entry : corpus) {
    auto facts = enumerate_facts(entry.document);
    for (const auto& ex : entry.examples) {
      auto base = score_lexical(ex.question, facts);
      auto shuffled = facts;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      auto again = score_lexical(ex.question, shuffled);
      EXPECT_EQ(by_id(base), by_id(again));
      // doc_order travels with the fact, so the full ranking is identical too
      EXPECT_EQ(base, again);
    }
  }
}

TEST(Bm25, RefusesEmptyInput) {
  EXPECT_THROW(score_lexical("", make_facts(kThree)), Error);
  EXPECT_THROW(score_lexical("?!", make_facts(kThree)), Error);
  EXPECT_THROW(score_lexical("revenue", {}), Error);
  auto s = score_lexical("unrelated words", make_facts(kThree));
  for (const auto& f : s) EXPECT_EQ(f.score, 0.0);
  EXPECT_EQ(s[0].fact_id, "d/para:0:0");
}

TEST(Retrieval, TokensTrimPunctuation) {
  EXPECT_EQ(lexical_tokens("\"Revenue,\" grew (4.5%)!"), (std::vector<std::string>{"revenue", "grew", "4.5"}));
}

TEST(Retrieval, SelectTopNKeepsDocumentOrder) {
  auto facts = make_facts(kThree);
  auto scored = score_lexical(kQuestion, facts);
  auto top2 = select_top_n(scored, facts, 2);
  ASSERT_EQ(top2.size(), 2u);
  EXPECT_EQ(top2[0].fact_id, "d/para:0:0");
  EXPECT_EQ(top2[1].fact_id, "d/para:0:2");
  EXPECT_EQ(select_top_n(scored, facts, 10).size(), 3u);
  EXPECT_TRUE(select_top_n(scored, facts, 0).empty());
}

TEST(Retrieval, RecallDefinition) {
  auto facts = make_facts(kThree);
  EXPECT_DOUBLE_EQ(recall_at_n({facts[0]}, {"d/para:0:0", "d/para:0:2"}), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_n(facts, {"d/para:0:0", "d/para:0:0"}), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_n({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_n({}, {"x"}), 0.0);
}

TEST(Retrieval, RecallMonotonicInN) {
  Corpus corpus = synth::make_corpus(100);
  for (const auto& entry : corpus) {
    auto facts = enumerate_facts(entry.document);
    for (const auto& ex : entry.examples) {
      auto lexical = score_lexical(ex.question, facts);
      auto oracle = score_oracle(ex, facts);
      double prev_l = 0.0, prev_o = 0.0;
      for (std::size_t n = 1; n <= 15; ++n) {
        double l = recall_at_n(select_top_n(lexical, facts, n), ex.gold_evidence);
        double o = recall_at_n(select_top_n(oracle, facts, n), ex.gold_evidence);
        EXPECT_GE(l, prev_l) << ex.example_id << " n=" << n;
        EXPECT_GE(o, prev_o) << ex.example_id << " n=" << n;
        if (n >= ex.gold_evidence.size()) {
          EXPECT_DOUBLE_EQ(o, 1.0) << ex.example_id;
        }
        prev_l = l;
        prev_o = o;
      }
    }
  }
}

TEST(Retrieval, OracleRejectsUnknownEvidence) {
  QAExample ex;
  ex.gold_evidence = {"d/para:9:9"};
  EXPECT_THROW(score_oracle(ex, make_facts(kThree)), DanglingEvidence);
}

TEST(ExternalScorer, ConstantScoresFallBackToDocumentOrder) {
  auto scorer = fake("const");
  auto facts = make_facts(kThree);
  std::reverse(facts.begin(), facts.end());
  auto ranked = score_external(kQuestion, facts, *scorer);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].fact_id, "d/para:0:0");
  EXPECT_EQ(ranked[2].fact_id, "d/para:0:2");
  for (const auto& r : ranked) EXPECT_EQ(r.score, 0.5);
}

TEST(ExternalScorer, OverlapScoresAcrossRequests) {
  auto scorer = fake("overlap");
  auto facts = make_facts({"alpha beta", "beta gamma delta", "zeta"});
  auto ranked = score_external("beta gamma", facts, *scorer);
  EXPECT_EQ(ranked[0].fact_id, "d/para:0:1");
  EXPECT_EQ(ranked[0].score, 2.0);
  // a second request on the same connection uses a fresh id
  auto again = score_external("zeta", facts, *scorer);
  EXPECT_EQ(again[0].fact_id, "d/para:0:2");
}

TEST(ExternalScorer, ProtocolViolations) {
  auto facts = make_facts(kThree);
  for (const char* mode : {"short", "garbage", "wrong-id", "text"}) {
    auto scorer = fake(mode);
    EXPECT_THROW(scorer->raw_scores(kQuestion, facts), ProtocolError) << mode;
  }
}

TEST(ExternalScorer, SilentScorerTimesOut) {
  auto scorer = fake("silent", std::chrono::milliseconds(200));
  auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(scorer->raw_scores(kQuestion, make_facts(kThree)), ProtocolError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(ExternalScorer, EmptyFactsRefused) {
  auto scorer = fake("const");
  EXPECT_THROW(scorer->raw_scores(kQuestion, {}), ProtocolError);
}

TEST(ExternalScorer, UnreachableAddress) {
  EXPECT_THROW(TcpEndpoint("no-port"), ProtocolError);
  EXPECT_THROW(TcpEndpoint("127.0.0.1:1"), ProtocolError);
}

// In-process TCP scorer: score = position from the end, so the last fact wins.
TEST(ExternalScorer, TcpServer) {
  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(listener, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ASSERT_EQ(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::listen(listener, 1), 0);
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  int port = ntohs(addr.sin_port);

  std::thread server([listener] {
    int fd = ::accept(listener, nullptr, nullptr);
    std::string buffer;
    char chunk[4096];
    for (int served = 0; served < 2;) {
      ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        auto req = nlohmann::json::parse(buffer.substr(0, nl));
        buffer.erase(0, nl + 1);
        nlohmann::json scores = nlohmann::json::array();
        for (std::size_t i = 0; i < req["facts"].size(); ++i) scores.push_back(static_cast<double>(i));
        std::string reply = nlohmann::json{{"id", req["id"]}, {"scores", scores}}.dump() + "\n";
        ASSERT_EQ(::write(fd, reply.data(), reply.size()), static_cast<ssize_t>(reply.size()));
        ++served;
      }
    }
    ::close(fd);
  });

  ExternalScorer scorer(std::make_unique<TcpEndpoint>("127.0.0.1:" + std::to_string(port)));
  auto facts = make_facts(kThree);
  EXPECT_EQ(score_external(kQuestion, facts, scorer)[0].fact_id, "d/para:0:2");
  EXPECT_EQ(scorer.raw_scores(kQuestion, facts), (std::vector<double>{0.0, 1.0, 2.0}));
  server.join();
  ::close(listener);
}
