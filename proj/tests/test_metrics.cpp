#include <doctest.h>

#include <algorithm>
#include <random>

#include "manbench/error.hpp"
#include "manbench/metrics.hpp"
#include "support.hpp"

using namespace manbench;

namespace {

OutcomeSet make(Protocol p, int n, std::set<int> wrong, std::set<int> failed = {}) {
  OutcomeSet s(p);
  for (int i = 1; i <= n; ++i)
    s.add("q" + std::to_string(i), {!wrong.count(i) && !failed.count(i), failed.count(i) > 0});
  return s;
}

OutcomeRecord rec(std::string id, Domain d, Protocol p, bool correct, int n = 5) {
  OutcomeRecord r;
  r.question_id = std::move(id);
  r.task = d == Domain::GeneralKnowledge ? "general_knowledge" : "misconceptions";
  r.domain = d;
  r.protocol = p;
  r.group_size = p == Protocol::B ? 0 : n;
  r.correct = correct;
  return r;
}

}  // namespace

TEST_CASE("error_rate") {
  CHECK(error_rate(make(Protocol::B, 10, {2, 4, 9})) == Rational{3, 10});
  CHECK(error_rate(make(Protocol::B, 10, {2, 4, 9})).str4() == "0.3000");
  CHECK(error_rate(make(Protocol::GS, 4, {})).value() == 0.0);
  CHECK_THROWS_AS(error_rate(OutcomeSet(Protocol::B)), EmptySet);
}

TEST_CASE("duplicate outcome for a question is rejected") {
  OutcomeSet s(Protocol::GS);
  s.add("q1", {true, false});
  CHECK_THROWS_AS(s.add("q1", {false, false}), std::invalid_argument);
}

TEST_CASE("reality_shift") {
  OutcomeSet b = make(Protocol::B, 5, {});
  CHECK(reality_shift(b, make(Protocol::GS, 5, {1, 3})) == Rational{2, 5});
  CHECK(reality_shift(b, make(Protocol::GS, 5, {1, 3})).value() == doctest::Approx(0.4));
  CHECK(reality_shift(b, make(Protocol::RS, 5, {})).num == 0);
  CHECK_THROWS_AS(reality_shift(make(Protocol::B, 3, {1, 2, 3}), make(Protocol::GS, 3, {})),
                  EmptyBaselineCorrect);
  CHECK_THROWS_AS(reality_shift(make(Protocol::GS, 3, {}), make(Protocol::GS, 3, {})),
                  std::invalid_argument);
}

TEST_CASE("baseline parse failures leave the denominator") {
  OutcomeSet b = make(Protocol::B, 5, {}, {5});
  CHECK(reality_shift(b, make(Protocol::GS, 5, {1, 5})) == Rational{1, 4});
}

TEST_CASE("questions missing from the influenced set are excluded") {
  OutcomeSet b = make(Protocol::B, 5, {});
  OutcomeSet gs(Protocol::GS);
  gs.add("q1", {false, false});
  gs.add("q2", {true, false});
  CHECK(reality_shift(b, gs) == Rational{1, 2});
}

TEST_CASE("max_reality_shift") {
  OutcomeSet b = make(Protocol::B, 5, {});
  Rational m = max_reality_shift(b, make(Protocol::GS, 5, {1}), make(Protocol::GL, 5, {2}),
                                 make(Protocol::RS, 5, {1, 3}), make(Protocol::RL, 5, {}));
  CHECK(m == Rational{3, 5});
  CHECK(m.str4() == "0.6000");
  CHECK(max_reality_shift(b, b, b, b, b).num == 0);

  OutcomeSet same = make(Protocol::GS, 5, {2, 4});
  Rational all_equal = max_reality_shift(b, same, same, same, same);
  CHECK(all_equal == reality_shift(b, same));
}

TEST_CASE("permutation invariance and baseline-incorrect additions") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    fixture::SetLedger l = fixture::random_ledger(rng, 30);
    if (fixture::oracle_correct_b(l).empty()) continue;
    std::vector<std::string> ids(l.all.at(Protocol::GS).begin(), l.all.at(Protocol::GS).end());
    std::shuffle(ids.begin(), ids.end(), rng);
    OutcomeSet shuffled(Protocol::GS);
    for (const auto& id : ids) shuffled.add(id, {!l.wrong.at(Protocol::GS).count(id), false});
    OutcomeSet b = fixture::to_set(Protocol::B, l.all_b, l.wrong_b);
    OutcomeSet gs = fixture::to_set(Protocol::GS, l.all.at(Protocol::GS), l.wrong.at(Protocol::GS));
    if (gs.empty()) continue;
    CHECK(error_rate(shuffled) == error_rate(gs));
    Rational before;
    try {
      before = reality_shift(b, gs);
    } catch (const EmptyBaselineCorrect&) {
      continue;
    }
    CHECK(reality_shift(b, shuffled) == before);

    OutcomeSet b2 = b;
    OutcomeSet gs2 = gs;
    b2.add("extra", {false, false});
    gs2.add("extra", {false, false});
    CHECK(reality_shift(b2, gs2) == before);
  }
}

TEST_CASE("compute_block over flat records") {
  std::vector<OutcomeRecord> rs;
  for (int i = 0; i < 4; ++i) {
    std::string id = "q" + std::to_string(i);
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::B, i != 3));
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::GS, i == 0));
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::GS, true, 10));
  }
  MetricsBlock b5 = compute_block(rs, 5);
  CHECK(b5.per_protocol.at(Protocol::B).err == Rational{1, 4});
  CHECK_FALSE(b5.per_protocol.at(Protocol::B).sigma.has_value());
  CHECK(b5.per_protocol.at(Protocol::GS).err == Rational{3, 4});
  CHECK(b5.per_protocol.at(Protocol::GS).sigma == std::optional<Rational>(Rational{2, 3}));
  CHECK(b5.sigma_max == std::optional<Rational>(Rational{2, 3}));
  MetricsBlock b10 = compute_block(rs, 10);
  CHECK(b10.per_protocol.at(Protocol::GS).sigma == std::optional<Rational>(Rational{0, 3}));
}

TEST_CASE("per-domain breakdown matches metrics on manually split sets") {
  std::vector<OutcomeRecord> rs;
  // General knowledge: b correct on g0..g3, GS wrong on g0, g1.
  for (int i = 0; i < 5; ++i) {
    std::string id = "g" + std::to_string(i);
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::B, i < 4));
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::GS, i >= 2));
  }
  // Misconceptions: b correct on m0, m1; GS wrong on m1.
  for (int i = 0; i < 3; ++i) {
    std::string id = "m" + std::to_string(i);
    rs.push_back(rec(id, Domain::MisconceptionsSocialCognition, Protocol::B, i < 2));
    rs.push_back(rec(id, Domain::MisconceptionsSocialCognition, Protocol::GS, i != 1));
  }
  std::vector<std::string> warnings;
  auto by_domain = breakdown(rs, BreakdownKey::domain, 5, &warnings);
  REQUIRE(by_domain.size() == 2);
  const MetricsBlock& gk = by_domain.at(std::string(to_string(Domain::GeneralKnowledge)));
  const MetricsBlock& mc = by_domain.at(std::string(to_string(Domain::MisconceptionsSocialCognition)));
  CHECK(gk.per_protocol.at(Protocol::B).err == Rational{1, 5});
  CHECK(gk.per_protocol.at(Protocol::GS).err == Rational{2, 5});
  CHECK(gk.per_protocol.at(Protocol::GS).sigma == std::optional<Rational>(Rational{2, 4}));
  CHECK(mc.per_protocol.at(Protocol::B).err == Rational{1, 3});
  CHECK(mc.per_protocol.at(Protocol::GS).err == Rational{1, 3});
  CHECK(mc.per_protocol.at(Protocol::GS).sigma == std::optional<Rational>(Rational{1, 2}));
  CHECK(warnings.empty());

  SUBCASE("single group equals the global block") {
    std::vector<OutcomeRecord> only_gk(rs.begin(), rs.begin() + 10);
    auto one = breakdown(only_gk, BreakdownKey::domain, 5);
    REQUIRE(one.size() == 1);
    MetricsBlock global = compute_block(only_gk, 5);
    const MetricsBlock& g = one.begin()->second;
    CHECK(g.sigma_max == global.sigma_max);
    for (const auto& [p, m] : global.per_protocol) {
      CHECK(g.per_protocol.at(p).err == m.err);
      CHECK(g.per_protocol.at(p).sigma == m.sigma);
    }
  }
}

TEST_CASE("a group with no baseline-correct questions gets a null sigma and a warning") {
  std::vector<OutcomeRecord> rs{rec("a", Domain::GeneralKnowledge, Protocol::B, false),
                                rec("a", Domain::GeneralKnowledge, Protocol::GS, false),
                                rec("b", Domain::MisconceptionsSocialCognition, Protocol::B, true),
                                rec("b", Domain::MisconceptionsSocialCognition, Protocol::GS, false)};
  std::vector<std::string> warnings;
  auto by_domain = breakdown(rs, BreakdownKey::domain, 5, &warnings);
  CHECK_FALSE(by_domain.at(std::string(to_string(Domain::GeneralKnowledge))).per_protocol.at(Protocol::GS).sigma);
  CHECK(by_domain.at(std::string(to_string(Domain::MisconceptionsSocialCognition)))
            .per_protocol.at(Protocol::GS)
            .sigma == std::optional<Rational>(Rational{1, 1}));
  CHECK_FALSE(warnings.empty());
}

TEST_CASE("group-size breakdown shares the baseline") {
  std::vector<OutcomeRecord> rs;
  for (int i = 0; i < 3; ++i) {
    std::string id = "q" + std::to_string(i);
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::B, true));
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::RS, i == 0, 1));
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::RS, false, 10));
  }
  MetricsReport r = build_report(rs, 1, "m");
  REQUIRE(r.per_group_size.size() == 2);
  CHECK(r.per_group_size.at(1).per_protocol.at(Protocol::RS).sigma == std::optional<Rational>(Rational{2, 3}));
  CHECK(r.per_group_size.at(10).per_protocol.at(Protocol::RS).sigma == std::optional<Rational>(Rational{3, 3}));
  CHECK(r.per_group_size.at(10).per_protocol.at(Protocol::B).err == Rational{0, 3});
}

TEST_CASE("report renderings") {
  std::vector<OutcomeRecord> rs;
  for (int i = 0; i < 5; ++i) {
    std::string id = "q" + std::to_string(i);
    rs.push_back(rec(id, Domain::GeneralKnowledge, Protocol::B, true));
    for (Protocol p : kInfluenceProtocols) rs.push_back(rec(id, Domain::GeneralKnowledge, p, i >= 2));
  }
  MetricsReport r = build_report(rs, 5, "tiny-model");

  std::string csv = to_csv(r);
  CHECK(csv.rfind("model,protocol,group_key,group_value,metric,numerator,denominator,value\n", 0) == 0);
  CHECK(csv.find("\"tiny-model\",GS,overall,all,sigma,2,5,0.4000\n") != std::string::npos);
  CHECK(csv.find("\"tiny-model\",ALL,overall,all,sigma_max,2,5,0.4000\n") != std::string::npos);
  CHECK(csv.find("\"tiny-model\",B,overall,all,err,0,5,0.0000\n") != std::string::npos);

  nlohmann::json j = to_json(r);
  CHECK(j["overall"]["per_protocol"]["RL"]["sigma"]["numerator"] == 2);
  CHECK(j["overall"]["per_protocol"]["RL"]["sigma"]["denominator"] == 5);
  CHECK(j["overall"]["per_protocol"]["B"]["sigma"].is_null());
  CHECK(j["model"] == "tiny-model");

  std::string md = to_markdown(r);
  CHECK(md.find("| tiny-model | 0.00 | 40.00 | 40.00 | 40.00 | 40.00 |") != std::string::npos);
  CHECK(md.find("σ_max") != std::string::npos);
}
