#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manbench/protocols.hpp"

namespace manbench {

// Exact ratio; metrics stay rational until they are rendered.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
  // Cross-multiplied comparison; does not require reduced form.
  bool same_value(const Rational& o) const { return num * o.den == o.num * den; }
  bool operator==(const Rational&) const = default;
  std::string str4() const;  // "0.4000"
};

bool value_less(const Rational& a, const Rational& b);

struct Verdict {
  bool correct = false;
  bool parse_failed = false;
};

// One protocol's outcomes, at most one per question.
class OutcomeSet {
 public:
  explicit OutcomeSet(Protocol protocol) : protocol_(protocol) {}

  Protocol protocol() const { return protocol_; }
  // Throws std::invalid_argument on a second outcome for the same question.
  void add(const std::string& question_id, Verdict v);
  void add(const ProtocolOutcome& o);

  const std::map<std::string, Verdict>& outcomes() const { return outcomes_; }
  std::size_t size() const { return outcomes_.size(); }
  bool empty() const { return outcomes_.empty(); }

 private:
  Protocol protocol_;
  std::map<std::string, Verdict> outcomes_;
};

// |wrong| / |all|. Throws EmptySet.
Rational error_rate(const OutcomeSet& set);

// |wrong in influenced ∩ correct in baseline| / |correct in baseline|, over
// questions present in both sets. Throws EmptyBaselineCorrect.
Rational reality_shift(const OutcomeSet& baseline, const OutcomeSet& influenced);

// Fraction of baseline-correct questions wrong under at least one of the
// given sets, over questions present in every set.
Rational max_reality_shift(const OutcomeSet& baseline, std::span<const OutcomeSet* const> influenced);
Rational max_reality_shift(const OutcomeSet& baseline, const OutcomeSet& gs, const OutcomeSet& gl,
                           const OutcomeSet& rs, const OutcomeSet& rl);

// Flat outcome row, as read back from a ledger.
struct OutcomeRecord {
  std::string question_id;
  std::string task;
  Domain domain = Domain::GeneralKnowledge;
  Protocol protocol = Protocol::B;
  int group_size = 0;
  bool correct = false;
  bool parse_failed = false;
};

struct ProtocolMetrics {
  Rational err;
  std::optional<Rational> sigma;  // absent for B or when undefined
  std::int64_t total = 0;
  std::int64_t incorrect = 0;
  std::int64_t parse_failed = 0;
};

struct MetricsBlock {
  std::map<Protocol, ProtocolMetrics> per_protocol;
  std::optional<Rational> sigma_max;
};

struct MetricsReport {
  std::string model;
  int group_size = 0;
  MetricsBlock overall;
  std::map<std::string, MetricsBlock> per_domain;
  std::map<std::string, MetricsBlock> per_task;
  std::map<int, MetricsBlock> per_group_size;
  std::vector<std::string> warnings;
};

enum class BreakdownKey { domain, group_size, task };

// Metrics over one slice of records. B records are the baseline; other
// protocols are restricted to `group_size` when it is non-zero.
MetricsBlock compute_block(std::span<const OutcomeRecord> records, int group_size,
                           std::vector<std::string>* warnings = nullptr,
                           const std::string& label = "overall");

// Groups records by `key` and recomputes every metric per group. Baseline
// records are shared across group sizes.
std::map<std::string, MetricsBlock> breakdown(std::span<const OutcomeRecord> records,
                                              BreakdownKey key, int group_size,
                                              std::vector<std::string>* warnings = nullptr);

MetricsReport build_report(std::span<const OutcomeRecord> records, int group_size,
                           std::string model);

nlohmann::json to_json(const MetricsReport& r);
std::string to_csv(const MetricsReport& r);
std::string to_markdown(const MetricsReport& r);

}  // namespace manbench
