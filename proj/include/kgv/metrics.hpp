#ifndef KGV_METRICS_HPP
#define KGV_METRICS_HPP

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgv/error.hpp"
#include "kgv/text.hpp"
#include "kgv/verify_hop.hpp"

namespace kgv {

inline double entity_accuracy(std::size_t nme, std::size_t nhc, std::size_t nte) {
  if (nte == 0) throw ZeroDenominator("entity accuracy needs NTE > 0");
  if (nme + nhc > nte) throw CountOverflow("NME + NHC exceeds NTE");
  return static_cast<double>(nme + nhc) * 100.0 / static_cast<double>(nte);
}

inline double fact_verification_rate(std::size_t ncv, std::size_t ntc) {
  if (ntc == 0) throw ZeroDenominator("fact verification rate needs NTC > 0");
  if (ncv > ntc) throw CountOverflow("NCV exceeds NTC");
  return static_cast<double>(ncv) * 100.0 / static_cast<double>(ntc);
}

inline double factual_improvement(std::size_t baseline_h, std::size_t corrected_h) {
  if (baseline_h == 0) throw ZeroDenominator("factual improvement needs a baseline hallucination count > 0");
  return (static_cast<double>(baseline_h) - static_cast<double>(corrected_h)) * 100.0 /
         static_cast<double>(baseline_h);
}

enum class FlagCriterion { absent_from_kg, below_threshold, claims_unverified };

inline std::string_view to_string(FlagCriterion c) {
  switch (c) {
    case FlagCriterion::absent_from_kg: return "absent_from_kg";
    case FlagCriterion::below_threshold: return "below_threshold";
    case FlagCriterion::claims_unverified: return "claims_unverified";
  }
  return "absent_from_kg";
}

inline std::optional<FlagCriterion> parse_flag_criterion(std::string_view s) {
  for (auto c : {FlagCriterion::absent_from_kg, FlagCriterion::below_threshold, FlagCriterion::claims_unverified}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

struct MentionFlag {
  std::size_t mention_index = 0;
  std::string text;
  std::string normalized;
  double score = 0.0;
  std::set<FlagCriterion> criteria;

  bool operator==(const MentionFlag&) const = default;
};

struct HallucinationFlags {
  std::vector<MentionFlag> flags;

  std::size_t count() const { return flags.size(); }
  bool flagged(std::size_t mention_index) const {
    for (const auto& f : flags) {
      if (f.mention_index == mention_index) return true;
    }
    return false;
  }
  bool operator==(const HallucinationFlags&) const = default;
};

/// A mention outside V is flagged absent_from_kg and below_threshold. A
/// mention in V is flagged claims_unverified when it is the subject of at
/// least one non-entity claim and none of those is confirmed.
inline HallucinationFlags flag_hallucinations(const VerificationReport& report) {
  HallucinationFlags out;
  const auto& p = report.partition;
  for (std::size_t i = 0; i < p.matches.size(); ++i) {
    MentionFlag f{i, p.matches[i].mention.text, p.matches[i].mention.normalized, p.matches[i].score, {}};
    if (!p.is_verified(i)) {
      f.criteria = {FlagCriterion::absent_from_kg, FlagCriterion::below_threshold};
    } else {
      std::size_t subject_claims = 0;
      std::size_t confirmed = 0;
      for (std::size_t c = 0; c < report.claims.size(); ++c) {
        const auto& claim = report.claims[c];
        if (claim.kind == ClaimKind::entity || claim.subject_index != i) continue;
        ++subject_claims;
        if (report.verdicts[c].status == VerdictStatus::confirmed) ++confirmed;
      }
      if (subject_claims > 0 && confirmed == 0) f.criteria.insert(FlagCriterion::claims_unverified);
    }
    if (!f.criteria.empty()) out.flags.push_back(std::move(f));
  }
  return out;
}

enum class Split { seen, unseen, distractor };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::seen: return "seen";
    case Split::unseen: return "unseen";
    case Split::distractor: return "distractor";
  }
  return "seen";
}

inline std::optional<Split> parse_split(std::string_view s) {
  for (auto v : {Split::seen, Split::unseen, Split::distractor}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

enum class GoldLabel { real, hallucinated };

struct EntityGold {
  std::string text;
  GoldLabel label = GoldLabel::real;

  bool operator==(const EntityGold&) const = default;
};

/// Baseline mention as seen by the evaluator.
struct MentionStatus {
  std::string normalized;
  bool verified = false;
  bool flagged = false;

  bool operator==(const MentionStatus&) const = default;
};

/// Everything evaluation needs from one processed record.
struct RecordOutcome {
  std::string id;
  std::optional<Split> split;
  bool failed = false;
  ClaimCounts counts;  // baseline caption
  std::vector<MentionStatus> mentions;
  std::size_t baseline_hallucinations = 0;
  std::size_t corrected_hallucinations = 0;
  std::optional<std::vector<EntityGold>> gold;
  std::optional<int> coherence;

  bool operator==(const RecordOutcome&) const = default;
};

struct GoldCounts {
  std::size_t nme = 0;
  std::size_t nhc = 0;
  std::size_t nte = 0;
};

/// NME counts gold-real entries found among unflagged V mentions; NHC counts
/// gold-hallucinated entries found among flagged mentions.
inline GoldCounts gold_counts(const RecordOutcome& r) {
  GoldCounts g;
  if (!r.gold) return g;
  for (const auto& entry : *r.gold) {
    ++g.nte;
    const auto wanted = normalize_mention(entry.text);
    for (const auto& m : r.mentions) {
      if (m.normalized != wanted) continue;
      if (entry.label == GoldLabel::real && m.verified && !m.flagged) {
        ++g.nme;
        break;
      }
      if (entry.label == GoldLabel::hallucinated && m.flagged) {
        ++g.nhc;
        break;
      }
    }
  }
  return g;
}

struct MetricsBlock {
  std::size_t records = 0;
  std::size_t failed_records = 0;
  std::size_t nme = 0;
  std::size_t nhc = 0;
  std::size_t nte = 0;
  ClaimCounts counts;
  std::optional<double> ea;
  std::optional<double> fvr;
  std::optional<double> fi;
  std::size_t baseline_hallucinations = 0;
  std::size_t corrected_hallucinations = 0;
  std::vector<int> coherence_annotations;

  bool operator==(const MetricsBlock&) const = default;
};

struct MetricsSummary {
  MetricsBlock total;
  std::map<std::string, MetricsBlock> per_split;
  std::vector<std::string> warnings;
};

namespace detail {

inline void accumulate(MetricsBlock& b, const RecordOutcome& r) {
  ++b.records;
  if (r.failed) ++b.failed_records;
  auto g = gold_counts(r);
  b.nme += g.nme;
  b.nhc += g.nhc;
  b.nte += g.nte;
  b.counts += r.counts;
  b.baseline_hallucinations += r.baseline_hallucinations;
  b.corrected_hallucinations += r.corrected_hallucinations;
  if (r.coherence) b.coherence_annotations.push_back(*r.coherence);
}

inline void finish(MetricsBlock& b, bool gold_mode, const std::string& scope, std::vector<std::string>& warnings) {
  if (gold_mode && b.nte > 0) b.ea = entity_accuracy(b.nme, b.nhc, b.nte);
  if (b.counts.ntc > 0) {
    b.fvr = fact_verification_rate(b.counts.ncv, b.counts.ntc);
  } else {
    warnings.push_back(scope + ": no claims, FVR undefined");
  }
  if (b.baseline_hallucinations > 0) {
    b.fi = factual_improvement(b.baseline_hallucinations, b.corrected_hallucinations);
  } else {
    warnings.push_back(scope + ": no baseline hallucinations, FI undefined");
  }
}

}  // namespace detail

/// Deterministic fold over records sorted by id. EA is computed only in gold
/// mode; requesting it with no annotated record raises MissingGold.
inline MetricsSummary evaluate_corpus(std::vector<RecordOutcome> records, bool gold_mode) {
  std::sort(records.begin(), records.end(),
            [](const RecordOutcome& a, const RecordOutcome& b) { return a.id < b.id; });
  if (gold_mode && std::none_of(records.begin(), records.end(), [](const RecordOutcome& r) { return r.gold; })) {
    throw MissingGold();
  }
  MetricsSummary s;
  for (const auto& r : records) {
    detail::accumulate(s.total, r);
    detail::accumulate(s.per_split[r.split ? std::string(to_string(*r.split)) : "unassigned"], r);
  }
  detail::finish(s.total, gold_mode, "corpus", s.warnings);
  for (auto& [name, block] : s.per_split) detail::finish(block, gold_mode, "split " + name, s.warnings);
  return s;
}

inline std::string format_percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v);
  return buf;
}

inline std::optional<double> mean_coherence(const std::vector<int>& ratings) {
  if (ratings.empty()) return std::nullopt;
  return static_cast<double>(std::accumulate(ratings.begin(), ratings.end(), 0)) /
         static_cast<double>(ratings.size());
}

struct TableRow {
  std::string format;
  MetricsBlock block;
};

/// Format | EA | FVR | Cc, one decimal place; "-" where undefined.
inline std::string render_table(const std::vector<TableRow>& rows) {
  std::vector<std::vector<std::string>> cells{{"Format", "EA", "FVR", "Cc"}};
  for (const auto& r : rows) {
    auto cc = mean_coherence(r.block.coherence_annotations);
    cells.push_back({r.format, format_percent(r.block.ea), format_percent(r.block.fvr), format_percent(cc)});
  }
  std::vector<std::size_t> width(4, 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0) {
        line += row[i] + std::string(width[i] - row[i].size(), ' ');
      } else {
        line += "  " + std::string(width[i] - row[i].size(), ' ') + row[i];
      }
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace kgv

#endif  // KGV_METRICS_HPP
