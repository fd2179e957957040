#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cexample/fingerprint.hpp"
#include "cexample/network.hpp"
#include "cexample/parallel.hpp"

namespace cexample {

/// A percentage held as an integer number of tenths, so sums and differences
/// of reported cells are exact.
class Percent {
 public:
  constexpr Percent() = default;
  static constexpr Percent from_tenths(std::int64_t tenths) { return Percent(tenths); }
  static Percent from_real(Real pct) { return Percent(std::llround(pct * 10.0)); }

  constexpr std::int64_t tenths() const { return tenths_; }
  constexpr Real value() const { return static_cast<Real>(tenths_) / 10.0; }
  std::int64_t rounded() const { return static_cast<std::int64_t>(std::lround(value())); }

  constexpr Percent operator-(Percent o) const { return Percent(tenths_ - o.tenths_); }
  constexpr Percent operator+(Percent o) const { return Percent(tenths_ + o.tenths_); }
  constexpr Percent operator-() const { return Percent(-tenths_); }
  constexpr auto operator<=>(const Percent&) const = default;

  std::string str() const {
    std::ostringstream os;
    const std::int64_t a = tenths_ < 0 ? -tenths_ : tenths_;
    os << (tenths_ < 0 ? "-" : "") << a / 10 << '.' << a % 10;
    return os.str();
  }

 private:
  constexpr explicit Percent(std::int64_t t) : tenths_(t) {}
  std::int64_t tenths_ = 0;
};

/// 100 * (# examples classified as their target) / P.
inline Real fingerprint_accuracy(const Network& net, const FingerprintSet& set) {
  if (set.examples.empty()) throw Error(ErrorKind::kEmptyInput, "fingerprint set is empty");
  std::size_t hits = 0;
  for (const auto& e : set.examples) {
    if (e.image.size() != net.input_shape().size()) {
      throw Error(ErrorKind::kInputShape, "fingerprint image " + shape_string(e.image.shape()) +
                                              " does not fit network input " + to_string(net.input_shape()));
    }
    hits += predict(net, e.image.values()) == e.label;
  }
  return 100.0 * static_cast<Real>(hits) / static_cast<Real>(set.examples.size());
}

struct NamedModel {
  std::string name;
  Network network;
  Real test_accuracy = 0.0;
};

struct PrunedEntry {
  Real ratio = 0.0;
  std::size_t repeat = 0;
  NamedModel model;
};

/// Base model, its pruned descendants, and groups of unrelated models.
struct ModelRegistry {
  NamedModel base;
  std::vector<PrunedEntry> pruned;
  std::map<std::string, std::vector<NamedModel>> others;

  std::vector<Real> ratios() const {
    std::vector<Real> out;
    for (const auto& p : pruned) {
      if (std::none_of(out.begin(), out.end(), [&](Real r) { return same_ratio(r, p.ratio); })) out.push_back(p.ratio);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  static bool same_ratio(Real a, Real b) { return std::abs(a - b) < 1e-9; }
};

inline Percent mean_percent(const std::vector<Real>& values) {
  Real sum = 0.0;
  for (Real v : values) sum += v;
  return Percent::from_real(sum / static_cast<Real>(values.size()));
}

/// Mean fingerprint accuracy over the pruned repeats at `ratio`.
inline Percent robustness(const FingerprintSet& set, const ModelRegistry& registry, Real ratio) {
  std::vector<Real> acc;
  for (const auto& p : registry.pruned) {
    if (ModelRegistry::same_ratio(p.ratio, ratio)) acc.push_back(fingerprint_accuracy(p.model.network, set));
  }
  if (acc.empty()) throw Error(ErrorKind::kNotFound, "no pruned model at ratio " + std::to_string(ratio));
  return mean_percent(acc);
}

/// Mean fingerprint accuracy over one group of other models.
inline Percent transferability(const FingerprintSet& set, const ModelRegistry& registry,
                               const std::string& group = "variants") {
  auto it = registry.others.find(group);
  if (it == registry.others.end() || it->second.empty()) {
    throw Error(ErrorKind::kNotFound, "no other models in group '" + group + "'");
  }
  std::vector<Real> acc;
  for (const auto& m : it->second) acc.push_back(fingerprint_accuracy(m.network, set));
  return mean_percent(acc);
}

/// Robustness minus transferability, in percentage points.
inline Percent uniqueness_score(Percent robustness, Percent transferability) {
  for (Percent p : {robustness, transferability}) {
    if (p < Percent::from_tenths(0) || p > Percent::from_tenths(1000)) {
      throw Error(ErrorKind::kParameter, "accuracy " + p.str() + " outside [0, 100]");
    }
  }
  return robustness - transferability;
}

enum class Decision { kClaim, kReject };

inline std::string_view to_string(Decision d) { return d == Decision::kClaim ? "claim" : "reject"; }

inline Decision verify_ownership(const Network& net, const FingerprintSet& set, Real threshold) {
  if (!(threshold > 0.0 && threshold <= 100.0)) {
    throw Error(ErrorKind::kParameter, "threshold " + std::to_string(threshold) + " outside (0, 100]");
  }
  return fingerprint_accuracy(net, set) >= threshold ? Decision::kClaim : Decision::kReject;
}

struct RatioCell {
  Real ratio = 0.0;
  Percent robustness;
  std::map<std::string, Percent> uniqueness;  // per other-model group
};

/// One fingerprint set evaluated against the whole registry.
struct ReportRow {
  FingerprintConfig config;
  std::string cell;
  std::size_t converged = 0;
  Percent base_accuracy;
  std::map<std::string, Percent> transferability;
  std::vector<RatioCell> ratios;
  std::map<std::string, Real> model_accuracy;  // fingerprint accuracy per model name
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  std::vector<Real> ratios;
  std::vector<std::string> groups;
  std::map<std::string, Real> model_test_accuracy;
  nlohmann::json config_echo = nlohmann::json::object();

  const ReportRow* find(const std::string& cell) const {
    for (const auto& r : rows) {
      if (r.cell == cell) return &r;
    }
    return nullptr;
  }
};

inline std::string pruned_name(Real ratio, std::size_t repeat) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "pruned-r%.2f-%zu", ratio, repeat);
  return buf;
}

inline EvaluationReport build_report(const std::vector<FingerprintSet>& sets, const ModelRegistry& registry,
                                     std::size_t jobs = 1) {
  if (sets.empty()) throw Error(ErrorKind::kEmptyInput, "no fingerprint sets to evaluate");
  if (registry.pruned.empty()) throw Error(ErrorKind::kEmptyInput, "registry has no pruned models");
  if (registry.others.empty()) throw Error(ErrorKind::kEmptyInput, "registry has no other models");
  EvaluationReport report;
  report.ratios = registry.ratios();
  for (const auto& [group, models] : registry.others) report.groups.push_back(group);
  report.model_test_accuracy[registry.base.name] = registry.base.test_accuracy;
  for (const auto& p : registry.pruned) report.model_test_accuracy[p.model.name] = p.model.test_accuracy;
  for (const auto& [group, models] : registry.others) {
    for (const auto& m : models) report.model_test_accuracy[m.name] = m.test_accuracy;
  }

  report.rows.resize(sets.size());
  parallel_for(sets.size(), jobs, [&](std::size_t i) {
    const FingerprintSet& set = sets[i];
    ReportRow row;
    row.config = set.config;
    row.cell = set.config.cell_name();
    row.converged = set.converged_count();
    const Real base = fingerprint_accuracy(registry.base.network, set);
    row.base_accuracy = Percent::from_real(base);
    row.model_accuracy[registry.base.name] = base;
    for (const auto& p : registry.pruned) row.model_accuracy[p.model.name] = fingerprint_accuracy(p.model.network, set);
    for (const auto& [group, models] : registry.others) {
      for (const auto& m : models) row.model_accuracy[m.name] = fingerprint_accuracy(m.network, set);
      row.transferability[group] = transferability(set, registry, group);
    }
    for (Real r : report.ratios) {
      RatioCell cell{r, robustness(set, registry, r), {}};
      for (const auto& [group, t] : row.transferability) cell.uniqueness[group] = uniqueness_score(cell.robustness, t);
      row.ratios.push_back(std::move(cell));
    }
    report.rows[i] = std::move(row);
  });
  return report;
}

/// Every cell satisfies robustness == uniqueness + transferability.
inline bool report_identity_holds(const EvaluationReport& report) {
  for (const auto& row : report.rows) {
    for (const auto& cell : row.ratios) {
      for (const auto& [group, u] : cell.uniqueness) {
        if (cell.robustness != u + row.transferability.at(group)) return false;
      }
    }
  }
  return true;
}

struct TrendResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct TrendCriteria {
  std::string group = "variants";
  Percent ltrc_margin = Percent::from_tenths(100);
  Real gm_ratio = 0.8;
  std::size_t allowed_inversions = 1;
};

namespace detail {

inline Percent mean_uniqueness(const ReportRow& row, const std::string& group) {
  std::int64_t sum = 0;
  for (const auto& c : row.ratios) sum += c.uniqueness.at(group).tenths();
  return Percent::from_tenths(row.ratios.empty() ? 0 : sum / static_cast<std::int64_t>(row.ratios.size()));
}

inline const RatioCell* cell_at(const ReportRow& row, Real ratio) {
  for (const auto& c : row.ratios) {
    if (ModelRegistry::same_ratio(c.ratio, ratio)) return &c;
  }
  return nullptr;
}

}  // namespace detail

/// Qualitative trade-off trends expected from the method family:
///  (a) the best LTRC cell (by mean uniqueness over ratios) beats vanilla by
///      at least `ltrc_margin` at every ratio;
///  (b) RC+GM at its best delta (at `gm_ratio`) is at least RC at that delta;
///  (c) per method (and per band k for LTRC), transferability does not
///      decrease along the delta grid, up to `allowed_inversions` adjacent drops.
inline std::vector<TrendResult> check_trends(const EvaluationReport& report, const TrendCriteria& criteria = {}) {
  const std::string& g = criteria.group;
  std::vector<TrendResult> out;
  std::vector<const ReportRow*> vanilla, rc, gm, ltrc;
  for (const auto& row : report.rows) {
    switch (row.config.method) {
      case Method::kVanilla: vanilla.push_back(&row); break;
      case Method::kRc: rc.push_back(&row); break;
      case Method::kRcGm: gm.push_back(&row); break;
      case Method::kLtrc: ltrc.push_back(&row); break;
    }
  }

  {
    TrendResult t{"ltrc-beats-vanilla", false, ""};
    if (vanilla.empty() || ltrc.empty()) {
      t.detail = "needs vanilla and ltrc rows";
    } else {
      const ReportRow* best = *std::max_element(ltrc.begin(), ltrc.end(), [&](const ReportRow* a, const ReportRow* b) {
        return detail::mean_uniqueness(*a, g) < detail::mean_uniqueness(*b, g);
      });
      t.passed = true;
      t.detail = "best " + best->cell + ":";
      for (const auto& c : best->ratios) {
        const RatioCell* v = detail::cell_at(*vanilla.front(), c.ratio);
        const Percent gap = c.uniqueness.at(g) - v->uniqueness.at(g);
        t.passed = t.passed && gap >= criteria.ltrc_margin;
        t.detail += " r=" + std::to_string(c.ratio).substr(0, 4) + " U " + c.uniqueness.at(g).str() + " vs " +
                    v->uniqueness.at(g).str() + " (gap " + gap.str() + ")";
      }
    }
    out.push_back(std::move(t));
  }

  {
    TrendResult t{"gm-not-worse-than-rc", false, ""};
    const ReportRow* best = nullptr;
    for (const ReportRow* row : gm) {
      const RatioCell* c = detail::cell_at(*row, criteria.gm_ratio);
      if (c && (!best || c->uniqueness.at(g) > detail::cell_at(*best, criteria.gm_ratio)->uniqueness.at(g))) best = row;
    }
    const ReportRow* match = nullptr;
    if (best) {
      for (const ReportRow* row : rc) {
        if (row->config.delta == best->config.delta) match = row;
      }
    }
    if (!best || !match) {
      t.detail = "needs rc and rc-gm rows at a shared delta and ratio " + std::to_string(criteria.gm_ratio);
    } else {
      const Percent ug = detail::cell_at(*best, criteria.gm_ratio)->uniqueness.at(g);
      const Percent ur = detail::cell_at(*match, criteria.gm_ratio)->uniqueness.at(g);
      t.passed = ug >= ur;
      t.detail = best->cell + " U " + ug.str() + " vs " + match->cell + " U " + ur.str();
    }
    out.push_back(std::move(t));
  }

  {
    TrendResult t{"transfer-monotone-in-delta", true, ""};
    std::map<std::string, std::vector<const ReportRow*>> families;
    for (const ReportRow* row : rc) families["rc"].push_back(row);
    for (const ReportRow* row : gm) families["rc-gm"].push_back(row);
    for (const ReportRow* row : ltrc) families["ltrc-k" + std::to_string(row->config.band_k)].push_back(row);
    for (auto& [name, rows] : families) {
      std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->config.delta < b->config.delta; });
      std::size_t drops = 0;
      std::string seq;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i && rows[i]->transferability.at(g) < rows[i - 1]->transferability.at(g)) ++drops;
        seq += (i ? "," : "") + rows[i]->transferability.at(g).str();
      }
      const bool ok = rows.size() >= 2 && drops <= criteria.allowed_inversions;
      t.passed = t.passed && ok;
      t.detail += (t.detail.empty() ? "" : "; ") + name + " [" + seq + "] drops " + std::to_string(drops);
    }
    if (families.empty()) {
      t.passed = false;
      t.detail = "needs rows with a delta grid";
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json ratios = nlohmann::json::array();
    for (const auto& c : r.ratios) {
      nlohmann::json u;
      for (const auto& [g, p] : c.uniqueness) u[g] = p.value();
      ratios.push_back({{"ratio", c.ratio}, {"robustness", c.robustness.value()}, {"uniqueness", u}});
    }
    nlohmann::json t;
    for (const auto& [g, p] : r.transferability) t[g] = p.value();
    rows.push_back({{"cell", r.cell},
                    {"method", to_string(r.config.method)},
                    {"delta", r.config.effective_delta()},
                    {"band_k", r.config.effective_band()},
                    {"converged", r.converged},
                    {"examples", r.config.examples},
                    {"base_accuracy", r.base_accuracy.value()},
                    {"transferability", t},
                    {"ratios", ratios},
                    {"model_accuracy", r.model_accuracy}});
  }
  return {{"ratios", report.ratios},
          {"groups", report.groups},
          {"model_test_accuracy", report.model_test_accuracy},
          {"config", report.config_echo},
          {"rows", rows}};
}

/// Long-format table: one line per (method, delta, k, ratio, group).
inline std::string report_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "method,delta,band_k,ratio,group,base_accuracy,robustness,transferability,uniqueness\n";
  for (const auto& r : report.rows) {
    for (const auto& c : r.ratios) {
      for (const auto& [g, u] : c.uniqueness) {
        os << to_string(r.config.method) << ',' << r.config.effective_delta() << ',' << r.config.effective_band()
           << ',' << c.ratio << ',' << g << ',' << r.base_accuracy.str() << ',' << c.robustness.str() << ','
           << r.transferability.at(g).str() << ',' << u.str() << '\n';
      }
    }
  }
  return os.str();
}

/// (transferability, robustness) points for trade-off plots.
inline std::string curve_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "method,delta,band_k,ratio,group,transferability,robustness\n";
  for (const auto& r : report.rows) {
    for (const auto& c : r.ratios) {
      for (const auto& [g, t] : r.transferability) {
        os << to_string(r.config.method) << ',' << r.config.effective_delta() << ',' << r.config.effective_band()
           << ',' << c.ratio << ',' << g << ',' << t.str() << ',' << c.robustness.str() << '\n';
      }
    }
  }
  return os.str();
}

/// Fixed-width summary in the paper-table layout: rounded integers.
inline std::string report_table(const EvaluationReport& report, const std::string& group) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %6s %8s", "cell", "base", "transfer");
  os << buf;
  for (Real r : report.ratios) {
    std::snprintf(buf, sizeof buf, " %8s", ("U@" + std::to_string(static_cast<int>(std::lround(r * 100))) + "%").c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%-22s %6lld %8lld", row.cell.c_str(),
                  static_cast<long long>(row.base_accuracy.rounded()),
                  static_cast<long long>(row.transferability.at(group).rounded()));
    os << buf;
    for (const auto& c : row.ratios) {
      std::snprintf(buf, sizeof buf, " %+8lld", static_cast<long long>(c.uniqueness.at(group).rounded()));
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

/// Trade-off scatter: x = transferability, y = robustness, one colour per method.
inline std::string curve_svg(const EvaluationReport& report, const std::string& group) {
  const int size = 420, pad = 40;
  auto px = [&](Real v) { return pad + v / 100.0 * (size - 2 * pad); };
  auto colour = [](Method m) {
    switch (m) {
      case Method::kVanilla: return "#444444";
      case Method::kRc: return "#1f77b4";
      case Method::kRcGm: return "#2ca02c";
      case Method::kLtrc: return "#d62728";
    }
    return "#000000";
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << pad << "\" y1=\"" << size - pad << "\" x2=\"" << size - pad << "\" y2=\"" << size - pad
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << size - pad
     << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << size / 2 - 40 << "\" y=\"" << size - 10 << "\" font-size=\"12\">transferability (%)</text>\n"
     << "<text x=\"5\" y=\"" << pad - 10 << "\" font-size=\"12\">robustness (%)</text>\n";
  for (const auto& row : report.rows) {
    for (const auto& c : row.ratios) {
      os << "<circle cx=\"" << px(row.transferability.at(group).value()) << "\" cy=\""
         << size - px(c.robustness.value()) << "\" r=\"3\" fill=\"" << colour(row.config.method) << "\"><title>"
         << row.cell << " @" << c.ratio << "</title></circle>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace cexample
