#pragma once

// Brute-force reference implementations. Written from the definitions and
// deliberately naive; they share no code with the library.

#include <cstddef>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace littriage::oracle {

/// Index of the first maximum by linear scan, and whether it is shared.
inline std::pair<std::size_t, bool> argmax(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  std::size_t ties = 0;
  for (double v : p) ties += v == p[best];
  return {best, ties > 1};
}

inline std::vector<std::size_t> filter_above(const std::vector<double>& p, const std::vector<double>& xi) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > xi[i]) out.push_back(i);
  }
  return out;
}

/// Exact fraction num/den with den == 0 read as 0.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  bool greater_than(const Fraction& o) const {
    const auto a = den == 0 ? 0 : num;
    const auto b = o.den == 0 ? 0 : o.num;
    const auto ad = den == 0 ? 1 : den;
    const auto bd = o.den == 0 ? 1 : o.den;
    return a * bd > b * ad;
  }
  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
};

/// Per-label ξ maximizing binary F1 over the grid; among maximizers the
/// smallest ξ. Labels without positives get the lower-middle grid value.
inline std::vector<double> exhaustive_sweep(const std::vector<std::vector<double>>& scores,
                                            const std::vector<std::set<std::size_t>>& gold,
                                            std::size_t labels, std::vector<double> grid) {
  std::set<double> ordered(grid.begin(), grid.end());
  std::vector<double> sorted(ordered.begin(), ordered.end());
  std::vector<double> out;
  for (std::size_t l = 0; l < labels; ++l) {
    bool any = false;
    for (const auto& g : gold) any = any || g.count(l) > 0;
    if (!any) {
      out.push_back(sorted[(sorted.size() - 1) / 2]);
      continue;
    }
    std::vector<Fraction> f1;
    for (double xi : sorted) {
      std::uint64_t tp = 0, fp = 0, fn = 0;
      for (std::size_t r = 0; r < scores.size(); ++r) {
        const bool pred = scores[r][l] > xi;
        const bool truth = gold[r].count(l) > 0;
        tp += pred && truth;
        fp += pred && !truth;
        fn += !pred && truth;
      }
      f1.push_back({2 * tp, 2 * tp + fp + fn});
    }
    Fraction best = f1[0];
    for (const auto& f : f1) {
      if (f.greater_than(best)) best = f;
    }
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (!best.greater_than(f1[k]) && !f1[k].greater_than(best)) {
        out.push_back(sorted[k]);
        break;
      }
    }
  }
  return out;
}

/// AUC by enumerating every (positive, negative) pair.
inline std::optional<double> pairwise_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double concordant = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) concordant += 1.0;
      if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  if (pairs == 0) return std::nullopt;
  return concordant / static_cast<double>(pairs);
}

/// Gold from votes: multiclass plurality (shared maximum → none), multilabel
/// strict majority. Returns nullopt for a multiclass tie.
inline std::optional<std::set<std::size_t>> vote(const std::vector<std::set<std::size_t>>& votes, bool multilabel,
                                                 std::size_t labels) {
  std::vector<std::size_t> count(labels, 0);
  for (const auto& v : votes) {
    for (auto l : v) ++count[l];
  }
  std::set<std::size_t> out;
  if (multilabel) {
    for (std::size_t l = 0; l < labels; ++l) {
      if (2 * count[l] > votes.size()) out.insert(l);
    }
    return out;
  }
  std::size_t best = 0;
  for (std::size_t l = 0; l < labels; ++l) {
    if (count[l] > count[best]) best = l;
  }
  for (std::size_t l = 0; l < labels; ++l) {
    if (l != best && count[l] == count[best]) return std::nullopt;
  }
  out.insert(best);
  return out;
}

/// Distinct lower-cased alphanumeric words of `phrase` that also occur in
/// `text`, skipping the supplied stop words.
inline std::size_t overlap(const std::string& text, const std::string& phrase, const std::set<std::string>& stop) {
  auto words = [](const std::string& s) {
    std::set<std::string> out;
    std::string cur;
    for (char c : s + " ") {
      const auto u = static_cast<unsigned char>(c);
      if (std::isalnum(u) || u >= 0x80) {
        cur.push_back(static_cast<char>(std::tolower(u)));
      } else if (!cur.empty()) {
        out.insert(cur);
        cur.clear();
      }
    }
    return out;
  };
  const auto t = words(text);
  std::size_t n = 0;
  for (const auto& w : words(phrase)) n += !stop.count(w) && t.count(w);
  return n;
}

}  // namespace littriage::oracle
