#pragma once

// Shuffle enumeration: plain shuffles of two (or more) blocks, barred
// variants fixing the boundary symbols, per-direction product shuffles, and
// the two structured families used by gluing and transport identities.
//
// An arrangement of blocks (b_1, ..., b_B) is a word of length sum(b_i) over
// flat source labels, where block r contributes the consecutive labels
// offset_r+1 .. offset_r+b_r in their original order. Enumeration is
// lexicographic in the word.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mint {

using Arrangement = std::vector<int>;

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i)
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

inline std::uint64_t multinomial(const std::vector<int>& blocks) {
  std::uint64_t r = 1;
  int total = 0;
  for (int b : blocks) {
    if (b < 0) throw std::invalid_argument("block sizes must be >= 0");
    total += b;
    r *= binomial(total, b);
  }
  return r;
}

/// All interleavings of the blocks, lexicographic in the resulting word.
inline std::vector<Arrangement> enumerate_arrangements(
    const std::vector<int>& blocks) {
  int total = 0;
  std::vector<int> offsets(blocks.size());
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    offsets[r] = total;
    total += blocks[r];
  }
  std::vector<Arrangement> out;
  Arrangement cur;
  cur.reserve(static_cast<std::size_t>(total));
  std::vector<int> used(blocks.size(), 0);

  struct Rec {
    const std::vector<int>& blocks;
    const std::vector<int>& offsets;
    std::vector<int>& used;
    Arrangement& cur;
    std::vector<Arrangement>& out;
    int total;

    void go() {
      if (static_cast<int>(cur.size()) == total) {
        out.push_back(cur);
        return;
      }
      // blocks are scanned in order, so candidate labels increase: lex order
      for (std::size_t r = 0; r < blocks.size(); ++r) {
        if (used[r] == blocks[r]) continue;
        cur.push_back(offsets[r] + used[r] + 1);
        ++used[r];
        go();
        --used[r];
        cur.pop_back();
      }
    }
  };
  Rec rec{blocks, offsets, used, cur, out, total};
  rec.go();
  return out;
}

/// Shuffles of two blocks of sizes m1 and m2: words over {1..m1} (first
/// block) and {m1+1..m1+m2} (second block). Count binomial(m1+m2, m1).
inline std::vector<Arrangement> enumerate_sh(int m1, int m2) {
  if (m1 < 0 || m2 < 0)
    throw std::invalid_argument("shuffle block sizes must be >= 0");
  return enumerate_arrangements({m1, m2});
}

/// Barred shuffles: permutations of {0, ..., m1+m2+1} fixing 0 and m1+m2+1,
/// shuffling the interiors of the two blocks. Returned as full words
/// [0, interleaved interior labels, m1+m2+1].
inline std::vector<Arrangement> enumerate_sh_bar(int m1, int m2) {
  std::vector<Arrangement> interior = enumerate_sh(m1, m2);
  std::vector<Arrangement> out;
  out.reserve(interior.size());
  for (const auto& a : interior) {
    Arrangement full;
    full.reserve(a.size() + 2);
    full.push_back(0);
    for (int v : a) full.push_back(v);
    full.push_back(m1 + m2 + 1);
    out.push_back(std::move(full));
  }
  return out;
}

/// A product shuffle: one interior arrangement per cube direction.
struct Shuffle {
  std::vector<Arrangement> dirs;  // dirs[i]: arrangement of the direction-i+1 blocks
  bool barred = false;
};

/// Per-direction products Sh(k1, k2) or barred Sh(k1, k2).
/// Count = prod_i binomial(k1_i + k2_i, k1_i) either way.
inline std::vector<Shuffle> enumerate_product(const std::vector<int>& k1,
                                              const std::vector<int>& k2,
                                              bool barred) {
  if (k1.size() != k2.size())
    throw std::invalid_argument("cut vectors must have equal length");
  std::vector<std::vector<Arrangement>> per_dir;
  for (std::size_t i = 0; i < k1.size(); ++i)
    per_dir.push_back(enumerate_sh(k1[i], k2[i]));
  std::vector<Shuffle> out;
  std::vector<std::size_t> idx(per_dir.size(), 0);
  while (true) {
    Shuffle s;
    s.barred = barred;
    for (std::size_t i = 0; i < per_dir.size(); ++i)
      s.dirs.push_back(per_dir[i][idx[i]]);
    out.push_back(std::move(s));
    // lexicographic ripple: the LAST direction varies fastest so the whole
    // sequence is lexicographic in (dirs[0], dirs[1], ...)
    std::size_t d = per_dir.size();
    while (d-- > 0) {
      if (++idx[d] < per_dir[d].size()) break;
      idx[d] = 0;
      if (d == 0) return out;
    }
    if (per_dir.empty()) return out;
  }
}

/// Gluing family: direction 1 is frozen to the order-preserving concatenation
/// (block 1 before block 2); directions >= 2 are barred shuffles.
/// Count = prod_{i>=2} binomial(k1_i + k2_i, k1_i).
inline std::vector<Shuffle> enumerate_sh1(const std::vector<int>& k1,
                                          const std::vector<int>& k2) {
  if (k1.empty() || k1.size() != k2.size())
    throw std::invalid_argument("cut vectors must be nonempty and equal length");
  std::vector<int> rest1(k1.begin() + 1, k1.end());
  std::vector<int> rest2(k2.begin() + 1, k2.end());
  std::vector<Shuffle> tail = enumerate_product(rest1, rest2, true);
  Arrangement concat;
  for (int v = 1; v <= k1[0] + k2[0]; ++v) concat.push_back(v);
  std::vector<Shuffle> out;
  if (tail.empty()) {
    Shuffle s;
    s.barred = true;
    s.dirs.push_back(concat);
    out.push_back(std::move(s));
    return out;
  }
  out.reserve(tail.size());
  for (auto& t : tail) {
    Shuffle s;
    s.barred = true;
    s.dirs.push_back(concat);
    for (auto& d : t.dirs) s.dirs.push_back(std::move(d));
    out.push_back(std::move(s));
  }
  return out;
}

/// Transport family over n = k1.size() + 1 directions: in each direction
/// i < n a multi-argument shuffle of the blocks (k1_i, k2_i, ..., k2_i) with
/// 1 + copies distinguishable blocks; direction n is the identity word
/// 1..copies+1 (the iteration order). Count = prod_{i<n} multinomial.
inline std::vector<Shuffle> enumerate_shn(const std::vector<int>& k1,
                                          const std::vector<int>& k2,
                                          int copies) {
  if (k1.size() != k2.size())
    throw std::invalid_argument("cut vectors must have equal length");
  if (copies < 1) throw std::invalid_argument("copies must be >= 1");
  std::vector<std::vector<Arrangement>> per_dir;
  for (std::size_t i = 0; i < k1.size(); ++i) {
    std::vector<int> blocks{k1[i]};
    for (int c = 0; c < copies; ++c) blocks.push_back(k2[i]);
    per_dir.push_back(enumerate_arrangements(blocks));
  }
  Arrangement last;
  for (int v = 1; v <= copies + 1; ++v) last.push_back(v);

  std::vector<Shuffle> out;
  std::vector<std::size_t> idx(per_dir.size(), 0);
  while (true) {
    Shuffle s;
    for (std::size_t i = 0; i < per_dir.size(); ++i)
      s.dirs.push_back(per_dir[i][idx[i]]);
    s.dirs.push_back(last);
    out.push_back(std::move(s));
    if (per_dir.empty()) return out;
    std::size_t d = per_dir.size();
    while (d-- > 0) {
      if (++idx[d] < per_dir[d].size()) break;
      idx[d] = 0;
      if (d == 0) return out;
    }
  }
}

inline std::uint64_t count_sh(int m1, int m2) {
  return binomial(m1 + m2, m1);
}

inline std::uint64_t count_product(const std::vector<int>& k1,
                                   const std::vector<int>& k2) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < k1.size(); ++i)
    r *= binomial(k1[i] + k2[i], k1[i]);
  return r;
}

inline std::uint64_t count_sh1(const std::vector<int>& k1,
                               const std::vector<int>& k2) {
  std::uint64_t r = 1;
  for (std::size_t i = 1; i < k1.size(); ++i)
    r *= binomial(k1[i] + k2[i], k1[i]);
  return r;
}

inline std::uint64_t count_shn(const std::vector<int>& k1,
                               const std::vector<int>& k2, int copies) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < k1.size(); ++i) {
    std::vector<int> blocks{k1[i]};
    for (int c = 0; c < copies; ++c) blocks.push_back(k2[i]);
    r *= multinomial(blocks);
  }
  return r;
}

}  // namespace mint
