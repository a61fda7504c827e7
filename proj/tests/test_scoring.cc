// tests/test_scoring.cc
//
// Copyright 2026 The cvec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cvec/scoring.h"

namespace cvec {
namespace {

SegmentList seg(std::initializer_list<Segment> s) { return SegmentList(s); }

TEST(WindowsToSegments, SingleWindow) {
  const std::string labels[] = {"A"};
  const WindowTime w[] = {{0, 2}};
  const SegmentList s = windows_to_segments("r", labels, w);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].start, 0.0);
  EXPECT_EQ(s[0].end, 2.0);
  EXPECT_EQ(s[0].speaker, "A");
}

TEST(WindowsToSegments, SameLabelMerges) {
  const std::string labels[] = {"A", "A"};
  const WindowTime w[] = {{0, 2}, {1, 3}};
  const SegmentList s = windows_to_segments("r", labels, w);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].end, 3.0);
}

TEST(WindowsToSegments, MidpointRule) {
  const std::string labels[] = {"A", "B"};
  const WindowTime w[] = {{0, 2}, {1, 3}};
  const SegmentList s = windows_to_segments("r", labels, w);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].speaker, "A");
  EXPECT_DOUBLE_EQ(s[0].end, 1.5);
  EXPECT_EQ(s[1].speaker, "B");
  EXPECT_DOUBLE_EQ(s[1].start, 1.5);
  EXPECT_DOUBLE_EQ(s[1].end, 3.0);
}

TEST(WindowsToSegments, UnsortedIsError) {
  const std::string labels[] = {"A", "B"};
  const WindowTime w[] = {{1, 3}, {0, 2}};
  EXPECT_THROW(windows_to_segments("r", labels, w), std::invalid_argument);
}

TEST(Ser, IdentityIsZero) {
  const SegmentList ref = seg({{"r", 0, 3, "A"}, {"r", 3, 7.5, "B"}, {"r", 7.5, 9, "A"}});
  const SerReport rep = ser(ref, ref);
  EXPECT_EQ(rep.ser_percent, 0.0);
  EXPECT_EQ(rep.error_time, 0.0);
  EXPECT_NEAR(rep.scored_time, 7.5, 1e-12);
}

TEST(Ser, SingleSpeakerAnyLabel) {
  EXPECT_EQ(ser(seg({{"r", 0, 5, "A"}}), seg({{"r", 0, 5, "zz"}})).ser_percent, 0.0);
}

TEST(Ser, HandCase) {
  const SerReport rep =
      ser(seg({{"r", 0, 10, "A"}}), seg({{"r", 0, 6, "X"}, {"r", 6, 10, "Y"}}), 0.25);
  EXPECT_NEAR(rep.scored_time, 9.5, 1e-12);
  EXPECT_NEAR(rep.error_time, 3.75, 1e-12);
  EXPECT_NEAR(rep.ser_percent, 39.47, 0.01);
  ASSERT_EQ(rep.mapping.size(), 1u);
  EXPECT_EQ(rep.mapping[0].hyp, "X");
  EXPECT_EQ(rep.mapping[0].ref, "A");
  const auto j = rep.to_json();
  for (const char* key : {"scored_time", "error_time", "ser", "mapping"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Ser, EmptyReferenceIsError) {
  EXPECT_THROW(ser({}, seg({{"r", 0, 1, "A"}})), std::invalid_argument);
}

TEST(Ser, UncoveredScoredTimeCountsAsError) {
  const SerReport rep = ser(seg({{"r", 0, 10, "A"}}), seg({{"r", 0, 5, "A"}}), 0.0);
  EXPECT_NEAR(rep.ser_percent, 50.0, 1e-9);
}

// Independent oracle: 10 ms grid, brute force over all hyp->ref injections.
double oracle_ser(const SegmentList& ref, const SegmentList& hyp, double collar) {
  std::set<std::string> rs, hs;
  for (const auto& s : ref) rs.insert(s.speaker);
  for (const auto& s : hyp) hs.insert(s.speaker);
  std::vector<std::string> rv(rs.begin(), rs.end()), hv(hs.begin(), hs.end());
  double end = 0;
  for (const auto& s : ref) end = std::max(end, s.end);
  const int steps = static_cast<int>(std::lround(end * 100));
  std::vector<int> rlab(steps, -1), hlab(steps, -1);
  std::vector<bool> scored(steps, false);
  auto label_at = [](const SegmentList& l, const std::vector<std::string>& names, double t) {
    for (const auto& s : l) {
      if (t >= s.start && t < s.end) {
        return static_cast<int>(std::find(names.begin(), names.end(), s.speaker) - names.begin());
      }
    }
    return -1;
  };
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / 100.0;
    rlab[i] = label_at(ref, rv, t);
    hlab[i] = label_at(hyp, hv, t);
    bool near = false;
    for (const auto& s : ref) {
      near = near || std::abs(t - s.start) < collar || std::abs(t - s.end) < collar;
    }
    scored[i] = rlab[i] >= 0 && !near;
  }
  // Pad with "unmapped" slots so every hyp speaker can stay unmatched.
  std::vector<int> perm(std::max(rv.size(), hv.size()));
  std::iota(perm.begin(), perm.end(), 0);
  long total = 0, best_correct = 0;
  for (int i = 0; i < steps; ++i) total += scored[i];
  do {
    long correct = 0;
    for (int i = 0; i < steps; ++i) {
      if (scored[i] && hlab[i] >= 0 && perm[hlab[i]] == rlab[i]) ++correct;
    }
    best_correct = std::max(best_correct, correct);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total ? 100.0 * static_cast<double>(total - best_correct) / static_cast<double>(total) : 0.0;
}

SegmentList random_timeline(std::mt19937_64& rng, int speakers, const std::string& prefix,
                            double length) {
  std::uniform_int_distribution<int> dur(10, 300), who(0, speakers - 1);
  SegmentList out;
  int t = 0;
  const int stop = static_cast<int>(length * 100);
  while (t < stop) {
    const int end = std::min(stop, t + dur(rng));
    out.push_back({"r", t / 100.0, end / 100.0, prefix + std::to_string(who(rng))});
    t = end;
  }
  return out;
}

TEST(Ser, MatchesGridOracleOnRandomCases) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const SegmentList ref = random_timeline(rng, 3, "R", 20.0);
    const SegmentList hyp = random_timeline(rng, 4, "H", 20.0);
    EXPECT_NEAR(ser(ref, hyp, 0.25).ser_percent, oracle_ser(ref, hyp, 0.25), 1e-6) << trial;
  }
}

TEST(Ser, RelabelInvariantAndCollarMonotone) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const SegmentList ref = random_timeline(rng, 3, "R", 30.0);
    SegmentList hyp = random_timeline(rng, 3, "H", 30.0);
    const double base = ser(ref, hyp).ser_percent;
    for (auto& s : hyp) s.speaker = "renamed_" + s.speaker;
    EXPECT_EQ(ser(ref, hyp).ser_percent, base);
    EXPECT_EQ(ser(ref, ref).ser_percent, 0.0);
    double prev = 1e300;
    for (double c : {0.0, 0.1, 0.25, 0.5, 1.0}) {
      const double scored = ser(ref, hyp, c).scored_time;
      EXPECT_LE(scored, prev);
      prev = scored;
    }
  }
}

TEST(Assignment, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> val(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = dim(rng), cols = dim(rng);
    std::vector<std::vector<double>> g(rows, std::vector<double>(cols));
    for (auto& r : g) {
      for (double& v : r) v = std::floor(val(rng));
    }
    const std::vector<int> a = solve_assignment(g);
    double got = 0;
    std::set<int> used;
    for (int r = 0; r < rows; ++r) {
      if (a[r] >= 0) {
        got += g[r][a[r]];
        EXPECT_TRUE(used.insert(a[r]).second);
      }
    }
    const int n = std::max(rows, cols);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0;
    do {
      double total = 0;
      for (int r = 0; r < rows; ++r) {
        if (perm[r] < cols) total += g[r][perm[r]];
      }
      best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_EQ(got, best) << trial;
  }
}

TEST(Rttm, LineFormat) {
  std::ostringstream os;
  write_rttm(os, seg({{"rec1", 0, 2, "A"}, {"rec1", 1.5, 4.0, "B"}}));
  EXPECT_EQ(os.str(),
            "SPEAKER rec1 1 0.000 2.000 <NA> <NA> A <NA> <NA>\n"
            "SPEAKER rec1 1 1.500 2.500 <NA> <NA> B <NA> <NA>\n");
}

TEST(Rttm, RoundTripAtMillisecondResolution) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> ms(0, 600000), len(1, 20000), spk(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    SegmentList s;
    for (int i = 0; i < 20; ++i) {
      const int a = ms(rng);
      s.push_back({"rec" + std::to_string(i % 3), a / 1000.0, (a + len(rng)) / 1000.0,
                   "spk" + std::to_string(spk(rng))});
    }
    std::stringstream ss;
    write_rttm(ss, s);
    const SegmentList back = read_rttm(ss);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(back[i].recording, s[i].recording);
      EXPECT_EQ(back[i].speaker, s[i].speaker);
      EXPECT_EQ(std::lround(back[i].start * 1000), std::lround(s[i].start * 1000));
      EXPECT_EQ(std::lround(back[i].end * 1000), std::lround(s[i].end * 1000));
    }
  }
}

TEST(Rttm, MalformedLineReportsLineNumber) {
  std::istringstream is(
      "SPEAKER r 1 0.000 1.000 <NA> <NA> A <NA> <NA>\n"
      ";; comment\n"
      "SPEAKER r 1 abc 1.000 <NA> <NA> A <NA> <NA>\n");
  try {
    read_rttm(is);
    FAIL();
  } catch (const RttmParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Segments, Validation) {
  EXPECT_THROW(validate_segments(seg({{"r", 2, 1, "A"}})), std::invalid_argument);
  EXPECT_THROW(validate_segments(seg({{"r", -1, 1, "A"}})), std::invalid_argument);
  EXPECT_NO_THROW(validate_segments(seg({{"r", 0, 1, "A"}})));
}

}  // namespace
}  // namespace cvec
