// core/src/scoring.cc
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

#include "cvec/scoring.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace cvec {
namespace {

using Millis = std::int64_t;

Millis to_ms(double seconds) { return std::llround(seconds * 1000.0); }
double to_s(Millis ms) { return static_cast<double>(ms) / 1000.0; }

std::string format_ms(Millis ms) {
  std::ostringstream os;
  os << ms / 1000 << '.';
  const Millis frac = ms % 1000;
  os << static_cast<char>('0' + frac / 100) << static_cast<char>('0' + frac / 10 % 10)
     << static_cast<char>('0' + frac % 10);
  return os.str();
}

struct MsSegment {
  Millis start;
  Millis end;
  std::string speaker;
};

}  // namespace

void validate_segments(const SegmentList& segments) {
  for (const Segment& s : segments) {
    if (!std::isfinite(s.start) || !std::isfinite(s.end) || s.start < 0.0 ||
        !(s.end > s.start)) {
      throw std::invalid_argument("invalid segment [" + std::to_string(s.start) +
                                  ", " + std::to_string(s.end) + ") for " +
                                  s.recording + "/" + s.speaker);
    }
  }
}

SegmentList windows_to_segments(const std::string& recording,
                                std::span<const std::string> labels,
                                std::span<const WindowTime> windows) {
  if (labels.size() != windows.size()) {
    throw std::invalid_argument("windows_to_segments: label count mismatch");
  }
  const std::size_t n = windows.size();
  std::vector<Millis> start(n), end(n), center2(n);
  for (std::size_t i = 0; i < n; ++i) {
    start[i] = to_ms(windows[i].start);
    end[i] = to_ms(windows[i].end);
    if (end[i] <= start[i]) {
      throw std::invalid_argument("windows_to_segments: empty window");
    }
    if (i > 0 && start[i] < start[i - 1]) {
      throw std::invalid_argument(
          "windows_to_segments: windows not sorted by start time");
    }
    center2[i] = start[i] + end[i];  // twice the center, keeps integers
  }
  // Elementary cut points: window edges plus midpoints between neighbouring
  // centers, so each piece has a single nearest covering window.
  std::set<Millis> cuts;
  for (std::size_t i = 0; i < n; ++i) {
    cuts.insert(start[i]);
    cuts.insert(end[i]);
  }
  std::vector<Millis> sorted_c2 = center2;
  std::sort(sorted_c2.begin(), sorted_c2.end());
  for (std::size_t i = 1; i < n; ++i) {
    cuts.insert((sorted_c2[i - 1] + sorted_c2[i]) / 4);
  }

  SegmentList out;
  for (auto it = cuts.begin(); it != cuts.end() && std::next(it) != cuts.end();
       ++it) {
    const Millis a = *it, b = *std::next(it);
    const Millis mid2 = a + b;
    int best = -1;
    Millis best_dist = std::numeric_limits<Millis>::max();
    for (std::size_t i = 0; i < n; ++i) {
      if (start[i] <= a && end[i] >= b) {
        const Millis d = std::abs(center2[i] - mid2);
        if (d < best_dist) {
          best_dist = d;
          best = static_cast<int>(i);
        }
      }
    }
    if (best < 0) continue;
    const std::string& label = labels[static_cast<std::size_t>(best)];
    if (!out.empty() && out.back().speaker == label &&
        to_ms(out.back().end) == a) {
      out.back().end = to_s(b);
    } else {
      out.push_back({recording, to_s(a), to_s(b), label});
    }
  }
  return out;
}

nlohmann::json SerReport::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& e : mapping) {
    m.push_back({{"recording", e.recording}, {"hyp", e.hyp}, {"ref", e.ref}});
  }
  return {{"scored_time", scored_time},
          {"error_time", error_time},
          {"ser", ser_percent},
          {"mapping", m}};
}

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& gain) {
  const std::size_t rows = gain.size();
  const std::size_t cols = rows ? gain.front().size() : 0;
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  const std::size_t n = std::max(rows, cols);
  double top = 0.0;
  for (const auto& r : gain) {
    if (r.size() != cols) throw std::invalid_argument("ragged gain matrix");
    for (double g : r) top = std::max(top, g);
  }
  // Minimize cost = top - gain on the zero-padded square matrix.
  auto cost = [&](std::size_t i, std::size_t j) {
    const double g = (i < rows && j < cols) ? gain[i][j] : 0.0;
    return top - g;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i <= rows && j <= cols) {
      assignment[i - 1] = static_cast<int>(j - 1);
    }
  }
  return assignment;
}

SerReport ser(const SegmentList& ref, const SegmentList& hyp, double collar) {
  if (ref.empty()) throw std::invalid_argument("ser: empty reference");
  if (!(collar >= 0.0)) throw std::invalid_argument("ser: negative collar");
  validate_segments(ref);
  validate_segments(hyp);
  const Millis collar_ms = to_ms(collar);

  std::map<std::string, std::vector<MsSegment>> ref_by_rec, hyp_by_rec;
  for (const Segment& s : ref) {
    ref_by_rec[s.recording].push_back({to_ms(s.start), to_ms(s.end), s.speaker});
  }
  for (const Segment& s : hyp) {
    hyp_by_rec[s.recording].push_back({to_ms(s.start), to_ms(s.end), s.speaker});
  }

  Millis scored_total = 0, correct_total = 0;
  SerReport report;
  for (const auto& [rec, rsegs] : ref_by_rec) {
    const auto& hsegs = hyp_by_rec[rec];
    std::vector<std::string> ref_names, hyp_names;
    for (const auto& s : rsegs) ref_names.push_back(s.speaker);
    for (const auto& s : hsegs) hyp_names.push_back(s.speaker);
    std::sort(ref_names.begin(), ref_names.end());
    ref_names.erase(std::unique(ref_names.begin(), ref_names.end()),
                    ref_names.end());
    std::sort(hyp_names.begin(), hyp_names.end());
    hyp_names.erase(std::unique(hyp_names.begin(), hyp_names.end()),
                    hyp_names.end());
    auto index_of = [](const std::vector<std::string>& names,
                       const std::string& s) {
      return static_cast<std::size_t>(
          std::lower_bound(names.begin(), names.end(), s) - names.begin());
    };

    std::vector<Millis> boundaries;
    std::set<Millis> cuts;
    for (const auto& s : rsegs) {
      for (Millis b : {s.start, s.end}) {
        boundaries.push_back(b);
        cuts.insert(b);
        cuts.insert(b - collar_ms);
        cuts.insert(b + collar_ms);
      }
    }
    for (const auto& s : hsegs) {
      cuts.insert(s.start);
      cuts.insert(s.end);
    }
    std::sort(boundaries.begin(), boundaries.end());

    std::vector<std::vector<double>> overlap(
        hyp_names.size(), std::vector<double>(ref_names.size(), 0.0));
    std::vector<std::size_t> active_ref, active_hyp;
    for (auto it = cuts.begin(); it != cuts.end() && std::next(it) != cuts.end();
         ++it) {
      const Millis a = *it, b = *std::next(it);
      const Millis mid2 = a + b;
      // Inside a collar if some boundary lies within collar of the midpoint.
      auto lo = std::lower_bound(boundaries.begin(), boundaries.end(),
                                 (mid2 - 2 * collar_ms) / 2);
      bool in_collar = false;
      for (auto bit = lo; bit != boundaries.end() &&
                          2 * *bit <= mid2 + 2 * collar_ms;
           ++bit) {
        if (std::abs(2 * *bit - mid2) < 2 * collar_ms) in_collar = true;
      }
      if (in_collar) continue;
      active_ref.clear();
      active_hyp.clear();
      for (const auto& s : rsegs) {
        if (s.start <= a && s.end >= b) active_ref.push_back(index_of(ref_names, s.speaker));
      }
      if (active_ref.empty()) continue;
      for (const auto& s : hsegs) {
        if (s.start <= a && s.end >= b) active_hyp.push_back(index_of(hyp_names, s.speaker));
      }
      std::sort(active_ref.begin(), active_ref.end());
      active_ref.erase(std::unique(active_ref.begin(), active_ref.end()),
                       active_ref.end());
      std::sort(active_hyp.begin(), active_hyp.end());
      active_hyp.erase(std::unique(active_hyp.begin(), active_hyp.end()),
                       active_hyp.end());
      const Millis dur = b - a;
      scored_total += dur * static_cast<Millis>(active_ref.size());
      for (std::size_t h : active_hyp) {
        for (std::size_t r : active_ref) overlap[h][r] += static_cast<double>(dur);
      }
    }

    const std::vector<int> assign = solve_assignment(overlap);
    for (std::size_t h = 0; h < assign.size(); ++h) {
      if (assign[h] < 0) continue;
      const auto r = static_cast<std::size_t>(assign[h]);
      correct_total += static_cast<Millis>(overlap[h][r]);
      report.mapping.push_back({rec, hyp_names[h], ref_names[r]});
    }
  }
  report.scored_time = to_s(scored_total);
  report.error_time = to_s(scored_total - correct_total);
  report.ser_percent =
      scored_total > 0 ? 100.0 * static_cast<double>(scored_total - correct_total) /
                             static_cast<double>(scored_total)
                       : 0.0;
  return report;
}

SegmentList read_rttm(std::istream& is) {
  SegmentList out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0].starts_with("#")) continue;
    if (tok[0] != "SPEAKER") continue;  // other RTTM record types are ignored
    if (tok.size() < 8) throw RttmParseError(lineno, "expected at least 8 fields");
    double tbeg = 0.0, tdur = 0.0;
    try {
      std::size_t used = 0;
      tbeg = std::stod(tok[3], &used);
      if (used != tok[3].size()) throw std::invalid_argument("tbeg");
      tdur = std::stod(tok[4], &used);
      if (used != tok[4].size()) throw std::invalid_argument("tdur");
    } catch (const std::exception&) {
      throw RttmParseError(lineno, "bad time field");
    }
    const Millis b = to_ms(tbeg), d = to_ms(tdur);
    if (b < 0 || d <= 0) throw RttmParseError(lineno, "non-positive duration or negative onset");
    out.push_back({tok[1], to_s(b), to_s(b + d), tok[7]});
  }
  return out;
}

void write_rttm(std::ostream& os, const SegmentList& segments) {
  validate_segments(segments);
  for (const Segment& s : segments) {
    const Millis b = to_ms(s.start), e = to_ms(s.end);
    os << "SPEAKER " << s.recording << " 1 " << format_ms(b) << ' '
       << format_ms(e - b) << " <NA> <NA> " << s.speaker << " <NA> <NA>\n";
  }
}

SegmentList read_rttm(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open RTTM " + path.string());
  return read_rttm(is);
}

void write_rttm(const std::filesystem::path& path, const SegmentList& segments) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write RTTM " + path.string());
  write_rttm(os, segments);
}

}  // namespace cvec
