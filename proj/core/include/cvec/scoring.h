// core/include/cvec/scoring.h
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

#ifndef CVEC_SCORING_H_
#define CVEC_SCORING_H_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cvec {

struct Segment {
  std::string recording;
  double start = 0.0;  // seconds
  double end = 0.0;
  std::string speaker;

  bool operator==(const Segment&) const = default;
};

using SegmentList = std::vector<Segment>;

/// Throws std::invalid_argument unless every record has finite,
/// non-negative times with end > start.
void validate_segments(const SegmentList& segments);

struct WindowTime {
  double start = 0.0;
  double end = 0.0;
};

/// Turns per-window cluster labels into a timeline. Where windows overlap,
/// each instant takes the label of the covering window whose center is
/// nearest; adjacent same-label pieces are merged. Windows must be sorted by
/// start time.
SegmentList windows_to_segments(const std::string& recording,
                                std::span<const std::string> labels,
                                std::span<const WindowTime> windows);

struct SpeakerMapping {
  std::string recording;
  std::string hyp;
  std::string ref;
};

struct SerReport {
  double scored_time = 0.0;  // seconds
  double error_time = 0.0;
  double ser_percent = 0.0;
  std::vector<SpeakerMapping> mapping;

  nlohmann::json to_json() const;
};

/// Speaker error rate. Scored time is reference speech minus +-collar around
/// every reference boundary; hypothesis speakers are mapped one-to-one onto
/// reference speakers (per recording) to maximize correctly attributed
/// time. Any scored time not attributed to the mapped speaker is an error.
/// Times are handled as integer milliseconds.
SerReport ser(const SegmentList& ref, const SegmentList& hyp,
              double collar = 0.25);

/// Maximum-weight assignment on a rectangular gain matrix (Hungarian
/// method). Returns, for each row, the assigned column or -1.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& gain);

class RttmParseError : public std::runtime_error {
 public:
  RttmParseError(std::size_t line, const std::string& what)
      : std::runtime_error("RTTM line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// SPEAKER <rec> 1 <tbeg> <tdur> <NA> <NA> <label> <NA> <NA>
/// Times are written and read at 1 ms resolution.
SegmentList read_rttm(std::istream& is);
void write_rttm(std::ostream& os, const SegmentList& segments);
SegmentList read_rttm(const std::filesystem::path& path);
void write_rttm(const std::filesystem::path& path, const SegmentList& segments);

}  // namespace cvec

#endif  // CVEC_SCORING_H_
