// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Objective scores and condition-wise report tables.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pse/dsp/waveform.h"

namespace pse::metrics {

// SI-SDR in dB, same definition as the training loss, clamped to
// [-60, 60]. Errors: as the loss (ShapeError, InvalidReference).
double SiSdr(const Waveform& est, const Waveform& ref);
inline constexpr double kSiSdrClampDb = 60.0;

// Short-time objective intelligibility as a fraction in [-1, 1]. Inputs
// at other rates are resampled to 10 kHz first.
// Errors: ShapeError on length or rate mismatch; InvalidInput when fewer
// than 30 analysis frames remain after silent-frame removal.
double Stoi(const Waveform& est, const Waveform& ref);

struct ItemScore {
  std::string utt_id;
  std::string condition;
  double sisdr_db = 0.0;
  double stoi = 0.0;  // fraction
  std::optional<double> pesq;
  std::optional<double> mixture_sisdr_db;
};

struct ReportRow {
  std::string condition;
  std::string train_policy;
  std::string test_policy;
  int n_items = 0;
  int n_skipped = 0;
  double mean_sisdr_db = 0.0;
  double mean_stoi_pct = 0.0;
  std::optional<double> mean_pesq;
};

struct MetricsReport {
  std::vector<ReportRow> rows;
  std::vector<ItemScore> items;
  std::string checkpoint_id;
  std::string manifest_id;
  uint64_t seed = 0;
};

// One row per condition, in first-seen order; skipped counts are keyed by
// condition. Conditions whose items were all skipped are dropped.
std::vector<ReportRow> SummarizeRows(
    const std::vector<ItemScore>& items, const std::string& train_policy,
    const std::string& test_policy,
    const std::vector<std::pair<std::string, int>>& skipped = {});

// Fixed-width table: condition, policies, n, SISDR, PESQ (a dash when no
// scorer is configured), STOI.
std::string RenderTable(const MetricsReport& report);
// One {"type":"item", ...} line per scored item and one
// {"type":"summary", ...} line per row, then a {"type":"meta"} line.
void WriteReportJsonl(const std::string& path, const MetricsReport& report);
MetricsReport ReadReportJsonl(const std::string& path);

// External PESQ scorer: a shell command template with {ref} and {est}
// placeholders that prints a number. Errors: IOError on a non-zero exit
// or unparsable output.
class PesqAdapter {
 public:
  explicit PesqAdapter(std::string command_template);
  double Score(const std::string& ref_wav, const std::string& est_wav) const;

 private:
  std::string template_;
};

}  // namespace pse::metrics
