// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pse/error.h"
#include "pse/losses.h"
#include "pse/metrics/metrics.h"

namespace pse::metrics {

using nlohmann::json;

double SiSdr(const Waveform& est, const Waveform& ref) {
  const double value = -losses::NegSiSdr(est, ref);
  return std::clamp(value, -kSiSdrClampDb, kSiSdrClampDb);
}

std::vector<ReportRow> SummarizeRows(
    const std::vector<ItemScore>& items, const std::string& train_policy,
    const std::string& test_policy,
    const std::vector<std::pair<std::string, int>>& skipped) {
  std::vector<ReportRow> rows;
  std::map<std::string, size_t> index;
  std::map<std::string, int> pesq_count;
  for (const auto& item : items) {
    auto [it, fresh] = index.emplace(item.condition, rows.size());
    if (fresh) {
      ReportRow row;
      row.condition = item.condition;
      row.train_policy = train_policy;
      row.test_policy = test_policy;
      rows.push_back(row);
    }
    ReportRow& row = rows[it->second];
    ++row.n_items;
    row.mean_sisdr_db += item.sisdr_db;
    row.mean_stoi_pct += 100.0 * item.stoi;
    if (item.pesq) {
      row.mean_pesq = row.mean_pesq.value_or(0.0) + *item.pesq;
      ++pesq_count[item.condition];
    }
  }
  for (auto& row : rows) {
    row.mean_sisdr_db /= row.n_items;
    row.mean_stoi_pct /= row.n_items;
    if (row.mean_pesq) *row.mean_pesq /= pesq_count[row.condition];
  }
  for (const auto& [condition, count] : skipped) {
    auto it = index.find(condition);
    if (it != index.end()) rows[it->second].n_skipped += count;
  }
  return rows;
}

std::string RenderTable(const MetricsReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %-16s %-16s %6s %8s %8s %8s\n",
                "condition", "train_policy", "test_policy", "n", "SISDR",
                "PESQ", "STOI");
  out << line;
  for (const auto& r : report.rows) {
    char pesq[32];
    if (r.mean_pesq)
      std::snprintf(pesq, sizeof(pesq), "%8.2f", *r.mean_pesq);
    else
      std::snprintf(pesq, sizeof(pesq), "%8s", "—");
    std::snprintf(line, sizeof(line), "%-12s %-16s %-16s %6d %8.2f %s %8.2f\n",
                  r.condition.c_str(), r.train_policy.c_str(),
                  r.test_policy.c_str(), r.n_items, r.mean_sisdr_db, pesq,
                  r.mean_stoi_pct);
    out << line;
    if (r.n_skipped > 0) out << "  (" << r.n_skipped << " items skipped)\n";
  }
  return out.str();
}

namespace {

json Optional(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> Optional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

void WriteReportJsonl(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IOError("cannot write report '" + path + "'");
  for (const auto& i : report.items)
    out << json{{"type", "item"},
                {"utt_id", i.utt_id},
                {"condition", i.condition},
                {"sisdr_db", i.sisdr_db},
                {"stoi", i.stoi},
                {"pesq", Optional(i.pesq)},
                {"mixture_sisdr_db", Optional(i.mixture_sisdr_db)}}
               .dump()
        << '\n';
  for (const auto& r : report.rows)
    out << json{{"type", "summary"},
                {"condition", r.condition},
                {"train_policy", r.train_policy},
                {"test_policy", r.test_policy},
                {"n_items", r.n_items},
                {"n_skipped", r.n_skipped},
                {"sisdr_db", r.mean_sisdr_db},
                {"stoi_pct", r.mean_stoi_pct},
                {"pesq", Optional(r.mean_pesq)}}
               .dump()
        << '\n';
  out << json{{"type", "meta"},
              {"checkpoint", report.checkpoint_id},
              {"manifest", report.manifest_id},
              {"seed", report.seed}}
             .dump()
      << '\n';
  if (!out) throw IOError("write failed for '" + path + "'");
}

MetricsReport ReadReportJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open report '" + path + "'");
  MetricsReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IOError(path + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "item") {
      report.items.push_back({j.at("utt_id"), j.at("condition"),
                              j.at("sisdr_db"), j.at("stoi"),
                              Optional(j, "pesq"),
                              Optional(j, "mixture_sisdr_db")});
    } else if (type == "summary") {
      ReportRow r;
      r.condition = j.at("condition");
      r.train_policy = j.at("train_policy");
      r.test_policy = j.at("test_policy");
      r.n_items = j.at("n_items");
      r.n_skipped = j.at("n_skipped");
      r.mean_sisdr_db = j.at("sisdr_db");
      r.mean_stoi_pct = j.at("stoi_pct");
      r.mean_pesq = Optional(j, "pesq");
      report.rows.push_back(r);
    } else if (type == "meta") {
      report.checkpoint_id = j.value("checkpoint", "");
      report.manifest_id = j.value("manifest", "");
      report.seed = j.value("seed", uint64_t{0});
    }
  }
  return report;
}

PesqAdapter::PesqAdapter(std::string command_template)
    : template_(std::move(command_template)) {
  if (template_.find("{ref}") == std::string::npos ||
      template_.find("{est}") == std::string::npos)
    throw InvalidParams("PESQ command must contain {ref} and {est}");
}

double PesqAdapter::Score(const std::string& ref_wav,
                          const std::string& est_wav) const {
  auto quote = [](const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
  };
  std::string cmd = template_;
  for (auto [key, value] : {std::pair{"{ref}", ref_wav}, {"{est}", est_wav}}) {
    const std::string k = key;
    for (size_t pos; (pos = cmd.find(k)) != std::string::npos;)
      cmd.replace(pos, k.size(), quote(value));
  }
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw IOError("cannot run PESQ command");
  std::string output;
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe)) output += buf;
  const int status = pclose(pipe);
  if (status != 0)
    throw IOError("PESQ command exited with status " + std::to_string(status));
  try {
    size_t used = 0;
    const double v = std::stod(output, &used);
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw IOError("PESQ command printed no number: '" + output + "'");
  }
}

}  // namespace pse::metrics
