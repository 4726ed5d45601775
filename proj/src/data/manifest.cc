// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/data/manifest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "pse/dsp/wav_io.h"
#include "pse/error.h"

namespace pse::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<json> ReadJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open manifest '" + path + "'");
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw IOError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw EmptyManifest("manifest '" + path + "' has no records");
  return out;
}

void WriteJsonl(const std::string& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path + "'");
  for (const auto& r : rows) out << r.dump() << '\n';
  if (!out) throw IOError("write failed for '" + path + "'");
}

void MakeDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create '" + dir.string() + "': " + ec.message());
}

json Number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double Number(const json& j, const char* key) {
  return j.contains(key) && j[key].is_number()
             ? j[key].get<double>()
             : std::numeric_limits<double>::quiet_NaN();
}

template <typename T>
T Field(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IOError(where + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string WriteCorpus(const std::string& dir,
                        const std::vector<Utterance>& utterances) {
  MakeDirs(fs::path(dir) / "audio");
  std::vector<json> rows;
  for (const auto& u : utterances) {
    const std::string rel = "audio/" + u.utt_id + ".wav";
    WriteWav((fs::path(dir) / rel).string(), u.wave);
    rows.push_back({{"utt_id", u.utt_id},
                    {"speaker_id", u.speaker_id},
                    {"path", rel},
                    {"duration_s", u.wave.duration_s()},
                    {"sample_rate", u.wave.sample_rate}});
  }
  const std::string manifest = (fs::path(dir) / "corpus.jsonl").string();
  WriteJsonl(manifest, rows);
  return manifest;
}

std::vector<CorpusRecord> ReadCorpusManifest(const std::string& path) {
  std::vector<CorpusRecord> out;
  for (const json& j : ReadJsonl(path)) {
    CorpusRecord r;
    r.utt_id = Field<std::string>(j, "utt_id", path);
    r.speaker_id = Field<std::string>(j, "speaker_id", path);
    r.path = Field<std::string>(j, "path", path);
    r.duration_s = Field<double>(j, "duration_s", path);
    r.sample_rate = Field<int>(j, "sample_rate", path);
    if (r.utt_id.empty() || r.speaker_id.empty())
      throw IOError(path + ": empty utterance or speaker id");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Utterance> LoadCorpus(const std::string& manifest_path) {
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<Utterance> out;
  for (const auto& r : ReadCorpusManifest(manifest_path))
    out.push_back({r.utt_id, r.speaker_id, ReadWav((base / r.path).string())});
  return out;
}

std::string WriteExampleSet(const std::string& dir, const std::string& name,
                            const std::vector<TrainingExample>& examples,
                            uint64_t seed) {
  MakeDirs(fs::path(dir) / name);
  std::vector<json> rows;
  for (const auto& ex : examples) {
    const std::string mix = name + "/" + ex.id + "_mix.wav";
    const std::string tgt = name + "/" + ex.id + "_target.wav";
    WriteWav((fs::path(dir) / mix).string(), ex.mixture);
    WriteWav((fs::path(dir) / tgt).string(), ex.target);
    json row = {{"id", ex.id},
                {"condition", ConditionName(ex.condition)},
                {"task", TaskName(ex.task)},
                {"mixture_path", mix},
                {"target_path", tgt},
                {"target_speaker", ex.target_speaker},
                {"target_utt", ex.target_utt},
                {"sir_db", Number(ex.sir_db)},
                {"snr_db", Number(ex.snr_db)},
                {"interferer_gain", ex.interferer_gain},
                {"noise_gain", ex.noise_gain},
                {"length", ex.mixture.size()},
                {"seed", seed}};
    if (ex.has_interferer()) {
      row["interferer_speaker"] = ex.interferer_speaker;
      row["interferer_utt"] = ex.interferer_utt;
    }
    rows.push_back(std::move(row));
  }
  const std::string manifest = (fs::path(dir) / (name + ".jsonl")).string();
  WriteJsonl(manifest, rows);
  return manifest;
}

std::vector<TrainingExample> LoadExampleSet(const std::string& manifest_path,
                                            std::vector<LoadFailure>* failures) {
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<TrainingExample> out;
  for (const json& j : ReadJsonl(manifest_path)) {
    TrainingExample ex;
    ex.id = Field<std::string>(j, "id", manifest_path);
    ex.condition = ParseCondition(Field<std::string>(j, "condition", manifest_path));
    ex.task = Field<std::string>(j, "task", manifest_path) == "SE" ? Task::kSe
                                                                   : Task::kPse;
    ex.target_speaker = Field<std::string>(j, "target_speaker", manifest_path);
    ex.target_utt = Field<std::string>(j, "target_utt", manifest_path);
    ex.interferer_speaker = j.value("interferer_speaker", "");
    ex.interferer_utt = j.value("interferer_utt", "");
    ex.sir_db = Number(j, "sir_db");
    ex.snr_db = Number(j, "snr_db");
    ex.interferer_gain = j.value("interferer_gain", 0.0);
    ex.noise_gain = j.value("noise_gain", 0.0);
    try {
      ex.mixture = ReadWav(
          (base / Field<std::string>(j, "mixture_path", manifest_path)).string());
      ex.target = ReadWav(
          (base / Field<std::string>(j, "target_path", manifest_path)).string());
      if (ex.mixture.size() != ex.target.size())
        throw IOError(manifest_path + ": '" + ex.id +
                      "' mixture and target lengths differ");
    } catch (const IOError& e) {
      if (!failures) throw;
      failures->push_back({ex.id, ConditionName(ex.condition), e.what()});
      continue;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace pse::data
