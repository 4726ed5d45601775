#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pse/cli/cli.h"
#include "pse/cli/run_config.h"
#include "pse/data/manifest.h"
#include "pse/dsp/wav_io.h"
#include "pse/error.h"
#include "pse/metrics/metrics.h"
#include "pse/model/sefpnet.h"

using namespace pse;
using namespace pse::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int Run(std::vector<std::string> args) {
  args.insert(args.begin(), "pse");
  args.insert(args.begin() + 1, {"--log-level", "error"});
  return RunCli(args);
}

// Runs the command with stderr redirected to a file; returns (code, text).
std::pair<int, std::string> RunCapturingStderr(std::vector<std::string> args) {
  const fs::path log = fs::temp_directory_path() / "pse_cli_stderr.txt";
  std::fflush(stderr);
  const int saved = dup(fileno(stderr));
  REQUIRE(std::freopen(log.c_str(), "w", stderr) != nullptr);
  args.insert(args.begin(), "pse");
  const int code = RunCli(args);
  std::fflush(stderr);
  dup2(saved, fileno(stderr));
  close(saved);
  std::ifstream in(log);
  return {code, std::string(std::istreambuf_iterator<char>(in), {})};
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<json> ReadJsonl(const fs::path& p) {
  std::ifstream in(p);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

fs::path Fresh(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pse_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small corpus and simulated sets shared by the slower cases.
const fs::path& Workspace() {
  static const fs::path dir = [] {
    const fs::path d = Fresh("workspace");
    REQUIRE(Run({"--seed", "7", "--out", (d / "corpus").string(), "corpus-gen",
                 "--speakers", "6", "--utts", "4", "--min-duration", "1",
                 "--max-duration", "1.5"}) == 0);
    REQUIRE(Run({"--seed", "3", "--out", (d / "sets").string(), "simulate",
                 "--corpus", (d / "corpus" / "corpus.jsonl").string(), "--n", "4",
                 "--dev-n", "2", "--test-n", "3", "--held-out-fraction", "0.34"}) == 0);
    const json config = {
        {"model",
         {{"num_encoder_blocks", 3}, {"num_decoder_blocks", 3}, {"base_channels", 4},
          {"tcn_layers", 1}, {"tcn_blocks_per_layer", 2},
          {"stft", {{"window_ms", 8}, {"hop_ms", 4}, {"fft_size", 64}}}}},
        {"train",
         {{"segment_s", 0.5}, {"total_epochs", 1}, {"phase1_epochs", 1},
          {"steps_per_epoch", 2}, {"batch_pse_items", 1}, {"batch_se_items", 1},
          {"batch_dsef_items", 1}}},
        {"data",
         {{"corpus", (d / "corpus" / "corpus.jsonl").string()},
          {"train", {(d / "sets" / "train_2spk.jsonl").string(),
                     (d / "sets" / "train_1spk_noise.jsonl").string()}},
          {"dev", {(d / "sets" / "dev_2spk.jsonl").string()}}}}};
    std::ofstream(d / "tiny.json") << config.dump(2);
    return d;
  }();
  return dir;
}

void WritePassthrough(const fs::path& path) {
  const cli::RunConfig rc = LoadRunConfig((Workspace() / "tiny.json").string());
  SaveParameters(path.string(), SefPNet(rc.model).PassthroughParameters());
}

}  // namespace

TEST_CASE("corpus-gen writes a deterministic manifest") {
  const fs::path a = Fresh("corpus_a"), b = Fresh("corpus_b");
  CHECK(Run({"--seed", "7", "--out", a.string(), "corpus-gen", "--speakers", "10",
             "--utts", "6"}) == 0);
  CHECK(Run({"--seed", "7", "--out", b.string(), "corpus-gen", "--speakers", "10",
             "--utts", "6"}) == 0);
  CHECK(ReadJsonl(a / "corpus.jsonl").size() == 60);
  CHECK(ReadFile(a / "corpus.jsonl") == ReadFile(b / "corpus.jsonl"));
  for (const auto& entry : fs::directory_iterator(a / "audio"))
    CHECK(ReadFile(entry.path()) == ReadFile(b / "audio" / entry.path().filename()));
  CHECK(Run({"--out", a.string(), "corpus-gen", "--speakers", "1"}) == kExitUsage);
  CHECK(Run({"corpus-gen", "--bogus"}) == kExitUsage);
  CHECK(Run({"--help"}) == kExitOk);
}

TEST_CASE("simulate writes minimum-length mixtures and is reproducible") {
  const fs::path& ws = Workspace();
  const fs::path corpus = ws / "corpus" / "corpus.jsonl";
  const fs::path out = Fresh("sim"), again = Fresh("sim_again");
  for (const fs::path& dir : {out, again})
    REQUIRE(Run({"--seed", "5", "--out", dir.string(), "simulate", "--corpus",
                 corpus.string(), "--condition", "2spk", "--condition", "2spk_noise",
                 "--n", "20", "--dev-n", "0", "--test-n", "0",
                 "--held-out-fraction", "0.34"}) == 0);
  const auto rows = ReadJsonl(out / "train_2spk.jsonl");
  CHECK(rows.size() == 20);
  CHECK(ReadFile(out / "train_2spk.jsonl") == ReadFile(again / "train_2spk.jsonl"));
  std::map<std::string, size_t> lengths;
  for (const auto& r : data::ReadCorpusManifest(corpus.string()))
    lengths[r.utt_id] = ReadWav((corpus.parent_path() / r.path).string()).size();
  for (const auto& ex : data::LoadExampleSet((out / "train_2spk.jsonl").string()))
    CHECK(ex.mixture.size() ==
          std::min(lengths.at(ex.target_utt), lengths.at(ex.interferer_utt)));
  for (const auto& row : ReadJsonl(out / "train_2spk_noise.jsonl")) {
    CHECK(row.at("sir_db").is_number());
    CHECK(row.at("snr_db").is_number());
  }
  CHECK(!fs::exists(out / "train_1spk_noise.jsonl"));
  CHECK(Run({"--out", out.string(), "simulate", "--corpus",
             (out / "missing.jsonl").string()}) == kExitIo);
}

TEST_CASE("train logs task tags and the consistency term") {
  const fs::path& ws = Workspace();
  const fs::path usef = Fresh("train_usef");
  REQUIRE(Run({"--config", (ws / "tiny.json").string(), "--out", usef.string(),
               "train", "--regime", "usef"}) == 0);
  for (const auto& rec : ReadJsonl(usef / "train_log.jsonl")) {
    const auto tasks = rec.at("tasks").get<std::vector<std::string>>();
    CHECK(std::count(tasks.begin(), tasks.end(), "PSE") >= 1);
    CHECK(std::count(tasks.begin(), tasks.end(), "SE") >= 1);
  }
  CHECK(fs::exists(usef / "ckpt" / "best"));
  CHECK(fs::exists(usef / "run_config.json"));

  const fs::path dsef = Fresh("train_dsef");
  REQUIRE(Run({"--config", (ws / "tiny.json").string(), "--out", dsef.string(),
               "train", "--regime", "dsef", "--lambda", "0", "--pairing",
               "short_long"}) == 0);
  const auto log = ReadJsonl(dsef / "train_log.jsonl");
  REQUIRE(log.size() == 2);
  for (const auto& rec : log) {
    CHECK(rec.at("heit").is_number());
    CHECK(rec.at("total").get<double>() ==
          doctest::Approx(rec.at("sisdr_1").get<double>() + rec.at("sisdr_2").get<double>())
              .epsilon(1e-12));
  }
  const auto record = json::parse(ReadFile(dsef / "run_config.json"));
  CHECK(record.at("train").at("pairing") == "short_long");

  const fs::path bad = ws / "bad.json";
  std::ofstream(bad) << R"({"train": {"no_such_key": 1}})";
  CHECK(Run({"--config", bad.string(), "--out", dsef.string(), "train"}) == kExitUsage);
}

TEST_CASE("enhance: zero enrollment, lengths, rates and error codes") {
  const fs::path& ws = Workspace();
  const fs::path dir = Fresh("enhance");
  WritePassthrough(dir / "params.bin");
  Waveform input(std::vector<double>(8000), 8000);
  for (size_t i = 0; i < input.size(); ++i) input.samples[i] = 0.3 * std::sin(0.05 * i);
  WriteWav((dir / "in.wav").string(), input);
  WriteWav((dir / "zeros.wav").string(), Waveform(std::vector<double>(4000), 8000));
  // Random parameters exercise the enrollment path for real.
  const cli::RunConfig rc = LoadRunConfig((ws / "tiny.json").string());
  SaveParameters((dir / "random.bin").string(), SefPNet(rc.model).InitParameters(3));

  const std::string ckpt = (dir / "random.bin").string();
  REQUIRE(Run({"enhance", "--input", (dir / "in.wav").string(), "--ckpt", ckpt,
               "--output", (dir / "none.wav").string()}) == 0);
  REQUIRE(Run({"enhance", "--input", (dir / "in.wav").string(), "--ckpt", ckpt,
               "--enroll", (dir / "zeros.wav").string(), "--output",
               (dir / "zero.wav").string()}) == 0);
  CHECK(ReadFile(dir / "none.wav") == ReadFile(dir / "zero.wav"));
  CHECK(ReadWav((dir / "none.wav").string()).size() == 8000);

  Waveform wide(std::vector<double>(16000), 16000);
  for (size_t i = 0; i < wide.size(); ++i) wide.samples[i] = 0.3 * std::sin(0.02 * i);
  WriteWav((dir / "wide.wav").string(), wide);
  REQUIRE(Run({"enhance", "--input", (dir / "wide.wav").string(), "--ckpt", ckpt,
               "--output", (dir / "wide_out.wav").string()}) == 0);
  const Waveform wide_out = ReadWav((dir / "wide_out.wav").string());
  CHECK(wide_out.sample_rate == 16000);
  CHECK(wide_out.size() == 16000);

  const auto [code, text] = RunCapturingStderr(
      {"enhance", "--input", (dir / "absent.wav").string(), "--ckpt", ckpt,
       "--output", (dir / "x.wav").string()});
  CHECK(code == kExitIo);
  CHECK(text.find("absent.wav") != std::string::npos);

  std::ofstream(dir / "corrupt.bin") << "PSEARCH1 garbage";
  CHECK(Run({"enhance", "--input", (dir / "in.wav").string(), "--ckpt",
             (dir / "corrupt.bin").string(), "--output", (dir / "x.wav").string()}) ==
        kExitCheckpoint);
}

TEST_CASE("eval: passthrough identity, buckets and report files") {
  const fs::path& ws = Workspace();
  const fs::path dir = Fresh("eval");
  WritePassthrough(dir / "params.bin");
  const std::string corpus = (ws / "corpus" / "corpus.jsonl").string();
  REQUIRE(Run({"--out", (dir / "report").string(), "eval", "--ckpt",
               (dir / "params.bin").string(), "--corpus", corpus, "--test",
               (ws / "sets" / "test_2spk.jsonl").string(), "--test",
               (ws / "sets" / "test_1spk_noise.jsonl").string(),
               "--enroll-duration", "short"}) == 0);
  const auto report =
      metrics::ReadReportJsonl((dir / "report" / "report.jsonl").string());
  CHECK(report.items.size() == 6);
  for (const auto& item : report.items)
    CHECK(std::abs(item.sisdr_db - *item.mixture_sisdr_db) < 0.01);
  CHECK(report.rows.at(0).test_policy == "short");
  metrics::WriteReportJsonl((dir / "again.jsonl").string(), report);
  CHECK(ReadFile(dir / "again.jsonl") == ReadFile(dir / "report" / "report.jsonl"));
  CHECK(fs::exists(dir / "report" / "report.txt"));

  // One item with missing audio is skipped and counted.
  const fs::path sets = dir / "sets";
  fs::copy(ws / "sets", sets, fs::copy_options::recursive);
  fs::remove(sets / "test_2spk" / "2spk_0_mix.wav");
  REQUIRE(Run({"--out", (dir / "skip").string(), "eval", "--ckpt",
               (dir / "params.bin").string(), "--corpus", corpus, "--test",
               (sets / "test_2spk.jsonl").string()}) == 0);
  const auto skipped = metrics::ReadReportJsonl((dir / "skip" / "report.jsonl").string());
  CHECK(skipped.items.size() == 2);
  CHECK(skipped.rows.at(0).n_skipped == 1);

  std::ofstream(dir / "empty.jsonl") << "";
  CHECK(Run({"--out", (dir / "e").string(), "eval", "--ckpt",
             (dir / "params.bin").string(), "--corpus", corpus, "--test",
             (dir / "empty.jsonl").string()}) == kExitIo);
  CHECK(Run({"eval", "--enroll-duration", "medium"}) == kExitUsage);
}

TEST_CASE("shipped configs spell out the defaults") {
  const fs::path root = PSE_SOURCE_DIR;
  const auto shipped = json::parse(ReadFile(root / "configs" / "default.json"));
  const cli::RunConfig defaults;
  CHECK(shipped.at("model") == json(defaults.model));
  CHECK(shipped.at("train") == json(defaults.train));
  const cli::RunConfig toy = LoadRunConfig((root / "configs" / "toy.json").string());
  CHECK(toy.model == ToyModelConfig());
}
