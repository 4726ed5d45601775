// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/cli/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "pse/cli/run_config.h"
#include "pse/data/manifest.h"
#include "pse/dsp/resample.h"
#include "pse/dsp/wav_io.h"
#include "pse/error.h"
#include "pse/rng.h"
#include "pse/train/evaluate.h"
#include "pse/train/trainer.h"

namespace pse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::string log_level = "info";
};

struct CorpusGenFlags {
  int speakers = 10;
  int utts = 6;
  double min_duration_s = 2.0;
  double max_duration_s = 4.0;
  int sample_rate = 8000;
};

struct SimulateFlags {
  std::string corpus;
  std::vector<std::string> conditions = {"1spk_noise", "2spk", "2spk_noise"};
  int n = 20;
  int dev_n = 5;
  int test_n = 10;
  double held_out_fraction = 0.2;
};

struct TrainFlags {
  std::optional<std::string> regime, pairing, enroll_policy;
  std::optional<double> lambda;
  std::optional<int> epochs, steps_per_epoch;
  std::optional<std::string> corpus;
  std::vector<std::string> train, dev;
  std::string resume;
};

struct EnhanceFlags {
  std::string input, enroll, ckpt, output;
  double placeholder_s = 3.0;
};

struct EvalFlags {
  std::string ckpt, corpus;
  std::vector<std::string> test;
  std::string enroll_duration = "random";
  std::string train_policy = "unspecified";
  std::string pesq_cmd;
};

void WriteTextFile(const fs::path& path, const std::string& text) {
  std::ofstream o(path, std::ios::trunc);
  if (!o) throw IOError("cannot write '" + path.string() + "'");
  o << text << '\n';
  if (!o) throw IOError("write failed for '" + path.string() + "'");
}

std::shared_ptr<spdlog::logger> Logger() {
  auto logger = spdlog::get("pse");
  if (!logger) logger = spdlog::stderr_color_mt("pse");
  return logger;
}

uint64_t SeedOr(const GlobalFlags& g, uint64_t fallback) {
  return g.seed.value_or(fallback);
}

std::string RequireOut(const GlobalFlags& g) {
  if (g.out.empty()) throw ConfigError("--out is required for this command");
  return g.out;
}

// Accepts a params file, a checkpoint directory, or a training output
// directory (whose best checkpoint is used).
std::string ResolveParams(const std::string& path) {
  const fs::path p(path);
  if (!fs::exists(p)) throw CheckpointError("checkpoint '" + path + "' does not exist");
  if (fs::is_regular_file(p)) return path;
  if (fs::exists(p / "params.bin")) return (p / "params.bin").string();
  if (fs::exists(p / "ckpt" / "best"))
    return (fs::path(train::BestCheckpointDir(path)) / "params.bin").string();
  throw CheckpointError("no parameters found under '" + path + "'");
}

Waveform ReadAtRate(const std::string& path, int rate, const char* what) {
  Waveform w = ReadWav(path);
  if (w.sample_rate != rate) {
    Logger()->warn("{} '{}' is {} Hz; resampling to {} Hz", what, path,
                   w.sample_rate, rate);
    w = Resample(w, rate);
  }
  return w;
}

int CmdCorpusGen(const GlobalFlags& g, const CorpusGenFlags& f) {
  const std::string out = RequireOut(g);
  data::CorpusOptions opt;
  opt.num_speakers = f.speakers;
  opt.utts_per_speaker = f.utts;
  opt.min_duration_s = f.min_duration_s;
  opt.max_duration_s = f.max_duration_s;
  opt.sample_rate = f.sample_rate;
  opt.seed = SeedOr(g, 0);
  if (f.utts < 1) throw InvalidParams("--utts must be >= 1");
  const auto corpus = data::GenSyntheticCorpus(opt);
  const std::string manifest = data::WriteCorpus(out, corpus.utterances);
  WriteTextFile(fs::path(out) / "corpus_meta.json",
                json{{"seed", opt.seed},
                     {"speakers", f.speakers},
                     {"utts_per_speaker", f.utts},
                     {"min_duration_s", f.min_duration_s},
                     {"max_duration_s", f.max_duration_s},
                     {"sample_rate", f.sample_rate}}
                    .dump(2));
  Logger()->info("wrote {} utterances to {}", corpus.utterances.size(), manifest);
  return kExitOk;
}

int CmdSimulate(const GlobalFlags& g, const SimulateFlags& f) {
  const std::string out = RequireOut(g);
  const uint64_t seed = SeedOr(g, 0);
  const auto utts = data::LoadCorpus(f.corpus);
  const data::CorpusIndex index(utts);
  const auto [train_spk, held_spk] =
      data::PartitionSpeakers(utts, f.held_out_fraction, seed);
  struct Split {
    const char* name;
    int count;
    const std::vector<std::string>& speakers;
  };
  const Split splits[] = {{"train", f.n, train_spk},
                          {"dev", f.dev_n, held_spk},
                          {"test", f.test_n, held_spk}};
  for (size_t c = 0; c < f.conditions.size(); ++c) {
    const data::Condition cond = data::ParseCondition(f.conditions[c]);
    for (size_t s = 0; s < 3; ++s) {
      if (splits[s].count <= 0) continue;
      data::SimulationOptions opt;
      opt.condition = cond;
      opt.count = splits[s].count;
      opt.seed = DeriveSeed(seed, kStreamSimulate, static_cast<uint64_t>(cond) * 8 + s);
      const auto set = data::SimulateSet(index, splits[s].speakers, opt);
      const std::string path = data::WriteExampleSet(
          out, std::string(splits[s].name) + "_" + data::ConditionName(cond), set,
          opt.seed);
      Logger()->info("wrote {} examples to {}", set.size(), path);
    }
  }
  return kExitOk;
}

int CmdTrain(const GlobalFlags& g, const TrainFlags& f) {
  const std::string out = RequireOut(g);
  RunConfig rc = g.config.empty() ? RunConfig{} : LoadRunConfig(g.config);
  auto mark = [&](const char* key) { rc.user_set.insert(key); };
  if (f.regime) rc.train.regime = train::ParseRegime(*f.regime), mark("train.regime");
  if (f.pairing) rc.train.pairing = data::ParsePairing(*f.pairing), mark("train.pairing");
  if (f.enroll_policy)
    rc.train.enroll_policy = data::ParseEnrollPolicy(*f.enroll_policy),
    mark("train.enroll_policy");
  if (f.lambda) rc.train.lambda_heit = *f.lambda, mark("train.lambda_heit");
  if (f.epochs) {
    rc.train.total_epochs = *f.epochs;
    rc.train.phase1_epochs = std::min(rc.train.phase1_epochs, *f.epochs);
    mark("train.total_epochs");
  }
  if (f.steps_per_epoch) rc.train.steps_per_epoch = *f.steps_per_epoch, mark("train.steps_per_epoch");
  if (g.seed) rc.train.seed = *g.seed, mark("train.seed");
  if (f.corpus) rc.data.corpus = *f.corpus, mark("data.corpus");
  if (!f.train.empty()) rc.data.train = f.train, mark("data.train");
  if (!f.dev.empty()) rc.data.dev = f.dev, mark("data.dev");
  rc.Validate();
  if (rc.data.corpus.empty() || rc.data.train.empty())
    throw ConfigError("training needs data.corpus and data.train (or --corpus/--train)");

  fs::create_directories(out);
  json record = rc.ToJson();
  record["user_set"] = rc.user_set;
  WriteTextFile(fs::path(out) / "run_config.json", record.dump(2));
  for (const std::string& key : rc.user_set) Logger()->debug("user-set: {}", key);

  train::TrainData data;
  data.corpus = data::LoadCorpus(rc.data.corpus);
  for (const auto& m : rc.data.train)
    for (auto& ex : data::LoadExampleSet(m))
      (ex.task == data::Task::kSe ? data.se_pool : data.pse_pool).push_back(std::move(ex));
  for (const auto& m : rc.data.dev)
    for (auto& ex : data::LoadExampleSet(m)) data.dev.push_back(std::move(ex));

  train::Trainer trainer(rc.model, rc.train, std::move(data), out);
  if (!f.resume.empty()) {
    trainer.Resume(f.resume);
    Logger()->info("resumed at epoch {} (step {})", trainer.meta().epoch,
                   trainer.meta().step);
  }
  double loss_sum = 0.0;
  int loss_count = 0;
  trainer.on_step = [&](const train::StepRecord& r) {
    loss_sum += r.loss.total;
    ++loss_count;
    Logger()->debug("step {} loss {:.4f} grad_norm {:.3f}", r.step, r.loss.total,
                    r.grad_norm_pre_clip);
  };
  trainer.on_epoch = [&](const train::CheckpointMeta& m, double dev) {
    std::cout << "epoch " << m.epoch << "/" << rc.train.total_epochs
              << "  lr " << m.lr << "  loss " << loss_sum / std::max(loss_count, 1)
              << "  dev_sisdr " << (std::isfinite(dev) ? std::to_string(dev) : "n/a")
              << "  best_epoch " << m.best_epoch << std::endl;
    loss_sum = 0.0;
    loss_count = 0;
  };
  trainer.Run();
  return kExitOk;
}

int CmdEnhance(const GlobalFlags& g, const EnhanceFlags& f) {
  const ParameterStore params = LoadParameters(ResolveParams(f.ckpt));
  const SefPNet model(params.config);
  const int rate = params.config.sample_rate;
  const Waveform original = ReadWav(f.input);
  const Waveform input = ReadAtRate(f.input, rate, "input");
  const EnrollmentClue clue =
      f.enroll.empty()
          ? MakePlaceholder(PlaceholderMode::kZeros,
                            static_cast<size_t>(std::llround(f.placeholder_s * rate)),
                            SeedOr(g, 0), rate)
          : EnrollmentClue::Real(ReadAtRate(f.enroll, rate, "enrollment"), {f.enroll});
  Waveform out = Enhance(model, input, clue, params).wave;
  if (original.sample_rate != rate) {
    out = Resample(out, original.sample_rate);
    out.samples.resize(original.size(), 0.0);
  }
  std::string path = f.output;
  if (path.empty()) path = (fs::path(RequireOut(g)) / "enhanced.wav").string();
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  WriteWav(path, out);
  Logger()->info("{} path, wrote {}", clue.is_real() ? "enrollment" : "placeholder", path);
  return kExitOk;
}

int CmdEval(const GlobalFlags& g, const EvalFlags& f) {
  const std::string out = RequireOut(g);
  const std::string params_path = ResolveParams(f.ckpt);
  const ParameterStore params = LoadParameters(params_path);
  const auto utts = data::LoadCorpus(f.corpus);
  const data::CorpusIndex index(utts);

  train::EvalOptions o;
  o.policy = data::ParseEnrollPolicy(f.enroll_duration);
  o.train_policy = f.train_policy;
  o.seed = SeedOr(g, 0);
  o.checkpoint_id = params_path;
  std::vector<data::TrainingExample> test;
  for (const auto& m : f.test) {
    for (auto& ex : data::LoadExampleSet(m, &o.load_failures)) test.push_back(std::move(ex));
    o.manifest_id += (o.manifest_id.empty() ? "" : ",") + m;
  }
  for (const auto& fail : o.load_failures)
    Logger()->warn("skipping '{}': {}", fail.id, fail.message);
  fs::create_directories(out);
  if (!f.pesq_cmd.empty()) {
    o.pesq = metrics::PesqAdapter(f.pesq_cmd);
    o.work_dir = (fs::path(out) / "pesq_work").string();
    fs::create_directories(o.work_dir);
  }
  const auto report = train::EvaluateCheckpoint(params, test, index, o);
  const std::string table = metrics::RenderTable(report);
  WriteTextFile(fs::path(out) / "report.txt", table);
  metrics::WriteReportJsonl((fs::path(out) / "report.jsonl").string(), report);
  std::cout << table;
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args) {
  CLI::App app{"Personalized speech enhancement toolkit", "pse"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config, "Run config file (model/train/data sections)");
  app.add_option("--seed", g.seed, "Base seed (default: config or 0)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  CorpusGenFlags cg;
  auto* corpus_gen = app.add_subcommand("corpus-gen", "Generate a synthetic speaker corpus");
  corpus_gen->add_option("--speakers", cg.speakers, "Number of speakers (>= 2)");
  corpus_gen->add_option("--utts", cg.utts, "Utterances per speaker");
  corpus_gen->add_option("--min-duration", cg.min_duration_s, "Shortest utterance (s)");
  corpus_gen->add_option("--max-duration", cg.max_duration_s, "Longest utterance (s)");
  corpus_gen->add_option("--sample-rate", cg.sample_rate, "Sample rate (Hz)");

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate train/dev/test mixture sets");
  simulate->add_option("--corpus", sim.corpus, "Corpus manifest (corpus.jsonl)")->required();
  simulate->add_option("--condition", sim.conditions, "Conditions to simulate")
      ->check(CLI::IsMember({"1spk_noise", "2spk", "2spk_noise"}));
  simulate->add_option("--n", sim.n, "Training examples per condition");
  simulate->add_option("--dev-n", sim.dev_n, "Dev examples per condition");
  simulate->add_option("--test-n", sim.test_n, "Test examples per condition");
  simulate->add_option("--held-out-fraction", sim.held_out_fraction,
                       "Fraction of speakers reserved for dev/test");

  TrainFlags tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model (flags override the config)");
  train_cmd->add_option("--regime", tr.regime, "sef, usef, dsef or lsep (default: config, sef)")
      ->check(CLI::IsMember({"sef", "usef", "dsef", "lsep"}));
  train_cmd->add_option("--pairing", tr.pairing,
                        "random_random, short_long or long_long (default: config, random_random)");
  train_cmd->add_option("--enroll-policy", tr.enroll_policy,
                        "Single-clue enrollment policy (default: config, random)");
  train_cmd->add_option("--lambda", tr.lambda, "Consistency weight (default: config, 1)");
  train_cmd->add_option("--epochs", tr.epochs, "Total epochs (default: config, 120)");
  train_cmd->add_option("--steps-per-epoch", tr.steps_per_epoch,
                        "Steps per epoch, 0 = one pass (default: config, 0)");
  train_cmd->add_option("--corpus", tr.corpus, "Corpus manifest used for enrollments");
  train_cmd->add_option("--train", tr.train, "Training set manifests");
  train_cmd->add_option("--dev", tr.dev, "Dev set manifests (best-model selection)");
  train_cmd->add_option("--resume", tr.resume, "Checkpoint directory to resume from");

  EnhanceFlags en;
  auto* enhance = app.add_subcommand("enhance", "Enhance one recording");
  enhance->add_option("--input", en.input, "Input wav")->required();
  enhance->add_option("--enroll", en.enroll, "Enrollment wav; omitted = no enrollment");
  enhance->add_option("--ckpt", en.ckpt, "Params file, checkpoint or training dir")->required();
  enhance->add_option("--output", en.output, "Output wav (default: <out>/enhanced.wav)");
  enhance->add_option("--placeholder-s", en.placeholder_s,
                      "Zero placeholder length without --enroll (s)");

  EvalFlags ev;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on test manifests");
  eval->add_option("--ckpt", ev.ckpt, "Params file, checkpoint or training dir")->required();
  eval->add_option("--corpus", ev.corpus, "Corpus manifest used for enrollments")->required();
  eval->add_option("--test", ev.test, "Test set manifests")->required();
  eval->add_option("--enroll-duration", ev.enroll_duration, "Test enrollment bucket")
      ->check(CLI::IsMember({"random", "short", "long"}));
  eval->add_option("--train-policy", ev.train_policy, "Label of the training policy");
  eval->add_option("--pesq-cmd", ev.pesq_cmd,
                   "External PESQ command with {ref} and {est} placeholders");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }
  Logger()->set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*corpus_gen) return CmdCorpusGen(g, cg);
    if (*simulate) return CmdSimulate(g, sim);
    if (*train_cmd) return CmdTrain(g, tr);
    if (*enhance) return CmdEnhance(g, en);
    if (*eval) return CmdEval(g, ev);
  } catch (const NumericalError& e) {
    Logger()->error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const CheckpointError& e) {
    Logger()->error("checkpoint: {}", e.what());
    return kExitCheckpoint;
  } catch (const IOError& e) {
    Logger()->error("{}", e.what());
    return kExitIo;
  } catch (const EmptyManifest& e) {
    Logger()->error("{}", e.what());
    return kExitIo;
  } catch (const Error& e) {
    Logger()->error("{}", e.what());
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    Logger()->error("{}", e.what());
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace pse::cli
