#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "oracles/role_scan.h"
#include "pse/data/batch.h"
#include "pse/data/enrollment.h"
#include "pse/data/manifest.h"
#include "pse/dsp/stft.h"
#include "pse/error.h"

using namespace pse;
using namespace pse::data;

namespace {

Utterance Tone(const std::string& spk, const std::string& id, size_t n,
               double amp, double freq) {
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = amp * std::sin(0.001 + freq * i);
  return {id, spk, Waveform(x, 8000)};
}

const SyntheticCorpus& SmallCorpus() {
  static const SyntheticCorpus corpus = GenSyntheticCorpus(
      {.num_speakers = 10, .utts_per_speaker = 4, .min_duration_s = 1.0,
       .max_duration_s = 2.0, .seed = 7});
  return corpus;
}

std::vector<double> LogSpectrum(const Waveform& w) {
  const auto spec = Stft(w, DefaultStftParams(8000));
  std::vector<double> avg(spec.bins, 0.0);
  for (int t = 0; t < spec.frames; ++t)
    for (int k = 0; k < spec.bins; ++k) avg[k] += std::norm(spec.at(t, k));
  for (double& v : avg) v = std::log(v / spec.frames + 1e-12);
  double mean = 0;
  for (double v : avg) mean += v / avg.size();
  for (double& v : avg) v -= mean;
  return avg;
}

double Cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("synthetic corpus is deterministic and speaker-distinct") {
  const auto& a = SmallCorpus();
  const auto b = GenSyntheticCorpus({.num_speakers = 10, .utts_per_speaker = 4,
                                     .min_duration_s = 1.0,
                                     .max_duration_s = 2.0, .seed = 7});
  REQUIRE(a.utterances.size() == 40);
  for (size_t i = 0; i < a.utterances.size(); ++i)
    CHECK(a.utterances[i].wave.samples == b.utterances[i].wave.samples);
  CHECK(a.voices[0].formant_hz != a.voices[1].formant_hz);
  CHECK(a.voices[0].pitch_hz != a.voices[1].pitch_hz);
  for (const auto& u : a.utterances) CHECK(u.wave.duration_s() >= 1.0);
  CHECK_THROWS_AS(GenSyntheticCorpus({.num_speakers = 1}), InvalidParams);

  // Same-speaker long-term spectra are closer than cross-speaker ones.
  double same = 0, cross = 0;
  int n_same = 0, n_cross = 0;
  std::vector<std::vector<double>> spectra;
  for (const auto& u : a.utterances) spectra.push_back(LogSpectrum(u.wave));
  for (size_t i = 0; i < spectra.size(); ++i)
    for (size_t j = i + 1; j < spectra.size(); ++j) {
      const double c = Cosine(spectra[i], spectra[j]);
      if (a.utterances[i].speaker_id == a.utterances[j].speaker_id) {
        same += c;
        ++n_same;
      } else {
        cross += c;
        ++n_cross;
      }
    }
  CHECK(same / n_same > cross / n_cross);
}

TEST_CASE("two-speaker simulation in minimum mode") {
  const auto t = Tone("a", "a1", 8000, 0.3, 0.05);
  const auto i = Tone("b", "b1", 6000, 0.3, 0.11);
  const auto ex = SimulateTwoSpeaker(t, i, 0.0);
  CHECK(ex.mixture.size() == 6000);
  CHECK(ex.target.size() == 6000);
  CHECK(ex.condition == Condition::kTwoSpeaker);
  CHECK(std::abs(ex.interferer_gain - 1.0) < 1e-3);  // near-equal power tones

  const auto eq_t = Utterance{"a1", "a", Waveform({1, -1, 1, -1}, 8000)};
  const auto eq_i = Utterance{"b1", "b", Waveform({-1, 1, 1, -1}, 8000)};
  CHECK(std::abs(SimulateTwoSpeaker(eq_t, eq_i, 0.0).interferer_gain - 1.0) < 1e-9);

  const auto six = SimulateTwoSpeaker(t, i, 6.0);
  const double p_t = MeanPower(six.target.samples);
  const double p_i = MeanPower(std::vector<double>(i.wave.samples.begin(),
                                                   i.wave.samples.begin() + 6000));
  CHECK(std::abs(six.interferer_gain - std::sqrt(p_t / (p_i * std::pow(10, 0.6)))) < 1e-12);
  CHECK(std::abs(MeasuredSirDb(six) - 6.0) < 0.01);

  CHECK_THROWS_AS(SimulateTwoSpeaker(t, Tone("a", "a2", 100, 1, 1), 0), RoleConflict);
  CHECK_THROWS_AS(SimulateTwoSpeaker(t, Tone("b", "b2", 100, 0, 1), 0), InvalidInput);
}

TEST_CASE("noisy simulation and decomposition") {
  const auto t = Tone("a", "a1", 8000, 0.3, 0.05);
  const auto noise = PinkNoise(12000, 3);
  const auto ex = SimulateNoisy(t, {noise, 7.5, 1});
  CHECK(std::abs(MeasuredSnrDb(ex) - 7.5) < 0.01);
  for (size_t k = 0; k < ex.mixture.size(); ++k)
    CHECK(ex.mixture.samples[k] == ex.target.samples[k] + ex.noise.samples[k]);

  const auto quiet = SimulateNoisy(t, {noise, 60.0, 1});
  double diff = 0, ref = 0;
  for (size_t k = 0; k < t.wave.size(); ++k) {
    diff += std::pow(quiet.mixture.samples[k] - t.wave.samples[k], 2);
    ref += t.wave.samples[k] * t.wave.samples[k];
  }
  CHECK(std::sqrt(diff / ref) < 1e-2);

  const auto both = SimulateTwoSpeaker(t, Tone("b", "b1", 7000, 0.2, 0.2), 3.0,
                                       NoiseSpec{noise, 5.0, 2});
  CHECK(both.condition == Condition::kTwoSpeakerNoise);
  CHECK(std::abs(MeasuredSnrDb(both) - 5.0) < 0.01);
  for (size_t k = 0; k < both.mixture.size(); ++k)
    CHECK(both.mixture.samples[k] ==
          both.target.samples[k] + both.interferer.samples[k] + both.noise.samples[k]);
  CHECK_THROWS_AS(SimulateNoisy(t, {Waveform(std::vector<double>(10, 0.0), 8000), 0, 0}),
                  InvalidInput);
}

TEST_CASE("enrollment sampling policies") {
  const auto& corpus = SmallCorpus();
  CorpusIndex index(corpus.utterances);
  const std::string exclude = corpus.utterances[0].utt_id;
  const std::string spk = corpus.utterances[0].speaker_id;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto c = SampleEnrollment(index, spk, exclude, EnrollPolicy::kRandom, rng);
    CHECK(!c.ComesFrom(exclude));
    CHECK(c.is_real());
    const auto two = SampleEnrollment(index, spk, exclude, EnrollPolicy::kFixed2s, rng);
    CHECK(two.wave.size() == 16000);
    CHECK(!two.ComesFrom(exclude));
    const auto s = SampleEnrollment(index, spk, exclude, EnrollPolicy::kShort, rng);
    CHECK(s.wave.duration_s() <= 2.0);
    CHECK(s.wave.duration_s() >= 0.5);
  }
  Rng r1(42), r2(42);
  const auto l1 = SampleEnrollment(index, spk, exclude, EnrollPolicy::kUniform10to40s, r1);
  const auto l2 = SampleEnrollment(index, spk, exclude, EnrollPolicy::kUniform10to40s, r2);
  CHECK(l1.wave.samples == l2.wave.samples);
  CHECK(l1.wave.duration_s() >= 10.0);
  CHECK(l1.wave.duration_s() <= 40.0);
  CHECK(!l1.ComesFrom(exclude));

  const auto [a, b] = PairEnrollments(index, spk, exclude, Pairing::kRandomRandom, rng);
  CHECK(a.source_utt_id() != b.source_utt_id());
  const auto [s, l] = PairEnrollments(index, spk, exclude, Pairing::kShortLong, rng);
  CHECK(s.wave.size() == 16000);
  CHECK(l.wave.duration_s() >= 10.0);
  const auto [l3, l4] = PairEnrollments(index, spk, exclude, Pairing::kLongLong, rng);
  CHECK(l3.wave.duration_s() >= 10.0);
  CHECK(l4.wave.duration_s() <= 40.0);

  const std::vector<Utterance> two = {Tone("x", "x1", 800, 0.1, 0.1),
                                      Tone("x", "x2", 800, 0.1, 0.2)};
  CorpusIndex small(two);
  CHECK_NOTHROW(SampleEnrollment(small, "x", "x1", EnrollPolicy::kRandom, rng));
  CHECK_THROWS_AS(PairEnrollments(small, "x", "x1", Pairing::kRandomRandom, rng),
                  InsufficientEnrollment);
  CHECK_THROWS_AS(SampleEnrollment(small, "y", "", EnrollPolicy::kRandom, rng),
                  InsufficientEnrollment);
  CHECK(LoopPad({1, 2, 3}, 7) == std::vector<double>{1, 2, 3, 1, 2, 3, 1});
}

TEST_CASE("unified batches are role-disjoint") {
  const auto& corpus = SmallCorpus();
  CorpusIndex index(corpus.utterances);
  std::vector<std::string> speakers = index.Speakers();
  const auto pse = SimulateSet(index, speakers, {.condition = Condition::kTwoSpeaker,
                                                 .count = 30, .seed = 3});
  const auto se = SimulateSet(index, speakers, {.condition = Condition::kOneSpeakerNoise,
                                                .count = 30, .seed = 4});
  CompositionOptions opt;
  opt.sample_clue = [&](const TrainingExample& ex, Rng& rng) {
    return SampleEnrollment(index, ex.target_speaker, ex.target_utt,
                            EnrollPolicy::kRandom, rng);
  };
  for (uint64_t b = 0; b < 50; ++b) {
    const auto batch = ComposeUnifiedBatch(pse, se, {2, 2, 4, b}, opt);
    REQUIRE(batch.size() == 4);
    int n_pse = 0;
    for (const auto& ex : batch) {
      n_pse += ex.task == Task::kPse;
      REQUIRE(ex.clues.size() == 1);
      CHECK(ex.clues[0].is_real() == (ex.task == Task::kPse));
      CHECK(!ex.clues[0].ComesFrom(ex.target_utt));
    }
    CHECK(n_pse == 2);
    CHECK(oracle::CountRoleConflicts(batch) == 0);
  }

  // The only SE target is the only PSE interferer.
  auto forced_pse = SimulateTwoSpeaker(Tone("a", "a1", 800, 0.2, 0.1),
                                       Tone("b", "b1", 800, 0.2, 0.3), 0);
  forced_pse.clues = {EnrollmentClue::Real(Waveform({0.1, 0.2}, 8000), {"a2"})};
  auto forced_se = SimulateNoisy(Tone("b", "b2", 800, 0.2, 0.2),
                                 {PinkNoise(800, 1), 0, 0});
  CHECK_THROWS_AS(ComposeUnifiedBatch({forced_pse}, {forced_se}, {1, 1, 0, 0}),
                  CompositionError);
}

TEST_CASE("simulated sets are reproducible and satisfy minimum mode") {
  const auto& corpus = SmallCorpus();
  CorpusIndex index(corpus.utterances);
  const auto speakers = index.Speakers();
  const SimulationOptions opt{.condition = Condition::kTwoSpeakerNoise,
                              .count = 10, .seed = 5};
  const auto a = SimulateSet(index, speakers, opt);
  const auto b = SimulateSet(index, speakers, opt);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mixture.samples == b[i].mixture.samples);
    CHECK(a[i].target_speaker != a[i].interferer_speaker);
    CHECK(a[i].mixture.size() == std::min(index.Get(a[i].target_utt).wave.size(),
                                          index.Get(a[i].interferer_utt).wave.size()));
    CHECK(std::isfinite(a[i].sir_db));
    CHECK(std::isfinite(a[i].snr_db));
  }
  const auto [first, second] = PartitionSpeakers(corpus.utterances, 0.5, 1);
  CHECK(first.size() == 5);
  CHECK(second.size() == 5);
  for (const auto& s : first)
    CHECK(std::find(second.begin(), second.end(), s) == second.end());
}

TEST_CASE("manifests round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pse_test_data_manifest";
  fs::remove_all(dir);
  const auto& corpus = SmallCorpus();
  const std::string manifest = WriteCorpus(dir.string(), corpus.utterances);
  const auto loaded = LoadCorpus(manifest);
  REQUIRE(loaded.size() == corpus.utterances.size());
  CHECK(loaded[3].utt_id == corpus.utterances[3].utt_id);
  CHECK(loaded[3].wave.size() == corpus.utterances[3].wave.size());
  for (size_t i = 0; i < loaded[3].wave.size(); ++i)
    CHECK(std::abs(loaded[3].wave.samples[i] - corpus.utterances[3].wave.samples[i]) <= 1.0 / 32768);

  CorpusIndex index(corpus.utterances);
  const auto set = SimulateSet(index, index.Speakers(), {.count = 3, .seed = 1});
  const auto path = WriteExampleSet(dir.string(), "test", set, 1);
  const auto back = LoadExampleSet(path);
  REQUIRE(back.size() == 3);
  CHECK(back[1].interferer_speaker == set[1].interferer_speaker);
  CHECK(back[1].sir_db == set[1].sir_db);
  CHECK(std::isnan(back[1].snr_db));

  std::ofstream((dir / "empty.jsonl").string());
  CHECK_THROWS_AS(LoadExampleSet((dir / "empty.jsonl").string()), EmptyManifest);
  CHECK_THROWS_AS(LoadCorpus((dir / "missing.jsonl").string()), IOError);
  fs::remove_all(dir);
}
