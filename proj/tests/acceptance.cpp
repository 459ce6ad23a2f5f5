// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance checks. Prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "farfield/farfield.hpp"
#include "oracles.hpp"

namespace {

using namespace farfield;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr int kRate = 16000;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

// Records a named check; the first failure is kept in the detail line.
class Checks {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && pass_) failure_ = what;
    pass_ = pass_ && ok;
  }
  void Note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome Done() const { return {pass_, pass_ ? notes_ : "failed: " + failure_ + " (" + notes_ + ")"}; }

 private:
  bool pass_ = true;
  std::string failure_, notes_;
};

double InteriorSiSdr(const AudioClip& est, const Eigen::RowVectorXd& ref, Eigen::Index margin) {
  const Eigen::Index n = ref.size() - 2 * margin;
  return SiSdr(est.samples.row(0).segment(margin, n), ref.segment(margin, n));
}

// 1. STFT perfect reconstruction.
Outcome StftRoundTrip() {
  Checks c;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> channels(1, 4), length(2000, 16000);
  double worst = 0.0;
  const auto start = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const int m = channels(rng), n = length(rng);
    SampleMatrix s(m, n);
    for (int ch = 0; ch < m; ++ch) s.row(ch) = oracle::WhiteNoise(n, rng());
    const AudioClip x(s, kRate);
    for (const auto& cfg : ShippedStftConfigs()) {
      const AudioClip y = Istft(Stft(x, cfg));
      worst = std::max(worst, (y.samples - x.samples).norm() / x.samples.norm());
    }
  }
  const double elapsed = Seconds(start);
  c.Note("max relative error " + Fmt("%.2e", worst) + " over " +
         std::to_string(ShippedStftConfigs().size()) + " configs");
  c.Note(Fmt("%.2f s", elapsed));
  c.Expect(worst <= 1e-6, "relative error above 1e-6");
  c.Expect(elapsed < 5.0, "runtime not under 5 s");
  return c.Done();
}

// 2. GCC-PHAT integer delay recovery over the full search range.
Outcome GccPhatDelays() {
  Checks c;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> delay(-64, 64);
  const Eigen::Index n = 16000;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = trial == 0 ? -64 : trial == 1 ? 64 : delay(rng);
    const Eigen::RowVectorXd s = oracle::WhiteNoise(n + 256, rng());
    const AudioClip ref = MonoClip(s.segment(128, n)), other = MonoClip(s.segment(128 - d, n));
    const TdoaEstimate e = GccPhat(ref, other, {64});
    worst = std::max(worst, std::abs(e.delay - d));
    c.Expect(e.reliable, "estimate flagged unreliable");
  }
  c.Note("100 cases, max |error| " + Fmt("%.3g", worst) + " samples");
  c.Expect(worst <= 0.05, "delay error above 0.05 samples");
  return c.Done();
}

std::vector<double> RandomDelays(int m, int range, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> delay(-range, range);
  std::vector<double> delays(m, 0.0);
  for (int ch = 1; ch < m; ++ch) delays[ch] = delay(rng);
  return delays;
}

// 3. DAS coherent gain and noise reduction.
Outcome DasGain() {
  Checks c;
  std::mt19937_64 rng(3);
  const int m = 8;
  const Eigen::RowVectorXd x = oracle::WhiteNoise(2 * kRate, 30);
  const std::vector<double> delays = RandomDelays(m, 16, rng);
  SampleMatrix s(m, x.size());
  for (int ch = 0; ch < m; ++ch) s.row(ch) = DelaySignal(x, delays[ch]);
  const AudioClip out = Istft(Das(Stft(AudioClip(s, kRate)), {delays}));
  const double copy_db = InteriorSiSdr(out, x, 1024);
  c.Note("delayed copies " + Fmt("%.1f dB", copy_db));
  c.Expect(copy_db >= 60.0, "delayed-copy SI-SDR below 60 dB");

  double worst = 1e9, sum = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    SourceGeometry geo{RandomDelays(m, 6, rng), std::vector<double>(m, 1.0)};
    SceneOptions opts;
    opts.snr_db = 0.0;
    opts.seed = 100 + seed;
    const Scene scene = SynthScene({SpeechLikeNoise(2 * kRate, kRate, seed)}, {geo}, kRate, opts);
    const auto estimates = EstimateArrayDelays(scene.mixture, 0, {64});
    const AudioClip est = Istft(Das(Stft(scene.mixture), DelaysFromEstimates(estimates)));
    const double sdri = SiSdri(est, scene.images[0].channel(0), scene.mixture.channel(0));
    worst = std::min(worst, sdri);
    sum += sdri;
  }
  c.Note("0 dB noise, 8 channels, 20 seeds: SI-SDRi min " + Fmt("%.2f", worst) + " mean " +
         Fmt("%.2f dB", sum / 20));
  c.Expect(worst > 0.0, "a noisy seed had SI-SDRi <= 0");
  return c.Done();
}

Eigen::MatrixXcd RandomPsd(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(m, m + 2);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) = Complex(g(rng), g(rng));
  return a * a.adjoint();
}

// 4. MVDR distortionless response and ordering against DAS.
Outcome MvdrChecks() {
  Checks c;
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + trial % 7, bins = 9;
    SpatialCovariances cov;
    for (int k = 0; k < bins; ++k) {
      cov.speech.push_back(RandomPsd(m, rng));
      cov.noise.push_back(RandomPsd(m, rng));
    }
    cov.speech_fallback.assign(bins, false);
    cov.noise_fallback.assign(bins, false);
    const BeamformerWeights w = MvdrWeights(cov, {0, 1e-6});
    for (int k = 0; k < bins; ++k) {
      const Eigen::VectorXcd d = PrincipalSteering(cov.speech[k], 0);
      worst = std::max(worst, std::abs((w.w.row(k).conjugate() * d).value() - 1.0));
    }
  }
  c.Note("max |w^H d - 1| " + Fmt("%.1e", worst) + " over 360 bins");
  c.Expect(worst <= 1e-8, "distortionless error above 1e-8");

  int wins = 0;
  const int m = 8;
  std::vector<double> gains(m);
  for (int ch = 0; ch < m; ++ch) gains[ch] = 1.0 - 0.8 * ch / (m - 1);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<double> delays = RandomDelays(m, 6, rng);
    SceneOptions opts;
    opts.snr_db = 0.0;
    opts.seed = 200 + seed;
    const Scene scene = SynthScene({SpeechLikeNoise(2 * kRate, kRate, 50 + seed)}, {{delays, gains}},
                                   kRate, opts);
    const auto spec = Stft(scene.mixture);
    const AudioClip ref = scene.images[0].channel(0), base = scene.mixture.channel(0);
    const double das = SiSdri(Istft(Das(spec, {delays})), ref, base);
    const double mvdr = SiSdri(Istft(Mvdr(spec, scene.oracle_mask)), ref, base);
    wins += mvdr >= das;
  }
  c.Note("MVDR >= DAS in " + std::to_string(wins) + "/20 trials");
  c.Expect(wins >= 18, "MVDR beat DAS in fewer than 18 of 20 trials");
  return c.Done();
}

AudioClip Reverberant(const Eigen::RowVectorXd& dry, int channels, double reverb_ms, uint64_t seed,
                      SampleMatrix* direct = nullptr) {
  SourceGeometry geo;
  for (int ch = 0; ch < channels; ++ch) {
    geo.delays.push_back(2.0 * ch);
    geo.gains.push_back(1.0 - 0.1 * ch);
  }
  SceneOptions opts;
  opts.reverb_ms = reverb_ms;
  opts.reverb_tail_gain = 0.3;
  opts.seed = seed;
  const Scene scene = SynthScene({dry}, {geo}, kRate, opts);
  if (direct) *direct = scene.direct[0].samples;
  return scene.mixture;
}

// 5. WPE objective monotonicity and dereverberation gain.
Outcome WpeChecks() {
  Checks c;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> reverb(80.0, 300.0);
  std::uniform_int_distribution<int> channels(1, 3);
  double worst_rise = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::RowVectorXd dry = trial % 2 ? SpeechLikeNoise(kRate, kRate, rng())
                                             : oracle::WhiteNoise(kRate, rng(), 0.1);
    const AudioClip wet = Reverberant(dry, channels(rng), reverb(rng), rng());
    WpeDiagnostics diag;
    Wpe(Stft(wet), {}, &diag);
    for (size_t i = 1; i < diag.objective.size(); ++i)
      worst_rise = std::max(worst_rise, (diag.objective[i] - diag.objective[i - 1]) /
                                            std::abs(diag.objective[i - 1]));
  }
  c.Note("50 inputs, largest relative objective change " + Fmt("%.2e", worst_rise));
  c.Expect(worst_rise <= 1e-9, "objective increased");

  SampleMatrix direct;
  const AudioClip wet = Reverberant(SpeechLikeNoise(3 * kRate, kRate, 5), 2, 200.0, 6, &direct);
  const AudioClip out = WpeTime(wet);
  const double before = SiSdr(wet.samples.row(0), direct.row(0));
  const double after = SiSdr(out.samples.row(0), direct.row(0));
  c.Note("200 ms reverb SI-SDR " + Fmt("%.2f", before) + " -> " + Fmt("%.2f dB", after));
  c.Expect(after > before, "no SI-SDR improvement on the 200 ms fixture");
  return c.Done();
}

// 6. Matched filter estimation.
Outcome MatchedFilterChecks() {
  Checks c;
  const Eigen::RowVectorXd h = oracle::WhiteNoise(8000, 6);
  const std::vector<double> planted = {0.5, -0.3, 0.2};
  const Eigen::RowVectorXd x = oracle::Convolve(h, planted);
  double coeff_err = 0.0;
  for (FilterSolver solver : {FilterSolver::kDense, FilterSolver::kLevinson}) {
    const FirFilter f = EstimateMatchedFilter(MonoClip(h), MonoClip(x), {3, 0.0, solver});
    for (int k = 0; k < 3; ++k) coeff_err = std::max(coeff_err, std::abs(f.coeffs(k) - planted[k]));
  }
  c.Note("planted 3-tap error " + Fmt("%.1e", coeff_err));
  c.Expect(coeff_err <= 1e-6, "planted filter error above 1e-6");

  const Eigen::RowVectorXd hn = oracle::WhiteNoise(4096, 7);
  const Eigen::RowVectorXd xn = oracle::Convolve(hn, {0.1, 0.7, -0.3, 0.05}) + oracle::WhiteNoise(4096, 8, 0.2);
  const int len = 32;
  const FirFilter f = EstimateMatchedFilter(MonoClip(hn), MonoClip(xn), {len, 0.0, FilterSolver::kDense});
  const Eigen::RowVectorXd residual = xn - ApplyFilter(f, MonoClip(hn)).samples.row(0);
  double worst_dot = 0.0;
  for (int k = 0; k < len; ++k)
    worst_dot = std::max(worst_dot, std::abs(residual.tail(4096 - k).dot(hn.head(4096 - k))));
  c.Note("orthogonality " + Fmt("%.1e", worst_dot / xn.norm()) + " x ||x||");
  c.Expect(worst_dot <= 1e-6 * xn.norm(), "residual not orthogonal to lagged headset");

  double solver_gap = 0.0;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const Eigen::RowVectorXd hs = SpeechLikeNoise(16384, kRate, seed) + oracle::WhiteNoise(16384, seed, 1e-3);
    const Eigen::RowVectorXd xs = detail::FftConvolve(hs, ExponentialImpulseResponse(20.0, 0.3, kRate, seed));
    const FirFilter dense = EstimateMatchedFilter(MonoClip(hs), MonoClip(xs), {512, 1e-6, FilterSolver::kDense});
    const FirFilter fast = EstimateMatchedFilter(MonoClip(hs), MonoClip(xs), {512, 1e-6, FilterSolver::kLevinson});
    solver_gap = std::max(solver_gap, (dense.coeffs - fast.coeffs).cwiseAbs().maxCoeff());
  }
  c.Note("dense vs fast " + Fmt("%.1e", solver_gap));
  c.Expect(solver_gap <= 1e-8, "solvers disagree by more than 1e-8");
  return c.Done();
}

AudioClip PoolAudio(int channels, Eigen::Index n, uint64_t seed) {
  SampleMatrix s(channels, n);
  for (int ch = 0; ch < channels; ++ch) s.row(ch) = oracle::WhiteNoise(n, seed * 17 + ch, 0.1);
  return AudioClip(s.cast<float>().cast<double>(), kRate);
}

// 7. Segment extraction, mixture additivity, determinism and clip counts.
Outcome MixtureChecks() {
  Checks c;
  std::mt19937_64 rng(7);
  int mismatched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> nseg(0, 12), nspk(1, 4), start(0, 2000), dur(1, 600);
    std::vector<SegmentAnnotation> annotations;
    std::vector<oracle::GridSegment> grid;
    const int segments = nseg(rng), speakers = nspk(rng);
    for (int i = 0; i < segments; ++i) {
      std::uniform_int_distribution<int> who(0, speakers - 1);
      const std::string spk(1, static_cast<char>('A' + who(rng)));
      const int s = start(rng), e = s + dur(rng);
      annotations.push_back({"rec", spk, s / 100.0, e / 100.0, ChannelRole::kHeadset, ""});
      grid.push_back({spk, s, e});
    }
    const auto got = ExtractNonoverlapSegments(annotations);
    const auto expected = oracle::GridExactlyOneActive(grid);
    bool same = got.size() == expected.size();
    for (size_t i = 0; same && i < got.size(); ++i)
      same = got[i].speaker_id == expected[i].speaker &&
             std::lround(got[i].start * 100) == expected[i].start_tick &&
             std::lround(got[i].end * 100) == expected[i].end_tick;
    mismatched += !same;
  }
  c.Note("grid oracle mismatches " + std::to_string(mismatched) + "/200");
  c.Expect(mismatched == 0, "extraction disagrees with the grid oracle");

  std::vector<PoolClip> pool;
  uint64_t seed = 1;
  for (int s = 0; s < 5; ++s)
    for (int k = 0; k < 3; ++k) {
      PoolClip clip;
      clip.speaker_id = "spk" + std::to_string(s);
      clip.clip_id = clip.speaker_id + "_" + std::to_string(k);
      clip.array = PoolAudio(8, 1600, seed++);
      clip.reference = PoolAudio(1, 1600, seed++);
      pool.push_back(std::move(clip));
    }
  std::map<std::string, const PoolClip*> lookup;
  for (const auto& clip : pool) lookup[clip.clip_id] = &clip;
  MixtureOptions opts;
  opts.count = 60;
  opts.seed = 42;
  const MixtureSet a = SynthesizeMixtures(pool, opts), b = SynthesizeMixtures(pool, opts);
  bool exact = true;
  for (size_t i = 0; i < a.mixtures.size(); ++i) {
    const auto& recipe = std::get<MixtureRecipe>(a.recipes.records[i]);
    SampleMatrix sum = SampleMatrix::Zero(8, 1600);
    Eigen::RowVectorXd ref = Eigen::RowVectorXd::Zero(1600);
    for (const auto& comp : recipe.components) {
      sum += lookup[comp.clip_id]->array.samples;
      ref += lookup[comp.clip_id]->reference.samples.row(0);
    }
    exact = exact && a.mixtures[i].samples == sum && a.references[i].samples.row(0) == ref;
    if (recipe.n_speakers == 2)
      exact = exact && SampleMatrix(a.mixtures[i].samples - lookup[recipe.components[0].clip_id]->array.samples) ==
                           lookup[recipe.components[1].clip_id]->array.samples;
  }
  c.Expect(exact, "mixture is not the exact sum of its clips");
  bool identical = SerializeManifest(a.recipes) == SerializeManifest(b.recipes);
  for (size_t i = 0; i < a.mixtures.size(); ++i)
    identical = identical && EncodeWav(a.mixtures[i]) == EncodeWav(b.mixtures[i]) &&
                EncodeWav(a.references[i]) == EncodeWav(b.references[i]);
  c.Expect(identical, "seed 42 runs differ");
  c.Note("60 mixtures exact sums, seed 42 byte-identical");

  std::uniform_int_distribution<int> ms(0, 60000);
  int wrong_counts = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int from = ms(rng), to = from + ms(rng);
    wrong_counts += static_cast<int>(CutClips({"S", from / 1000.0, to / 1000.0}, 4.0).size()) !=
                    (to - from) / 4000;
  }
  c.Note("clip count mismatches " + std::to_string(wrong_counts) + "/1000");
  c.Expect(wrong_counts == 0, "4 s clip counts differ from floor arithmetic");
  return c.Done();
}

// 8. Metrics against independent oracles.
Outcome MetricChecks() {
  Checks c;
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = 10 + rng() % 5000;
    const Eigen::RowVectorXd ref = oracle::WhiteNoise(n, rng());
    const Eigen::RowVectorXd est = ref + oracle::WhiteNoise(n, rng(), std::pow(10.0, trial % 7 - 3));
    worst = std::max(worst, std::abs(SiSdr(est, ref) - oracle::DirectSiSdr(est, ref)));
  }
  c.Note("SI-SDR vs direct formula " + Fmt("%.1e dB", worst));
  c.Expect(worst <= 1e-9, "SI-SDR differs from the direct formula");

  bool zero = true;
  for (int trial = 0; trial < 50; ++trial) {
    const AudioClip ref = MonoClip(oracle::WhiteNoise(1000, rng()));
    const AudioClip mix = MonoClip(ref.samples.row(0) + oracle::WhiteNoise(1000, rng()));
    zero = zero && SiSdri(mix, ref, mix) == 0.0;
  }
  c.Expect(zero, "raw-mixture SI-SDRi is not exactly 0");

  std::uniform_int_distribution<int> len(0, 12), vocab(0, 4);
  int wrong = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> a(len(rng)), b(len(rng));
    for (auto& w : a) w = std::string(1, static_cast<char>('a' + vocab(rng)));
    for (auto& w : b) w = std::string(1, static_cast<char>('a' + vocab(rng)));
    wrong += Wer(a, b).errors() != oracle::EditDistance(a, b);
  }
  c.Note("WER edit-distance mismatches " + std::to_string(wrong) + "/1000");
  c.Expect(wrong == 0, "WER disagrees with edit distance");

  const SotTranscript ref = ParseSot("speaker=s1 a b c <sc> speaker=s2 d e f");
  const bool ser = Ser(ref, ref).percent() == 0.0 &&
                   Ser(ParseSot("speaker=s1 a b c <sc> speaker=s1 d e f"), ref).percent() == 50.0 &&
                   Ser(ParseSot("speaker=s1 a b c"), ref).percent() == 50.0 &&
                   Ser(ParseSot("speaker=s2 d e f"), ref).percent() == 50.0 &&
                   Ser(ParseSot("speaker=s1 a b c <sc> speaker=s2 d e f <sc> speaker=s3 x"), ref).percent() == 0.0;
  c.Expect(ser, "SER examples");
  c.Note("SER examples ok");
  return c.Done();
}

int RunCli(const fs::path& cwd, const std::string& args, int workers) {
  const std::string cmd = "cd '" + cwd.string() + "' && FARFIELD_WORKERS=" + std::to_string(workers) +
                          " '" + FARFIELD_CLI_PATH + "' " + args + " > /dev/null 2>> errors.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 9. Command-line chain on the synthetic fixture.
Outcome EndToEnd() {
  Checks c;
  const fs::path root = fs::temp_directory_path() / ("farfield_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> prepare = {
      "synth --out syn --seed 1",
      "segments --annotations syn/annotations.jsonl --out seg",
      "align --manifest seg/segments.jsonl --out al",
  };
  const std::vector<std::string> chain = {
      "mix --clips al/clips.jsonl --count 8 --channels 8 --seed 42 --out mx",
      "wpe --in mx/mixtures --out wp",
      "beamform --in wp --method das --order none --out bf",
      "eval --est bf --ref-dir mx/references --mixture-dir mx/mixtures --out ev",
  };
  std::vector<pipeline::Json> manifests[2];
  double chain_seconds[2] = {0, 0};
  double sdri = -1e9;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    fs::create_directories(dir);
    const int workers = run == 0 ? 1 : 4;
    bool ok = true;
    for (const auto& cmd : prepare) ok = ok && RunCli(dir, cmd, workers) == 0;
    const auto start = Clock::now();
    for (const auto& cmd : chain) ok = ok && RunCli(dir, cmd, workers) == 0;
    chain_seconds[run] = Seconds(start);
    if (!ok) {
      c.Expect(false, "command failed: " + detail::ReadFileBytes(dir / "errors.txt"));
      fs::remove_all(root);
      return c.Done();
    }
    for (const char* stage : {"syn", "seg", "al", "mx", "wp", "bf", "ev"})
      manifests[run].push_back(
          pipeline::Json::parse(detail::ReadFileBytes(dir / stage / pipeline::kRunManifestName)));
    if (run == 0) {
      const auto report = pipeline::Json::parse(detail::ReadFileBytes(dir / "ev" / "eval_report.json"));
      sdri = report["mean_si_sdri_db"].get<double>();
    }
  }
  fs::remove_all(root);
  c.Note("mix..eval " + Fmt("%.1f s", chain_seconds[0]) + " (serial), " + Fmt("%.1f s", chain_seconds[1]) +
         " (4 workers)");
  c.Note("mean SI-SDRi " + Fmt("%.2f dB", sdri));
  c.Expect(chain_seconds[0] < 60.0 && chain_seconds[1] < 60.0, "chain took 60 s or more");
  c.Expect(sdri > 0.0, "mean SI-SDRi not above 0");
  bool hashed = true;
  for (const auto& m : manifests[0]) hashed = hashed && !m["outputs"].empty();
  c.Expect(hashed, "a run manifest lists no outputs");
  c.Expect(manifests[0] == manifests[1], "run manifests differ between runs");
  c.Note("run manifests identical across reruns");
  return c.Done();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"stft round trip", StftRoundTrip},
      {"gcc-phat delays", GccPhatDelays},
      {"delay-and-sum", DasGain},
      {"mvdr", MvdrChecks},
      {"wpe", WpeChecks},
      {"matched filter", MatchedFilterChecks},
      {"mixture pipeline", MixtureChecks},
      {"metrics", MetricChecks},
      {"end to end", EndToEnd},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
