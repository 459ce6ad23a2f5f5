// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "farfield/pipeline.hpp"

namespace {

namespace pl = farfield::pipeline;

void AddStftFlags(CLI::App* cmd, farfield::StftConfig* stft, std::string* window) {
  cmd->add_option("--window-len", stft->window_len, "STFT window length")->capture_default_str();
  cmd->add_option("--hop", stft->hop, "STFT hop")->capture_default_str();
  cmd->add_option("--fft-len", stft->fft_len, "FFT length")->capture_default_str();
  cmd->add_option("--window", *window, "Window: hann or sqrt-hann")->capture_default_str();
}

void AddWpeFlags(CLI::App* cmd, farfield::WpeConfig* wpe) {
  cmd->add_option("--taps", wpe->taps, "WPE filter taps per channel")->capture_default_str();
  cmd->add_option("--delay", wpe->delay, "WPE prediction delay in frames")->capture_default_str();
  cmd->add_option("--iters", wpe->iterations, "WPE iterations")->capture_default_str();
  cmd->add_option("--psd-floor", wpe->psd_floor, "WPE power floor")->capture_default_str();
}

void Print(const std::string& subcommand, const pl::Json& summary) {
  std::cout << subcommand << ": " << summary.dump() << "\n";
}

std::optional<std::filesystem::path> OptPath(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Far-field multichannel speech toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config; command-line flags take precedence");
  app.set_version_flag("--version", "farfield 1.0");

  std::string window = "hann";

  pl::SynthOptions synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a small synthetic meeting");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--speakers", synth.speakers, "Number of speakers")->capture_default_str();
  synth_cmd->add_option("--channels", synth.channels, "Array channels")->capture_default_str();
  synth_cmd->add_option("--duration", synth.duration, "Length in seconds")->capture_default_str();
  synth_cmd->add_option("--snr", synth.snr_db, "Array noise SNR in dB")->capture_default_str();
  synth_cmd->add_option("--reverb-ms", synth.reverb_ms, "Reverb tail length")->capture_default_str();

  pl::SegmentsOptions seg;
  std::string seg_ann, seg_out;
  auto* seg_cmd = app.add_subcommand("segments", "Extract single-speaker segments");
  seg_cmd->add_option("--annotations", seg_ann, "Annotation manifest")->required();
  seg_cmd->add_option("--out", seg_out, "Output directory")->required();
  seg_cmd->add_option("--recordings", seg.recordings, "Recording IDs to keep (default all)");

  pl::AlignOptions align;
  std::string align_manifest, align_out, align_solver = "dense";
  auto* align_cmd = app.add_subcommand("align", "Align headset references to the array and cut clips");
  align_cmd->add_option("--manifest", align_manifest, "Annotation or segment manifest")->required();
  align_cmd->add_option("--out", align_out, "Output directory")->required();
  align_cmd->add_option("--filter-len", align.filter.filter_len, "Matched filter taps")
      ->capture_default_str();
  align_cmd->add_option("--reg", align.filter.regularization, "Relative regularization")
      ->capture_default_str();
  align_cmd->add_option("--solver", align_solver, "dense or levinson")
      ->check(CLI::IsMember({"dense", "levinson"}))
      ->capture_default_str();
  align_cmd->add_option("--ref-channel", align.ref_channel, "Array reference channel")
      ->capture_default_str();
  align_cmd->add_option("--clip-len", align.clip_len, "Clip length in seconds")->capture_default_str();
  align_cmd->add_option("--recordings", align.recordings, "Recording IDs to keep (default all)");

  pl::MixOptions mix;
  std::string mix_clips, mix_out;
  auto* mix_cmd = app.add_subcommand("mix", "Synthesize training mixtures from clips");
  mix_cmd->add_option("--clips", mix_clips, "Clip manifest")->required();
  mix_cmd->add_option("--out", mix_out, "Output directory")->required();
  mix_cmd->add_option("--count", mix.mixture.count, "Number of mixtures")->required();
  mix_cmd->add_option("--channels", mix.mixture.channels, "2 or 8")->capture_default_str();
  mix_cmd->add_option("--clip-len", mix.mixture.clip_len, "Clip length in seconds")
      ->capture_default_str();
  mix_cmd->add_option("--seed", mix.mixture.seed, "Random seed")->capture_default_str();
  mix_cmd->add_option("--speaker-weights", mix.mixture.speaker_count_weights,
                      "Relative weights of 1..4 speakers")
      ->expected(4);

  pl::WpeOptions wpe;
  std::string wpe_out;
  auto* wpe_cmd = app.add_subcommand("wpe", "Dereverberate multichannel audio");
  wpe_cmd->add_option("--in", wpe.inputs, "Input .wav files or directories")->required();
  wpe_cmd->add_option("--out", wpe_out, "Output directory")->required();
  AddStftFlags(wpe_cmd, &wpe.stft, &window);
  AddWpeFlags(wpe_cmd, &wpe.wpe);

  pl::BeamformOptions bf;
  std::string bf_out, bf_method = "das", bf_order = "wpe-first", bf_mask_dir, bf_ref_dir;
  auto* bf_cmd = app.add_subcommand("beamform", "Beamform multichannel audio to mono");
  bf_cmd->add_option("--in", bf.inputs, "Input .wav files or directories")->required();
  bf_cmd->add_option("--out", bf_out, "Output directory")->required();
  bf_cmd->add_option("--method", bf_method, "das or mvdr")
      ->check(CLI::IsMember({"das", "mvdr"}))
      ->capture_default_str();
  bf_cmd->add_option("--order", bf_order, "wpe-first, beamform-first or none")
      ->check(CLI::IsMember({"wpe-first", "beamform-first", "none"}))
      ->capture_default_str();
  bf_cmd->add_option("--ref-channel", bf.config.ref_channel, "Reference channel")->capture_default_str();
  bf_cmd->add_option("--mask-dir", bf_mask_dir, "Directory of <name>.mask speech masks");
  bf_cmd->add_option("--reference-dir", bf_ref_dir, "Clean references for oracle masks");
  bf_cmd->add_option("--max-delay", bf.gcc.max_delay, "GCC-PHAT search range in samples")
      ->capture_default_str();
  bf_cmd->add_option("--loading", bf.diagonal_loading, "MVDR diagonal loading")->capture_default_str();
  AddStftFlags(bf_cmd, &bf.config.stft, &window);
  AddWpeFlags(bf_cmd, &bf.config.wpe);

  pl::EvalOptions ev;
  std::string ev_out, ev_ref, ev_mix, ev_hyp, ev_ref_text;
  auto* ev_cmd = app.add_subcommand("eval", "Score separated audio and transcripts");
  ev_cmd->add_option("--est", ev.estimates, "Estimated mono .wav files or directories");
  ev_cmd->add_option("--ref-dir", ev_ref, "Reference directory, matched by file name");
  ev_cmd->add_option("--mixture-dir", ev_mix, "Unprocessed mixtures for SI-SDR improvement");
  ev_cmd->add_option("--ref-channel", ev.ref_channel, "Mixture channel used as the baseline")
      ->capture_default_str();
  ev_cmd->add_option("--hyp-text", ev_hyp, "Hypothesis transcripts, one per line");
  ev_cmd->add_option("--ref-text", ev_ref_text, "Reference transcripts, one per line");
  ev_cmd->add_option("--out", ev_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) {
      synth.out = synth_out;
      Print("synth", pl::RunSynth(synth));
    } else if (*seg_cmd) {
      seg.annotations = seg_ann;
      seg.out = seg_out;
      Print("segments", pl::RunSegments(seg));
    } else if (*align_cmd) {
      align.manifest = align_manifest;
      align.out = align_out;
      align.filter.solver =
          align_solver == "dense" ? farfield::FilterSolver::kDense : farfield::FilterSolver::kLevinson;
      Print("align", pl::RunAlign(align));
    } else if (*mix_cmd) {
      mix.clips = mix_clips;
      mix.out = mix_out;
      Print("mix", pl::RunMix(mix));
    } else if (*wpe_cmd) {
      wpe.out = wpe_out;
      wpe.stft.window = farfield::ParseWindowType(window);
      Print("wpe", pl::RunWpe(wpe));
    } else if (*bf_cmd) {
      bf.out = bf_out;
      bf.config.stft.window = farfield::ParseWindowType(window);
      bf.config.method = pl::ParseMethod(bf_method);
      bf.config.order = pl::ParseOrder(bf_order);
      bf.mask_dir = OptPath(bf_mask_dir);
      bf.reference_dir = OptPath(bf_ref_dir);
      Print("beamform", pl::RunBeamform(bf));
    } else if (*ev_cmd) {
      ev.out = ev_out;
      ev.reference_dir = OptPath(ev_ref);
      ev.mixture_dir = OptPath(ev_mix);
      ev.hyp_text = OptPath(ev_hyp);
      ev.ref_text = OptPath(ev_ref_text);
      const pl::Json report = pl::RunEval(ev);
      pl::Json brief = pl::Json::object();
      for (const char* key : {"mean_si_sdr_db", "mean_si_sdri_db", "wer_pct", "ser_pct"})
        if (report.contains(key)) brief[key] = report[key];
      Print("eval", brief);
    }
  } catch (const farfield::Error& e) {
    const std::string stage = app.get_subcommands().front()->get_name();
    std::string msg = e.message();
    if (msg.rfind(stage + ": ", 0) != 0) msg = stage + ": " + msg;
    std::cerr << "error: " << farfield::ErrorCodeName(e.code()) << ": " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
