#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef VIP_HAVE_OPENMP
#include <omp.h>
#endif

#include "vip/config.hpp"
#include "vip/metrics.hpp"
#include "vip/phantom.hpp"
#include "vip/recon.hpp"
#include "vip/render.hpp"
#include "vip/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace vip;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<double> wmin;
  std::optional<double> wmax;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1), "--set: ");
  }
  if (g.seed) {
    cfg.seed = *g.seed;
  }
  cfg.finalize();
#ifdef VIP_HAVE_OPENMP
  omp_set_num_threads(g.threads);
#endif
  std::printf("# resolved config\n%sthreads=%d\n", cfg.to_string().c_str(), g.threads);
  std::fflush(stdout);
  return cfg;
}

Window window(const Globals& g) { return Window{g.wmin, g.wmax}; }

// <prefix>_H.<ext> and <prefix>_L.<ext>; the extension picks the format.
void render_pair(const fs::path& prefix, const ImageTensor& img, const Window& w) {
  const std::string ext = prefix.has_extension() ? prefix.extension().string() : ".png";
  const fs::path stem = prefix.parent_path() / prefix.stem();
  const char* names[2] = {"_H", "_L"};
  for (Index c = 0; c < 2; ++c) {
    write_image(stem.string() + names[c] + ext, img.channel(c), w);
  }
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream os(path);
  if (!os) {
    throw Error("cannot write " + path.string());
  }
  os.precision(9);
  return os;
}

std::vector<SinogramTensor> full_view_sinograms(const std::vector<ImageTensor>& images,
                                                const FanGeometry& geom) {
  std::vector<SinogramTensor> out;
  for (const auto& img : images) {
    out.push_back(forward_project(img, geom));
  }
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ArgumentError("cannot parse '" + item + "' in list '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw ArgumentError("empty list");
  }
  return out;
}

void print_report(const MetricReport& m, const char* label) {
  std::printf("%s H %s  L %s\n", label, m.row(0).c_str(), m.row(1).c_str());
}

TrainResult train_prior(std::span<const SinogramTensor> sinograms, TrainDomain domain,
                        const RunConfig& cfg, bool verbose) {
  Rng rng(cfg.seed);
  const auto data = training_set(sinograms, domain, cfg.vct, rng);
  const Index every = std::max<Index>(1, cfg.train.n_iters / 20);
  TrainProgress progress;
  if (verbose) {
    progress = [every](Index it, double loss) {
      if (it % every == 0) {
        std::printf("iter %ld loss %.6g\n", static_cast<long>(it), loss);
        std::fflush(stdout);
      }
    };
  }
  return train(data, cfg.train, cfg.sde, nullptr, progress);
}

void cmd_phantom(const Globals& g, Index count, Index size, const fs::path& out_dir) {
  RunConfig cfg = resolve(g);
  if (size <= 0) {
    size = cfg.geom.image_size;
  }
  fs::create_directories(out_dir);
  const auto suite = make_phantom_suite(count, size, cfg.seed, default_spectrum());
  for (std::size_t k = 0; k < suite.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "phantom_%03zu", k);
    write_tensor(out_dir / (std::string(name) + ".vipt"), suite[k]);
    render_pair(out_dir / (std::string(name) + ".png"), suite[k], window(g));
  }
  std::printf("wrote %zu phantoms of %ldx%ld to %s\n", suite.size(), static_cast<long>(size),
              static_cast<long>(size), out_dir.c_str());
}

void cmd_project(const Globals& g, const fs::path& in, const fs::path& out, Index views,
                 fs::path mask_out) {
  RunConfig cfg = resolve(g);
  const auto img = read_tensor<ImageDomain>(in);
  if (img.rows() != cfg.geom.image_size || img.cols() != cfg.geom.image_size) {
    throw ShapeError(in.string() + ": image " + img.shape_string() +
                     " does not match geom.image_size=" + std::to_string(cfg.geom.image_size));
  }
  SinogramTensor sino = forward_project(img, cfg.geom);
  ViewMask mask = ViewMask::all(cfg.geom.n_views);
  if (views > 0 && views < cfg.geom.n_views) {
    std::tie(sino, mask) = subsample_views(sino, views);
  }
  write_tensor(out, sino);
  if (mask_out.empty()) {
    mask_out = out.parent_path() / (out.stem().string() + ".mask.vipt");
  }
  write_view_mask(mask_out, mask);
  std::printf("projected %s -> %s (%ld of %ld views kept), mask %s\n", in.c_str(), out.c_str(),
              static_cast<long>(mask.n_kept()), static_cast<long>(mask.n_views()),
              mask_out.c_str());
}

void cmd_fbp(const Globals& g, const fs::path& in, const fs::path& mask_path, const fs::path& out,
             const fs::path& png) {
  RunConfig cfg = resolve(g);
  const auto sino = read_tensor<SinogramDomain>(in);
  std::optional<ViewMask> mask;
  if (!mask_path.empty()) {
    mask = read_view_mask(mask_path);
  }
  const auto img = fbp(sino, cfg.geom, mask ? &*mask : nullptr);
  write_tensor(out, img);
  if (!png.empty()) {
    render_pair(png, img, window(g));
  }
  std::printf("fbp %s -> %s\n", in.c_str(), out.c_str());
}

void cmd_train(const Globals& g, const std::string& domain_text,
               const std::vector<std::string>& data_files, Index phantoms, const fs::path& out,
               const fs::path& loss_csv) {
  RunConfig cfg = resolve(g);
  const TrainDomain domain = parse_domain(domain_text);
  std::vector<SinogramTensor> sinograms;
  for (const auto& f : data_files) {
    sinograms.push_back(read_tensor<SinogramDomain>(f));
  }
  if (sinograms.empty()) {
    if (phantoms <= 0) {
      throw ArgumentError("train: give --data files or --phantoms N");
    }
    sinograms = full_view_sinograms(
        make_phantom_suite(phantoms, cfg.geom.image_size, cfg.seed, default_spectrum()), cfg.geom);
  }
  std::printf("training %s prior on %zu sinograms\n", domain_name(domain).c_str(),
              sinograms.size());
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train_prior(sinograms, domain, cfg, true);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_params(out, r.params);
  if (!loss_csv.empty()) {
    auto os = open_csv(loss_csv);
    os << "iter,loss\n";
    for (std::size_t i = 0; i < r.loss_curve.size(); ++i) {
      os << i << ',' << r.loss_curve[i] << '\n';
    }
  }
  std::printf("eval loss %.6g -> %.6g (ratio %.4f) in %.1f s, params %s\n", r.initial_eval_loss,
              r.final_eval_loss, r.final_eval_loss / r.initial_eval_loss, secs, out.c_str());
}

struct ReconArgs {
  fs::path in, mask, ppm, wpm, oracle, out, sino_out, trace, reference, png, fbp_out;
  std::string mode = "full";
};

void cmd_reconstruct(const Globals& g, const ReconArgs& a) {
  RunConfig cfg = resolve(g);
  const ReconMode mode = parse_mode(a.mode);
  const auto y = read_tensor<SinogramDomain>(a.in);
  const ViewMask mask = read_view_mask(a.mask);
  std::unique_ptr<ScorePrior> ppm;
  std::unique_ptr<ScorePrior> wpm;
  if (!a.oracle.empty()) {
    auto full = read_tensor<SinogramDomain>(a.oracle);
    ppm = std::make_unique<OraclePrior>(full);
    wpm = std::make_unique<OraclePrior>(std::move(full));
  } else {
    const Index c_ppm = mode == ReconMode::baseline ? 2 : 6;
    if (!a.ppm.empty()) ppm = std::make_unique<NetworkPrior>(load_params(a.ppm, c_ppm));
    if (!a.wpm.empty()) wpm = std::make_unique<NetworkPrior>(load_params(a.wpm, 6));
  }
  std::optional<ImageTensor> reference;
  if (!a.reference.empty()) {
    reference = read_tensor<ImageDomain>(a.reference);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ReconResult r = reconstruct(y, mask, ppm.get(), wpm.get(), cfg.recon_config(mode),
                                    reference ? &*reference : nullptr);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_tensor(a.out, r.image);
  if (!a.sino_out.empty()) write_tensor(a.sino_out, r.sinogram);
  if (!a.png.empty()) render_pair(a.png, r.image, window(g));
  const ImageTensor baseline = fbp(y, cfg.geom, &mask);
  if (!a.fbp_out.empty()) write_tensor(a.fbp_out, baseline);
  if (!a.trace.empty()) {
    auto os = open_csv(a.trace);
    os << "level,sigma,stage,corrector_applied,psnr_h,psnr_l,ssim_h,ssim_l\n";
    for (const auto& e : r.trace) {
      os << e.level << ',' << e.sigma << ',' << e.stage << ',' << e.corrector_applied;
      if (e.psnr && e.ssim) {
        os << ',' << (*e.psnr)[0] << ',' << (*e.psnr)[1] << ',' << (*e.ssim)[0] << ','
           << (*e.ssim)[1];
      } else {
        os << ",,,,";
      }
      os << '\n';
    }
  }
  std::printf("reconstructed %s (mode %s, %zu updates) in %.1f s\n", a.out.c_str(),
              mode_name(mode).c_str(), r.trace.size(), secs);
  if (reference) {
    print_report(evaluate(r.image, *reference), "recon      ");
    print_report(evaluate(baseline, *reference), "sparse fbp ");
  }
}

void cmd_evaluate(const Globals& g, const fs::path& recon_path, const fs::path& reference_path,
                  const fs::path& truth_path, const fs::path& csv, const std::string& profile,
                  Index region_block, const fs::path& region_csv) {
  RunConfig cfg = resolve(g);
  const auto recon = read_tensor<ImageDomain>(recon_path);
  ImageTensor reference;
  if (!reference_path.empty()) {
    reference = read_tensor<ImageDomain>(reference_path);
  } else if (!truth_path.empty()) {
    reference = make_reference(read_tensor<ImageDomain>(truth_path), cfg.geom);
  } else {
    throw ArgumentError("evaluate: give --reference or --truth");
  }
  const MetricReport m = evaluate(recon, reference);
  std::printf("channel PSNR/SSIM/MSE(1e-3)\nH %s\nL %s\n", m.row(0).c_str(), m.row(1).c_str());
  if (!csv.empty()) {
    auto os = open_csv(csv);
    os << "channel,psnr,ssim,mse\n";
    const char* names[2] = {"H", "L"};
    for (Index c = 0; c < 2; ++c) {
      const auto& ch = m.channels[static_cast<std::size_t>(c)];
      os << names[c] << ',' << ch.psnr << ',' << ch.ssim << ',' << ch.mse << '\n';
    }
  }
  if (!profile.empty()) {
    const auto eq = profile.find('=');
    const std::string axis = profile.substr(0, eq);
    if (eq == std::string::npos || (axis != "row" && axis != "col")) {
      throw ArgumentError("--profile expects row=K or col=K, got '" + profile + "'");
    }
    const Index k = std::stol(profile.substr(eq + 1));
    const Index limit = axis == "row" ? recon.rows() : recon.cols();
    if (k < 0 || k >= limit) {
      throw ArgumentError("--profile index " + std::to_string(k) + " outside 0.." +
                          std::to_string(limit - 1));
    }
    const fs::path path = recon_path.parent_path() /
                          (recon_path.stem().string() + "_profile_" + axis + std::to_string(k) +
                           ".csv");
    auto os = open_csv(path);
    os << "index,recon_h,recon_l,reference_h,reference_l\n";
    const Index n = axis == "row" ? recon.cols() : recon.rows();
    for (Index i = 0; i < n; ++i) {
      const Index r = axis == "row" ? k : i;
      const Index c = axis == "row" ? i : k;
      os << i << ',' << recon(0, r, c) << ',' << recon(1, r, c) << ',' << reference(0, r, c)
         << ',' << reference(1, r, c) << '\n';
    }
    std::printf("profile written to %s\n", path.c_str());
  }
  if (region_block > 0) {
    if (region_csv.empty()) {
      throw ArgumentError("--region-ssim needs --region-csv");
    }
    auto os = open_csv(region_csv);
    os << "channel,block_row,block_col,ssim\n";
    for (Index c = 0; c < 2; ++c) {
      const auto map = region_ssim(reference.channel(c), recon.channel(c), region_block);
      for (Index i = 0; i < map.rows(); ++i) {
        for (Index j = 0; j < map.cols(); ++j) {
          os << (c == 0 ? "H" : "L") << ',' << i << ',' << j << ',' << map(i, j) << '\n';
        }
      }
    }
  }
}

void cmd_mask_demo(const Globals& g, std::optional<double> zeta, const fs::path& in,
                   const fs::path& out_dir) {
  RunConfig cfg = resolve(g);
  MaskParams params = cfg.vct;
  if (zeta) params.zeta = *zeta;
  SinogramTensor x;
  if (!in.empty()) {
    x = read_tensor<SinogramDomain>(in);
  } else {
    x = forward_project(make_phantom_suite(1, cfg.geom.image_size, cfg.seed, default_spectrum())[0],
                        cfg.geom);
  }
  const VirtualMask vm = generate_mask(x.rows(), x.cols(), params, cfg.seed);
  const SinogramTensor x6 = vct(x, vm);
  const SinogramTensor back = ivct(x6, vm);
  const bool exact = back.values().cwiseEqual(x.values()).all();
  std::printf("zeta %.4g  ones-fraction %.6f  mask %ldx%ld\n", params.zeta, vm.ones_fraction(),
              static_cast<long>(vm.rows()), static_cast<long>(vm.cols()));
  std::printf("ivct(vct(x)) == x bit-exactly: %s\n", exact ? "yes" : "no");
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_virtual_mask(out_dir / "mask.vipt", vm);
    write_image(out_dir / "mask.png", vm.m.cast<float>(), Window{0.0, 1.0});
    const char* names[6] = {"H", "L", "HL", "L2", "H2", "LH"};
    for (Index c = 0; c < 6; ++c) {
      write_image(out_dir / (std::string("vct_") + names[c] + ".png"), x6.channel(c), window(g));
    }
    for (Index c = 0; c < 2; ++c) {
      write_image(out_dir / (std::string("roundtrip_") + names[c] + ".png"), back.channel(c),
                  window(g));
    }
    std::printf("renders written to %s\n", out_dir.c_str());
  }
  if (!exact) {
    throw Error("mask-demo: VCT round trip is not exact");
  }
}

void cmd_ablate(const Globals& g, const std::string& sweep, Index count, Index views,
                const std::string& mode_text, bool oracle, Index train_phantoms,
                const fs::path& csv) {
  RunConfig cfg = resolve(g);
  const ReconMode mode = parse_mode(mode_text);
  if (mode == ReconMode::baseline) {
    throw ArgumentError("ablate: the baseline mode has no virtual mask to sweep");
  }
  const auto zetas = parse_list(sweep);
  const auto suite =
      make_phantom_suite(count, cfg.geom.image_size, cfg.seed + 1, default_spectrum());
  std::vector<SinogramTensor> train_sinos;
  if (!oracle) {
    train_sinos = full_view_sinograms(
        make_phantom_suite(train_phantoms, cfg.geom.image_size, cfg.seed, default_spectrum()),
        cfg.geom);
  }
  std::optional<std::ofstream> os;
  if (!csv.empty()) {
    os = open_csv(csv);
    *os << "zeta,psnr_h,psnr_l,ssim_h,ssim_l\n";
  }
  for (double zeta : zetas) {
    RunConfig local = cfg;
    local.vct.zeta = zeta;
    std::unique_ptr<ScorePrior> ppm;
    std::unique_ptr<ScorePrior> wpm;
    if (!oracle) {
      const bool need_wpm = mode == ReconMode::full || mode == ReconMode::wpm_only;
      const bool need_ppm = mode != ReconMode::wpm_only;
      if (need_ppm) {
        ppm = std::make_unique<NetworkPrior>(
            train_prior(train_sinos, TrainDomain::projection, local, false).params);
      }
      if (need_wpm) {
        wpm = std::make_unique<NetworkPrior>(
            train_prior(train_sinos, TrainDomain::wavelet, local, false).params);
      }
    }
    double sum[4] = {0, 0, 0, 0};
    for (const auto& truth : suite) {
      const auto full = forward_project(truth, cfg.geom);
      const auto reference = fbp(full, cfg.geom);
      const auto [y, mask] = subsample_views(full, views);
      if (oracle) {
        ppm = std::make_unique<OraclePrior>(full);
        wpm = std::make_unique<OraclePrior>(full);
      }
      const auto r = reconstruct(y, mask, ppm.get(), wpm.get(), local.recon_config(mode));
      const auto m = evaluate(r.image, reference);
      sum[0] += m.channels[0].psnr;
      sum[1] += m.channels[1].psnr;
      sum[2] += m.channels[0].ssim;
      sum[3] += m.channels[1].ssim;
    }
    const double n = static_cast<double>(suite.size());
    std::printf("zeta %.4g  H %.2f/%.4f  L %.2f/%.4f\n", zeta, sum[0] / n, sum[2] / n,
                sum[1] / n, sum[3] / n);
    std::fflush(stdout);
    if (os) {
      *os << zeta << ',' << sum[0] / n << ',' << sum[1] / n << ',' << sum[2] / n << ','
          << sum[3] / n << '\n';
    }
  }
}

std::string keys_help() {
  std::string out = "Config keys (key=value, one per line, # comments):\n";
  for (const auto& k : config_keys()) {
    out += "  " + k.name + std::string(k.name.size() < 26 ? 26 - k.name.size() : 1, ' ') +
           k.description + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-view dual-energy CT reconstruction with virtual-mask score priors"};
  app.footer(keys_help());
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(
      [](const CLI::App*, const CLI::Error& e) { return "error: " + std::string(e.what()) + "\n"; });

  Globals g;
  app.add_option("--config", g.config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "override one config key (key=value), repeatable");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "OpenMP thread cap; 1 is bit-reproducible")
      ->check(CLI::PositiveNumber);
  app.add_option("--wmin", g.wmin, "render window minimum (default: image minimum)");
  app.add_option("--wmax", g.wmax, "render window maximum (default: image maximum)");

  std::function<void()> run;

  auto* phantom = app.add_subcommand("phantom", "generate dual-energy phantoms");
  Index ph_count = 8, ph_size = 0;
  std::string ph_out;
  phantom->add_option("--count", ph_count, "number of phantoms")->check(CLI::PositiveNumber);
  phantom->add_option("--size", ph_size, "image side (default geom.image_size)");
  phantom->add_option("--out-dir", ph_out, "output directory")->required();
  phantom->callback([&] { run = [&] { cmd_phantom(g, ph_count, ph_size, ph_out); }; });

  auto* project = app.add_subcommand("project", "fan-beam projection, optional view subsampling");
  std::string pj_in, pj_out, pj_mask;
  Index pj_views = 0;
  project->add_option("--in", pj_in, "image tensor")->required()->check(CLI::ExistingFile);
  project->add_option("--out", pj_out, "sinogram tensor")->required();
  project->add_option("--views", pj_views, "keep this many evenly spaced views (default all)");
  project->add_option("--mask-out", pj_mask, "view mask file (default <out>.mask.vipt)");
  project->callback([&] { run = [&] { cmd_project(g, pj_in, pj_out, pj_views, pj_mask); }; });

  auto* fbp_cmd = app.add_subcommand("fbp", "filtered backprojection");
  std::string fb_in, fb_mask, fb_out, fb_png;
  fbp_cmd->add_option("--in", fb_in, "sinogram tensor")->required()->check(CLI::ExistingFile);
  fbp_cmd->add_option("--mask", fb_mask, "view mask of a sparse sinogram")
      ->check(CLI::ExistingFile);
  fbp_cmd->add_option("--out", fb_out, "image tensor")->required();
  fbp_cmd->add_option("--png", fb_png, "render prefix (.png or .pgm)");
  fbp_cmd->callback([&] { run = [&] { cmd_fbp(g, fb_in, fb_mask, fb_out, fb_png); }; });

  auto* train_cmd = app.add_subcommand("train", "train a projection or wavelet score prior");
  std::string tr_domain = "projection", tr_out, tr_loss;
  std::vector<std::string> tr_data;
  Index tr_phantoms = 0;
  train_cmd->add_option("--domain", tr_domain, "projection, wavelet or plain (2-channel)")
      ->check(CLI::IsMember({"projection", "wavelet", "plain"}));
  train_cmd->add_option("--data", tr_data, "full-view sinogram tensors")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--phantoms", tr_phantoms, "generate this many phantoms instead");
  train_cmd->add_option("--out", tr_out, "parameter file")->required();
  train_cmd->add_option("--loss-csv", tr_loss, "per-iteration loss curve");
  train_cmd->callback([&] {
    run = [&] { cmd_train(g, tr_domain, tr_data, tr_phantoms, tr_out, tr_loss); };
  });

  auto* recon_cmd = app.add_subcommand("reconstruct", "dual-domain score-based reconstruction");
  ReconArgs ra;
  recon_cmd->add_option("--in", ra.in, "sparse sinogram")->required()->check(CLI::ExistingFile);
  recon_cmd->add_option("--mask", ra.mask, "view mask")->required()->check(CLI::ExistingFile);
  recon_cmd->add_option("--mode", ra.mode, "full, ppm, wpm or baseline")
      ->check(CLI::IsMember({"full", "ppm", "ppm_only", "wpm", "wpm_only", "baseline"}));
  recon_cmd->add_option("--ppm", ra.ppm, "projection prior parameters")->check(CLI::ExistingFile);
  recon_cmd->add_option("--wpm", ra.wpm, "wavelet prior parameters")->check(CLI::ExistingFile);
  recon_cmd->add_option("--oracle", ra.oracle, "full-view sinogram for the analytic prior")
      ->check(CLI::ExistingFile);
  recon_cmd->add_option("--out", ra.out, "reconstructed image tensor")->required();
  recon_cmd->add_option("--sino-out", ra.sino_out, "final sinogram before FBP");
  recon_cmd->add_option("--trace", ra.trace, "per-update trace CSV");
  recon_cmd->add_option("--reference", ra.reference, "reference image for trace metrics")
      ->check(CLI::ExistingFile);
  recon_cmd->add_option("--fbp-out", ra.fbp_out, "sparse-view FBP baseline image");
  recon_cmd->add_option("--png", ra.png, "render prefix (.png or .pgm)");
  recon_cmd->callback([&] { run = [&] { cmd_reconstruct(g, ra); }; });

  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR/SSIM/MSE against a reference");
  std::string ev_recon, ev_ref, ev_truth, ev_csv, ev_profile, ev_region_csv;
  Index ev_block = 0;
  eval_cmd->add_option("--recon", ev_recon, "image to score")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--reference", ev_ref, "reference image")->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", ev_truth, "ground truth; reference = full-view FBP of it")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--csv", ev_csv, "metrics CSV");
  eval_cmd->add_option("--profile", ev_profile, "dump a line profile, row=K or col=K");
  eval_cmd->add_option("--region-ssim", ev_block, "block size of the region SSIM map");
  eval_cmd->add_option("--region-csv", ev_region_csv, "region SSIM CSV");
  eval_cmd->callback([&] {
    run = [&] {
      cmd_evaluate(g, ev_recon, ev_ref, ev_truth, ev_csv, ev_profile, ev_block, ev_region_csv);
    };
  });

  auto* mask_cmd = app.add_subcommand("mask-demo", "virtual mask and VCT round-trip demo");
  std::optional<double> md_zeta;
  std::string md_in, md_out;
  mask_cmd->add_option("--zeta", md_zeta, "threshold (default vct.zeta)");
  mask_cmd->add_option("--in", md_in, "sinogram to transform (default: a phantom's)")
      ->check(CLI::ExistingFile);
  mask_cmd->add_option("--out-dir", md_out, "directory for mask and channel renders");
  mask_cmd->callback([&] { run = [&] { cmd_mask_demo(g, md_zeta, md_in, md_out); }; });

  auto* ablate_cmd = app.add_subcommand("ablate", "reconstruction quality across zeta values");
  std::string ab_sweep = "2.0,2.81,3.0", ab_mode = "ppm", ab_csv;
  Index ab_count = 4, ab_views = 30, ab_train = 32;
  bool ab_oracle = false;
  ablate_cmd->add_option("--zeta-sweep", ab_sweep, "comma-separated zeta values");
  ablate_cmd->add_option("--count", ab_count, "evaluation phantoms")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--views", ab_views, "kept views")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--mode", ab_mode, "full, ppm or wpm")
      ->check(CLI::IsMember({"full", "ppm", "ppm_only", "wpm", "wpm_only"}));
  ablate_cmd->add_flag("--oracle", ab_oracle, "analytic priors instead of training per zeta");
  ablate_cmd->add_option("--train-phantoms", ab_train, "training phantoms per zeta");
  ablate_cmd->add_option("--csv", ab_csv, "sweep CSV");
  ablate_cmd->callback([&] {
    run = [&] {
      cmd_ablate(g, ab_sweep, ab_count, ab_views, ab_mode, ab_oracle, ab_train, ab_csv);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    run();
  } catch (const std::exception& e) {
    std::fflush(stdout);
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
