// Command line front end: simulate | fuse | eval | weights-dump.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pansharp/pansharp.hpp"

using namespace pansharp;
using nlohmann::json;

namespace {

// Flag combination problems that CLI11 cannot express; mapped to exit 2.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fnv1a_hex(const std::string& path) {
  std::string data = detail::slurp(path);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw usage_error("malformed number in list: " + item);
  }
  return out;
}

std::vector<double> parse_alphas(const std::string& s, int bands) {
  std::vector<double> a;
  if (s == "equal")
    a = alphas_equal(bands);
  else if (s == "rgbn")
    a = alphas_rgbn();
  else if (s == "no-blue")
    a = alphas_no_blue();
  else
    a = split_doubles(s);
  if (static_cast<int>(a.size()) != bands)
    throw usage_error("--alphas needs one weight per band (" + std::to_string(bands) + ")");
  return a;
}

std::vector<BandShift> parse_shifts(const std::string& s, int bands) {
  if (s == "none") return {};
  if (s == "auto") return default_band_shifts(bands);
  std::vector<double> v = split_doubles(s);
  if (static_cast<int>(v.size()) != 2 * bands)
    throw usage_error("--shifts needs dx,dy per band (" + std::to_string(2 * bands) +
                     " numbers)");
  std::vector<BandShift> out(bands);
  for (int k = 0; k < bands; ++k) out[k] = {v[2 * k], v[2 * k + 1]};
  return out;
}

std::vector<BandShift> shifts_from_manifest(const std::string& path, int bands) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest: " + path);
  json j = json::parse(in);
  std::vector<BandShift> out;
  for (const json& e : j.at("shifts"))
    out.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  if (static_cast<int>(out.size()) != bands)
    throw std::invalid_argument("manifest shift count disagrees with the band count");
  return out;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string ref, out_dir = ".";
  double sigma = 1.3, noise = 0.0;
  int factor = 4, kernel_radius = 0;
  std::string alphas = "equal", shifts = "none";
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateOpts& o) {
  Image ref = read_image(o.ref);
  SimulationSpec spec;
  spec.blur = {o.sigma, o.kernel_radius};
  spec.sampling.factor = o.factor;
  spec.alphas = parse_alphas(o.alphas, ref.bands());
  spec.shifts = parse_shifts(o.shifts, ref.bands());
  spec.noise_sigma = o.noise;
  spec.seed = o.seed;
  require(ref.width() % o.factor == 0 && ref.height() % o.factor == 0,
          "simulate: reference dimensions must be divisible by the factor");

  PanImage pan = synthesize_pan(ref, spec.alphas);
  Image low = simulate_lowres(ref, spec);

  std::string truth_path = o.out_dir + "/truth.mbf";
  std::string pan_path = o.out_dir + "/pan.mbf";
  std::string low_path = o.out_dir + "/lowres.mbf";
  write_image(ref, truth_path);
  write_image(pan, pan_path);
  write_image(low, low_path);

  json j;
  j["factor"] = o.factor;
  j["sigma"] = o.sigma;
  j["kernel_radius"] = o.kernel_radius;
  j["alphas"] = spec.alphas;
  j["shifts"] = json::array();
  std::vector<BandShift> shifts =
      spec.shifts.empty() ? std::vector<BandShift>(ref.bands(), {0.0, 0.0}) : spec.shifts;
  for (const BandShift& s : shifts) j["shifts"].push_back({s.dx, s.dy});
  j["noise_sigma"] = o.noise;
  j["seed"] = o.seed;
  j["files"] = {{"truth", "truth.mbf"}, {"pan", "pan.mbf"}, {"lowres", "lowres.mbf"}};
  j["hashes"] = {{"truth.mbf", fnv1a_hex(truth_path)},
                 {"pan.mbf", fnv1a_hex(pan_path)},
                 {"lowres.mbf", fnv1a_hex(low_path)}};
  write_json(j, o.out_dir + "/manifest.json");
  return 0;
}

// -------------------------------------------------------------------- fuse

struct FuseOpts {
  std::string method, pan, lowres, output = "fused.mbf", manifest;
  bool misregistered = false;
  // shared solver knobs (defaults mirror SolverConfig)
  double mu = 50.0, delta = 6.21, h = 1.25, tau = 0.0, tol = 1e-6;
  double sigma = 1.3;
  int factor = 4, kernel_radius = 0, search_radius = 3, patch_radius = 1;
  bool self_after_norm = false;
  int max_iter = 500, threads = 0;
  // coupled model
  double lambda = 1.0, nlv_mu = 800.0;
  std::string alphas = "equal";
  // baselines
  int hpf_box = 5, lmvm_window = 9;
};

using BaselineFn = Image (*)(const PanImage&, const Image&, const BaselineConfig&);

Image fuse_baseline(BaselineFn fn, const PanImage& pan, const Image& lowres,
                    const std::vector<BandShift>& shifts, const BaselineConfig& cfg) {
  if (shifts.empty()) return fn(pan, lowres, cfg);
  int s = cfg.sampling.factor;
  Image out(lowres.width() * s, lowres.height() * s, lowres.bands());
  for (int k = 0; k < lowres.bands(); ++k) {
    PanImage pk = warp_pan_to_band(pan, shifts[k]);
    Image fk = fn(pk, extract_band(lowres, k), cfg);
    insert_band(out, bicubic_translate(extract_band(fk, 0), -shifts[k].dx, -shifts[k].dy), k);
  }
  return out;
}

int run_fuse(const FuseOpts& o) {
  if (o.method != "bicubic" && o.pan.empty())
    throw usage_error("--pan is required for method " + o.method);
  if (o.misregistered && o.manifest.empty())
    throw usage_error("--misregistered needs --manifest for the per band shifts");
  Image lowres = read_image(o.lowres);
  std::vector<BandShift> shifts;
  if (o.misregistered) shifts = shifts_from_manifest(o.manifest, lowres.bands());

  SolverConfig cfg;
  cfg.mu = o.mu;
  cfg.delta = o.delta;
  cfg.tau = o.tau;
  cfg.max_iterations = o.max_iter;
  cfg.tolerance = o.tol;
  cfg.weights = {o.h, o.search_radius, o.patch_radius, o.self_after_norm};
  cfg.blur = {o.sigma, o.kernel_radius};
  cfg.sampling.factor = o.factor;
  cfg.threads = o.threads;

  BaselineConfig bcfg;
  bcfg.blur = cfg.blur;
  bcfg.sampling = cfg.sampling;
  bcfg.hpf_box = o.hpf_box;
  bcfg.lmvm_window = o.lmvm_window;

  json run;
  run["method"] = o.method;
  run["inputs"] = {{"lowres", o.lowres}};
  run["hashes"] = {{"lowres", fnv1a_hex(o.lowres)}};
  if (!o.pan.empty()) {
    run["inputs"]["pan"] = o.pan;
    run["hashes"]["pan"] = fnv1a_hex(o.pan);
  }
  run["config"] = {{"mu", o.mu},       {"delta", o.delta},
                   {"h", o.h},         {"tau", o.tau},
                   {"tol", o.tol},     {"max_iter", o.max_iter},
                   {"sigma", o.sigma}, {"factor", o.factor},
                   {"search_radius", o.search_radius}, {"patch_radius", o.patch_radius},
                   {"misregistered", o.misregistered}};

  auto t0 = std::chrono::steady_clock::now();
  Image fused;
  if (o.method == "bicubic") {
    fused = fuse_bicubic(lowres, o.factor);
  } else if (o.method == "hpf" || o.method == "sfim" || o.method == "lbf" ||
             o.method == "lmvm") {
    PanImage pan = read_image(o.pan);
    BaselineFn fn = o.method == "hpf"    ? &fuse_hpf
                    : o.method == "sfim" ? &fuse_sfim
                    : o.method == "lbf"  ? &fuse_lbf
                                         : &fuse_lmvm;
    fused = fuse_baseline(fn, pan, lowres, shifts, bcfg);
  } else if (o.method == "nlvd") {
    PanImage pan = read_image(o.pan);
    std::vector<SolveReport> reports;
    fused = o.misregistered ? pansharpen_nlvd_misregistered(pan, lowres, shifts, cfg, &reports)
                            : pansharpen_nlvd(pan, lowres, cfg, &reports);
    run["bands"] = json::array();
    for (const SolveReport& r : reports)
      run["bands"].push_back({{"iterations", r.iterations},
                              {"converged", r.converged},
                              {"final_change", r.final_change}});
  } else if (o.method == "nlv") {
    if (o.misregistered)
      throw std::invalid_argument(
          "nlv: the coupled model requires spectral components to be co-registered");
    PanImage pan = read_image(o.pan);
    NlvConfig nc;
    nc.lambda = o.lambda;
    nc.mu = o.nlv_mu;
    nc.alphas = parse_alphas(o.alphas, lowres.bands());
    nc.tau = o.tau;
    nc.max_iterations = o.max_iter;
    nc.tolerance = o.tol;
    nc.weights = cfg.weights;
    nc.blur = cfg.blur;
    nc.sampling = cfg.sampling;
    SolveReport rep;
    fused = solve_nlv(pan, lowres, nc, &rep);
    run["config"]["lambda"] = o.lambda;
    run["config"]["nlv_mu"] = o.nlv_mu;
    run["bands"] = json::array({{{"iterations", rep.iterations},
                                 {"converged", rep.converged},
                                 {"final_change", rep.final_change}}});
  } else {
    throw usage_error("unknown method: " + o.method);
  }
  auto t1 = std::chrono::steady_clock::now();

  write_image(fused, o.output);
  run["output"] = {{"file", o.output}, {"hash", fnv1a_hex(o.output)}};
  write_json(run, o.output + ".json");
  std::cerr << o.method << ": " << fused.width() << "x" << fused.height() << "x"
            << fused.bands() << " in "
            << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
            << " ms\n";
  return 0;
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
  std::vector<std::string> fused;
  std::string truth, pan, lowres, output, diff;
  double sigma = 1.3;
  int factor = 4, kernel_radius = 0;
};

// Keeps the leading bands of a multiband image (PPM difference dumps).
Image leading_bands(const Image& img, int count) {
  Image out(img.width(), img.height(), count);
  for (int k = 0; k < count; ++k) insert_band(out, extract_band(img, k), k);
  return out;
}

int run_eval(const EvalOpts& o) {
  bool full_ref = !o.truth.empty();
  bool no_ref = !o.pan.empty() && !o.lowres.empty();
  if (!full_ref && !no_ref)
    throw usage_error("eval needs --truth (full reference) or --pan with --lowres "
                      "(no reference)");
  if (!o.diff.empty() && !full_ref) throw usage_error("--diff needs --truth");
  if (!o.diff.empty() && o.fused.size() != 1)
    throw usage_error("--diff expects exactly one --fused input");

  Image truth;
  if (full_ref) truth = read_image(o.truth);
  PanImage pan;
  Image lowres_up;
  std::vector<Image> pan_low;
  if (no_ref) {
    pan = read_image(o.pan);
    Image lowres = read_image(o.lowres);
    lowres_up = bicubic_upsample(lowres, o.factor);
    BlurSpec blur{o.sigma, o.kernel_radius};
    SamplingSpec sampling;
    sampling.factor = o.factor;
    Image degraded = bicubic_upsample(blur_downsample(pan, blur, sampling), o.factor);
    pan_low.assign(lowres.bands(), degraded);
  }

  std::ostringstream csv;
  csv << "file";
  if (full_ref) csv << ",rmse,ergas,sam_deg,ssim,q2n";
  if (no_ref) csv << ",d_lambda,d_s,qnr";
  csv << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    csv << buf;
  };
  for (const std::string& path : o.fused) {
    Image fused = read_image(path);
    csv << path;
    if (full_ref) {
      MetricReport rep = evaluate(fused, truth, o.factor);
      put(rep.rmse);
      put(rep.ergas);
      put(rep.sam_degrees);
      put(rep.ssim);
      put(rep.q2n);
      if (!o.diff.empty()) {
        Image diff = difference_visualization(fused, truth);
        if (diff.bands() > 3) diff = leading_bands(diff, 3);
        write_image(diff, o.diff);
      }
    }
    if (no_ref) {
      double dl = d_lambda(fused, lowres_up);
      double ds = d_s(fused, lowres_up, pan, pan_low);
      put(dl);
      put(ds);
      put(qnr(dl, ds));
    }
    csv << '\n';
  }

  if (o.output.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(o.output);
    if (!out) throw io_error("cannot write " + o.output);
    out << csv.str();
  }
  return 0;
}

// ------------------------------------------------------------ weights-dump

struct WeightsOpts {
  std::string pan, output;
  int row = 0, col = 0;
  double h = 1.25;
  int search_radius = 3, patch_radius = 1;
  bool self_after_norm = false;
};

int run_weights_dump(const WeightsOpts& o) {
  Image pan = read_image(o.pan);
  require(pan.bands() == 1, "weights-dump: pan must be single band");
  require(o.row >= 0 && o.row < pan.height() && o.col >= 0 && o.col < pan.width(),
          "weights-dump: pixel outside the image");
  NonlocalConfig cfg{o.h, o.search_radius, o.patch_radius, o.self_after_norm};
  WeightField field = compute_weights(pan, cfg);

  std::ostringstream csv;
  csv << "offset_x,offset_y,weight\n";
  const double* row = field.row(static_cast<std::size_t>(o.row) * pan.width() + o.col);
  int R = o.search_radius, win = field.window_size();
  char buf[64];
  for (int oy = -R; oy <= R; ++oy)
    for (int ox = -R; ox <= R; ++ox) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", ox, oy, row[(oy + R) * win + (ox + R)]);
      csv << buf;
    }
  if (o.output.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(o.output);
    if (!out) throw io_error("cannot write " + o.output);
    out << csv.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational pansharpening toolbox"};
  app.require_subcommand(1);
  // --h is the similarity bandwidth, so help is long form only.
  app.set_help_flag("--help", "print help");

  SimulateOpts so;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Degrade a reference image into a pan + lowres benchmark set");
  sim->set_help_flag("--help", "print help");
  sim->add_option("--ref", so.ref, "reference image (truth)")->required();
  sim->add_option("--out", so.out_dir, "output directory (default .)");
  sim->add_option("--sigma", so.sigma, "formation blur sigma (default 1.3)");
  sim->add_option("--kernel-radius", so.kernel_radius, "blur kernel radius (0 = auto)");
  sim->add_option("--factor", so.factor, "resolution ratio (default 4)");
  sim->add_option("--alphas", so.alphas, "pan mix: equal|rgbn|no-blue|a0,a1,...");
  sim->add_option("--shifts", so.shifts, "misregistration: none|auto|dx0,dy0,dx1,dy1,...");
  sim->add_option("--noise", so.noise, "additive Gaussian noise sigma (default 0)");
  sim->add_option("--seed", so.seed, "noise seed (default 0)");

  FuseOpts fo;
  CLI::App* fuse = app.add_subcommand("fuse", "Fuse a pan with low resolution bands");
  fuse->set_help_flag("--help", "print help");
  fuse->add_option("--method", fo.method, "nlvd|nlv|hpf|sfim|lmvm|lbf|bicubic")->required();
  fuse->add_option("--pan", fo.pan, "panchromatic image");
  fuse->add_option("--lowres", fo.lowres, "low resolution bands")->required();
  fuse->add_option("--output", fo.output, "fused output (default fused.mbf)");
  fuse->add_option("--manifest", fo.manifest, "simulation manifest (shift source)");
  fuse->add_flag("--misregistered", fo.misregistered,
                 "treat bands as shifted; needs --manifest");
  fuse->add_option("--mu", fo.mu, "data weight (default 50)");
  fuse->add_option("--delta", fo.delta, "radiometric weight (default 6.21)");
  fuse->add_option("--h", fo.h, "similarity bandwidth (default 1.25)");
  fuse->add_option("--search-radius", fo.search_radius, "weight window radius (default 3)");
  fuse->add_option("--patch-radius", fo.patch_radius, "patch radius (default 1)");
  fuse->add_flag("--self-after-norm", fo.self_after_norm,
                 "set the central weight after normalization");
  fuse->add_option("--tau", fo.tau, "descent step (0 = auto 1/L)");
  fuse->add_option("--max-iter", fo.max_iter, "iteration cap (default 500)");
  fuse->add_option("--tol", fo.tol, "RMS change stopping threshold (default 1e-6)");
  fuse->add_option("--sigma", fo.sigma, "formation blur sigma (default 1.3)");
  fuse->add_option("--kernel-radius", fo.kernel_radius, "blur kernel radius (0 = auto)");
  fuse->add_option("--factor", fo.factor, "resolution ratio (default 4)");
  fuse->add_option("--threads", fo.threads, "band workers (0 = PANSHARP_THREADS or cores)")
      ->envname("PANSHARP_THREADS");
  fuse->add_option("--lambda", fo.lambda, "nlv: pan synthesis weight (default 1)");
  fuse->add_option("--nlv-mu", fo.nlv_mu, "nlv: data weight (default 800)");
  fuse->add_option("--alphas", fo.alphas, "nlv: pan mix, as in simulate");
  fuse->add_option("--hpf-box", fo.hpf_box, "hpf/sfim box size (default 5)");
  fuse->add_option("--lmvm-window", fo.lmvm_window, "lmvm statistics window (default 9)");

  EvalOpts eo;
  CLI::App* ev = app.add_subcommand("eval", "Score fused products (CSV)");
  ev->set_help_flag("--help", "print help");
  ev->add_option("--fused", eo.fused, "fused image, repeatable")->required();
  ev->add_option("--truth", eo.truth, "reference for full reference scores");
  ev->add_option("--pan", eo.pan, "pan for no reference scores");
  ev->add_option("--lowres", eo.lowres, "low resolution bands for no reference scores");
  ev->add_option("--factor", eo.factor, "resolution ratio (default 4)");
  ev->add_option("--sigma", eo.sigma, "pan degradation sigma for D_s (default 1.3)");
  ev->add_option("--kernel-radius", eo.kernel_radius, "blur kernel radius (0 = auto)");
  ev->add_option("--output", eo.output, "CSV path (default stdout)");
  ev->add_option("--diff", eo.diff, "difference visualization image (needs --truth)");

  WeightsOpts wo;
  CLI::App* wd = app.add_subcommand("weights-dump",
                                    "Dump one pixel's similarity window as CSV");
  wd->set_help_flag("--help", "print help");
  wd->add_option("--pan", wo.pan, "panchromatic image")->required();
  wd->add_option("--row", wo.row, "pixel row")->required();
  wd->add_option("--col", wo.col, "pixel column")->required();
  wd->add_option("--h", wo.h, "similarity bandwidth (default 1.25)");
  wd->add_option("--search-radius", wo.search_radius, "window radius (default 3)");
  wd->add_option("--patch-radius", wo.patch_radius, "patch radius (default 1)");
  wd->add_flag("--self-after-norm", wo.self_after_norm,
               "set the central weight after normalization");
  wd->add_option("--output", wo.output, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(sim)) return run_simulate(so);
    if (app.got_subcommand(fuse)) return run_fuse(fo);
    if (app.got_subcommand(ev)) return run_eval(eo);
    if (app.got_subcommand(wd)) return run_weights_dump(wo);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
