#pragma once

#include <cmath>
#include <exception>
#include <optional>
#include <vector>

#include "pansharp/image.hpp"
#include "pansharp/nonlocal.hpp"
#include "pansharp/parallel.hpp"
#include "pansharp/sampling.hpp"

namespace pansharp {

struct solver_divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double mu = 50.0;       // data fidelity weight, enters as mu * factor^2
  double delta = 6.21;    // radiometric constraint weight
  double tau = 0.0;       // 0 selects the certified step 1/L
  int max_iterations = 500;
  double tolerance = 1e-6;  // RMS change between iterates
  NonlocalConfig weights;
  BlurSpec blur;
  SamplingSpec sampling;
  int threads = 0;          // 0 = PANSHARP_THREADS or hardware count
};

inline void validate(const SolverConfig& cfg) {
  require(cfg.mu >= 0.0, "SolverConfig: mu must be nonnegative");
  require(cfg.delta >= 0.0, "SolverConfig: delta must be nonnegative");
  require(cfg.tau >= 0.0, "SolverConfig: tau must be nonnegative");
  require(cfg.max_iterations >= 1, "SolverConfig: max_iterations must be positive");
  require(cfg.tolerance > 0.0, "SolverConfig: tolerance must be positive");
  validate(cfg.weights);
  validate(cfg.sampling);
}

// Everything the per band functional needs, precomputed once.
struct BandProblem {
  PanImage pan;      // P_k on the fused grid
  Image lowres;      // u_k^S
  Image pan_low;     // Ptilde_k = bicubic_upsample(blur_downsample(P_k))
  Image upsampled;   // utilde_k = bicubic_upsample(u_k^S)
  Image replicated;  // u_k^Omega, replication extension of u_k^S
  Kernel1D kernel;   // sampled Gaussian of the formation model
  double pan_norm = 0.0;  // root mean square of P_k
};

inline BandProblem make_band_problem(const PanImage& pan, const Image& lowres,
                                     const BlurSpec& blur, const SamplingSpec& sampling) {
  require(pan.bands() == 1 && lowres.bands() == 1,
          "make_band_problem: pan and lowres must be single band");
  validate(sampling);
  require(pan.width() == lowres.width() * sampling.factor &&
              pan.height() == lowres.height() * sampling.factor,
          "make_band_problem: pan and lowres sizes disagree with the factor");
  BandProblem prob;
  prob.pan = pan;
  prob.lowres = lowres;
  prob.kernel = gaussian_kernel(blur);
  prob.pan_low = bicubic_upsample(blur_downsample(pan, blur, sampling), sampling.factor);
  prob.upsampled = bicubic_upsample(lowres, sampling.factor);
  prob.replicated = replicate_upsample(lowres, sampling.factor);
  double ms = 0.0;
  for (double v : pan.samples()) ms += v * v;
  prob.pan_norm = std::sqrt(ms / static_cast<double>(pan.samples().size()));
  require(prob.pan_norm > 0.0, "make_band_problem: pan has zero norm");
  return prob;
}

namespace detail {

inline Image forward_model(const Image& u, const BandProblem& prob, const SolverConfig& cfg) {
  return decimate(convolve(u, prob.kernel), cfg.sampling);
}

}  // namespace detail

// Band decoupled functional
//   F(u) = 1/2 sum_{p,q} (u(q) - u(p))^2 w(p,q)
//        + (mu s^2 / 2) sum_lowres (K u - u^S)^2
//        + (delta / (2 |P|^2)) sum_p (u Ptilde - utilde P)^2.
inline double nlvd_energy(const Image& u, const BandProblem& prob, const WeightField& field,
                          const SolverConfig& cfg) {
  double e = nonlocal_energy(field, u);

  Image bd = detail::forward_model(u, prob, cfg);
  double data = 0.0;
  for (std::size_t i = 0; i < bd.samples().size(); ++i) {
    double d = bd.samples()[i] - prob.lowres.samples()[i];
    data += d * d;
  }
  double s2 = static_cast<double>(cfg.sampling.factor) * cfg.sampling.factor;
  e += 0.5 * cfg.mu * s2 * data;

  double radio = 0.0;
  for (std::size_t i = 0; i < u.samples().size(); ++i) {
    double d = u.samples()[i] * prob.pan_low.samples()[i] -
               prob.upsampled.samples()[i] * prob.pan.samples()[i];
    radio += d * d;
  }
  e += 0.5 * cfg.delta / (prob.pan_norm * prob.pan_norm) * radio;
  return e;
}

inline Image nlvd_gradient(const Image& u, const BandProblem& prob, const WeightField& field,
                           const SolverConfig& cfg) {
  Image g = apply_nonlocal_operator(field, u);

  Image resid = detail::forward_model(u, prob, cfg);
  for (std::size_t i = 0; i < resid.samples().size(); ++i)
    resid.samples()[i] -= prob.lowres.samples()[i];
  Image back = convolve_adjoint(zero_fill_upsample(resid, cfg.sampling), prob.kernel);
  double s2 = static_cast<double>(cfg.sampling.factor) * cfg.sampling.factor;
  double dn = cfg.delta / (prob.pan_norm * prob.pan_norm);
  for (std::size_t i = 0; i < g.samples().size(); ++i) {
    g.samples()[i] += cfg.mu * s2 * back.samples()[i];
    double r = u.samples()[i] * prob.pan_low.samples()[i] -
               prob.upsampled.samples()[i] * prob.pan.samples()[i];
    g.samples()[i] += dn * r * prob.pan_low.samples()[i];
  }
  return g;
}

// Certified descent step 1/L with
//   L = 4 + mu s^2 |kappa|_1^2 + (delta / |P|^2) max_p Ptilde(p)^2,
// where 4 bounds the symmetrized row stochastic nonlocal operator and
// |kappa|_1 is the l1 mass of the 2D kernel.
inline double auto_step_size(const BandProblem& prob, const SolverConfig& cfg) {
  double k1 = prob.kernel.abs_sum();
  double norm1_2d = k1 * k1;
  double s2 = static_cast<double>(cfg.sampling.factor) * cfg.sampling.factor;
  double max_low2 = 0.0;
  for (double v : prob.pan_low.samples()) max_low2 = std::max(max_low2, v * v);
  double L = 4.0 + cfg.mu * s2 * norm1_2d * norm1_2d +
             cfg.delta / (prob.pan_norm * prob.pan_norm) * max_low2;
  return 1.0 / L;
}

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;
  std::vector<double> energy_trace;  // F before the first step, then after each
};

// Explicit gradient descent on the band functional. Stops when the RMS
// change between iterates drops below the tolerance, hard capped at
// max_iterations. Two consecutive energy increases abort: the quadratic
// functional is convex, so they can only mean the step is too large.
inline Image solve_nlvd_band(const BandProblem& prob, const WeightField& field,
                             const SolverConfig& cfg, const Image* init = nullptr,
                             SolveReport* report = nullptr) {
  validate(cfg);
  Image u = init ? *init : prob.upsampled;
  require(u.same_shape(prob.upsampled), "solve_nlvd_band: init has the wrong shape");
  double tau = cfg.tau > 0.0 ? cfg.tau : auto_step_size(prob, cfg);

  SolveReport rep;
  rep.energy_trace.push_back(nlvd_energy(u, prob, field, cfg));
  std::size_t n = u.samples().size();
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Image g = nlvd_gradient(u, prob, field, cfg);
    double change2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double step = tau * g.samples()[i];
      u.samples()[i] -= step;
      change2 += step * step;
    }
    rep.iterations = it;
    rep.final_change = std::sqrt(change2 / static_cast<double>(n));
    rep.energy_trace.push_back(nlvd_energy(u, prob, field, cfg));
    std::size_t m = rep.energy_trace.size();
    if (m >= 3 && rep.energy_trace[m - 1] > rep.energy_trace[m - 2] &&
        rep.energy_trace[m - 2] > rep.energy_trace[m - 3])
      throw solver_divergence_error("energy increased twice in a row; step size too large");
    if (rep.final_change < cfg.tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (report) *report = rep;
  return u;
}

// Full multispectral product: each band solved independently against its own
// panchromatic (identical copies when the data is co-registered). Bands run
// in parallel; each writes only its own plane.
inline Image pansharpen_nlvd(const std::vector<PanImage>& pans, const Image& lowres,
                             const SolverConfig& cfg,
                             std::vector<SolveReport>* reports = nullptr) {
  int C = lowres.bands();
  require(static_cast<int>(pans.size()) == C, "pansharpen_nlvd: one pan per band expected");
  int s = cfg.sampling.factor;
  Image out(lowres.width() * s, lowres.height() * s, C);
  std::vector<SolveReport> reps(C);
  std::vector<std::exception_ptr> errors(C);
  parallel_for(C, cfg.threads, [&](int k) {
    try {
      BandProblem prob = make_band_problem(pans[k], extract_band(lowres, k), cfg.blur,
                                           cfg.sampling);
      WeightField field = compute_weights(pans[k], cfg.weights);
      Image u = solve_nlvd_band(prob, field, cfg, nullptr, &reps[k]);
      insert_band(out, u, k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  if (reports) *reports = std::move(reps);
  return out;
}

inline Image pansharpen_nlvd(const PanImage& pan, const Image& lowres, const SolverConfig& cfg,
                             std::vector<SolveReport>* reports = nullptr) {
  return pansharpen_nlvd(std::vector<PanImage>(lowres.bands(), pan), lowres, cfg, reports);
}

// Misregistered inputs, four step procedure: express the pan in each band's
// geometry, compute that band's weights and solution there, then superimpose
// everything back onto the common pan geometry.
inline Image pansharpen_nlvd_misregistered(const PanImage& pan, const Image& lowres,
                                           const std::vector<BandShift>& shifts,
                                           const SolverConfig& cfg,
                                           std::vector<SolveReport>* reports = nullptr) {
  int C = lowres.bands();
  require(static_cast<int>(shifts.size()) == C,
          "pansharpen_nlvd_misregistered: one shift per band expected");
  std::vector<PanImage> pans;
  pans.reserve(C);
  for (int k = 0; k < C; ++k)
    pans.push_back(bicubic_translate(pan, shifts[k].dx, shifts[k].dy));
  Image fused = pansharpen_nlvd(pans, lowres, cfg, reports);
  Image out(fused.width(), fused.height(), C);
  for (int k = 0; k < C; ++k) {
    Image back = bicubic_translate(extract_band(fused, k), -shifts[k].dx, -shifts[k].dy);
    insert_band(out, back, k);
  }
  return out;
}

// Coupled model with an explicit pan synthesis constraint instead of the per
// band radiometric term:
//   J(u) = sum_k 1/2 sum_{p,q} (u_k(q) - u_k(p))^2 w(p,q)
//        + (lambda/2) sum_p (sum_k alpha_k u_k - P)^2
//        + (mu/2) sum_k sum_lowres (K u_k - u_k^S)^2.
// Needs co-registered data; the weights are computed once on the shared pan.
struct NlvConfig {
  double lambda = 1.0;
  double mu = 800.0;  // plays the role of mu s^2 of the decoupled model
  std::vector<double> alphas;
  double tau = 0.0;
  int max_iterations = 500;
  double tolerance = 1e-6;
  NonlocalConfig weights;
  BlurSpec blur;
  SamplingSpec sampling;
};

inline void validate_alphas(const std::vector<double>& alphas, int bands) {
  require(static_cast<int>(alphas.size()) == bands, "alphas: one weight per band expected");
  double sum = 0.0;
  for (double a : alphas) {
    require(a >= 0.0, "alphas: weights must be nonnegative");
    sum += a;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, "alphas: weights must sum to one");
}

inline double nlv_energy(const Image& u, const PanImage& pan, const Image& lowres,
                         const WeightField& field, const Kernel1D& kernel,
                         const NlvConfig& cfg) {
  int C = u.bands();
  double e = 0.0;
  for (int k = 0; k < C; ++k) e += nonlocal_energy(field, extract_band(u, k));

  double mix = 0.0;
  for (std::size_t i = 0; i < u.pixels(); ++i) {
    double m = 0.0;
    for (int k = 0; k < C; ++k) m += cfg.alphas[k] * u.samples()[k * u.pixels() + i];
    double d = m - pan.samples()[i];
    mix += d * d;
  }
  e += 0.5 * cfg.lambda * mix;

  Image bd = decimate(convolve(u, kernel), cfg.sampling);
  double data = 0.0;
  for (std::size_t i = 0; i < bd.samples().size(); ++i) {
    double d = bd.samples()[i] - lowres.samples()[i];
    data += d * d;
  }
  e += 0.5 * cfg.mu * data;
  return e;
}

inline Image nlv_gradient(const Image& u, const PanImage& pan, const Image& lowres,
                          const WeightField& field, const Kernel1D& kernel,
                          const NlvConfig& cfg) {
  int C = u.bands();
  Image g(u.width(), u.height(), C);
  for (int k = 0; k < C; ++k)
    insert_band(g, apply_nonlocal_operator(field, extract_band(u, k)), k);

  std::vector<double> mix(u.pixels());
  for (std::size_t i = 0; i < u.pixels(); ++i) {
    double m = 0.0;
    for (int k = 0; k < C; ++k) m += cfg.alphas[k] * u.samples()[k * u.pixels() + i];
    mix[i] = m - pan.samples()[i];
  }
  Image resid = decimate(convolve(u, kernel), cfg.sampling);
  for (std::size_t i = 0; i < resid.samples().size(); ++i)
    resid.samples()[i] -= lowres.samples()[i];
  Image back = convolve_adjoint(zero_fill_upsample(resid, cfg.sampling), kernel);
  for (int k = 0; k < C; ++k)
    for (std::size_t i = 0; i < u.pixels(); ++i)
      g.samples()[k * u.pixels() + i] +=
          cfg.lambda * cfg.alphas[k] * mix[i] + cfg.mu * back.samples()[k * u.pixels() + i];
  return g;
}

inline Image solve_nlv(const PanImage& pan, const Image& lowres, const NlvConfig& cfg,
                       SolveReport* report = nullptr) {
  require(pan.bands() == 1, "solve_nlv: pan must be single band");
  require(cfg.lambda >= 0.0 && cfg.mu >= 0.0, "solve_nlv: weights must be nonnegative");
  require(cfg.tau >= 0.0, "solve_nlv: tau must be nonnegative");
  require(cfg.max_iterations >= 1 && cfg.tolerance > 0.0, "solve_nlv: bad stopping parameters");
  validate(cfg.weights);
  validate(cfg.sampling);
  require(pan.width() == lowres.width() * cfg.sampling.factor &&
              pan.height() == lowres.height() * cfg.sampling.factor,
          "solve_nlv: pan and lowres sizes disagree with the factor");
  validate_alphas(cfg.alphas, lowres.bands());

  Kernel1D kernel = gaussian_kernel(cfg.blur);
  WeightField field = compute_weights(pan, cfg.weights);
  Image u = bicubic_upsample(lowres, cfg.sampling.factor);

  double tau = cfg.tau;
  if (tau <= 0.0) {
    double k1 = kernel.abs_sum();
    double a2 = 0.0;
    for (double a : cfg.alphas) a2 += a * a;
    tau = 1.0 / (4.0 + cfg.mu * k1 * k1 * k1 * k1 + cfg.lambda * a2);
  }

  SolveReport rep;
  rep.energy_trace.push_back(nlv_energy(u, pan, lowres, field, kernel, cfg));
  std::size_t n = u.samples().size();
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Image g = nlv_gradient(u, pan, lowres, field, kernel, cfg);
    double change2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double step = tau * g.samples()[i];
      u.samples()[i] -= step;
      change2 += step * step;
    }
    rep.iterations = it;
    rep.final_change = std::sqrt(change2 / static_cast<double>(n));
    rep.energy_trace.push_back(nlv_energy(u, pan, lowres, field, kernel, cfg));
    std::size_t m = rep.energy_trace.size();
    if (m >= 3 && rep.energy_trace[m - 1] > rep.energy_trace[m - 2] &&
        rep.energy_trace[m - 2] > rep.energy_trace[m - 3])
      throw solver_divergence_error("energy increased twice in a row; step size too large");
    if (rep.final_change < cfg.tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (report) *report = rep;
  return u;
}

}  // namespace pansharp
