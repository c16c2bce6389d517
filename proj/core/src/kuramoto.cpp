#include "akorn/kuramoto.hpp"

#include <algorithm>
#include <cmath>

namespace akorn {

Var project(const Var& x, const Var& y) {
  return sub(y, rows_scale(x, rows_dot(y, x)));
}

Var Omega::apply(const Var& x) const {
  detail::require(has(), "Omega::apply on an empty term");
  if (per_channel) return channel_matvec(mat, x);
  // rows transform as x_i -> Omega x_i, i.e. X -> X Omega^T
  const Shape orig = x.shape();
  int64_t n = mat.value().dim(0);
  Var flat = reshape(x, {x.value().numel() / n, n});
  return reshape(matmul_nt(flat, mat), orig);
}

Var kuramoto_step(const Var& x, const Var& drive, const Omega& omega, const Var& gamma) {
  detail::require(x.shape() == drive.shape(),
                  "kuramoto_step: state and drive shapes differ, " +
                      shape_str(x.shape()) + " vs " + shape_str(drive.shape()));
  Var delta = project(x, drive);
  if (omega.has()) delta = add(omega.apply(x), delta);
  return normalize(add(x, scalar_mul(gamma, delta)));
}

Var kuramoto_step(const Var& x, const Var& drive, const Omega& omega, double gamma) {
  detail::require(gamma > 0.0, "kuramoto_step: gamma must be positive");
  return kuramoto_step(x, drive, omega, Var(Tensor::scalar(gamma)));
}

Var energy(const Var& x, const Var& coupling_drive, const Var& stimulus) {
  Var quad = scale(sum(rows_dot(x, coupling_drive)), -0.5);
  return sub(quad, sum(rows_dot(stimulus, x)));
}

double energy_value(const Tensor& x, const Tensor& coupling_drive, const Tensor& stimulus) {
  detail::require(x.numel() == coupling_drive.numel() && x.numel() == stimulus.numel(),
                  "energy_value: size mismatch");
  const double* px = x.data();
  const double* pd = coupling_drive.data();
  const double* pc = stimulus.data();
  double quad = 0.0, lin = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    quad += px[i] * pd[i];
    lin += pc[i] * px[i];
  }
  return -0.5 * quad - lin;
}

RolloutResult rollout(const Var& x0, const std::function<Var(const Var&)>& coupling,
                      const Var& stimulus, const Omega& omega, const Var& gamma,
                      int64_t steps, bool record_energy) {
  detail::require(steps >= 0, "rollout: negative step count");
  RolloutResult out;
  out.states.reserve(static_cast<size_t>(steps) + 1);
  out.states.push_back(x0);
  Var x = x0;
  for (int64_t t = 0; t < steps; ++t) {
    Var cdrive = coupling(x);
    if (record_energy)
      out.energies.push_back(energy_value(x.value(), cdrive.value(), stimulus.value()));
    x = kuramoto_step(x, add(cdrive, stimulus), omega, gamma);
    out.states.push_back(x);
  }
  return out;
}

std::vector<double> scalar_kuramoto_step(const std::vector<double>& theta,
                                         const Tensor& coupling,
                                         const std::vector<double>& omega, double gamma) {
  int64_t c = static_cast<int64_t>(theta.size());
  detail::require(coupling.ndim() == 2 && coupling.dim(0) == c && coupling.dim(1) == c,
                  "scalar_kuramoto_step: coupling must be [C,C]");
  detail::require(omega.size() == theta.size(), "scalar_kuramoto_step: omega size mismatch");
  std::vector<double> out(theta.size());
  for (int64_t i = 0; i < c; ++i) {
    double acc = omega[static_cast<size_t>(i)];
    for (int64_t j = 0; j < c; ++j)
      acc += coupling[i * c + j] * std::sin(theta[static_cast<size_t>(j)] -
                                            theta[static_cast<size_t>(i)]);
    out[static_cast<size_t>(i)] = theta[static_cast<size_t>(i)] + gamma * acc;
  }
  return out;
}

double max_unit_norm_deviation(const Tensor& x) {
  int64_t n = x.dim(-1);
  int64_t rows = x.numel() / n;
  double worst = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (int64_t j = 0; j < n; ++j) ss += x[r * n + j] * x[r * n + j];
    worst = std::max(worst, std::fabs(std::sqrt(ss) - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// energy-descent harness

namespace {

// smallest eigenvalue of a symmetric matrix via cyclic Jacobi sweeps
double min_eigenvalue_sym(Tensor a) {
  int64_t n = a.dim(0);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int64_t p = 0; p < n; ++p)
      for (int64_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (int64_t p = 0; p < n; ++p)
      for (int64_t q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::fabs(apq) < 1e-300) continue;
        double app = a[p * n + p], aqq = a[q * n + q];
        double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
        double c = std::cos(phi), s = std::sin(phi);
        for (int64_t k = 0; k < n; ++k) {
          double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int64_t k = 0; k < n; ++k) {
          double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  double mn = a[0];
  for (int64_t i = 1; i < n; ++i) mn = std::min(mn, a[i * n + i]);
  return mn;
}

// dense [C*N, C*N] forms of a scalar coupling (k (x) I) and a block-diagonal
// natural frequency (I (x) B)
Tensor kron_coupling(const Tensor& k, int64_t n) {
  int64_t c = k.dim(0);
  Tensor big(Shape{c * n, c * n});
  for (int64_t i = 0; i < c; ++i)
    for (int64_t j = 0; j < c; ++j)
      for (int64_t d = 0; d < n; ++d)
        big[(i * n + d) * c * n + (j * n + d)] = k[i * c + j];
  return big;
}

Tensor kron_omega(const Tensor& b, int64_t c) {
  int64_t n = b.dim(0);
  Tensor big(Shape{c * n, c * n});
  for (int64_t i = 0; i < c; ++i)
    for (int64_t p = 0; p < n; ++p)
      for (int64_t q = 0; q < n; ++q)
        big[(i * n + p) * c * n + (i * n + q)] = b[p * n + q];
  return big;
}

Tensor commutator(const Tensor& a, const Tensor& b) {
  int64_t n = a.dim(0);
  Tensor out(Shape{n, n});
  detail::gemm(false, false, n, n, n, 1.0, a.data(), n, b.data(), n, 0.0, out.data(), n);
  detail::gemm(false, false, n, n, n, -1.0, b.data(), n, a.data(), n, 1.0, out.data(), n);
  return out;
}

}  // namespace

LyapunovReport lyapunov_check(const LyapunovConfig& cfg) {
  detail::require(cfg.n >= 2, "lyapunov_check: n must be >= 2");
  detail::require(cfg.oscillators >= 2, "lyapunov_check: need at least two oscillators");
  LyapunovReport rep;
  rep.max_increase = -1e300;
  const int64_t c = cfg.oscillators, n = cfg.n;

  for (int64_t s = 0; s < cfg.seeds; ++s) {
    Rng rng = Rng(cfg.seed0).child(0xdecafull, static_cast<uint64_t>(s));

    // coupling
    Tensor k(Shape{c, c});
    const double scale_sym = 1.0 / static_cast<double>(c);
    for (int64_t i = 0; i < c; ++i)
      for (int64_t j = i + 1; j < c; ++j) {
        double g = rng.gaussian();
        double v;
        switch (cfg.kind) {
          case LyapunovConfig::Case::symmetric_shared:
          case LyapunovConfig::Case::commuting_blocks:
            v = std::fabs(g) * scale_sym;  // attractive couplings anchor a fixed point
            break;
          case LyapunovConfig::Case::asymmetric_control:
            v = g * 2.0 / std::sqrt(static_cast<double>(c));
            break;
        }
        k[i * c + j] = v;
        if (cfg.kind == LyapunovConfig::Case::asymmetric_control)
          k[j * c + i] = rng.gaussian() * 2.0 / std::sqrt(static_cast<double>(c));
        else
          k[j * c + i] = v;
      }

    // shared antisymmetric Omega rotating the trailing coordinate pair only,
    // so stimuli placed in the leading coordinates satisfy Omega c = 0
    Tensor omega_b(Shape{n, n});
    double w = rng.uniform(0.1, 0.5);
    omega_b[(n - 2) * n + (n - 1)] = -w;
    omega_b[(n - 1) * n + (n - 2)] = w;

    Tensor stim(Shape{c, n});
    for (int64_t i = 0; i < c; ++i) {
      double a0 = rng.gaussian(), a1 = rng.gaussian();
      double nn = std::hypot(a0, a1);
      if (nn < 1e-12) {
        a0 = 1.0;
        a1 = 0.0;
        nn = 1.0;
      }
      stim[i * n + 0] = a0 / nn;
      stim[i * n + 1] = a1 / nn;
    }

    Tensor x = rng.sphere_tensor({c, n});
    Var k_v{k}, stim_v{stim};
    Omega om(Var(omega_b), false);

    double prev = 0.0;
    for (int64_t t = 0; t <= cfg.steps; ++t) {
      Var xv{x};
      Tensor drive = matmul(k_v, xv).value();
      double e = energy_value(x, drive, stim);
      if (t > 0) {
        double delta = e - prev;
        rep.max_increase = std::max(rep.max_increase, delta);
        if (delta > cfg.tolerance) ++rep.violations;
      }
      prev = e;
      if (t < cfg.steps)
        x = kuramoto_step(xv, add(Var(drive), stim_v), om, cfg.gamma).value().clone();
    }

    if (s == 0) {
      Tensor jb = kron_coupling(k, n);
      Tensor ob = kron_omega(omega_b, c);
      Tensor comm = commutator(jb, ob);
      double fro = 0.0;
      for (int64_t i = 0; i < comm.numel(); ++i) fro += comm[i] * comm[i];
      rep.commutator_fro = std::sqrt(fro);
      // the commutator of a symmetric and an antisymmetric matrix is symmetric
      rep.commutator_min_eig = min_eigenvalue_sym(comm);
    }
  }
  rep.monotone = rep.violations == 0;
  return rep;
}

}  // namespace akorn
