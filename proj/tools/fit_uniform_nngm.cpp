// Fits an L-component Gaussian mixture to the uniform density on [0, 1] by
// weighted EM on a fine grid and prints the resulting weights, locations, and
// scales. The L = 3 output is frozen as the mixture initialization table in
// include/gampkit/em.hpp; rerun this tool to regenerate it.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace {

struct Fit {
  std::vector<double> omega, theta, phi;
};

Fit fit_uniform(int comps, int grid, int iters) {
  std::vector<double> x(grid);
  for (int j = 0; j < grid; ++j) x[j] = (j + 0.5) / grid;
  Fit f;
  f.omega.assign(comps, 1.0 / comps);
  f.theta.resize(comps);
  f.phi.assign(comps, 1.0 / (12.0 * comps * comps));
  for (int k = 0; k < comps; ++k) f.theta[k] = (k + 0.5) / comps;

  std::vector<double> resp(comps);
  for (int it = 0; it < iters; ++it) {
    std::vector<double> nk(comps, 0.0), sx(comps, 0.0), sxx(comps, 0.0);
    for (int j = 0; j < grid; ++j) {
      double total = 0.0;
      for (int k = 0; k < comps; ++k) {
        const double d = x[j] - f.theta[k];
        resp[k] = f.omega[k] / std::sqrt(f.phi[k]) *
                  std::exp(-0.5 * d * d / f.phi[k]);
        total += resp[k];
      }
      for (int k = 0; k < comps; ++k) {
        const double r = resp[k] / total;
        nk[k] += r;
        sx[k] += r * x[j];
        sxx[k] += r * x[j] * x[j];
      }
    }
    double change = 0.0;
    for (int k = 0; k < comps; ++k) {
      const double om = nk[k] / grid;
      const double th = sx[k] / nk[k];
      const double ph = sxx[k] / nk[k] - th * th;
      change = std::max(change, std::fabs(om - f.omega[k]));
      change = std::max(change, std::fabs(th - f.theta[k]));
      change = std::max(change, std::fabs(ph - f.phi[k]));
      f.omega[k] = om;
      f.theta[k] = th;
      f.phi[k] = ph;
    }
    if (change < 1e-14) break;
  }
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  const int comps = argc > 1 ? std::atoi(argv[1]) : 3;
  if (comps < 1) {
    std::fprintf(stderr, "usage: %s [components]\n", argv[0]);
    return 2;
  }
  const Fit f = fit_uniform(comps, 4000, 200000);
  std::printf("// %d-component fit to the uniform density on [0, 1]\n", comps);
  std::printf("omega:");
  for (double v : f.omega) std::printf(" %.17g", v);
  std::printf("\ntheta:");
  for (double v : f.theta) std::printf(" %.17g", v);
  std::printf("\nphi:  ");
  for (double v : f.phi) std::printf(" %.17g", v);
  std::printf("\n");
  return 0;
}
