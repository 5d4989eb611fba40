#pragma once

// Perron-Frobenius operator of the binary-digit shift on T^s acting on
// Fourier spectra (T halves frequencies: coefficient at q becomes a_{2q}),
// orbit-sum membership tests, and the domination and Sobolev bounds.

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shiftmc/gordin_criteria.hpp"

namespace shiftmc {

using Frequency = std::vector<std::int64_t>;

/// a_{2^n q} = c0 r^n along the orbit of an odd root q; with `mirrored` the
/// orbit of -q carries the conjugates, so the family is real.
struct GeometricOrbitFamily {
  Frequency root;
  std::complex<double> c0;
  std::complex<double> ratio;
  bool mirrored = true;
};

/// s = 1, a_m = c |m|^{-p} for every m != 0 (p > 1/2 for L^2).
struct PowerLawFamily {
  double c = 1.0;
  double p = 1.0;
};

struct FourierObservable {
  int s = 1;
  double mean = 0.0;
  std::map<Frequency, std::complex<double>> coeffs;  // finite part, m != 0
  std::vector<GeometricOrbitFamily> geometric;
  std::optional<PowerLawFamily> power;

  bool finite_support() const noexcept { return geometric.empty() && !power; }
  /// Coefficient a_m (m = 0 gives the mean).
  std::complex<double> coefficient(const Frequency& m) const;
  /// f(y), real part of the Fourier series. Finite support only.
  double evaluate(const std::vector<double>& y) const;
  /// ||f - E f||_{L^2} by Parseval (closed form for families).
  double centered_norm() const;
};

/// Real trigonometric term amplitude * cos(2 pi <m, y>) added as a_{+-m} = amplitude / 2.
void add_cosine(FourierObservable& f, const Frequency& m, double amplitude);
void add_sine(FourierObservable& f, const Frequency& m, double amplitude);

std::string to_json(const FourierObservable& f);
FourierObservable fourier_from_json(const std::string& text);

/// Root of the dyadic orbit containing m: m / 2^j with some odd coordinate.
Frequency orbit_root(const Frequency& m);
/// Largest j with m / 2^j integral.
int orbit_depth(const Frequency& m);

/// T^n f: output coefficient at q is a_{2^n q}.
FourierObservable pf_apply_fourier(const FourierObservable& f, int n);

/// T^n f(y) = 2^{-ns} sum_{k in {0..2^n-1}^s} f(k/2^n + y/2^n). Refuses
/// n s > max_log2_points.
double pf_apply_grid(const std::function<double(const std::vector<double>&)>& f, int s, int n,
                     const std::vector<double>& y, int max_log2_points = 24);

struct OrbitSums {
  Frequency root;
  std::vector<std::complex<double>> partial_sums;  // N = 0 .. horizon
  std::complex<double> limit;                      // b_root
};

struct OrbitReport {
  std::vector<OrbitSums> orbits;  // one per root with nonzero coefficients
  double total_roots = 0.0;       // sum over roots of |b_q|^2 = ||g~||^2
  double total_all = 0.0;         // sum over every q != 0 of |b_q|^2
  double sup_over_n = 0.0;        // sup_N sum_{q != 0} |sum_{n<=N} a_{2^n q}|^2
};

struct FourierGordinResult {
  GordinReport report;
  OrbitReport orbits;
};

/// Orbit-sum membership test. The report's bound is sqrt(total_roots), which
/// equals ||g~|| since ||g~||^2 = ||g||^2 - ||Tg||^2; sqrt(total_all) is the
/// looser all-frequency bound, carried in the evidence vector as
/// {sup_over_n, total_all, total_roots}.
FourierGordinResult gordin_check_fourier(const FourierObservable& f, int horizon);

class DominationError : public std::domain_error {
 public:
  DominationError(int n, Frequency m, const std::string& what)
      : std::domain_error(what), n_(n), m_(std::move(m)) {}
  int n() const noexcept { return n_; }
  const Frequency& m() const noexcept { return m_; }

 private:
  int n_;
  Frequency m_;
};

/// ||f - E f|| sum_n c_n after checking |a_{2^n m}| <= c_n |a_m| on the
/// finite support (or in closed form for families). Returns +inf when the
/// series sum_n c_n is not certified finite.
double corollary10_bound(const FourierObservable& f, const NormSequence& c);

/// (sum_p |a_p|^2 |p|^{2 alpha})^{1/2}; +inf when a family falls outside H^alpha.
double sobolev_norm(const FourierObservable& f, double alpha);

}  // namespace shiftmc
