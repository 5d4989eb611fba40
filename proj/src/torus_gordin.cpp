#include "shiftmc/torus_gordin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace shiftmc {
namespace {

using nlohmann::json;
using cplx = std::complex<double>;

Frequency negate(Frequency m) {
  for (auto& v : m) v = -v;
  return m;
}

bool is_zero_frequency(const Frequency& m) {
  return std::all_of(m.begin(), m.end(), [](std::int64_t v) { return v == 0; });
}

double squared_length(const Frequency& m) {
  double sum = 0.0;
  for (auto v : m) sum += static_cast<double>(v) * static_cast<double>(v);
  return sum;
}

void check_frequency(const FourierObservable& f, const Frequency& m) {
  if (static_cast<int>(m.size()) != f.s) throw std::invalid_argument("fourier: frequency has the wrong dimension");
}

void check_family(const FourierObservable& f, const GeometricOrbitFamily& fam) {
  check_frequency(f, fam.root);
  if (is_zero_frequency(fam.root) || orbit_root(fam.root) != fam.root)
    throw std::invalid_argument("fourier: geometric family root must have an odd coordinate");
  if (!(std::abs(fam.ratio) < 1.0)) throw std::domain_error("fourier: geometric family with |r| >= 1 is not in L^2");
}

void check_power(const FourierObservable& f) {
  if (f.s != 1) throw std::invalid_argument("fourier: power-law family is one-dimensional");
  if (!(f.power->p > 0.5)) throw std::domain_error("fourier: power-law family needs p > 1/2 to be in L^2");
}

// Dyadic orbits grouped by root: position j holds a_{2^j root}.
std::map<Frequency, std::vector<cplx>> group_orbits(const std::map<Frequency, cplx>& coeffs) {
  std::map<Frequency, std::vector<cplx>> orbits;
  for (const auto& [m, a] : coeffs) {
    if (a == cplx{}) continue;
    const int j = orbit_depth(m);
    auto& chain = orbits[orbit_root(m)];
    if (static_cast<int>(chain.size()) <= j) chain.resize(static_cast<std::size_t>(j) + 1);
    chain[static_cast<std::size_t>(j)] += a;
  }
  return orbits;
}

}  // namespace

Frequency orbit_root(const Frequency& m) {
  if (is_zero_frequency(m)) throw std::invalid_argument("orbit_root: zero frequency has no orbit");
  Frequency q = m;
  while (std::all_of(q.begin(), q.end(), [](std::int64_t v) { return v % 2 == 0; })) {
    for (auto& v : q) v /= 2;
  }
  return q;
}

int orbit_depth(const Frequency& m) {
  if (is_zero_frequency(m)) throw std::invalid_argument("orbit_depth: zero frequency has no orbit");
  int j = 0;
  Frequency q = m;
  while (std::all_of(q.begin(), q.end(), [](std::int64_t v) { return v % 2 == 0; })) {
    for (auto& v : q) v /= 2;
    ++j;
  }
  return j;
}

std::complex<double> FourierObservable::coefficient(const Frequency& m) const {
  check_frequency(*this, m);
  if (is_zero_frequency(m)) return mean;
  cplx a{};
  if (auto it = coeffs.find(m); it != coeffs.end()) a += it->second;
  if (!geometric.empty()) {
    const auto root = orbit_root(m);
    const int j = orbit_depth(m);
    for (const auto& fam : geometric) {
      if (root == fam.root) a += fam.c0 * std::pow(fam.ratio, j);
      if (fam.mirrored && root == negate(fam.root)) a += std::conj(fam.c0 * std::pow(fam.ratio, j));
    }
  }
  if (power) a += power->c * std::pow(std::fabs(static_cast<double>(m[0])), -power->p);
  return a;
}

double FourierObservable::evaluate(const std::vector<double>& y) const {
  if (!finite_support()) throw std::invalid_argument("evaluate: closed-form families cannot be summed pointwise");
  if (static_cast<int>(y.size()) != s) throw std::invalid_argument("evaluate: point has the wrong dimension");
  double value = mean;
  for (const auto& [m, a] : coeffs) {
    double phase = 0.0;
    for (int i = 0; i < s; ++i) phase += static_cast<double>(m[static_cast<std::size_t>(i)]) * y[static_cast<std::size_t>(i)];
    // Reduce the phase before multiplying by 2 pi to keep large frequencies accurate.
    phase -= std::floor(phase);
    value += (a * std::polar(1.0, 2.0 * M_PI * phase)).real();
  }
  return value;
}

double FourierObservable::centered_norm() const {
  double sq = 0.0;
  for (const auto& [m, a] : coeffs) sq += std::norm(a);
  for (const auto& fam : geometric) {
    check_family(*this, fam);
    sq += (fam.mirrored ? 2.0 : 1.0) * std::norm(fam.c0) / (1.0 - std::norm(fam.ratio));
  }
  if (power) {
    check_power(*this);
    sq += 2.0 * power->c * power->c * std::riemann_zeta(2.0 * power->p);
  }
  return std::sqrt(sq);
}

void add_cosine(FourierObservable& f, const Frequency& m, double amplitude) {
  check_frequency(f, m);
  if (is_zero_frequency(m)) {
    f.mean += amplitude;
    return;
  }
  f.coeffs[m] += amplitude / 2.0;
  f.coeffs[negate(m)] += amplitude / 2.0;
}

void add_sine(FourierObservable& f, const Frequency& m, double amplitude) {
  check_frequency(f, m);
  if (is_zero_frequency(m)) return;
  // sin x = (e^{ix} - e^{-ix}) / 2i
  f.coeffs[m] += cplx(0.0, -amplitude / 2.0);
  f.coeffs[negate(m)] += cplx(0.0, amplitude / 2.0);
}

std::string to_json(const FourierObservable& f) {
  json j;
  j["s"] = f.s;
  j["mean"] = f.mean;
  j["coeffs"] = json::array();
  for (const auto& [m, a] : f.coeffs) j["coeffs"].push_back({{"m", m}, {"re", a.real()}, {"im", a.imag()}});
  if (!f.finite_support()) {
    j["families"] = json::array();
    for (const auto& fam : f.geometric)
      j["families"].push_back({{"kind", "geometric"},
                               {"root", fam.root},
                               {"re", fam.c0.real()},
                               {"im", fam.c0.imag()},
                               {"ratio_re", fam.ratio.real()},
                               {"ratio_im", fam.ratio.imag()},
                               {"mirrored", fam.mirrored}});
    if (f.power) j["families"].push_back({{"kind", "power"}, {"c", f.power->c}, {"p", f.power->p}});
  }
  return j.dump();
}

FourierObservable fourier_from_json(const std::string& text) {
  const json j = json::parse(text);
  FourierObservable f;
  f.s = j.at("s").get<int>();
  if (f.s < 1) throw std::invalid_argument("fourier: s must be >= 1");
  f.mean = j.value("mean", 0.0);
  for (const auto& c : j.value("coeffs", json::array())) {
    const auto m = c.at("m").get<Frequency>();
    check_frequency(f, m);
    const cplx a(c.value("re", 0.0), c.value("im", 0.0));
    if (is_zero_frequency(m)) {
      f.mean += a.real();
      continue;
    }
    f.coeffs[m] += a;
  }
  for (const auto& fam : j.value("families", json::array())) {
    const auto kind = fam.at("kind").get<std::string>();
    if (kind == "geometric") {
      GeometricOrbitFamily g{fam.at("root").get<Frequency>(), cplx(fam.value("re", 0.0), fam.value("im", 0.0)),
                             cplx(fam.value("ratio_re", 0.0), fam.value("ratio_im", 0.0)), fam.value("mirrored", true)};
      check_family(f, g);
      f.geometric.push_back(g);
    } else if (kind == "power") {
      f.power = PowerLawFamily{fam.value("c", 1.0), fam.value("p", 1.0)};
      check_power(f);
    } else {
      throw std::invalid_argument("fourier: unknown family kind '" + kind + "'");
    }
  }
  return f;
}

FourierObservable pf_apply_fourier(const FourierObservable& f, int n) {
  if (n < 0) throw std::invalid_argument("pf_apply_fourier: n must be >= 0");
  FourierObservable out;
  out.s = f.s;
  out.mean = f.mean;
  for (const auto& [m, a] : f.coeffs) {
    if (orbit_depth(m) < n) continue;
    Frequency q = m;
    for (auto& v : q) v >>= n;  // exact: every coordinate is divisible by 2^n
    out.coeffs[q] += a;
  }
  for (auto fam : f.geometric) {
    fam.c0 *= std::pow(fam.ratio, n);
    out.geometric.push_back(fam);
  }
  if (f.power) out.power = PowerLawFamily{f.power->c * std::pow(2.0, -n * f.power->p), f.power->p};
  return out;
}

double pf_apply_grid(const std::function<double(const std::vector<double>&)>& f, int s, int n,
                     const std::vector<double>& y, int max_log2_points) {
  if (n < 0 || s < 1) throw std::invalid_argument("pf_apply_grid: need n >= 0 and s >= 1");
  if (static_cast<int>(y.size()) != s) throw std::invalid_argument("pf_apply_grid: point has the wrong dimension");
  if (static_cast<long>(n) * s > max_log2_points)
    throw std::invalid_argument("pf_apply_grid: 2^(n s) evaluations exceed the configured cap");
  const std::uint64_t side = std::uint64_t{1} << n;
  const std::uint64_t total = std::uint64_t{1} << (n * s);
  const double scale = std::ldexp(1.0, -n);
  std::vector<double> point(static_cast<std::size_t>(s));
  double sum = 0.0;
  for (std::uint64_t index = 0; index < total; ++index) {
    std::uint64_t rest = index;
    for (int i = 0; i < s; ++i) {
      const auto k = rest % side;
      rest /= side;
      point[static_cast<std::size_t>(i)] = (static_cast<double>(k) + y[static_cast<std::size_t>(i)]) * scale;
    }
    sum += f(point);
  }
  return sum / static_cast<double>(total);
}

FourierGordinResult gordin_check_fourier(const FourierObservable& f, int horizon) {
  if (horizon < 0) throw std::invalid_argument("gordin_check_fourier: horizon must be >= 0");
  FourierGordinResult result;
  auto& orbits = result.orbits;
  const auto h = static_cast<std::size_t>(horizon);

  if (f.finite_support()) {
    const auto grouped = group_orbits(f.coeffs);
    std::size_t longest = 0;
    for (const auto& [root, chain] : grouped) longest = std::max(longest, chain.size());
    // S(N) = sum_roots sum_i |sum_{j=i}^{i+N} a_j|^2 is constant once N >= longest.
    std::vector<double> totals(std::max(longest, h + 1), 0.0);
    for (const auto& [root, chain] : grouped) {
      const std::size_t len = chain.size();
      std::vector<cplx> prefix(len + 1);
      for (std::size_t j = 0; j < len; ++j) prefix[j + 1] = prefix[j] + chain[j];
      for (std::size_t n = 0; n < totals.size(); ++n) {
        for (std::size_t i = 0; i < len; ++i) totals[n] += std::norm(prefix[std::min(len, i + n + 1)] - prefix[i]);
      }
      OrbitSums sums{root, {}, prefix[len]};
      for (std::size_t n = 0; n <= h; ++n) sums.partial_sums.push_back(prefix[std::min(len, n + 1)]);
      orbits.total_roots += std::norm(prefix[len]);
      for (std::size_t i = 0; i < len; ++i) orbits.total_all += std::norm(prefix[len] - prefix[i]);
      orbits.orbits.push_back(std::move(sums));
    }
    orbits.sup_over_n = totals.empty() ? 0.0 : *std::max_element(totals.begin(), totals.end());
    result.report.note = "finite spectrum: orbit sums are exact";
  } else if (f.coeffs.empty() && !f.power) {
    // Run every orbit to a common N past which r^{N+1} is negligible.
    std::size_t n_max = h;
    for (const auto& fam : f.geometric) {
      check_family(f, fam);
      const double r = std::abs(fam.ratio);
      if (r > 0.0) n_max = std::max(n_max, static_cast<std::size_t>(std::ceil(std::log(1e-18) / std::log(r))));
    }
    n_max = std::min<std::size_t>(n_max, 1'000'000);
    std::vector<Frequency> seen;
    std::vector<double> totals(n_max + 1, 0.0);
    for (const auto& fam : f.geometric) {
      for (int side = 0; side < (fam.mirrored ? 2 : 1); ++side) {
        const Frequency root = side == 0 ? fam.root : negate(fam.root);
        if (std::find(seen.begin(), seen.end(), root) != seen.end())
          throw std::invalid_argument("gordin_check_fourier: two geometric families share an orbit");
        seen.push_back(root);
        const cplx c0 = side == 0 ? fam.c0 : std::conj(fam.c0);
        const cplx r = side == 0 ? fam.ratio : std::conj(fam.ratio);
        const cplx b = c0 / (1.0 - r);
        // Orbit member 2^i root has partial sums r^i times the root's.
        const double chain_weight = 1.0 / (1.0 - std::norm(r));
        OrbitSums sums{root, {}, b};
        cplx rn = 1.0;
        for (std::size_t n = 0; n <= n_max; ++n) {
          rn *= r;
          const cplx partial = b * (1.0 - rn);
          if (n <= h) sums.partial_sums.push_back(partial);
          totals[n] += std::norm(partial) * chain_weight;
        }
        orbits.total_roots += std::norm(b);
        orbits.total_all += std::norm(b) * chain_weight;
        orbits.orbits.push_back(std::move(sums));
      }
    }
    orbits.sup_over_n = std::max(*std::max_element(totals.begin(), totals.end()), orbits.total_all);
    result.report.note = "geometric orbit families: orbit sums in closed form";
  } else if (f.coeffs.empty() && f.geometric.empty()) {
    check_power(f);
    const double p = f.power->p;
    const double c = f.power->c;
    const double q = 1.0 - std::pow(2.0, -p);
    const double zeta = std::riemann_zeta(2.0 * p);
    orbits.total_all = 2.0 * c * c * zeta / (q * q);
    orbits.total_roots = orbits.total_all * (1.0 - std::pow(2.0, -2.0 * p));
    // Partial sums are positive multiples of the limit and increase with N.
    orbits.sup_over_n = orbits.total_all;
    for (std::int64_t root = -7; root <= 7; root += 2) {
      const cplx b = c * std::pow(std::fabs(static_cast<double>(root)), -p) / q;
      OrbitSums sums{{root}, {}, b};
      for (std::size_t n = 0; n <= h; ++n) sums.partial_sums.push_back(b * (1.0 - std::pow(2.0, -p * (n + 1.0))));
      orbits.orbits.push_back(std::move(sums));
    }
    result.report.note = "power-law family: orbit sums in closed form (orbit listing truncated to |root| <= 7)";
  } else {
    throw std::invalid_argument("gordin_check_fourier: mixing closed-form families with other terms is not supported");
  }

  result.report.membership = std::isfinite(orbits.sup_over_n) ? Membership::Member : Membership::NonMember;
  result.report.g_tilde_bound = std::sqrt(orbits.total_roots);
  result.report.evidence = {orbits.sup_over_n, orbits.total_all, orbits.total_roots};
  return result;
}

double corollary10_bound(const FourierObservable& f, const NormSequence& c) {
  const auto values = c.conservative_values();
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("corollary10_bound: c_n must be non-negative");
  }
  const auto c_at = [&](int n) -> double {
    if (n < static_cast<int>(values.size())) return values[static_cast<std::size_t>(n)];
    return c.closed_form ? c.closed_form(n) : 0.0;
  };
  const auto fail = [](int n, const Frequency& m) {
    std::string text = "corollary10_bound: |a_{2^n m}| <= c_n |a_m| fails at n = " + std::to_string(n) + ", m = (";
    for (std::size_t i = 0; i < m.size(); ++i) text += (i ? "," : "") + std::to_string(m[i]);
    throw DominationError(n, m, text + ")");
  };
  const double slack = 1.0 + 1e-12;
  for (const auto& [mm, a] : f.coeffs) {
    if (a == cplx{}) continue;
    if (c_at(0) * slack < 1.0) fail(0, mm);
    const int depth = orbit_depth(mm);
    Frequency m = mm;
    for (int n = 1; n <= depth; ++n) {
      for (auto& v : m) v /= 2;
      if (std::abs(a) > c_at(n) * std::abs(f.coefficient(m)) * slack) fail(n, m);
    }
  }
  const int checked = std::max<int>(64, static_cast<int>(values.size()));
  for (const auto& fam : f.geometric) {
    check_family(f, fam);
    for (int n = 0; n < checked; ++n) {
      if (std::pow(std::abs(fam.ratio), n) > c_at(n) * slack) fail(n, fam.root);
    }
  }
  if (f.power) {
    check_power(f);
    for (int n = 0; n < checked; ++n) {
      if (std::pow(2.0, -n * f.power->p) > c_at(n) * slack) fail(n, {1});
    }
  }
  const auto total = prop4_bound(c, values.size());
  if (!total.satisfied) return kInfinity;
  return f.centered_norm() * total.bound_on_g_tilde;
}

double sobolev_norm(const FourierObservable& f, double alpha) {
  if (!(alpha >= 0.0)) throw std::domain_error("sobolev_norm: alpha must be >= 0");
  double sq = 0.0;
  for (const auto& [m, a] : f.coeffs) sq += std::norm(a) * std::pow(squared_length(m), alpha);
  for (const auto& fam : f.geometric) {
    check_family(f, fam);
    const double growth = std::norm(fam.ratio) * std::pow(4.0, alpha);
    if (growth >= 1.0) return kInfinity;
    sq += (fam.mirrored ? 2.0 : 1.0) * std::norm(fam.c0) * std::pow(squared_length(fam.root), alpha) / (1.0 - growth);
  }
  if (f.power) {
    check_power(f);
    const double exponent = 2.0 * f.power->p - 2.0 * alpha;
    if (exponent <= 1.0) return kInfinity;
    sq += 2.0 * f.power->c * f.power->c * std::riemann_zeta(exponent);
  }
  return std::sqrt(sq);
}

}  // namespace shiftmc
