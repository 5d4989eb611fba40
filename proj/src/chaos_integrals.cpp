#include "shiftmc/chaos_integrals.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "shiftmc/numerics.hpp"

namespace shiftmc {
namespace {

constexpr double kLn2 = std::numbers::ln2;

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

void require_order_one(const KernelSpec& h, const char* what) {
  if (h.m != 1) throw std::invalid_argument(std::string(what) + ": this family is defined for order m = 1");
}

// --- order-1 log families in the variable L = -log t ------------------------
//
// With t^{-1/2} factored out, ||sum_n T^n h||^2 = int_0^inf (sum_n G_k(L))^2 dL
// where k = shift + n and G_k is supported on L >= a for k = 0 and on all
// L >= 0 for k >= 1 (a = log 2).

double log_term(const KernelSpec& h, std::int64_t k, double L) {
  if (k == 0 && L < kLn2) return 0.0;
  const double x = L + static_cast<double>(k) * kLn2;
  if (h.family == KernelFamily::LogPower) return std::pow(x, -h.beta);
  const double s = std::sin(std::numbers::pi * L / kLn2);
  if (h.absolute) return std::fabs(s) / x;
  return (k % 2 == 0 ? s : -s) / x;
}

// sum_{k >= shift} G_k(L); +inf for log_power with beta <= 1.
double log_term_total(const KernelSpec& h, double L) {
  const std::int64_t s = h.shift;
  if (h.family == KernelFamily::LogPower) {
    if (h.beta <= 1.0) return kInfinity;
    constexpr int explicit_terms = 64;
    double sum = 0.0;
    for (int n = 0; n < explicit_terms; ++n) sum += log_term(h, s + n, L);
    // Euler-Maclaurin remainder of sum_{x >= x0} (x a + L)^{-beta}.
    const double x0 = static_cast<double>(s + explicit_terms);
    const double base = x0 * kLn2 + L;
    const double b = h.beta;
    return sum + std::pow(base, 1.0 - b) / (kLn2 * (b - 1.0)) + std::pow(base, -b) / 2.0 +
           b * kLn2 * std::pow(base, -b - 1.0) / 12.0;
  }
  if (h.absolute) return kInfinity;
  // sum_{n >= 0} (-1)^n / (x + n) = (psi((x+1)/2) - psi(x/2)) / 2.
  const auto alternating = [](double x) {
    return 0.5 * (boost::math::digamma((x + 1.0) / 2.0) - boost::math::digamma(x / 2.0));
  };
  const double sine = std::sin(std::numbers::pi * L / kLn2);
  double c;
  if (s == 0 && L < kLn2) {
    c = -alternating(L / kLn2 + 1.0) / kLn2;  // the k = 0 term is off its support
  } else {
    c = (s % 2 == 0 ? 1.0 : -1.0) * alternating(L / kLn2 + static_cast<double>(s)) / kLn2;
  }
  return sine * c;
}

struct LogIntegrals {
  std::vector<double> norms;
  std::vector<double> term_norms;
  std::optional<double> limit;
};

LogIntegrals log_family_integrals(const KernelSpec& h, int n_max) {
  const bool oscillating = h.family == KernelFamily::Oscillating;
  const std::size_t count = static_cast<std::size_t>(n_max) + 1;
  const bool want_limit =
      oscillating ? !h.absolute : h.beta > 1.5;  // the limit exists exactly in these cases
  LogIntegrals out;
  out.norms.assign(count, 0.0);
  out.term_norms.assign(count, 0.0);
  double limit = 0.0;

  // Cells: [0, a] then half periods (oscillating) or geometric cells.
  std::vector<std::pair<double, double>> cells{{0.0, kLn2}};
  const double l0 = oscillating ? kLn2 * 4096.0 : kLn2 * std::ldexp(1.0, 20);
  if (oscillating) {
    for (int k = 1; k < 4096; ++k) cells.emplace_back(k * kLn2, (k + 1) * kLn2);
  } else {
    for (double left = kLn2; left < l0; left *= 2.0) cells.emplace_back(left, 2.0 * left);
  }
  std::vector<double> terms(count);
  for (const auto& [lo, hi] : cells) {
    const auto rule = gauss_rule(lo, hi, 20);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double L = rule.nodes[q];
      const double w = rule.weights[q];
      double partial = 0.0;
      for (std::size_t n = 0; n < count; ++n) {
        terms[n] = log_term(h, h.shift + static_cast<std::int64_t>(n), L);
        partial += terms[n];
        out.norms[n] += w * partial * partial;
        out.term_norms[n] += w * terms[n] * terms[n];
      }
      if (want_limit) {
        const double total = log_term_total(h, L);
        limit += w * total * total;
      }
    }
  }

  // Tails beyond l0. Past l0 every term is on its support.
  for (std::size_t n = 0; n < count; ++n) {
    const double k0 = static_cast<double>(h.shift);
    if (oscillating) {
      // sin^2 averages to 1/2 over each period; the envelope is smooth.
      const auto envelope = [&](double L) {
        double c = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
          const double k = k0 + static_cast<double>(i);
          const double sign = h.absolute || (h.shift + static_cast<int>(i)) % 2 == 0 ? 1.0 : -1.0;
          c += sign / (L + k * kLn2);
        }
        return 0.5 * c * c;
      };
      out.norms[n] += integrate_to_infinity(envelope, l0).value;
      out.term_norms[n] += 0.5 / (l0 + (k0 + static_cast<double>(n)) * kLn2);
    } else {
      const auto square = [&](double L) {
        double c = 0.0;
        for (std::size_t i = 0; i <= n; ++i) c += log_term(h, h.shift + static_cast<std::int64_t>(i), L);
        return c * c;
      };
      out.norms[n] += integrate_to_infinity(square, l0).value;
      const double x = l0 + (k0 + static_cast<double>(n)) * kLn2;
      out.term_norms[n] += std::pow(x, 1.0 - 2.0 * h.beta) / (2.0 * h.beta - 1.0);
    }
  }
  if (want_limit) {
    if (oscillating) {
      const auto envelope = [&](double L) {
        const double x = L / kLn2 + h.shift;
        const double c = 0.5 * (boost::math::digamma((x + 1.0) / 2.0) - boost::math::digamma(x / 2.0)) / kLn2;
        return 0.5 * c * c;
      };
      limit += integrate_to_infinity(envelope, l0).value;
    } else {
      // S(L) ~ L^{1-b}/(a(b-1)) + L^{-b}/2 + ... ; square and integrate.
      const double b = h.beta;
      const double a = kLn2;
      const double lead = 1.0 / (a * (b - 1.0));
      const double base = l0 + h.shift * a;  // sum starts at k = shift
      limit += lead * lead * std::pow(base, 3.0 - 2.0 * b) / (2.0 * b - 3.0) +
               lead * std::pow(base, 2.0 - 2.0 * b) / (2.0 * b - 2.0) +
               0.25 * std::pow(base, 1.0 - 2.0 * b) / (2.0 * b - 1.0);
    }
    out.limit = limit;
  }
  return out;
}

// --- simplex quadrature -----------------------------------------------------

// Kernels T^n h for n = 0..n_max evaluated together at one point.
struct ShiftedFamily {
  std::vector<KernelSpec> kernels;
  ShiftedFamily(const KernelSpec& h, int n_max) {
    for (int n = 0; n <= n_max; ++n) kernels.push_back(shifted_kernel(h, n));
  }
};

std::vector<double> order_one_quadrature(const KernelSpec& h, int n_max, const SimplexQuadrature& quad,
                                         std::vector<double>* term_norms) {
  const ShiftedFamily family(h, n_max);
  const std::size_t count = static_cast<std::size_t>(n_max) + 1;
  std::vector<double> norms(count, 0.0), terms_acc(count, 0.0), cell(count);
  int quiet = 0;
  for (int j = 0; j < quad.max_cells; ++j) {
    const double hi = std::ldexp(1.0, -j);
    const auto rule = gauss_rule(hi / 2.0, hi, quad.points);
    std::fill(cell.begin(), cell.end(), 0.0);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = rule.nodes[q];
      double partial = 0.0;
      for (std::size_t n = 0; n < count; ++n) {
        const double v = family.kernels[n](t);
        partial += v;
        cell[n] += rule.weights[q] * partial * partial;
        terms_acc[n] += rule.weights[q] * v * v;
      }
    }
    bool negligible = true;
    for (std::size_t n = 0; n < count; ++n) {
      if (!std::isfinite(cell[n])) throw std::runtime_error("kernel quadrature: non-finite cell");
      norms[n] += cell[n];
      negligible = negligible && cell[n] <= 1e-17 * norms[n];
    }
    if (negligible) {
      if (++quiet >= 4) {
        if (term_norms) *term_norms = terms_acc;
        return norms;
      }
    } else {
      quiet = 0;
    }
  }
  throw std::runtime_error("kernel quadrature: cells near the origin did not converge");
}

std::vector<double> simplex_pass(const ShiftedFamily& family, int m, int points, int levels) {
  const std::size_t count = family.kernels.size();
  // One axis: geometric cells [2^{-j-1}, 2^{-j}] in u plus the origin cell.
  std::vector<double> nodes, weights;
  const auto add_cell = [&](double lo, double hi) {
    const auto rule = gauss_rule(lo, hi, points);
    nodes.insert(nodes.end(), rule.nodes.begin(), rule.nodes.end());
    weights.insert(weights.end(), rule.weights.begin(), rule.weights.end());
  };
  for (int j = 0; j < levels; ++j) add_cell(std::ldexp(1.0, -j - 1), std::ldexp(1.0, -j));
  add_cell(0.0, std::ldexp(1.0, -levels));
  std::vector<double> norms(count, 0.0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
  std::vector<double> t(static_cast<std::size_t>(m));
  const std::size_t axis = nodes.size();
  while (true) {
    // t_m = u_m, t_i = u_i t_{i+1}; Jacobian prod_{i>=2} t_i.
    double w = 1.0;
    double upper = 1.0;
    for (int i = m - 1; i >= 0; --i) {
      const std::size_t k = idx[static_cast<std::size_t>(i)];
      t[static_cast<std::size_t>(i)] = nodes[k] * upper;
      w *= weights[k] * upper;
      upper = t[static_cast<std::size_t>(i)];
    }
    double partial = 0.0;
    for (std::size_t n = 0; n < count; ++n) {
      partial += family.kernels[n](t);
      norms[n] += w * partial * partial;
    }
    int i = 0;
    while (i < m && ++idx[static_cast<std::size_t>(i)] == axis) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == m) break;
  }
  return norms;
}

// Accepted when dropping the finest level changes nothing above 1e-7 relative.
std::vector<double> simplex_quadrature(const KernelSpec& h, int n_max, const SimplexQuadrature& quad) {
  const ShiftedFamily family(h, n_max);
  const int points = std::min(quad.points, 8);
  const auto fine = simplex_pass(family, h.m, points, quad.levels_per_axis);
  const auto coarse = simplex_pass(family, h.m, points, quad.levels_per_axis - 1);
  for (std::size_t n = 0; n < fine.size(); ++n) {
    if (!std::isfinite(fine[n]) || std::fabs(fine[n] - coarse[n]) > 1e-7 * std::fabs(fine[n]))
      throw std::runtime_error("kernel quadrature: finest level still moves the result, grid too coarse");
  }
  return fine;
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Power: return "power";
    case KernelFamily::LogPower: return "log_power";
    case KernelFamily::Oscillating: return "oscillating";
    case KernelFamily::Custom: return "custom";
  }
  return "unknown";
}

KernelSpec KernelSpec::power(double alpha, int m) {
  if (m < 1) throw std::invalid_argument("KernelSpec::power: order must be >= 1");
  KernelSpec k;
  k.m = m;
  k.family = KernelFamily::Power;
  k.alpha = alpha;
  return k;
}

KernelSpec KernelSpec::log_power(double beta) {
  if (!(beta > 0.5)) throw std::domain_error("KernelSpec::log_power: beta must exceed 1/2 for a square-integrable kernel");
  KernelSpec k;
  k.family = KernelFamily::LogPower;
  k.beta = beta;
  return k;
}

KernelSpec KernelSpec::oscillating(bool absolute) {
  KernelSpec k;
  k.family = KernelFamily::Oscillating;
  k.absolute = absolute;
  return k;
}

KernelSpec KernelSpec::from_function(std::function<double(std::span<const double>)> h, int m) {
  if (m < 1 || m > 3) throw std::invalid_argument("KernelSpec::from_function: quadrature supports 1 <= m <= 3");
  KernelSpec k;
  k.m = m;
  k.family = KernelFamily::Custom;
  k.custom = std::move(h);
  return k;
}

double KernelSpec::operator()(std::span<const double> t) const {
  if (t.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("KernelSpec: point has the wrong order");
  switch (family) {
    case KernelFamily::Power: {
      double v = coefficient;
      for (double x : t) v *= std::pow(x, -alpha);
      return v;
    }
    case KernelFamily::LogPower:
    case KernelFamily::Oscillating: {
      // 2^{-s/2} h0(t / 2^s) = t^{-1/2} G_s(-log t).
      const double x = t[0];
      if (!(x > 0.0)) return 0.0;
      const double L = -std::log(x);
      if (shift == 0 && x > 0.5) return 0.0;
      return log_term(*this, shift, L) / std::sqrt(x);
    }
    case KernelFamily::Custom: {
      if (shift == 0) return custom(t);
      std::vector<double> scaled(t.begin(), t.end());
      for (double& x : scaled) x = std::ldexp(x, -shift);
      return custom(scaled) * std::pow(2.0, -0.5 * shift * m);
    }
  }
  return 0.0;
}

std::string to_json(const KernelSpec& spec) {
  nlohmann::json j;
  j["m"] = spec.m;
  j["family"] = to_string(spec.family);
  nlohmann::json params = nlohmann::json::object();
  switch (spec.family) {
    case KernelFamily::Power:
      params["alpha"] = spec.alpha;
      params["coefficient"] = spec.coefficient;
      break;
    case KernelFamily::LogPower:
      params["beta"] = spec.beta;
      params["shift"] = spec.shift;
      break;
    case KernelFamily::Oscillating:
      params["absolute"] = spec.absolute;
      params["shift"] = spec.shift;
      break;
    case KernelFamily::Custom:
      params["shift"] = spec.shift;
      break;
  }
  j["params"] = params;
  if (!spec.components.empty()) j["components"] = spec.components;
  return j.dump();
}

KernelSpec kernel_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto family = j.at("family").get<std::string>();
  const auto& p = j.at("params");
  KernelSpec k;
  if (family == "power") {
    k = KernelSpec::power(p.at("alpha").get<double>(), j.at("m").get<int>());
    k.coefficient = p.value("coefficient", 1.0);
  } else if (family == "log_power") {
    k = KernelSpec::log_power(p.at("beta").get<double>());
    k.shift = p.value("shift", 0);
  } else if (family == "oscillating") {
    k = KernelSpec::oscillating(p.value("absolute", false));
    k.shift = p.value("shift", 0);
  } else if (family == "custom") {
    throw std::invalid_argument("kernel_from_json: custom kernels carry a function and cannot be deserialized");
  } else {
    throw std::invalid_argument("kernel_from_json: unknown family '" + family + "'");
  }
  if (k.family != KernelFamily::Power && j.at("m").get<int>() != 1)
    throw std::invalid_argument("kernel_from_json: log families have order 1");
  if (j.contains("components")) k.components = j["components"].get<std::vector<int>>();
  return k;
}

KernelSpec shifted_kernel(const KernelSpec& h, int n) {
  if (n < 0) throw std::invalid_argument("shifted_kernel: n must be >= 0");
  KernelSpec out = h;
  if (h.family == KernelFamily::Power) {
    out.coefficient = h.coefficient * std::pow(2.0, -static_cast<double>(n) * h.m * (0.5 - h.alpha));
  } else {
    out.shift = h.shift + n;
  }
  return out;
}

double kernel_l2_norm_squared(const KernelSpec& h) {
  switch (h.family) {
    case KernelFamily::Power:
      if (!(h.alpha < 0.5)) return kInfinity;
      return h.coefficient * h.coefficient / (factorial(h.m) * std::pow(1.0 - 2.0 * h.alpha, h.m));
    case KernelFamily::LogPower:
    case KernelFamily::Oscillating:
      require_order_one(h, "kernel_l2_norm_squared");
      return log_family_integrals(h, 0).term_norms[0];
    case KernelFamily::Custom:
      try {
        return kernel_sum_norms_quadrature(h, 0)[0];
      } catch (const std::runtime_error&) {
        return kInfinity;
      }
  }
  return kInfinity;
}

std::vector<double> kernel_sum_norms_quadrature(const KernelSpec& h, int n_max, const SimplexQuadrature& quad) {
  if (n_max < 0) throw std::invalid_argument("kernel_sum_norms_quadrature: n_max must be >= 0");
  if (h.m == 1) return order_one_quadrature(h, n_max, quad, nullptr);
  if (h.m > 3) throw std::invalid_argument("kernel_sum_norms_quadrature: order m <= 3 only");
  return simplex_quadrature(h, n_max, quad);
}

KernelCheck gordin_check_kernel(const KernelSpec& h, int n_max, const SimplexQuadrature& quad) {
  if (n_max < 0) throw std::invalid_argument("gordin_check_kernel: n_max must be >= 0");
  KernelCheck out;
  auto& sums = out.sums;
  auto& report = out.report;
  const std::size_t count = static_cast<std::size_t>(n_max) + 1;

  switch (h.family) {
    case KernelFamily::Power: {
      if (!(h.alpha < 0.5)) throw std::domain_error("gordin_check_kernel: power kernel needs alpha < 1/2");
      const double base = kernel_l2_norm_squared(h);  // c^2 / (m! (1 - 2 alpha)^m)
      const double q = std::pow(2.0, -h.m * (0.5 - h.alpha));
      double partial = 0.0, term = 1.0;
      for (std::size_t n = 0; n < count; ++n) {
        partial += term;
        sums.norms.push_back(base * partial * partial);
        sums.term_norms.push_back(base * term * term);
        term *= q;
      }
      sums.limit = base / ((1.0 - q) * (1.0 - q));
      sums.sup = *sums.limit;  // partial sums increase to the limit
      sums.method = "closed_form";
      report.membership = Membership::Member;
      report.note = "power kernel: sum_n 2^{-nm(1/2-alpha)} converges for alpha < 1/2";
      break;
    }
    case KernelFamily::LogPower:
    case KernelFamily::Oscillating: {
      require_order_one(h, "gordin_check_kernel");
      auto integrals = log_family_integrals(h, n_max);
      sums.norms = std::move(integrals.norms);
      sums.term_norms = std::move(integrals.term_norms);
      sums.limit = integrals.limit;
      sums.method = "log_variable";
      double observed = 0.0;
      for (double v : sums.norms) observed = std::max(observed, v);
      if (sums.limit) {
        sums.sup = std::max(observed, *sums.limit);
        report.membership = Membership::Member;
      } else {
        sums.sup = kInfinity;
        report.membership = Membership::NonMember;
      }
      if (h.family == KernelFamily::LogPower) {
        report.note = h.beta > 1.5 ? "log-power kernel: (sum_n (n log2 + L)^{-beta})^2 ~ L^{2-2 beta} is integrable iff beta > 3/2"
                      : h.beta > 1.0 ? "log-power kernel: the N -> inf sum is finite but ~ L^{1-beta}, not square integrable for beta <= 3/2"
                                     : "log-power kernel: sum_n (n log2 + L)^{-beta} diverges for beta <= 1";
      } else {
        report.note = h.absolute ? "|h| kernel: sum_n 1/(L + n log2) diverges"
                                 : "oscillating kernel: alternating sum is O(1/L), square integrable";
      }
      break;
    }
    case KernelFamily::Custom: {
      sums.method = "quadrature";
      try {
        std::vector<double> term_norms;
        sums.norms = h.m == 1 ? order_one_quadrature(h, n_max, quad, &term_norms) : simplex_quadrature(h, n_max, quad);
        sums.term_norms = std::move(term_norms);
      } catch (const std::runtime_error& e) {
        report.membership = Membership::Undecided;
        report.note = std::string("quadrature did not converge: ") + e.what();
        report.evidence = {kInfinity};
        return out;
      }
      std::vector<double> increments;
      for (std::size_t n = 1; n < count; ++n) increments.push_back(std::fabs(sums.norms[n] - sums.norms[n - 1]));
      double observed = 0.0;
      for (double v : sums.norms) observed = std::max(observed, v);
      if (increments.empty()) {
        report.membership = Membership::Undecided;
        report.note = "need n_max >= 1 to judge the partial sums";
        sums.sup = observed;
        break;
      }
      sums.verdict = series_verdict(increments, nullptr);
      if (sums.verdict.satisfied) {
        report.membership = Membership::Member;
        sums.limit = sums.norms.back();
        sums.sup = std::max(observed, sums.norms.back() + sums.verdict.tail_estimate);
        report.note = "partial-sum norms settle (finite-evidence policy on their increments)";
      } else {
        report.membership = Membership::Undecided;
        sums.sup = kInfinity;
        report.note = sums.verdict.divergent_trend ? "partial-sum norms keep growing (divergent trend)"
                                                   : "partial-sum norms: no decisive decay evidence";
      }
      break;
    }
  }
  report.g_tilde_bound = kInfinity;  // no ||g~|| bound is claimed for chaos functionals
  report.evidence = {sums.sup};
  return out;
}

ChaosBound chaos_bound(const std::vector<double>& a, const std::vector<std::vector<double>>& alphas) {
  if (a.size() != alphas.size()) throw std::invalid_argument("chaos_bound: one exponent row per chaos order");
  ChaosBound out;
  bool equal = !a.empty();
  const double first = a.empty() || alphas[0].empty() ? 0.0 : alphas[0][0];
  double series = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int m = static_cast<int>(i) + 1;
    const auto& row = alphas[i];
    if (row.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("chaos_bound: row m needs m exponents");
    double total = 0.0, product = 1.0;
    for (int k = 0; k < m; ++k) {
      const double alpha = row[static_cast<std::size_t>(k)];
      if (!(alpha < 0.5)) throw std::domain_error("chaos_bound: every exponent must be < 1/2");
      equal = equal && alpha == first;
      total += alpha;
      product *= (k + 1) - 2.0 * total;
    }
    const double gap = 1.0 - std::pow(2.0, total - 0.5 * m);
    out.bound += a[i] * a[i] / (gap * gap * product);
    series += a[i] * a[i] / (factorial(m) * std::pow(1.0 - 2.0 * first, m));
  }
  if (equal) out.equal_alpha_series = series;
  return out;
}

ChaosBound chaos_bound(const std::vector<double>& a, double alpha) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < a.size(); ++i) rows.emplace_back(i + 1, alpha);
  auto out = chaos_bound(a, rows);
  if (a.empty()) out.equal_alpha_series = 0.0;
  return out;
}

namespace {

struct GridCells {
  std::vector<double> nodes;  // t_0 = 0 < t_1 < ... < t_K = 1
  std::vector<double> means;  // mean of h on [t_j, t_{j+1}]
};

GridCells grid_cells(const KernelSpec& h, const WienerGrid& grid) {
  if (h.m != 1) throw std::invalid_argument("sample_wiener_integral: order-1 kernels only");
  if (grid.levels < 0 || grid.sub < 0) throw std::invalid_argument("WienerGrid: negative size");
  GridCells cells;
  cells.nodes.push_back(0.0);
  cells.nodes.push_back(std::ldexp(1.0, -grid.levels));
  for (int j = grid.levels - 1; j >= 0; --j) {
    const double lo = std::ldexp(1.0, -j - 1);
    for (int i = 1; i <= (1 << grid.sub); ++i) cells.nodes.push_back(lo + std::ldexp(lo, -grid.sub) * i);
  }
  for (std::size_t j = 0; j + 1 < cells.nodes.size(); ++j) {
    const double lo = cells.nodes[j], hi = cells.nodes[j + 1];
    const auto rule = gauss_rule(lo, hi, 8);
    double integral = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) integral += rule.weights[q] * h(rule.nodes[q]);
    cells.means.push_back(integral / (hi - lo));
  }
  return cells;
}

double ito_sum(const GridCells& cells, const DyadicPathStore& path, int levels, int sub, int component) {
  const auto b = path.brownian_geometric_grid(levels, sub, component);
  double sum = cells.means[0] * b[0];  // origin cell, B_0 = 0
  for (std::size_t j = 1; j < cells.means.size(); ++j) sum += cells.means[j] * (b[j] - b[j - 1]);
  return sum;
}

int component_of(const KernelSpec& h) { return h.components.empty() ? 0 : h.components[0] - 1; }

}  // namespace

double sample_wiener_integral(const KernelSpec& h, const DyadicPathStore& path, const WienerGrid& grid) {
  if (grid.levels + grid.sub > path.depth())
    throw std::invalid_argument("sample_wiener_integral: grid is finer than the path depth");
  return ito_sum(grid_cells(h, grid), path, grid.levels, grid.sub, component_of(h));
}

double isometry_deficit(const KernelSpec& h, const WienerGrid& grid) {
  const auto cells = grid_cells(h, grid);
  double captured = 0.0;
  for (std::size_t j = 0; j < cells.means.size(); ++j)
    captured += cells.means[j] * cells.means[j] * (cells.nodes[j + 1] - cells.nodes[j]);
  return kernel_l2_norm_squared(h) - captured;
}

Observable wiener_integral_observable(const KernelSpec& h, const WienerGrid& grid) {
  auto cells = std::make_shared<const GridCells>(grid_cells(h, grid));
  const int component = component_of(h);
  const int finest = grid.levels + grid.sub;
  const int levels = grid.levels, sub = grid.sub;
  Observable f;
  f.name = "wiener_integral[" + to_json(h) + "]";
  f.depends_on = {0, std::nullopt};
  f.eval = [cells, component, finest, levels, sub](const ShiftSystem& system) {
    const auto path = system.path();
    if (finest > path.depth()) throw std::invalid_argument("wiener_integral_observable: grid is finer than the path depth");
    return ito_sum(*cells, path, levels, sub, component);
  };
  return f;
}

}  // namespace shiftmc
