#include "bregdiag/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace bregdiag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Splits each chain into halves, truncating odd tails.
std::vector<Vector> split_halves(const std::vector<Vector>& chains) {
  std::vector<Vector> out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const Index half = c.size() / 2;
    if (half == 0) continue;
    out.push_back(c.head(half));
    out.push_back(c.segment(half, half));
  }
  return out;
}

/// Autocovariance at lag t with 1/n normalization.
double autocov(const Vector& x, Index t) {
  const Index n = x.size();
  const double mean = x.mean();
  double acc = 0.0;
  for (Index i = 0; i + t < n; ++i) acc += (x[i] - mean) * (x[i + t] - mean);
  return acc / static_cast<double>(n);
}

struct PooledVariance {
  double w = 0.0;         // mean within-sequence variance
  double var_plus = 0.0;  // (n-1)/n * W + B/n
  Index n = 0;
  bool ok = false;
};

PooledVariance pooled_variance(const std::vector<Vector>& seqs) {
  PooledVariance p;
  if (seqs.size() < 2) return p;
  p.n = seqs.front().size();
  for (const auto& s : seqs)
    if (s.size() != p.n) return p;
  if (p.n < 2) return p;
  const auto m = static_cast<double>(seqs.size());
  const auto n = static_cast<double>(p.n);

  double grand = 0.0;
  for (const auto& s : seqs) grand += s.mean();
  grand /= m;

  double b_over_n = 0.0;  // variance of sequence means
  double w = 0.0;
  for (const auto& s : seqs) {
    const double mu = s.mean();
    b_over_n += (mu - grand) * (mu - grand);
    w += (s.array() - mu).square().sum() / (n - 1.0);
  }
  b_over_n /= (m - 1.0);
  w /= m;

  p.w = w;
  p.var_plus = (n - 1.0) / n * w + b_over_n;
  p.ok = true;
  return p;
}

}  // namespace

double split_rhat(const std::vector<Vector>& chain_draws) {
  const auto seqs = split_halves(chain_draws);
  const auto p = pooled_variance(seqs);
  if (!p.ok || p.w <= 0.0) return kNaN;
  return std::sqrt(p.var_plus / p.w);
}

double effective_sample_size(const std::vector<Vector>& chain_draws) {
  const auto seqs = split_halves(chain_draws);
  if (seqs.empty()) return kNaN;
  const auto p = seqs.size() >= 2 ? pooled_variance(seqs) : PooledVariance{};
  const Index n = seqs.front().size();
  const auto m = static_cast<double>(seqs.size());

  double w = 0.0, var_plus = 0.0;
  if (p.ok) {
    w = p.w;
    var_plus = p.var_plus;
  } else {
    // single sequence: var_plus reduces to the plain variance estimate
    const auto& s = seqs.front();
    if (n < 4) return kNaN;
    w = (s.array() - s.mean()).square().sum() / static_cast<double>(n - 1);
    var_plus = w * static_cast<double>(n - 1) / static_cast<double>(n);
  }
  if (!(var_plus > 0.0)) return kNaN;

  // mean autocovariance across sequences per lag, computed on demand
  auto mean_acov = [&](Index t) {
    double acc = 0.0;
    for (const auto& s : seqs) acc += autocov(s, t);
    return acc / m;
  };

  // Geyer initial monotone positive-pair sum of autocorrelations
  const double rho_one = 1.0 - (w - mean_acov(1)) / var_plus;
  double prev_pair = 1.0 + rho_one;  // rho_0 + rho_1
  if (prev_pair <= 0.0) return m * static_cast<double>(n);

  double tau = -1.0 + 2.0 * prev_pair;
  for (Index t = 2; t + 1 < n; t += 2) {
    const double rho_even = 1.0 - (w - mean_acov(t)) / var_plus;
    const double rho_odd = 1.0 - (w - mean_acov(t + 1)) / var_plus;
    double pair = rho_even + rho_odd;
    if (pair < 0.0) break;
    if (pair > prev_pair) pair = prev_pair;  // enforce monotone decrease
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  const double total = m * static_cast<double>(n);
  if (tau < 1e-12) return total;
  const double ess = total / tau;
  return std::min(ess, total * std::log10(total > 10.0 ? total : 10.0));
}

}  // namespace bregdiag
