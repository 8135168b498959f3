#include "gaat/hmm.hpp"

#include <cmath>
#include <limits>

#include "gaat/errors.hpp"
#include "gaat/stats.hpp"

namespace gaat {

namespace {

void check_rows(const std::vector<double>& values, std::size_t rows, std::size_t cols, const char* what) {
  if (values.size() != rows * cols) throw ConfigError(std::string("HMM ") + what + " has the wrong shape");
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = values[r * cols + c];
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string("HMM ") + what + " has a negative entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw ConfigError(std::string("HMM ") + what + " row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
  }
}

/// Emission matrix transposed to M x N so B[:, k] is contiguous.
std::vector<double> transpose_emission(const HmmModel& model) {
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  std::vector<double> bt(m * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) bt[k * n + i] = model.emission[i * m + k];
  }
  return bt;
}

void normalise_row(double* row, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += row[i];
  for (std::size_t i = 0; i < n; ++i) row[i] /= s;
}

struct Accumulators {
  explicit Accumulators(std::size_t n, std::size_t m)
      : pi(n, 0.0), trans(n * n, 0.0), emit(n * m, 0.0) {}
  std::vector<double> pi;
  std::vector<double> trans;
  std::vector<double> emit;
};

/// Scaled forward pass. Fills alpha (T x N) and c (T). Returns false when the
/// sequence has probability zero.
bool forward_pass(const HmmModel& model, const std::vector<double>& bt, std::span<const std::size_t> seq,
                  const simd::HmmKernels& k, std::vector<double>& alpha, std::vector<double>& c,
                  std::vector<double>& tmp) {
  const std::size_t n = model.n();
  const std::size_t t_len = seq.size();
  alpha.resize(t_len * n);
  c.resize(t_len);
  tmp.resize(n);
  k.mul(model.initial.data(), bt.data() + seq[0] * n, n, alpha.data());
  for (std::size_t t = 0; t < t_len; ++t) {
    double* at = alpha.data() + t * n;
    if (t > 0) {
      k.vec_mat(alpha.data() + (t - 1) * n, model.transition.data(), n, n, tmp.data());
      k.mul(tmp.data(), bt.data() + seq[t] * n, n, at);
    }
    c[t] = k.sum(at, n);
    if (!(c[t] > 0.0)) return false;
    k.scale(at, n, 1.0 / c[t]);
  }
  return true;
}

void check_symbols(const HmmModel& model, std::span<const std::size_t> seq) {
  if (seq.empty()) throw ScoringError("cannot score an empty sequence");
  for (auto s : seq) {
    if (s >= model.m()) throw ScoringError("symbol index " + std::to_string(s) + " outside the alphabet");
  }
}

double e_step(const HmmModel& model, const std::vector<std::vector<std::size_t>>& seqs, const simd::HmmKernels& k,
              Accumulators& acc) {
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  const std::vector<double> bt = transpose_emission(model);
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> c;
  std::vector<double> tmp;
  double ll = 0.0;
  for (const auto& seq : seqs) {
    if (!forward_pass(model, bt, seq, k, alpha, c, tmp)) {
      throw TrainingError("training sequence has zero probability under the current model");
    }
    const std::size_t t_len = seq.size();
    for (double ct : c) ll += std::log(ct);
    beta.assign(t_len * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) beta[(t_len - 1) * n + i] = 1.0;
    for (std::size_t t = t_len - 1; t-- > 0;) {
      k.mul(bt.data() + seq[t + 1] * n, beta.data() + (t + 1) * n, n, tmp.data());
      k.mat_vec(model.transition.data(), tmp.data(), n, n, beta.data() + t * n);
      k.scale(beta.data() + t * n, n, 1.0 / c[t + 1]);
    }
    for (std::size_t t = 0; t < t_len; ++t) {
      const double* at = alpha.data() + t * n;
      const double* bt_row = beta.data() + t * n;
      for (std::size_t i = 0; i < n; ++i) {
        const double gamma = at[i] * bt_row[i];
        if (t == 0) acc.pi[i] += gamma;
        acc.emit[i * m + seq[t]] += gamma;
      }
      if (t + 1 < t_len) {
        k.mul(bt.data() + seq[t + 1] * n, beta.data() + (t + 1) * n, n, tmp.data());
        const double inv = 1.0 / c[t + 1];
        for (std::size_t i = 0; i < n; ++i) {
          k.axpy_mul(acc.trans.data() + i * n, model.transition.data() + i * n, tmp.data(), n, at[i] * inv);
        }
      }
    }
  }
  return ll;
}

double corpus_loglik(const HmmModel& model, const std::vector<std::vector<std::size_t>>& seqs,
                     const simd::HmmKernels& k) {
  double ll = 0.0;
  for (const auto& s : seqs) ll += forward_loglik(model, s, k);
  return ll;
}

}  // namespace

void HmmModel::validate() const {
  if (states.empty() || symbols.empty()) throw ConfigError("HMM needs at least one state and one symbol");
  check_rows(initial, 1, n(), "initial vector");
  check_rows(transition, n(), n(), "transition matrix");
  check_rows(emission, n(), m(), "emission matrix");
}

std::optional<std::size_t> HmmModel::symbol_index(std::string_view symbol) const {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == symbol) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> HmmModel::encode(std::span<const std::string> sequence) const {
  std::vector<std::size_t> out;
  out.reserve(sequence.size());
  for (const auto& s : sequence) {
    auto idx = symbol_index(s);
    if (!idx) throw ScoringError("symbol '" + s + "' is not in the model alphabet");
    out.push_back(*idx);
  }
  return out;
}

HmmModel random_hmm(std::vector<std::string> states, std::vector<std::string> symbols, std::uint64_t seed) {
  HmmModel model;
  model.states = std::move(states);
  model.symbols = std::move(symbols);
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  if (n == 0 || m == 0) throw ConfigError("HMM needs at least one state and one symbol");
  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& v, std::size_t rows, std::size_t cols) {
    v.resize(rows * cols);
    for (auto& x : v) x = 0.5 + rng.uniform01();
    for (std::size_t r = 0; r < rows; ++r) normalise_row(v.data() + r * cols, cols);
  };
  fill(model.initial, 1, n);
  fill(model.transition, n, n);
  fill(model.emission, n, m);
  return model;
}

double forward_loglik(const HmmModel& model, std::span<const std::size_t> sequence, const simd::HmmKernels& kernels) {
  check_symbols(model, sequence);
  const std::vector<double> bt = transpose_emission(model);
  std::vector<double> alpha;
  std::vector<double> c;
  std::vector<double> tmp;
  if (!forward_pass(model, bt, sequence, kernels, alpha, c, tmp)) return -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  for (double ct : c) ll += std::log(ct);
  return ll;
}

double forward_loglik(const HmmModel& model, std::span<const std::string> sequence) {
  const auto encoded = model.encode(sequence);
  return forward_loglik(model, encoded);
}

TrainingResult baum_welch_train(const std::vector<std::vector<std::size_t>>& sequences, HmmModel init, int max_iters,
                                double tol, const simd::HmmKernels& kernels) {
  try {
    init.validate();
  } catch (const ConfigError& e) {
    throw TrainingError(std::string("degenerate initial model: ") + e.what());
  }
  if (sequences.empty()) throw TrainingError("training corpus is empty");
  if (max_iters < 1) throw TrainingError("max_iters must be >= 1");
  for (const auto& s : sequences) {
    if (s.empty()) throw TrainingError("training corpus contains an empty sequence");
    for (auto sym : s) {
      if (sym >= init.m()) throw TrainingError("training symbol outside the alphabet");
    }
  }

  const std::size_t n = init.n();
  const std::size_t m = init.m();
  TrainingResult result;
  result.model = std::move(init);
  double prev = corpus_loglik(result.model, sequences, kernels);
  if (!std::isfinite(prev)) throw TrainingError("corpus has zero probability under the initial model");
  result.loglik_trace.push_back(prev);

  for (int it = 0; it < max_iters; ++it) {
    Accumulators acc(n, m);
    (void)e_step(result.model, sequences, kernels, acc);
    HmmModel next = result.model;
    std::copy(acc.pi.begin(), acc.pi.end(), next.initial.begin());
    normalise_row(next.initial.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += acc.trans[i * n + j];
      if (row > 0.0) {
        for (std::size_t j = 0; j < n; ++j) next.transition[i * n + j] = acc.trans[i * n + j] / row;
      }
      double erow = 0.0;
      for (std::size_t k = 0; k < m; ++k) erow += acc.emit[i * m + k];
      if (erow > 0.0) {
        for (std::size_t k = 0; k < m; ++k) next.emission[i * m + k] = acc.emit[i * m + k] / erow;
      }
    }
    result.model = std::move(next);
    const double ll = corpus_loglik(result.model, sequences, kernels);
    result.loglik_trace.push_back(ll);
    result.iterations = it + 1;
    if (ll - prev < tol) {
      result.converged = true;
      break;
    }
    prev = ll;
  }
  return result;
}

OmissionThreshold calibrate_threshold(const HmmModel& model, const std::vector<std::vector<std::size_t>>& sequences,
                                      double quantile) {
  if (sequences.size() < 20) throw CalibrationError("threshold calibration needs at least 20 sequences");
  std::vector<double> normalized;
  normalized.reserve(sequences.size());
  for (const auto& s : sequences) {
    normalized.push_back(forward_loglik(model, s) / static_cast<double>(s.size()));
  }
  return OmissionThreshold{percentile_linear(std::move(normalized), quantile), quantile};
}

OmissionScore score_for_omission(const HmmModel& model, const OmissionThreshold& threshold,
                                 std::span<const std::string> sequence) {
  if (sequence.empty()) throw ScoringError("cannot score an empty sequence");
  OmissionScore score;
  std::vector<std::size_t> encoded;
  try {
    encoded = model.encode(sequence);
  } catch (const ScoringError&) {
    score.verdict = OmissionVerdict::OmissionSuspected;
    score.out_of_alphabet = true;
    return score;
  }
  const double norm = forward_loglik(model, encoded) / static_cast<double>(encoded.size());
  score.normalized_loglik = norm;
  score.verdict = norm < threshold.theta ? OmissionVerdict::OmissionSuspected : OmissionVerdict::Nominal;
  return score;
}

}  // namespace gaat
