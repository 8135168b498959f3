#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaat/simd/hmm_kernels.hpp"

namespace gaat {

/// Discrete HMM over agent phases. Matrices are row-major.
struct HmmModel {
  std::vector<std::string> states;
  std::vector<std::string> symbols;
  std::vector<double> initial;     ///< N
  std::vector<double> transition;  ///< N x N
  std::vector<double> emission;    ///< N x M

  [[nodiscard]] std::size_t n() const noexcept { return states.size(); }
  [[nodiscard]] std::size_t m() const noexcept { return symbols.size(); }
  [[nodiscard]] double a(std::size_t i, std::size_t j) const { return transition[i * n() + j]; }
  [[nodiscard]] double b(std::size_t i, std::size_t k) const { return emission[i * m() + k]; }

  /// Rows non-negative and summing to 1 within 1e-9; throws ConfigError.
  void validate() const;
  [[nodiscard]] std::optional<std::size_t> symbol_index(std::string_view symbol) const;
  /// Throws ScoringError on an out-of-alphabet symbol.
  [[nodiscard]] std::vector<std::size_t> encode(std::span<const std::string> sequence) const;

  bool operator==(const HmmModel&) const = default;
};

/// Row-normalised strictly positive random matrices from a seeded stream.
[[nodiscard]] HmmModel random_hmm(std::vector<std::string> states, std::vector<std::string> symbols, std::uint64_t seed);

/// log P(sequence | model) via the scaled forward pass. Returns -inf for
/// impossible sequences. Throws ScoringError on an empty sequence.
[[nodiscard]] double forward_loglik(const HmmModel& model, std::span<const std::size_t> sequence,
                                    const simd::HmmKernels& kernels = simd::active_kernels());
[[nodiscard]] double forward_loglik(const HmmModel& model, std::span<const std::string> sequence);

struct TrainingResult {
  HmmModel model;
  /// Corpus log-likelihood of the initial model followed by one entry per iteration.
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;  ///< stopped because the gain fell below tol
};

/// Baum-Welch with scaled forward/backward passes. Throws TrainingError on a
/// degenerate initial model or an empty corpus.
[[nodiscard]] TrainingResult baum_welch_train(const std::vector<std::vector<std::size_t>>& sequences, HmmModel init,
                                              int max_iters = 20, double tol = 1e-4,
                                              const simd::HmmKernels& kernels = simd::active_kernels());

struct OmissionThreshold {
  double theta = 0.0;
  double calibration_quantile = 0.05;
};

/// theta = linear-interpolated quantile of LL/length over the training
/// sequences. Throws CalibrationError below 20 sequences.
[[nodiscard]] OmissionThreshold calibrate_threshold(const HmmModel& model,
                                                    const std::vector<std::vector<std::size_t>>& sequences,
                                                    double quantile = 0.05);

enum class OmissionVerdict : std::uint8_t { Nominal, OmissionSuspected };

struct OmissionScore {
  OmissionVerdict verdict = OmissionVerdict::Nominal;
  std::optional<double> normalized_loglik;  ///< absent for out-of-alphabet input
  bool out_of_alphabet = false;
};

[[nodiscard]] OmissionScore score_for_omission(const HmmModel& model, const OmissionThreshold& threshold,
                                               std::span<const std::string> sequence);

// Model file and training corpus formats; see docs/file_formats.md.
[[nodiscard]] std::string serialize_hmm(const HmmModel& model);
[[nodiscard]] HmmModel parse_hmm(std::string_view text);
void save_hmm(const std::filesystem::path& path, const HmmModel& model);
[[nodiscard]] HmmModel load_hmm(const std::filesystem::path& path);
[[nodiscard]] std::vector<std::vector<std::string>> parse_corpus(std::string_view text);
[[nodiscard]] std::string serialize_corpus(const std::vector<std::vector<std::string>>& corpus);

}  // namespace gaat
