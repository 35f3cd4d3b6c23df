#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "novelrd/error.hpp"
#include "novelrd/pipeline/templates.hpp"
#include "novelrd/provider/client.hpp"
#include "novelrd/units.hpp"

namespace novelrd::metrics {

/// dot(u, v) / sqrt(|u|^2 |v|^2), clamped to [-1, 1].
template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  if (u.size() != v.size()) throw DomainError("cosine_similarity: dimension mismatch");
  const double nu = u.squaredNorm();
  const double nv = v.squaredNorm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw DomainError("cosine_similarity: zero vector");
  const double c = u.dot(v) / std::sqrt(nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

struct BertScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double harmonic_f1(double p, double r) {
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

/// Greedy max-cosine matching. Rows of `a` and `b` are token embeddings.
/// Recall averages, over rows of a, the best cosine to any row of b;
/// precision swaps the roles. Weights give per-row multiplicities.
template <typename A, typename B>
BertScores bert_style_scores_weighted(const Eigen::MatrixBase<A>& a, const Eigen::VectorXd& wa,
                                      const Eigen::MatrixBase<B>& b, const Eigen::VectorXd& wb) {
  if (a.rows() == 0 || b.rows() == 0) throw DomainError("bert_style_scores: empty token list");
  if (a.cols() != b.cols()) throw DomainError("bert_style_scores: dimension mismatch");
  if (wa.size() != a.rows() || wb.size() != b.rows()) {
    throw DomainError("bert_style_scores: weight count mismatch");
  }
  Eigen::MatrixXd sim(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) sim(i, j) = cosine_similarity(a.row(i), b.row(j));
  }
  double recall = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) recall += wa(i) * sim.row(i).maxCoeff();
  recall /= wa.sum();
  double precision = 0.0;
  for (Eigen::Index j = 0; j < b.rows(); ++j) precision += wb(j) * sim.col(j).maxCoeff();
  precision /= wb.sum();
  // Cosines can dip below zero; the scores live in [0, 1].
  recall = std::clamp(recall, 0.0, 1.0);
  precision = std::clamp(precision, 0.0, 1.0);
  return {precision, recall, harmonic_f1(precision, recall)};
}

template <typename A, typename B>
BertScores bert_style_scores(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return bert_style_scores_weighted(a, Eigen::VectorXd::Ones(a.rows()), b,
                                    Eigen::VectorXd::Ones(b.rows()));
}

/// Rows of the returned matrix are the given vectors.
Eigen::MatrixXd stack_rows(const std::vector<std::vector<double>>& vectors);

struct EntityLists {
  std::vector<std::string> characters;
  std::vector<std::string> props;
  std::vector<std::string> scenes;
};

struct EntityCounts {
  std::int64_t characters = 0;
  std::int64_t scenes = 0;
  std::int64_t props = 0;
};
EntityCounts counts_of(const EntityLists& e);

struct JudgeReport {
  double semantic = 0.0;
  double plot = 0.0;
  double character = 0.0;
  double background = 0.0;
  double style = 0.0;
  EntityLists entities_a;
  EntityLists entities_b;
  std::string raw;  ///< the judge's payload, verbatim
  std::vector<std::string> warnings;

  double mean5() const { return (semantic + plot + character + background + style) / 5.0; }
  /// Mean of the three dimensions printed in the published summary table.
  double mean3() const { return (semantic + character + style) / 3.0; }
};

/// Strict parse of a judge payload (code fences stripped). Scores outside
/// [0, 1] are clamped with a warning; entity lists are deduplicated and
/// counted locally. Throws SchemaError naming the offending key.
JudgeReport parse_judge_payload(std::string_view payload);

/// Sends the judge template for (a, b) and parses the answer, re-asking once
/// with the raw-JSON suffix if the first answer does not parse.
JudgeReport judge_similarity(std::string_view text_a, std::string_view text_b,
                             provider::ProviderClient& client,
                             const pipeline::TemplateSet& templates,
                             pipeline::Language lang = pipeline::Language::Zh,
                             std::vector<provider::CacheKey>* provenance = nullptr);

struct StructDistance {
  std::int64_t char_diff = 0;
  std::int64_t scene_diff = 0;
  std::int64_t prop_diff = 0;
  double euclid = 0.0;
};
StructDistance struct_distance(const EntityCounts& a, const EntityCounts& b);

struct SimilarityReport {
  double cosine = 0.0;
  double bert_precision = 0.0;
  double bert_recall = 0.0;
  double bert_f1 = 0.0;
  std::optional<JudgeReport> judge;
  std::optional<StructDistance> structure;
};

struct CompositeOptions {
  double w_trad = 1.0;
  double w_llm = 1.0;
  double w_struct = 1.0;
  double norm_cap = 20.0;
  std::optional<double> epsilon;
};

struct DistortionComposite {
  double d_trad = 0.0;
  std::optional<double> d_llm;   ///< 1 - mean of the five judge scores
  std::optional<double> d_llm3;  ///< 1 - mean of semantic, character, style
  std::optional<double> d_struct_norm;
  double d_total = 0.0;
  bool partial = false;          ///< judge missing; d_total built from what exists
  std::optional<double> epsilon;
  std::optional<bool> within_epsilon;
};

double d_trad_of(double cosine, double bert_f1);
double d_llm_of(const std::vector<double>& judge_scores);

DistortionComposite composite_distortion(const SimilarityReport& report,
                                         const CompositeOptions& options = {});

nlohmann::json to_json(const JudgeReport& r);
nlohmann::json to_json(const SimilarityReport& r);
nlohmann::json to_json(const DistortionComposite& d);

/// Full comparison of an original chapter with its reconstruction: chapter
/// embeddings for cosine, unit-token embeddings for the BERT-style scores,
/// then the judge. A judge failure leaves `judge` empty and the composite partial.
struct ChapterEvaluation {
  SimilarityReport report;
  DistortionComposite composite;
  std::vector<std::string> warnings;
  std::string judge_error;
};

ChapterEvaluation evaluate_chapter(std::string_view original, std::string_view reconstructed,
                                   provider::ProviderClient& client,
                                   const pipeline::TemplateSet& templates,
                                   pipeline::Language lang = pipeline::Language::Zh,
                                   UnitMode mode = UnitMode::Mixed,
                                   const CompositeOptions& options = {});

}  // namespace novelrd::metrics
