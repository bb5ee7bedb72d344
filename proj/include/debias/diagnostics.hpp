#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "debias/embeddings.hpp"

namespace debias {

struct Projection {
  Eigen::MatrixXd components;          // dim x dims, orthonormal columns
  Eigen::VectorXd explained_variance;  // every axis, descending
  Eigen::VectorXd mean;
  Eigen::MatrixXd coordinates;         // rows x dims
  std::size_t rank = 0;
};

// Top principal axes of the mean-centered data. Each axis is signed so that
// its largest-magnitude entry is positive. Throws InvalidArgument when the
// data has fewer than dims + 1 rows or its rank is below dims.
Projection pca_project(const EmbeddingTable& table, std::size_t dims);

struct Histograms {
  std::vector<double> label1;
  std::vector<double> label2;
  std::vector<double> edges;  // bins + 1, equal width over the pooled range
};

Histograms label_histograms(std::span<const double> values, std::span<const int> labels,
                            std::size_t bins = 100);

// KL(p || q) in nats after adding epsilon to every count and normalizing.
double kl_divergence(std::span<const double> p_counts, std::span<const double> q_counts,
                     double epsilon = 1e-6);

struct BiasReport {
  Histograms histograms;
  double kl = 0;          // KL(label 1 || label 2)
  double kl_reverse = 0;  // KL(label 2 || label 1)
  double epsilon = 1e-6;
  std::vector<double> explained_variance;
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<double> d1;
  std::vector<double> d2;  // zeros when only one axis exists

  nlohmann::ordered_json to_json() const;
  // Header "id,d1,d2,label".
  std::string scatter_csv() const;
};

BiasReport bias_report(const LabeledEmbeddings& data, std::size_t bins = 100,
                       double epsilon = 1e-6);

struct SyntheticSet {
  LabeledEmbeddings data;
  std::vector<std::string> planted_ids;  // ascending
};

// i.i.d. standard normal features and uniform labels; round(n * fraction)
// instances get +strength (label 2) or -strength (label 1) along one random
// unit direction. Ids are "syn" + 7-digit index.
SyntheticSet generate_synthetic_biased(std::size_t n, std::size_t dim, double bias_fraction,
                                       double bias_strength, std::uint64_t seed);

// Held-out accuracy of a fresh logistic probe trained on a seeded random
// half of the data.
double probe_accuracy(const LabeledEmbeddings& data, std::uint64_t seed,
                      double regularizer_strength = 1.0);

}  // namespace debias
