#include "debias/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "debias/error.hpp"
#include "debias/logistic.hpp"
#include "debias/rng.hpp"

namespace debias {
namespace {

Eigen::MatrixXd to_matrix(const EmbeddingTable& table) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto row = table.row(r);
    for (std::size_t c = 0; c < table.dim(); ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return x;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Projection pca_project(const EmbeddingTable& table, std::size_t dims) {
  if (dims < 1 || dims > 2) throw InvalidArgument("pca_project: dims must be 1 or 2");
  if (table.rows() < dims + 1)
    throw InvalidArgument("pca_project: need at least " + std::to_string(dims + 1) + " rows, got " +
                          std::to_string(table.rows()));
  if (table.dim() < dims)
    throw InvalidArgument("pca_project: embedding dim " + std::to_string(table.dim()) +
                          " is below requested dims");

  const Eigen::MatrixXd x = to_matrix(table);
  Projection proj;
  proj.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - proj.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(table.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw InvalidArgument("pca_project: eigensolver failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::Index d = cov.rows();
  proj.explained_variance = solver.eigenvalues().reverse().cwiseMax(0.0);
  const double top = proj.explained_variance[0];
  const double tol = std::max(top, 1.0) * 1e-12 * static_cast<double>(d);
  proj.rank = static_cast<std::size_t>((proj.explained_variance.array() > tol).count());
  if (proj.rank < dims)
    throw InvalidArgument("pca_project: data rank " + std::to_string(proj.rank) +
                          " is below requested dims " + std::to_string(dims));

  proj.components.resize(d, static_cast<Eigen::Index>(dims));
  for (std::size_t a = 0; a < dims; ++a) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - static_cast<Eigen::Index>(a));
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis[arg] < 0) axis = -axis;
    proj.components.col(static_cast<Eigen::Index>(a)) = axis;
  }
  proj.coordinates = centered * proj.components;
  return proj;
}

Histograms label_histograms(std::span<const double> values, std::span<const int> labels,
                            std::size_t bins) {
  if (bins < 2) throw InvalidArgument("label_histograms: need at least 2 bins");
  if (values.size() != labels.size())
    throw InvalidArgument("label_histograms: values and labels differ in length");
  if (values.empty()) throw InvalidArgument("label_histograms: no values");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw InvalidArgument("label_histograms: all values identical (zero range)");

  Histograms h;
  h.label1.assign(bins, 0.0);
  h.label2.assign(bins, 0.0);
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges[bins] = hi;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bin = static_cast<std::size_t>(std::floor((values[i] - lo) / width));
    bin = std::min(bin, bins - 1);
    if (labels[i] == 1)
      h.label1[bin] += 1;
    else if (labels[i] == 2)
      h.label2[bin] += 1;
    else
      throw InvalidArgument("label_histograms: label outside {1,2}");
  }
  return h;
}

double kl_divergence(std::span<const double> p_counts, std::span<const double> q_counts,
                     double epsilon) {
  if (p_counts.size() != q_counts.size())
    throw InvalidArgument("kl_divergence: length mismatch (" + std::to_string(p_counts.size()) +
                          " vs " + std::to_string(q_counts.size()) + ")");
  if (!(epsilon >= 0)) throw InvalidArgument("kl_divergence: epsilon must be nonnegative");
  double p_total = 0, q_total = 0;
  for (std::size_t i = 0; i < p_counts.size(); ++i) {
    if (!(p_counts[i] >= 0) || !(q_counts[i] >= 0))
      throw InvalidArgument("kl_divergence: counts must be nonnegative");
    p_total += p_counts[i] + epsilon;
    q_total += q_counts[i] + epsilon;
  }
  if (!(p_total > 0) || !(q_total > 0))
    throw InvalidArgument("kl_divergence: a distribution has zero mass");
  double kl = 0;
  for (std::size_t i = 0; i < p_counts.size(); ++i) {
    const double p = (p_counts[i] + epsilon) / p_total;
    const double q = (q_counts[i] + epsilon) / q_total;
    if (p > 0) kl += p * std::log(p / q);
  }
  return std::max(kl, 0.0);
}

nlohmann::ordered_json BiasReport::to_json() const {
  nlohmann::ordered_json j;
  j["kl"] = kl;
  j["kl_reverse"] = kl_reverse;
  j["kl_direction"] = "label1||label2";
  j["epsilon"] = epsilon;
  j["bins"] = histograms.label1.size();
  j["count_label1"] = std::count(labels.begin(), labels.end(), 1);
  j["count_label2"] = std::count(labels.begin(), labels.end(), 2);
  j["explained_variance"] = explained_variance;
  j["bin_edges"] = histograms.edges;
  j["histogram_label1"] = histograms.label1;
  j["histogram_label2"] = histograms.label2;
  return j;
}

std::string BiasReport::scatter_csv() const {
  std::string out = "id,d1,d2,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out += ids[i] + ',' + fmt(d1[i]) + ',' + fmt(d2[i]) + ',' + std::to_string(labels[i]) + '\n';
  return out;
}

BiasReport bias_report(const LabeledEmbeddings& data, std::size_t bins, double epsilon) {
  const bool has1 = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
  const bool has2 = std::find(data.labels.begin(), data.labels.end(), 2) != data.labels.end();
  if (!has1 || !has2) throw InvalidArgument("bias_report: both labels must be present");

  Projection proj;
  const bool two_axes = data.table.dim() >= 2 && data.size() >= 3;
  try {
    proj = pca_project(data.table, two_axes ? 2 : 1);
  } catch (const InvalidArgument&) {
    if (!two_axes) throw;
    proj = pca_project(data.table, 1);
  }

  BiasReport report;
  report.epsilon = epsilon;
  report.ids = data.table.ids();
  report.labels = data.labels;
  report.explained_variance.assign(proj.explained_variance.begin(), proj.explained_variance.end());
  const auto rows = static_cast<Eigen::Index>(data.size());
  report.d1.resize(data.size());
  report.d2.assign(data.size(), 0.0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    report.d1[static_cast<std::size_t>(r)] = proj.coordinates(r, 0);
    if (proj.coordinates.cols() > 1) report.d2[static_cast<std::size_t>(r)] = proj.coordinates(r, 1);
  }
  report.histograms = label_histograms(report.d1, report.labels, bins);
  report.kl = kl_divergence(report.histograms.label1, report.histograms.label2, epsilon);
  report.kl_reverse = kl_divergence(report.histograms.label2, report.histograms.label1, epsilon);
  return report;
}

SyntheticSet generate_synthetic_biased(std::size_t n, std::size_t dim, double bias_fraction,
                                       double bias_strength, std::uint64_t seed) {
  if (dim < 2) throw InvalidArgument("generate_synthetic_biased: dim must be >= 2");
  if (!(bias_fraction >= 0.0 && bias_fraction <= 1.0))
    throw InvalidArgument("generate_synthetic_biased: bias_fraction must lie in [0, 1]");
  if (!std::isfinite(bias_strength))
    throw InvalidArgument("generate_synthetic_biased: bias_strength must be finite");
  if (n > 9'999'999) throw InvalidArgument("generate_synthetic_biased: n too large for id format");

  auto rng = make_stream(seed, {static_cast<std::uint64_t>(Stream::kSynthetic)});
  std::vector<double> direction(dim);
  double norm = 0;
  for (auto& v : direction) {
    v = standard_normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : direction) v /= norm;

  const auto planted_count =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * bias_fraction));
  const auto order = sample_prefix(n, planted_count, rng);
  std::vector<bool> planted(n, false);
  for (std::size_t i = 0; i < planted_count; ++i) planted[order[i]] = true;

  std::vector<std::string> ids(n);
  std::vector<int> labels(n);
  std::vector<float> values(n * dim);
  for (std::size_t r = 0; r < n; ++r) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "syn%07zu", r);
    ids[r] = buf;
    labels[r] = (rng() >> 63) ? 2 : 1;
    const double sign = labels[r] == 2 ? 1.0 : -1.0;
    for (std::size_t c = 0; c < dim; ++c) {
      double v = standard_normal(rng);
      if (planted[r]) v += sign * bias_strength * direction[c];
      values[r * dim + c] = static_cast<float>(v);
    }
  }

  SyntheticSet out;
  for (std::size_t r = 0; r < n; ++r)
    if (planted[r]) out.planted_ids.push_back(ids[r]);
  out.data = make_labeled(EmbeddingTable(std::move(ids), std::move(values), dim), std::move(labels));
  return out;
}

double probe_accuracy(const LabeledEmbeddings& data, std::uint64_t seed, double regularizer_strength) {
  const std::size_t n = data.size();
  if (n < 2) throw InvalidArgument("probe_accuracy: need at least 2 rows");
  auto rng = make_stream(seed, {static_cast<std::uint64_t>(Stream::kProbe)});
  const std::size_t train_count = n / 2;
  const auto order = sample_prefix(n, train_count, rng);
  Eigen::MatrixXd train(static_cast<Eigen::Index>(train_count), static_cast<Eigen::Index>(data.table.dim()));
  std::vector<int> labels(train_count);
  for (std::size_t i = 0; i < train_count; ++i) {
    const auto row = data.table.row(order[i]);
    for (std::size_t c = 0; c < row.size(); ++c)
      train(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    labels[i] = data.labels[order[i]];
  }
  TrainOptions opts;
  opts.regularizer_strength = regularizer_strength;
  const auto model = train_linear_classifier(train, labels, opts);
  std::size_t correct = 0;
  for (std::size_t i = train_count; i < n; ++i)
    if (predict(model, data.table.row(order[i])) == data.labels[order[i]]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(n - train_count);
}

}  // namespace debias
