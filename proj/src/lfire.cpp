#include "bed/lfire.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bed/logistic.hpp"

namespace bed {

DataVector to_data(const SimOutcome& y) {
  return DataVector(y.values.begin(), y.values.end());
}

std::vector<DataVector> to_data(const std::vector<SimOutcome>& ys) {
  std::vector<DataVector> out;
  out.reserve(ys.size());
  for (const auto& y : ys) out.push_back(to_data(y));
  return out;
}

namespace {

std::size_t poly2_output_dim(std::size_t d) { return d + d * (d + 1) / 2; }

void expand_raw_monomials(FeatureKind kind, const DataVector& y, double* row) {
  const std::size_t d = y.size();
  for (std::size_t i = 0; i < d; ++i) row[i] = y[i];
  if (kind == FeatureKind::kStandardizedPoly2) {
    std::size_t c = d;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) row[c++] = y[i] * y[j];
    }
  }
}

// Builds the regression matrix [1 | standardised features] for pooled data.
Eigen::MatrixXd build_design_matrix(const std::vector<DataVector>& numerator,
                                    const std::vector<DataVector>& denominator,
                                    const FeatureMap& map) {
  const std::size_t n = numerator.size() + denominator.size();
  const std::size_t p = map.output_dim();
  Eigen::MatrixXd X(n, p + 1);
  X.col(0).setOnes();
  std::vector<double> row(p);
  std::size_t r = 0;
  for (const auto* cls : {&numerator, &denominator}) {
    for (const auto& y : *cls) {
      map.expand(y, row.data());
      for (std::size_t j = 0; j < p; ++j) X(r, j + 1) = row[j];
      ++r;
    }
  }
  return X;
}

Eigen::VectorXd build_targets(std::size_t n_pos, std::size_t n_neg) {
  Eigen::VectorXd t(n_pos + n_neg);
  t.head(n_pos).setOnes();
  t.tail(n_neg).setZero();
  return t;
}

}  // namespace

FeatureMap FeatureMap::fit(const std::vector<DataVector>& numerator,
                           const std::vector<DataVector>& denominator, FeatureKind kind) {
  if (numerator.empty() && denominator.empty()) {
    throw std::invalid_argument("fit_feature_map: empty pooled dataset");
  }
  const std::size_t d = (numerator.empty() ? denominator.front() : numerator.front()).size();
  FeatureMap map;
  map.kind_ = kind;
  map.input_dim_ = d;
  const std::size_t p = (kind == FeatureKind::kStandardizedPoly2) ? poly2_output_dim(d) : d;
  map.means_.assign(p, 0.0);
  map.scales_.assign(p, 1.0);
  map.degenerate_.assign(p, false);

  // Two passes over the pooled data: mean, then population standard deviation.
  const double n = static_cast<double>(numerator.size() + denominator.size());
  std::vector<double> row(p);
  for (const auto* cls : {&numerator, &denominator}) {
    for (const auto& y : *cls) {
      if (y.size() != d) throw std::invalid_argument("fit_feature_map: ragged data");
      expand_raw_monomials(kind, y, row.data());
      for (std::size_t j = 0; j < p; ++j) map.means_[j] += row[j];
    }
  }
  for (std::size_t j = 0; j < p; ++j) map.means_[j] /= n;
  std::vector<double> ss(p, 0.0);
  for (const auto* cls : {&numerator, &denominator}) {
    for (const auto& y : *cls) {
      expand_raw_monomials(kind, y, row.data());
      for (std::size_t j = 0; j < p; ++j) {
        const double c = row[j] - map.means_[j];
        ss[j] += c * c;
      }
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    const double sd = std::sqrt(ss[j] / n);
    if (sd < 1e-12) {
      map.scales_[j] = 1.0;  // constant feature: centred value is 0 everywhere
      map.degenerate_[j] = true;
    } else {
      map.scales_[j] = sd;
    }
  }
  return map;
}

void FeatureMap::expand(const DataVector& y, double* row) const {
  if (y.size() != input_dim_) {
    throw std::invalid_argument("feature map: input dimension mismatch");
  }
  expand_raw_monomials(kind_, y, row);
  for (std::size_t j = 0; j < means_.size(); ++j) {
    row[j] = (row[j] - means_[j]) / scales_[j];
  }
}

Eigen::RowVectorXd FeatureMap::transform(const DataVector& y) const {
  Eigen::RowVectorXd row(output_dim());
  expand(y, row.data());
  return row;
}

nlohmann::json FeatureMap::to_json() const {
  return nlohmann::json{
      {"kind", kind_ == FeatureKind::kRaw ? "raw" : "standardized-poly2"},
      {"input_dim", input_dim_},
      {"means", means_},
      {"scales", scales_},
  };
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
  FeatureMap map;
  map.kind_ = j.at("kind").get<std::string>() == "raw" ? FeatureKind::kRaw
                                                       : FeatureKind::kStandardizedPoly2;
  map.input_dim_ = j.at("input_dim").get<std::size_t>();
  map.means_ = j.at("means").get<std::vector<double>>();
  map.scales_ = j.at("scales").get<std::vector<double>>();
  map.degenerate_.assign(map.means_.size(), false);  // fit-time diagnostic, not serialised
  return map;
}

double RatioModel::log_ratio(const DataVector& y) const {
  if (coefficients.size() == 0) return intercept;  // identity / zero model
  return intercept + feature_map.transform(y).dot(coefficients);
}

nlohmann::json RatioModel::to_json() const {
  std::vector<double> coef(coefficients.data(), coefficients.data() + coefficients.size());
  return nlohmann::json{{"intercept", intercept},
                        {"coefficients", coef},
                        {"feature_map", feature_map.to_json()},
                        {"converged", converged},
                        {"iterations", iterations}};
}

RatioModel RatioModel::from_json(const nlohmann::json& j) {
  RatioModel m;
  m.intercept = j.at("intercept").get<double>();
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  m.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
  m.feature_map = FeatureMap::from_json(j.at("feature_map"));
  m.converged = j.at("converged").get<bool>();
  m.iterations = j.at("iterations").get<int>();
  return m;
}

std::vector<double> LfireConfig::effective_cv_grid() const {
  if (!cv_penalty_grid.empty()) return cv_penalty_grid;
  // Half-decade steps from 1e4/M down to 1e-2/M.
  std::vector<double> grid;
  const double base = effective_penalty();
  for (double mult = 1e4; mult > 0.99e-2; mult /= 3.1622776601683795) {
    grid.push_back(base * mult);
  }
  return grid;
}

MarginalDataset sample_marginal(const DesignPoint& design, const PriorSpec& prior,
                                const Simulator& simulator, std::size_t m, RngStream& rng) {
  if (m < 2) throw std::invalid_argument("sample_marginal: need at least two samples");
  MarginalDataset dataset;
  dataset.design = design;
  dataset.outcomes.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    RngStream sub = rng.derive(i);
    const ParameterDraw theta = prior.sample(sub);
    dataset.outcomes.push_back(simulator.simulate(theta, design, sub));
  }
  dataset.data = to_data(dataset.outcomes);
  return dataset;
}

FeatureMap fit_feature_map(const std::vector<SimOutcome>& numerator,
                           const std::vector<SimOutcome>& denominator, FeatureKind kind) {
  return FeatureMap::fit(to_data(numerator), to_data(denominator), kind);
}

RatioModel fit_ratio_data(const std::vector<DataVector>& numerator,
                          const std::vector<DataVector>& denominator, const LfireConfig& cfg) {
  if (numerator.empty() || denominator.empty()) {
    throw std::invalid_argument("fit_ratio: both classes must be non-empty");
  }
  RatioModel model;
  model.feature_map = FeatureMap::fit(numerator, denominator, cfg.features);
  if (cfg.force_identity) {
    model.intercept = 0.0;
    model.coefficients = Eigen::VectorXd::Zero(model.feature_map.output_dim());
    return model;
  }
  double penalty = cfg.effective_penalty();
  if (cfg.cv_folds > 0) penalty = cross_validated_penalty(numerator, denominator, cfg);

  const Eigen::MatrixXd X = build_design_matrix(numerator, denominator, model.feature_map);
  const Eigen::VectorXd t = build_targets(numerator.size(), denominator.size());
  LogisticOptions opts;
  opts.l2_penalty = penalty;
  opts.gradient_tolerance = cfg.gradient_tolerance;
  opts.max_iterations = cfg.max_iterations;

  // Exactly collinear feature columns (compartment counts summing to the
  // population, and all their cross-monomials) keep the Hessian singular up
  // to the penalty and slow Newton down badly. A rank-revealing QR of the
  // Gram matrix selects a maximal independent column subset; dropped columns
  // get zero coefficients, which represents the same function.
  Eigen::MatrixXd gram(X.cols(), X.cols());
  gram.noalias() = X.transpose() * X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  qr.setThreshold(1e-11);
  const Eigen::Index rank = qr.rank();

  LogisticResult fit;
  if (rank >= X.cols()) {
    fit = fit_logistic_l2(X, t, opts);
  } else {
    std::vector<Eigen::Index> keep(qr.colsPermutation().indices().data(),
                                   qr.colsPermutation().indices().data() + rank);
    if (std::find(keep.begin(), keep.end(), 0) == keep.end()) keep.back() = 0;
    std::sort(keep.begin(), keep.end());  // intercept stays in front
    Eigen::MatrixXd Xr(X.rows(), rank);
    for (Eigen::Index c = 0; c < rank; ++c) Xr.col(c) = X.col(keep[c]);
    const LogisticResult reduced = fit_logistic_l2(Xr, t, opts);
    fit.weights = Eigen::VectorXd::Zero(X.cols());
    for (Eigen::Index c = 0; c < rank; ++c) fit.weights[keep[c]] = reduced.weights[c];
    fit.converged = reduced.converged;
    fit.iterations = reduced.iterations;
  }

  // The fitted log-odds estimates log r + log(n_pos/n_neg); remove the
  // prior-odds offset so balanced fits are untouched.
  const double offset = std::log(static_cast<double>(numerator.size()) /
                                 static_cast<double>(denominator.size()));
  model.intercept = fit.weights[0] - offset;
  model.coefficients = fit.weights.tail(fit.weights.size() - 1);
  model.converged = fit.converged;
  model.iterations = fit.iterations;
  return model;
}

RatioModel fit_ratio(const DesignPoint& design, const ParameterDraw& theta,
                     const Simulator& simulator, const MarginalDataset& marginal,
                     const LfireConfig& cfg, RngStream& rng) {
  if (marginal.size() < 2) throw std::invalid_argument("fit_ratio: marginal dataset too small");
  std::vector<DataVector> positives;
  positives.reserve(cfg.samples_per_class);
  for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
    RngStream sub = rng.derive(i);
    positives.push_back(to_data(simulator.simulate(theta, design, sub)));
  }
  return fit_ratio_data(positives, marginal.data, cfg);
}

double cross_validated_penalty(const std::vector<DataVector>& numerator,
                               const std::vector<DataVector>& denominator,
                               const LfireConfig& cfg) {
  const int folds = cfg.cv_folds;
  if (folds < 2) throw std::invalid_argument("cross_validated_penalty: need at least 2 folds");
  const std::vector<double> grid = cfg.effective_cv_grid();

  const FeatureMap map = FeatureMap::fit(numerator, denominator, cfg.features);
  const Eigen::MatrixXd X = build_design_matrix(numerator, denominator, map);
  const Eigen::VectorXd t = build_targets(numerator.size(), denominator.size());
  const Eigen::Index n = X.rows();

  std::vector<double> score(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    // Deterministic interleaved folds; classes stay balanced because rows
    // alternate within each class block.
    std::vector<Eigen::Index> train_rows, val_rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      (i % folds == f ? val_rows : train_rows).push_back(i);
    }
    Eigen::MatrixXd Xtr(train_rows.size(), X.cols()), Xval(val_rows.size(), X.cols());
    Eigen::VectorXd ttr(train_rows.size()), tval(val_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      Xtr.row(i) = X.row(train_rows[i]);
      ttr[i] = t[train_rows[i]];
    }
    for (std::size_t i = 0; i < val_rows.size(); ++i) {
      Xval.row(i) = X.row(val_rows[i]);
      tval[i] = t[val_rows[i]];
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      LogisticOptions opts;
      opts.l2_penalty = grid[g];
      opts.gradient_tolerance = 1e-6;  // validation scoring does not need the full tolerance
      opts.max_iterations = 60;
      const LogisticResult fit = fit_logistic_l2(Xtr, ttr, opts);
      score[g] += logistic_mean_loss(Xval, tval, fit.weights);
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (score[g] < score[best]) best = g;
  }
  return grid[best];
}

}  // namespace bed
