#pragma once

#include <cmath>
#include <vector>

#include "hartgeom/body_model.hpp"
#include "hartgeom/levenberg_marquardt.hpp"
#include "hartgeom/markers.hpp"

namespace hartgeom {

struct FitConfig {
  double lambda_reg = 1e-2;       // L2 weight on pose and shape
  int max_iterations_per_stage = 100;
  double relative_cost_tolerance = 1e-9;
  double fd_step = 1e-5;
  std::size_t min_valid_markers = 12;
};

struct FitResult {
  BodyParams params;
  double final_cost = 0;
  std::vector<double> cost_trace;  // accepted costs across both stages
  int iterations = 0;
};

/// Markers on the current body estimate: skinned vertices gathered at the
/// model's marker vertex ids. All returned markers are valid.
inline MarkerSet model_markers(const BodyModel& model, const BodyParams& params) {
  LbsOutput out = lbs_forward_subset(model, params, model.marker_vertex_ids);
  MarkerSet m = MarkerSet::empty(model.marker_count());
  for (std::size_t k = 0; k < m.size(); ++k) {
    m.positions[k] = out.vertices[k];
    m.valid[k] = 1;
    m.support_weight[k] = 1.0;
  }
  return m;
}

namespace detail {

// Parameter vector layout: [scale, t(3), theta(3J), beta(B)].
inline Eigen::VectorXd params_to_vector(const BodyParams& p) {
  const std::size_t j = p.pose.size(), b = p.shape.size();
  Eigen::VectorXd x(4 + 3 * j + b);
  x[0] = p.scale;
  x.segment<3>(1) = p.translation;
  for (std::size_t ji = 0; ji < j; ++ji) x.segment<3>(4 + 3 * ji) = p.pose[ji];
  x.segment(4 + 3 * j, b) = p.shape;
  return x;
}

inline BodyParams vector_to_params(const Eigen::VectorXd& x, std::size_t j,
                                   std::size_t b) {
  BodyParams p;
  p.scale = x[0];
  p.translation = x.segment<3>(1);
  p.pose.resize(j);
  for (std::size_t ji = 0; ji < j; ++ji) p.pose[ji] = x.segment<3>(4 + 3 * ji);
  p.shape = x.segment(4 + 3 * j, b);
  return p;
}

}  // namespace detail

/// Two-stage Levenberg-Marquardt fit of (s, theta, beta, t) to observed
/// markers: stage 1 freezes all but the first two shape coefficients, stage 2
/// frees the full shape vector. Residuals are per-axis marker differences on
/// valid markers plus sqrt(lambda_reg)-scaled pose/shape entries.
inline FitResult fit_body(const MarkerSet& markers, const BodyModel& model,
                          const FitConfig& config = {}) {
  if (markers.size() != model.marker_count())
    throw CountMismatch("fit_body: marker set size " + std::to_string(markers.size()) +
                        " does not match model marker count " +
                        std::to_string(model.marker_count()));
  const std::size_t valid = markers.valid_count();
  if (valid < config.min_valid_markers)
    throw TooFewMarkers("fit_body: " + std::to_string(valid) + " valid markers, need " +
                        std::to_string(config.min_valid_markers));

  const std::size_t j = model.joint_count(), b = model.shape_count();
  std::vector<std::size_t> valid_ids;
  for (std::size_t k = 0; k < markers.size(); ++k)
    if (markers.valid[k]) valid_ids.push_back(k);

  // initialization: translation and scale from first and second moments of
  // the valid markers against their rest-pose counterparts
  BodyParams init = BodyParams::rest(model);
  MarkerSet rest = model_markers(model, init);
  Vec3 mean_obs = Vec3::Zero(), mean_rest = Vec3::Zero();
  for (auto k : valid_ids) {
    mean_obs += markers.positions[k];
    mean_rest += rest.positions[k];
  }
  mean_obs /= double(valid_ids.size());
  mean_rest /= double(valid_ids.size());
  double spread_obs = 0, spread_rest = 0;
  for (auto k : valid_ids) {
    spread_obs += (markers.positions[k] - mean_obs).squaredNorm();
    spread_rest += (rest.positions[k] - mean_rest).squaredNorm();
  }
  init.scale = spread_rest > 0 ? std::sqrt(spread_obs / spread_rest) : 1.0;
  if (!(init.scale > 0) || !std::isfinite(init.scale)) init.scale = 1.0;
  init.translation = mean_obs - init.scale * mean_rest;

  const double sqrt_reg = std::sqrt(config.lambda_reg);
  auto make_residuals = [&](const Eigen::VectorXd& full_template,
                            const std::vector<Eigen::Index>& free_idx) {
    return [&, full_template, free_idx](const Eigen::VectorXd& x) {
      Eigen::VectorXd full = full_template;
      for (std::size_t i = 0; i < free_idx.size(); ++i) full[free_idx[i]] = x[i];
      BodyParams p = detail::vector_to_params(full, j, b);
      MarkerSet cur = model_markers(model, p);
      Eigen::VectorXd r(3 * valid_ids.size() + (sqrt_reg > 0 ? 3 * j + b : 0));
      std::size_t at = 0;
      for (auto k : valid_ids) {
        Vec3 d = cur.positions[k] - markers.positions[k];
        r[at++] = d.x();
        r[at++] = d.y();
        r[at++] = d.z();
      }
      if (sqrt_reg > 0) {
        for (std::size_t ji = 0; ji < j; ++ji)
          for (int c = 0; c < 3; ++c) r[at++] = sqrt_reg * p.pose[ji][c];
        for (std::size_t bi = 0; bi < b; ++bi) r[at++] = sqrt_reg * p.shape[bi];
      }
      return r;
    };
  };

  LmOptions opts;
  opts.max_iterations = config.max_iterations_per_stage;
  opts.relative_cost_tolerance = config.relative_cost_tolerance;
  opts.fd_step = config.fd_step;

  // stage 1: scale, translation, pose, first two shape coefficients
  std::vector<Eigen::Index> stage1;
  for (Eigen::Index i = 0; i < Eigen::Index(4 + 3 * j); ++i) stage1.push_back(i);
  for (std::size_t bi = 0; bi < std::min<std::size_t>(2, b); ++bi)
    stage1.push_back(Eigen::Index(4 + 3 * j + bi));

  Eigen::VectorXd full = detail::params_to_vector(init);
  Eigen::VectorXd x1(stage1.size());
  for (std::size_t i = 0; i < stage1.size(); ++i) x1[i] = full[stage1[i]];
  LmResult r1 = lm_minimize(make_residuals(full, stage1), x1, opts);
  for (std::size_t i = 0; i < stage1.size(); ++i) full[stage1[i]] = r1.params[i];

  // stage 2: everything
  std::vector<Eigen::Index> stage2;
  for (Eigen::Index i = 0; i < full.size(); ++i) stage2.push_back(i);
  LmResult r2 = lm_minimize(make_residuals(full, stage2), full, opts);
  full = r2.params;

  FitResult result;
  result.params = detail::vector_to_params(full, j, b);
  result.final_cost = r2.final_cost;
  result.iterations = r1.iterations + r2.iterations;
  result.cost_trace = r1.cost_trace;
  // stage 2 starts at the stage-1 optimum; drop the duplicated head
  result.cost_trace.insert(result.cost_trace.end(), r2.cost_trace.begin() + 1,
                           r2.cost_trace.end());
  if (!std::isfinite(result.final_cost))
    throw DivergedSolve("fit_body: non-finite final cost");
  return result;
}

}  // namespace hartgeom
