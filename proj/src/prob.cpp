#include "svehnn/prob.hpp"

#include <algorithm>
#include <cmath>

namespace svehnn {

const char* variance_mode_name(VarianceMode mode) {
  return mode == VarianceMode::as_written ? "as_written" : "bernoulli_point";
}

VarianceMode variance_mode_from_name(const std::string& name) {
  if (name == "as_written") return VarianceMode::as_written;
  if (name == "bernoulli_point") return VarianceMode::bernoulli_point;
  throw DomainError("unknown variance mode: " + name);
}

ProbWdpnModel lift_model(const WdpnModel& model, VarianceMode mode) {
  model.validate();
  return ProbWdpnModel{&model, mode};
}

namespace {

// Numerical dust from catastrophic cancellation is zeroed silently; only
// materially negative variances count as clamps.
double clamp_variance(double v, double scale, ProbDiagnostics* diag) {
  if (v >= 0.0) return v;
  if (diag && v < -1e-12 * std::max(1.0, scale)) diag->variance_clamps += 1;
  return 0.0;
}

void validate_spec(const SubsetSpec& spec, int total_features) {
  if (spec.subset_size < 0 || spec.subset_size > total_features)
    throw DomainError("subset size out of range");
  if (spec.forced_in && (*spec.forced_in < 0 || *spec.forced_in >= total_features))
    throw DomainError("forced_in feature id out of range");
  if (spec.forced_out &&
      (*spec.forced_out < 0 || *spec.forced_out >= total_features))
    throw DomainError("forced_out feature id out of range");
  if (spec.forced_in && spec.forced_out && *spec.forced_in == *spec.forced_out)
    throw DomainError("a feature cannot be forced both in and out");
}

}  // namespace

GaussianVector subset_first_layer(const Point3& point,
                                  const Point3& baseline_point,
                                  const DenseLayerParams& params,
                                  int subset_size, int total_features,
                                  ForceState force, VarianceMode mode,
                                  ProbDiagnostics* diag) {
  if (params.in_dim != 3)
    throw ShapeError("subset_first_layer: expects 3-coordinate inputs");
  const int out = params.out_dim;
  GaussianVector g{Vec(out, 0.0), Vec(out, 0.0)};
  if (force == ForceState::included) {
    for (int m = 0; m < out; ++m) {
      double h = params.bias[m];
      for (int l = 0; l < 3; ++l) h += point[l] * params.w(l, m);
      g.mean[m] = h;
    }
    return g;
  }
  if (force == ForceState::excluded) {
    for (int m = 0; m < out; ++m) {
      double h = params.bias[m];
      for (int l = 0; l < 3; ++l) h += baseline_point[l] * params.w(l, m);
      g.mean[m] = h;
    }
    return g;
  }
  const double f = static_cast<double>(total_features);
  const double k = static_cast<double>(subset_size);
  const double q = k / f;
  const bool degenerate = subset_size == 0 || subset_size == total_features;
  for (int m = 0; m < out; ++m) {
    double h_bl = params.bias[m];
    double s1 = 0.0;  // sum of per-coordinate deviations from the baseline
    double s2 = 0.0;  // sum of their squares
    for (int l = 0; l < 3; ++l) {
      const double c = (point[l] - baseline_point[l]) * params.w(l, m);
      h_bl += baseline_point[l] * params.w(l, m);
      s1 += c;
      s2 += c * c;
    }
    g.mean[m] = h_bl + q * s1;
    if (degenerate) continue;
    double v;
    if (mode == VarianceMode::as_written) {
      v = k * (f - k) / (f - 1.0) * (s2 / f - (s1 / f) * (s1 / f));
    } else {
      v = q * (1.0 - q) * s1 * s1;
    }
    g.var[m] = clamp_variance(v, s2 / f, diag);
  }
  return g;
}

GaussianVector prob_linear(const GaussianVector& g,
                           const DenseLayerParams& params) {
  if (g.size() != params.in_dim)
    throw ShapeError("prob_linear: input width mismatch");
  GaussianVector out{Vec(params.bias), Vec(params.out_dim, 0.0)};
  for (int l = 0; l < params.in_dim; ++l) {
    const double mu = g.mean[l];
    const double var = g.var[l];
    const double* row =
        params.weights.data() + static_cast<std::size_t>(l) * params.out_dim;
    for (int m = 0; m < params.out_dim; ++m) {
      out.mean[m] += mu * row[m];
      out.var[m] += var * row[m] * row[m];
    }
  }
  return out;
}

Gaussian prob_relu(const Gaussian& g) {
  if (g.var <= 0.0) return Gaussian{g.mean > 0.0 ? g.mean : 0.0, 0.0};
  const double s = std::sqrt(g.var);
  const double a = g.mean / s;
  const double cdf = norm_cdf(a);
  const double pdf = norm_pdf(a);
  const double mean = g.mean * cdf + s * pdf;
  const double second = (g.mean * g.mean + g.var) * cdf + g.mean * s * pdf;
  const double var = second - mean * mean;
  return Gaussian{mean, var > 0.0 ? var : 0.0};
}

GaussianVector prob_relu(const GaussianVector& g) {
  GaussianVector out{Vec(g.mean.size()), Vec(g.var.size())};
  for (int c = 0; c < g.size(); ++c) {
    const Gaussian r = prob_relu(Gaussian{g.mean[c], g.var[c]});
    out.mean[c] = r.mean;
    out.var[c] = r.var;
  }
  return out;
}

GaussianVector prob_batchnorm(const GaussianVector& g,
                              const BatchNormParams& params) {
  if (g.size() != params.dim())
    throw ShapeError("prob_batchnorm: channel count mismatch");
  GaussianVector out{Vec(g.mean.size()), Vec(g.var.size())};
  for (int c = 0; c < g.size(); ++c) {
    const double a = params.scale(c);
    out.mean[c] = a * g.mean[c] + params.shift(c);
    out.var[c] = a * a * g.var[c];
  }
  return out;
}

Gaussian prob_max_pair(const Gaussian& a, const Gaussian& b) {
  const double theta2 = a.var + b.var;
  if (theta2 <= 0.0) return Gaussian{std::max(a.mean, b.mean), 0.0};
  const double theta = std::sqrt(theta2);
  const double d = (a.mean - b.mean) / theta;
  const double cd = norm_cdf(d);
  const double cmd = norm_cdf(-d);
  const double pd = norm_pdf(d);
  const double mean = a.mean * cd + b.mean * cmd + theta * pd;
  const double second = (a.mean * a.mean + a.var) * cd +
                        (b.mean * b.mean + b.var) * cmd +
                        (a.mean + b.mean) * theta * pd;
  const double var = second - mean * mean;
  return Gaussian{mean, var > 0.0 ? var : 0.0};
}

GaussianVector prob_maxpool(const std::vector<GaussianVector>& per_point) {
  if (per_point.empty()) throw DomainError("prob_maxpool: empty point set");
  GaussianVector pooled = per_point[0];
  for (std::size_t j = 1; j < per_point.size(); ++j) {
    if (per_point[j].size() != pooled.size())
      throw ShapeError("prob_maxpool: channel count mismatch");
    for (int c = 0; c < pooled.size(); ++c) {
      const Gaussian m =
          prob_max_pair(Gaussian{pooled.mean[c], pooled.var[c]},
                        Gaussian{per_point[j].mean[c], per_point[j].var[c]});
      pooled.mean[c] = m.mean;
      pooled.var[c] = m.var;
    }
  }
  return pooled;
}

Gaussian tabular_subset_moments(const TabularVector& x,
                                const DenseLayerParams& fusion, int latent_dim,
                                int k_points, const SubsetSpec& spec,
                                int total_features, VarianceMode mode) {
  (void)mode;  // single-coordinate features: both modes give q(1-q) d^2
  Gaussian g;
  const double q =
      static_cast<double>(spec.subset_size) / static_cast<double>(total_features);
  for (int i = 0; i < x.size(); ++i) {
    const int feature = k_points + i;
    const double w = fusion.w(latent_dim + i, 0);
    const double contribution = w * x.values[i];  // tabular baseline is zero
    if (spec.forced_in && *spec.forced_in == feature) {
      g.mean += contribution;
    } else if (spec.forced_out && *spec.forced_out == feature) {
      // excluded feature contributes its (zero) baseline value
    } else {
      g.mean += q * contribution;
      g.var += q * (1.0 - q) * contribution * contribution;
    }
  }
  return g;
}

Gaussian prob_forward_expectation(const HeterogeneousInput& z,
                                  const ProbWdpnModel& prob_model,
                                  const SubsetSpec& spec,
                                  EvalCounter* prob_evals,
                                  ProbDiagnostics* diag) {
  const WdpnModel& model = *prob_model.model;
  if (z.cloud.size() != model.k_points)
    throw ShapeError("prob_forward_expectation: point count mismatch");
  if (z.tabular.size() != model.d_tabular)
    throw ShapeError("prob_forward_expectation: tabular width mismatch");
  const int total = model.num_features();
  validate_spec(spec, total);

  GaussianVector latent;
  if (model.k_points > 0) {
    std::vector<GaussianVector> per_point(model.k_points);
    for (int j = 0; j < model.k_points; ++j) {
      ForceState force = ForceState::free;
      if (spec.forced_in && *spec.forced_in == j) force = ForceState::included;
      if (spec.forced_out && *spec.forced_out == j) force = ForceState::excluded;
      const Point3 bl = baseline_point(spec.baseline, j, model.k_points);
      GaussianVector g = subset_first_layer(
          z.cloud.points[j], bl, model.point_mlp[0].dense, spec.subset_size,
          total, force, prob_model.mode, diag);
      g = prob_batchnorm(g, model.point_mlp[0].bn);
      if (model.point_mlp[0].relu) g = prob_relu(g);
      for (std::size_t l = 1; l < model.point_mlp.size(); ++l) {
        g = prob_linear(g, model.point_mlp[l].dense);
        g = prob_batchnorm(g, model.point_mlp[l].bn);
        if (model.point_mlp[l].relu) g = prob_relu(g);
      }
      per_point[j] = std::move(g);
    }
    latent = prob_maxpool(per_point);
    if (diag && model.k_points > 1) {
      std::vector<GaussianVector> reversed(per_point.rbegin(), per_point.rend());
      const GaussianVector alt = prob_maxpool(reversed);
      for (int c = 0; c < latent.size(); ++c)
        diag->fold_sensitivity = std::max(
            diag->fold_sensitivity, std::abs(latent.mean[c] - alt.mean[c]));
    }
  }

  Gaussian out{model.fusion.bias[0], 0.0};
  for (int c = 0; c < latent.size(); ++c) {
    const double w = model.fusion.w(c, 0);
    out.mean += w * latent.mean[c];
    out.var += w * w * latent.var[c];
  }
  const Gaussian tab =
      tabular_subset_moments(z.tabular, model.fusion, model.latent_dim(),
                             model.k_points, spec, total, prob_model.mode);
  out.mean += tab.mean;
  out.var += tab.var;
  if (diag) diag->max_output_variance = std::max(diag->max_output_variance, out.var);
  if (prob_evals) prob_evals->add(1);
  return out;
}

double expectation_difference(int feature, int k, const HeterogeneousInput& z,
                              const ProbWdpnModel& prob_model,
                              const BaselineSpec& baseline,
                              EvalCounter* prob_evals, ProbDiagnostics* diag) {
  const int total = prob_model.model->num_features();
  if (feature < 0 || feature >= total)
    throw DomainError("expectation_difference: feature id out of range");
  if (k < 0 || k >= std::max(total, 1) + 1)
    throw DomainError("expectation_difference: subset size out of range");
  SubsetSpec with{k, feature, std::nullopt, baseline};
  SubsetSpec without{k, std::nullopt, feature, baseline};
  const double mu_with =
      prob_forward_expectation(z, prob_model, with, prob_evals, diag).mean;
  const double mu_without =
      prob_forward_expectation(z, prob_model, without, prob_evals, diag).mean;
  // For tabular features with a zero baseline the shared latent terms cancel
  // and this difference reduces to w_i * x_i.
  return mu_with - mu_without;
}

}  // namespace svehnn
