#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "svehnn/nn.hpp"

namespace svehnn {

struct LabeledExample {
  HeterogeneousInput input;
  int label = 0;  // binary
};

struct DatasetManifest {
  std::string generator;
  std::int64_t n_examples = 0;
  int k_points = 0;
  int d_tabular = 0;
  std::uint64_t seed = 0;
  std::array<std::int64_t, 2> class_counts{0, 0};
  nlohmann::json params = nlohmann::json::object();
  // ground-truth informativeness per tabular column (hetero generator only)
  std::optional<std::vector<bool>> informative;

  std::string id() const;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<LabeledExample> examples;
};

// 16-point clouds tracing the characters X (two diagonal strokes of the
// square [-1,1]^2) and I (the vertical segment x = 0), embedded at z = 0,
// with isotropic in-plane Gaussian jitter. Label 1 = X, label 0 = I.
Dataset generate_xi(int n, std::uint64_t seed, double jitter);

// Heterogeneous task: sphere (label 0) vs ellipsoid (label 1) surface
// samples plus D tabular columns, of which `informative` are class-shifted
// and the rest pure noise. informative < 0 picks the default D/2.
Dataset generate_hetero(int n, int k, int d, std::uint64_t seed,
                        int informative = -1);

void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace svehnn
