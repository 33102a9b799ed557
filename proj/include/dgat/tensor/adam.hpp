// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/tensor/tensor.hpp"

namespace dgat {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers for one parameter tensor.
struct AdamSlot {
  Tensor m;
  Tensor v;
};

class Adam {
public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig &config() const { return config_; }
  long step_count() const { return step_; }

  // Applies one update across all parameters. `params` and `grads` must
  // line up pairwise in shape and keep the same order across calls; the
  // optional per-parameter lr factors implement discriminative rates
  // (e.g. a smaller backbone rate during fine-tuning).
  void step(std::vector<Tensor *> params, const std::vector<const Tensor *> &grads,
            const std::vector<double> *lr_scales = nullptr) {
    if (params.size() != grads.size())
      throw ShapeError("adam: parameter/gradient count mismatch");
    if (lr_scales != nullptr && lr_scales->size() != params.size())
      throw ShapeError("adam: lr scale count mismatch");
    if (slots_.empty()) {
      slots_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        slots_[i].m = Tensor(params[i]->rows(), params[i]->cols());
        slots_[i].v = Tensor(params[i]->rows(), params[i]->cols());
      }
    }
    if (slots_.size() != params.size())
      throw ShapeError("adam: parameter count changed between steps");
    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, step_);
    const double bc2 = 1.0 - std::pow(config_.beta2, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor &p = *params[i];
      const Tensor &g = *grads[i];
      if (!p.same_shape(g))
        throw ShapeError("adam: gradient shape mismatch at parameter " +
                         std::to_string(i));
      AdamSlot &s = slots_[i];
      const double lr =
          config_.lr * (lr_scales != nullptr ? (*lr_scales)[i] : 1.0);
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = g.data()[j];
        double &mj = s.m.data()[j];
        double &vj = s.v.data()[j];
        mj = config_.beta1 * mj + (1.0 - config_.beta1) * gj;
        vj = config_.beta2 * vj + (1.0 - config_.beta2) * gj * gj;
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        p.data()[j] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
      check_finite(p, "adam_step");
    }
  }

private:
  AdamConfig config_;
  std::vector<AdamSlot> slots_;
  long step_ = 0;
};

} // namespace dgat
