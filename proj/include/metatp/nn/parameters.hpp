#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "metatp/common/rng.hpp"
#include "metatp/nn/autograd.hpp"

namespace metatp::nn {

Matrix xavier_uniform(Index rows, Index cols, Rng& rng);
Matrix normal(Index rows, Index cols, double stddev, Rng& rng);

// Named trainable tensors in registration order. The order is part of the
// checkpoint format and of the optimizer's deterministic update sequence.
class ParameterStore {
 public:
  Var add(const std::string& name, Matrix init);
  Var get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::int64_t num_scalars() const;

  void zero_grad();
  double grad_norm() const;
  // Scales all gradients so their global norm is at most max_norm. Returns
  // the norm before clipping.
  double clip_grad_norm(double max_norm);

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParameterStore& params, AdamOptions options);

  void step();
  std::int64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  ParameterStore& params_;
  AdamOptions options_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);

}  // namespace metatp::nn
