#include "metatp/nn/parameters.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "metatp/common/error.hpp"

namespace metatp::nn {

Matrix xavier_uniform(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
  return m;
}

Matrix normal(Index rows, Index cols, double stddev, Rng& rng) {
  // Box-Muller on the portable uniform source
  Matrix m(rows, cols);
  constexpr double kTwoPi = 6.283185307179586;
  for (Index i = 0; i < m.size(); i += 2) {
    const double u1 = 1.0 - uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    m.data()[i] = stddev * r * std::cos(kTwoPi * u2);
    if (i + 1 < m.size()) m.data()[i + 1] = stddev * r * std::sin(kTwoPi * u2);
  }
  return m;
}

Var ParameterStore::add(const std::string& name, Matrix init) {
  if (contains(name)) throw Error(ErrorCode::kConfig, "duplicate parameter " + name);
  Var v = parameter(std::move(init));
  items_.emplace_back(name, v);
  return v;
}

Var ParameterStore::get(const std::string& name) const {
  for (const auto& [n, v] : items_)
    if (n == name) return v;
  throw Error(ErrorCode::kConfig, "no parameter " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& item : items_)
    if (item.first == name) return true;
  return false;
}

std::int64_t ParameterStore::num_scalars() const {
  std::int64_t n = 0;
  for (const auto& item : items_) n += item.second.value().size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& item : items_) item.second.node().grad.resize(0, 0);
}

double ParameterStore::grad_norm() const {
  double s = 0.0;
  for (const auto& item : items_) {
    if (item.second.node().has_grad()) s += item.second.grad().squaredNorm();
  }
  return std::sqrt(s);
}

double ParameterStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& item : items_) {
      if (item.second.node().has_grad()) item.second.node().grad *= f;
    }
  }
  return norm;
}

Adam::Adam(ParameterStore& params, AdamOptions options) : params_(params), options_(options) {
  for (const auto& item : params_.items()) {
    m_.push_back(Matrix::Zero(item.second.rows(), item.second.cols()));
    v_.push_back(Matrix::Zero(item.second.rows(), item.second.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    Node& node = items[i].second.node();
    if (!node.has_grad()) continue;
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * node.grad;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * node.grad.cwiseAbs2();
    node.value.array() -= options_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + options_.eps);
  }
}

void write_matrix(std::ostream& out, const Matrix& m) {
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& in) {
  std::int64_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] < 0 || dims[1] < 0 || dims[0] * dims[1] > (std::int64_t{1} << 32)) {
    throw Error(ErrorCode::kCorruptFile, "bad matrix header");
  }
  Matrix m(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw Error(ErrorCode::kCorruptFile, "truncated matrix");
  return m;
}

void Adam::save(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
  const auto n = static_cast<std::int64_t>(m_.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    write_matrix(out, m_[i]);
    write_matrix(out, v_[i]);
  }
}

void Adam::load(std::istream& in) {
  std::int64_t n = 0;
  in.read(reinterpret_cast<char*>(&t_), sizeof(t_));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n != static_cast<std::int64_t>(m_.size())) throw Error(ErrorCode::kCorruptFile, "optimizer state size");
  for (std::size_t i = 0; i < m_.size(); ++i) {
    Matrix m = read_matrix(in);
    Matrix v = read_matrix(in);
    if (m.rows() != m_[i].rows() || m.cols() != m_[i].cols() || v.rows() != v_[i].rows() || v.cols() != v_[i].cols()) {
      throw Error(ErrorCode::kCorruptFile, "optimizer state shape");
    }
    m_[i] = std::move(m);
    v_[i] = std::move(v);
  }
}

}  // namespace metatp::nn
