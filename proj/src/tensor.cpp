#include "amrnmt/tensor.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace amrnmt {

namespace {

std::size_t shape_numel(const std::vector<int>& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d < 0) throw std::runtime_error("tensor: negative dimension in shape");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> s)
    : shape(std::move(s)), data(std::make_shared<std::vector<double>>(shape_numel(shape), 0.0)) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> values) : shape(std::move(s)) {
  if (shape_numel(shape) != values.size())
    throw std::runtime_error("tensor: data length does not match shape " + shape_str());
  data = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

std::size_t Tensor::numel() const { return data ? data->size() : 0; }

int Tensor::rows() const {
  if (shape.size() == 1) return 1;
  if (shape.size() == 2) return shape[0];
  throw std::runtime_error("tensor: rows() on rank-" + std::to_string(shape.size()) + " tensor");
}

int Tensor::cols() const {
  if (shape.size() == 1) return shape[0];
  if (shape.size() == 2) return shape[1];
  throw std::runtime_error("tensor: cols() on rank-" + std::to_string(shape.size()) + " tensor");
}

double& Tensor::at(int i, int j) { return (*data)[static_cast<std::size_t>(i) * cols() + j]; }
double Tensor::at(int i, int j) const { return (*data)[static_cast<std::size_t>(i) * cols() + j]; }

double Tensor::item() const {
  if (!is_scalar()) throw std::runtime_error("tensor: item() on non-scalar " + shape_str());
  return (*data)[0];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tape::leaf(const Tensor& value) {
  Tensor out = value;
  out.tape = this;
  out.node = push_node(value.shape);
  return out;
}

int Tape::push_node(const std::vector<int>& shape) {
  nodes_.push_back(Node{shape, nullptr});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::set_backward(int id, BackwardFn fn) { nodes_[static_cast<std::size_t>(id)].backward = std::move(fn); }

std::vector<double>& Tape::grad_buf(int id) {
  auto uid = static_cast<std::size_t>(id);
  if (grads_.size() < nodes_.size()) {
    grads_.resize(nodes_.size());
    reached_.resize(nodes_.size(), 0);
  }
  if (grads_[uid].empty()) {
    std::size_t n = 1;
    for (int d : nodes_[uid].shape) n *= static_cast<std::size_t>(d);
    grads_[uid].assign(n, 0.0);
  }
  reached_[uid] = 1;
  return grads_[uid];
}

const std::vector<double>& Tape::grad_ref(int id) const { return grads_[static_cast<std::size_t>(id)]; }

void Tape::backward(const Tensor& loss) {
  if (loss.tape != this || loss.node < 0)
    throw std::runtime_error("backward: loss is not recorded on this tape");
  if (!loss.is_scalar())
    throw std::runtime_error("backward: loss must be scalar, got " + loss.shape_str());
  grads_.assign(nodes_.size(), {});
  reached_.assign(nodes_.size(), 0);
  grad_buf(loss.node)[0] = 1.0;
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.backward && reached_[static_cast<std::size_t>(id)]) n.backward(*this);
  }
}

Tensor Tape::grad(const Tensor& t) const {
  if (t.tape != this || t.node < 0)
    throw std::runtime_error("grad: tensor is not recorded on this tape");
  auto uid = static_cast<std::size_t>(t.node);
  Tensor g(t.shape);
  if (uid < grads_.size() && !grads_[uid].empty()) *g.data = grads_[uid];
  return g;
}

Tape* common_tape(const Tensor& a, const Tensor& b) {
  if (a.tape && b.tape && a.tape != b.tape)
    throw std::runtime_error("ops: inputs recorded on different tapes");
  return a.tape ? a.tape : b.tape;
}

}  // namespace amrnmt
