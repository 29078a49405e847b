#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace amrnmt {

class Tape;

/// Dense row-major tensor of 64-bit floats. Copies share the underlying
/// buffer; operations always allocate fresh output buffers, so a buffer is
/// never mutated once another tensor can see it (parameter values are updated
/// in place only between tapes, by the optimizer).
///
/// `tape`/`node` tie a value into the computation record that produced it.
/// Both stay unset on plain constants, so running model code on un-watched
/// inputs evaluates without recording anything.
struct Tensor {
  std::vector<int> shape;
  std::shared_ptr<std::vector<double>> data;
  Tape* tape = nullptr;
  int node = -1;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<double> values);
  static Tensor scalar(double v);

  std::size_t numel() const;
  /// 2-d accessors; a 1-d tensor of length n is treated as 1×n.
  int rows() const;
  int cols() const;
  double& at(int i, int j);
  double at(int i, int j) const;
  double& operator[](std::size_t i) { return (*data)[i]; }
  double operator[](std::size_t i) const { return (*data)[i]; }
  bool is_scalar() const { return numel() == 1; }
  double item() const;

  std::string shape_str() const;
};

/// Reverse-mode computation record. Operations append themselves in execution
/// order, so the node list is topologically sorted by construction; backward
/// walks it once in reverse, accumulating gradients per node id. A tape is
/// owned by one execution context; separate tapes over shared read-only
/// parameter values may run concurrently.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&)>;

  /// Registers a differentiable input (parameter or constant); shares its buffer.
  Tensor leaf(const Tensor& value);

  /// Gradient of the last backward() target w.r.t. `t`; zeros if the loss
  /// does not reach it.
  Tensor grad(const Tensor& t) const;

  /// Seeds d(loss)/d(loss) = 1 and sweeps the record in reverse.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }

  // Recording interface, used by the op implementations.
  int push_node(const std::vector<int>& shape);
  void set_backward(int id, BackwardFn fn);
  std::vector<double>& grad_buf(int id);  // allocates zeros on first touch, marks reached
  const std::vector<double>& grad_ref(int id) const;

 private:
  struct Node {
    std::vector<int> shape;
    BackwardFn backward;  // null for leaves
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::vector<char> reached_;
};

/// Throws unless a and b belong to the same tape (or at most one is taped);
/// returns the common tape, or nullptr.
Tape* common_tape(const Tensor& a, const Tensor& b);

}  // namespace amrnmt
