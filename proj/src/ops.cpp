#include "amrnmt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "amrnmt/kernels.hpp"

namespace amrnmt {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape)
    throw std::runtime_error(std::string(op) + ": shape mismatch: " + a.shape_str() + " vs " +
                             b.shape_str());
}

Tape* common_tape_of(const std::vector<Tensor>& parts) {
  Tape* tp = nullptr;
  for (const auto& p : parts) {
    if (!p.tape) continue;
    if (tp && tp != p.tape) throw std::runtime_error("ops: inputs recorded on different tapes");
    tp = p.tape;
  }
  return tp;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2)
    throw std::runtime_error("matmul: expects 2-d tensors, got " + a.shape_str() + " and " +
                             b.shape_str());
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  if (b.shape[0] != k)
    throw std::runtime_error("matmul: inner dimensions disagree: " + a.shape_str() + " vs " +
                             b.shape_str());
  Tensor out({m, n});
  kernels::mm_nn(a.data->data(), b.data->data(), out.data->data(), m, k, n);
  if (Tape* tp = common_tape(a, b)) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, a, b, m, k, n](Tape& t) {
      const double* go = t.grad_ref(self).data();
      if (a.node >= 0) kernels::mm_nt_acc(go, b.data->data(), t.grad_buf(a.node).data(), m, n, k);
      if (b.node >= 0) kernels::mm_tn_acc(a.data->data(), go, t.grad_buf(b.node).data(), k, m, n);
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
  if (Tape* tp = common_tape(a, b)) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, an = a.node, bn = b.node, n](Tape& t) {
      const auto& go = t.grad_ref(self);
      if (an >= 0) {
        auto& ga = t.grad_buf(an);
        for (std::size_t i = 0; i < n; ++i) ga[i] += go[i];
      }
      if (bn >= 0) {
        auto& gb = t.grad_buf(bn);
        for (std::size_t i = 0; i < n; ++i) gb[i] += go[i];
      }
    });
  }
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  const int m = x.rows(), n = x.cols();
  if (static_cast<int>(v.numel()) != n)
    throw std::runtime_error("add_rowvec: vector length " + v.shape_str() + " does not match " +
                             x.shape_str());
  Tensor out(x.shape);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) + (*v.data)[j];
  if (Tape* tp = common_tape(x, v)) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, vn = v.node, m, n](Tape& t) {
      const auto& go = t.grad_ref(self);
      if (xn >= 0) {
        auto& gx = t.grad_buf(xn);
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
      }
      if (vn >= 0) {
        auto& gv = t.grad_buf(vn);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) gv[j] += go[static_cast<std::size_t>(i) * n + j];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
  if (Tape* tp = common_tape(a, b)) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, a, b, n](Tape& t) {
      const auto& go = t.grad_ref(self);
      if (a.node >= 0) {
        auto& ga = t.grad_buf(a.node);
        for (std::size_t i = 0; i < n; ++i) ga[i] += go[i] * (*b.data)[i];
      }
      if (b.node >= 0) {
        auto& gb = t.grad_buf(b.node);
        for (std::size_t i = 0; i < n; ++i) gb[i] += go[i] * (*a.data)[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double c) {
  Tensor out(x.shape);
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*x.data)[i] * c;
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, c, n](Tape& t) {
      const auto& go = t.grad_ref(self);
      if (xn >= 0) {
        auto& gx = t.grad_buf(xn);
        for (std::size_t i = 0; i < n; ++i) gx[i] += go[i] * c;
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape);
  kernels::vsigmoid(x.data->data(), out.data->data(), x.numel());
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, y = out.data](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (*y)[i] * (1.0 - (*y)[i]);
    });
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  Tensor out(x.shape);
  kernels::vtanh(x.data->data(), out.data->data(), x.numel());
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, y = out.data](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (1.0 - (*y)[i] * (*y)[i]);
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& x, const std::vector<std::uint8_t>* mask) {
  const int m = x.rows(), n = x.cols();
  if (mask && mask->size() != x.numel())
    throw std::runtime_error("softmax_rows: mask size does not match " + x.shape_str());
  Tensor out(x.shape);
  for (int i = 0; i < m; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (!mask || (*mask)[base + j]) mx = std::max(mx, (*x.data)[base + j]);
    if (mx == -std::numeric_limits<double>::infinity())
      throw std::runtime_error("softmax_rows: fully masked row " + std::to_string(i));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!mask || (*mask)[base + j]) {
        const double e = std::exp((*x.data)[base + j] - mx);
        (*out.data)[base + j] = e;
        sum += e;
      } else {
        (*out.data)[base + j] = 0.0;
      }
    }
    for (int j = 0; j < n; ++j) (*out.data)[base + j] /= sum;
  }
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, y = out.data, m, n](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (int i = 0; i < m; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += go[base + j] * (*y)[base + j];
        for (int j = 0; j < n; ++j) gx[base + j] += (*y)[base + j] * (go[base + j] - dot);
      }
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  std::vector<Tensor> live;
  for (const auto& p : parts)
    if (p.numel() > 0) live.push_back(p);
  if (live.empty()) throw std::runtime_error("concat: all parts empty");
  const bool vec = live[0].shape.size() == 1;
  for (const auto& p : live)
    if ((p.shape.size() == 1) != vec) throw std::runtime_error("concat: mixed ranks");

  Tensor out;
  if (vec || axis == 0) {
    const int n = live[0].cols();
    int total_rows = 0;
    for (const auto& p : live) {
      if (!vec && p.cols() != n)
        throw std::runtime_error("concat: column mismatch: " + p.shape_str() + " vs " +
                                 live[0].shape_str());
      if (vec && p.shape.size() != 1) throw std::runtime_error("concat: mixed ranks");
      total_rows += vec ? p.shape[0] : p.rows();
    }
    out = vec ? Tensor({total_rows}) : Tensor({total_rows, n});
    std::size_t pos = 0;
    for (const auto& p : live) {
      std::copy(p.data->begin(), p.data->end(), out.data->begin() + pos);
      pos += p.numel();
    }
  } else if (axis == 1) {
    const int m = live[0].rows();
    int total_cols = 0;
    for (const auto& p : live) {
      if (p.rows() != m)
        throw std::runtime_error("concat: row mismatch: " + p.shape_str() + " vs " +
                                 live[0].shape_str());
      total_cols += p.cols();
    }
    out = Tensor({m, total_cols});
    int col0 = 0;
    for (const auto& p : live) {
      const int pc = p.cols();
      for (int i = 0; i < m; ++i)
        std::copy(p.data->begin() + static_cast<std::size_t>(i) * pc,
                  p.data->begin() + static_cast<std::size_t>(i + 1) * pc,
                  out.data->begin() + static_cast<std::size_t>(i) * total_cols + col0);
      col0 += pc;
    }
  } else {
    throw std::runtime_error("concat: axis must be 0 or 1");
  }

  if (Tape* tp = common_tape_of(live)) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    const int out_cols = out.cols();
    tp->set_backward(self, [self, live, axis, vec, out_cols](Tape& t) {
      const auto& go = t.grad_ref(self);
      if (vec || axis == 0) {
        std::size_t pos = 0;
        for (const auto& p : live) {
          if (p.node >= 0) {
            auto& gp = t.grad_buf(p.node);
            for (std::size_t i = 0; i < p.numel(); ++i) gp[i] += go[pos + i];
          }
          pos += p.numel();
        }
      } else {
        int col0 = 0;
        for (const auto& p : live) {
          const int pc = p.cols(), pm = p.rows();
          if (p.node >= 0) {
            auto& gp = t.grad_buf(p.node);
            for (int i = 0; i < pm; ++i)
              for (int j = 0; j < pc; ++j)
                gp[static_cast<std::size_t>(i) * pc + j] +=
                    go[static_cast<std::size_t>(i) * out_cols + col0 + j];
          }
          col0 += pc;
        }
      }
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
  const int m = x.rows(), n = x.cols();
  if (c0 < 0 || c1 > n || c0 >= c1)
    throw std::runtime_error("slice_cols: bad range [" + std::to_string(c0) + "," +
                             std::to_string(c1) + ") for " + x.shape_str());
  const int w = c1 - c0;
  Tensor out({m, w});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j) out.at(i, j) = x.at(i, c0 + j);
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, m, n, c0, w](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          gx[static_cast<std::size_t>(i) * n + c0 + j] += go[static_cast<std::size_t>(i) * w + j];
    });
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  if (table.shape.size() != 2)
    throw std::runtime_error("embedding_lookup: table must be 2-d, got " + table.shape_str());
  const int v = table.shape[0], d = table.shape[1];
  for (int id : ids)
    if (id < 0 || id >= v)
      throw std::runtime_error("embedding_lookup: id " + std::to_string(id) + " out of range [0," +
                               std::to_string(v) + ")");
  Tensor out({static_cast<int>(ids.size()), d});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy(table.data->begin() + static_cast<std::size_t>(ids[i]) * d,
              table.data->begin() + static_cast<std::size_t>(ids[i] + 1) * d,
              out.data->begin() + i * d);
  if (Tape* tp = table.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, tn = table.node, ids, d](Tape& t) {
      if (tn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gt = t.grad_buf(tn);
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < d; ++j)
          gt[static_cast<std::size_t>(ids[i]) * d + j] += go[i * d + j];
    });
  }
  return out;
}

Tensor repeat_rows(const Tensor& x, int times) {
  if (times < 1) throw std::runtime_error("repeat_rows: times must be >= 1");
  const int m = x.rows(), n = x.cols();
  Tensor out({m * times, n});
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < times; ++r)
      std::copy(x.data->begin() + static_cast<std::size_t>(i) * n,
                x.data->begin() + static_cast<std::size_t>(i + 1) * n,
                out.data->begin() + (static_cast<std::size_t>(i) * times + r) * n);
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, m, n, times](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (int i = 0; i < m; ++i)
        for (int r = 0; r < times; ++r)
          for (int j = 0; j < n; ++j)
            gx[static_cast<std::size_t>(i) * n + j] +=
                go[(static_cast<std::size_t>(i) * times + r) * n + j];
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& indices) {
  const int m = x.rows(), d = x.cols();
  for (int i : indices)
    if (i < 0 || i >= m)
      throw std::runtime_error("gather_rows: row index " + std::to_string(i) + " out of range [0," +
                               std::to_string(m) + ")");
  Tensor out({static_cast<int>(indices.size()), d});
  for (std::size_t r = 0; r < indices.size(); ++r)
    std::copy(x.data->begin() + static_cast<std::size_t>(indices[r]) * d,
              x.data->begin() + static_cast<std::size_t>(indices[r] + 1) * d,
              out.data->begin() + r * d);
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, indices, d](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (std::size_t r = 0; r < indices.size(); ++r)
        for (int j = 0; j < d; ++j)
          gx[static_cast<std::size_t>(indices[r]) * d + j] += go[r * d + j];
    });
  }
  return out;
}

Tensor weighted_rows_sum(const Tensor& memory, const Tensor& weights) {
  const int b = weights.rows(), l = weights.cols();
  const int d = memory.cols();
  if (memory.rows() != b * l)
    throw std::runtime_error("weighted_rows_sum: memory " + memory.shape_str() +
                             " does not match weights " + weights.shape_str());
  Tensor out({b, d});
  for (int e = 0; e < b; ++e)
    for (int i = 0; i < l; ++i) {
      const double w = weights.at(e, i);
      const std::size_t row = (static_cast<std::size_t>(e) * l + i) * d;
      for (int j = 0; j < d; ++j) out.at(e, j) += w * (*memory.data)[row + j];
    }
  if (Tape* tp = common_tape(memory, weights)) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, memory, weights, b, l, d](Tape& t) {
      const auto& go = t.grad_ref(self);
      if (memory.node >= 0) {
        auto& gm = t.grad_buf(memory.node);
        for (int e = 0; e < b; ++e)
          for (int i = 0; i < l; ++i) {
            const double w = weights.at(e, i);
            const std::size_t row = (static_cast<std::size_t>(e) * l + i) * d;
            for (int j = 0; j < d; ++j) gm[row + j] += w * go[static_cast<std::size_t>(e) * d + j];
          }
      }
      if (weights.node >= 0) {
        auto& gw = t.grad_buf(weights.node);
        for (int e = 0; e < b; ++e)
          for (int i = 0; i < l; ++i) {
            const std::size_t row = (static_cast<std::size_t>(e) * l + i) * d;
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
              acc += (*memory.data)[row + j] * go[static_cast<std::size_t>(e) * d + j];
            gw[static_cast<std::size_t>(e) * l + i] += acc;
          }
      }
    });
  }
  return out;
}

Tensor adjacency_sum(const Tensor& x, const std::vector<std::vector<int>>& lists) {
  const int m = x.rows(), d = x.cols();
  const int n = static_cast<int>(lists.size());
  for (const auto& lst : lists)
    for (int i : lst)
      if (i < 0 || i >= m)
        throw std::runtime_error("adjacency_sum: row index " + std::to_string(i) +
                                 " out of range [0," + std::to_string(m) + ")");
  Tensor out({n, d});
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled() && n * d > 32768)
  for (int j = 0; j < n; ++j) {
    double* oj = out.data->data() + static_cast<std::size_t>(j) * d;
    for (int i : lists[j]) {
      const double* xi = x.data->data() + static_cast<std::size_t>(i) * d;
      for (int c = 0; c < d; ++c) oj[c] += xi[c];
    }
  }
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, lists, d, n](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (int j = 0; j < n; ++j)
        for (int i : lists[j])
          for (int c = 0; c < d; ++c)
            gx[static_cast<std::size_t>(i) * d + c] += go[static_cast<std::size_t>(j) * d + c];
    });
  }
  return out;
}

Tensor pad_rows(const Tensor& x, const std::vector<int>& offsets, const std::vector<int>& counts,
                int max_rows) {
  if (offsets.size() != counts.size()) throw std::runtime_error("pad_rows: offsets/counts mismatch");
  const int b = static_cast<int>(offsets.size());
  const int d = x.cols();
  for (int e = 0; e < b; ++e) {
    if (counts[e] > max_rows) throw std::runtime_error("pad_rows: count exceeds max_rows");
    if (offsets[e] < 0 || offsets[e] + counts[e] > x.rows())
      throw std::runtime_error("pad_rows: block out of range");
  }
  Tensor out({b * max_rows, d});
  for (int e = 0; e < b; ++e)
    for (int r = 0; r < counts[e]; ++r)
      std::copy(x.data->begin() + static_cast<std::size_t>(offsets[e] + r) * d,
                x.data->begin() + static_cast<std::size_t>(offsets[e] + r + 1) * d,
                out.data->begin() + (static_cast<std::size_t>(e) * max_rows + r) * d);
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, offsets, counts, max_rows, d, b](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (int e = 0; e < b; ++e)
        for (int r = 0; r < counts[e]; ++r)
          for (int j = 0; j < d; ++j)
            gx[static_cast<std::size_t>(offsets[e] + r) * d + j] +=
                go[(static_cast<std::size_t>(e) * max_rows + r) * d + j];
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  if (n != x.numel())
    throw std::runtime_error("reshape: element count mismatch for " + x.shape_str());
  Tensor out;
  out.shape = std::move(shape);
  out.data = x.data;  // row-major layout is unchanged
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    });
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  double total = 0.0;
  for (double v : *x.data) total += v;
  Tensor out = Tensor::scalar(total);
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, n = x.numel()](Tape& t) {
      if (xn < 0) return;
      const double g = t.grad_ref(self)[0];
      auto& gx = t.grad_buf(xn);
      for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor nll_pick_sum(const Tensor& probs, const std::vector<int>& ids,
                    const std::vector<std::uint8_t>& mask) {
  constexpr double kFloor = 1e-12;
  const int b = probs.rows(), v = probs.cols();
  if (static_cast<int>(ids.size()) != b || mask.size() != ids.size())
    throw std::runtime_error("nll_pick_sum: ids/mask size does not match " + probs.shape_str());
  double total = 0.0;
  for (int e = 0; e < b; ++e) {
    if (!mask[e]) continue;
    if (ids[e] < 0 || ids[e] >= v)
      throw std::runtime_error("nll_pick_sum: id " + std::to_string(ids[e]) + " out of range");
    total -= std::log(std::max(probs.at(e, ids[e]), kFloor));
  }
  Tensor out = Tensor::scalar(total);
  if (Tape* tp = probs.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, probs, ids, mask, v](Tape& t) {
      if (probs.node < 0) return;
      const double g = t.grad_ref(self)[0];
      auto& gp = t.grad_buf(probs.node);
      for (std::size_t e = 0; e < ids.size(); ++e) {
        if (!mask[e]) continue;
        const double p = probs.at(static_cast<int>(e), ids[e]);
        if (p >= kFloor) gp[e * v + ids[e]] -= g / p;
      }
    });
  }
  return out;
}

Tensor dropout_mask_mul(const Tensor& x, const std::vector<std::uint8_t>& keep, double keep_prob) {
  if (keep.size() != x.numel())
    throw std::runtime_error("dropout_mask_mul: mask size does not match " + x.shape_str());
  if (keep_prob <= 0.0 || keep_prob > 1.0)
    throw std::runtime_error("dropout_mask_mul: keep_prob out of (0,1]");
  const double s = 1.0 / keep_prob;
  Tensor out(x.shape);
  for (std::size_t i = 0; i < keep.size(); ++i)
    (*out.data)[i] = keep[i] ? (*x.data)[i] * s : 0.0;
  if (Tape* tp = x.tape) {
    out.tape = tp;
    const int self = tp->push_node(out.shape);
    out.node = self;
    tp->set_backward(self, [self, xn = x.node, keep, s](Tape& t) {
      if (xn < 0) return;
      const auto& go = t.grad_ref(self);
      auto& gx = t.grad_buf(xn);
      for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) gx[i] += go[i] * s;
    });
  }
  return out;
}

}  // namespace amrnmt
