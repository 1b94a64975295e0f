#include "dslad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dslad {

namespace {

void require(bool ok, const char* what, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(what) + ": " + detail);
}

std::string shape_str(int r, int c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

void check_same_tape(Tensor a, Tensor b) {
  if (a.tape != b.tape || a.tape == nullptr)
    throw StateError("operands recorded on different tapes");
}

void check_finite(const Matrix& m, const char* op) {
  if (!m.all_finite())
    throw NumericError(std::string("non-finite value produced by ") + op);
}

Tensor wrap(Tape& tape, Matrix value, std::vector<int> parents, Tape::BackFn fn,
            bool requires_grad, const char* op) {
  check_finite(value, op);
  return tape.emplace(std::move(value), std::move(parents), std::move(fn),
                      requires_grad, op);
}

}  // namespace

bool Matrix::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows_in) {
  Matrix m(int(rows_in.size()), rows_in.size() ? int(rows_in.begin()->size()) : 0);
  int r = 0;
  for (const auto& row : rows_in) {
    require(int(row.size()) == m.cols, "from_rows", "ragged row");
    int c = 0;
    for (double v : row) m.at(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "matmul", shape_str(a.rows, a.cols) + " * " + shape_str(b.rows, b.cols));
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[std::size_t(i) * a.cols];
    double* orow = &out.data[std::size_t(i) * b.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[std::size_t(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix transposed(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

// --- Tape ---

Tensor Tape::emplace(Matrix value, std::vector<int> parents, BackFn fn,
                     bool requires_grad, const char* /*op_name*/) {
  if (backward_done_)
    throw StateError("tape already consumed by backward(); start a new tape");
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward = std::move(fn);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  const int id = int(nodes_.size()) - 1;
  return Tensor{this, id, nodes_.back().value.rows, nodes_.back().value.cols};
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
  check_finite(value, "leaf");
  return emplace(std::move(value), {}, nullptr, requires_grad, "leaf");
}

Tensor Tape::param(Parameter& p) {
  Tensor t = leaf(p.value, true);
  nodes_[std::size_t(t.id)].bound = &p;
  return t;
}

const Tape::Node& Tape::node_at(Tensor t) const {
  if (t.tape != this || t.id < 0 || std::size_t(t.id) >= nodes_.size())
    throw StateError("tensor does not belong to this tape");
  return nodes_[std::size_t(t.id)];
}

Matrix& Tape::grad_buffer(int id) {
  Node& n = nodes_[std::size_t(id)];
  if (!n.grad_alloc) {
    n.grad = Matrix(n.value.rows, n.value.cols);
    n.grad_alloc = true;
  }
  return n.grad;
}

bool Tape::has_grad(int id) const { return nodes_[std::size_t(id)].grad_alloc; }

Matrix Tape::gradient(Tensor t) const {
  const Node& n = node_at(t);
  if (!n.grad_alloc) return Matrix(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::backward(Tensor loss) {
  node_at(loss);
  if (backward_done_) throw StateError("backward() called twice on one tape");
  if (loss.rows != 1 || loss.cols != 1)
    throw ShapeError("backward() requires a 1x1 loss, got " + shape_str(loss.rows, loss.cols));
  backward_done_ = true;
  grad_buffer(loss.id).at(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[std::size_t(id)];
    if (!n.grad_alloc || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, id);
    if (n.bound) {
      Matrix& g = n.bound->grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i];
    }
  }
}

// --- ops ---

Tensor matmul(Tensor a, Tensor b) {
  check_same_tape(a, b);
  Tape& tp = *a.tape;
  Matrix out = matmul(tp.value(a), tp.value(b));
  const int ia = a.id, ib = b.id;
  const bool rg = tp.requires_grad(ia) || tp.requires_grad(ib);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, ib](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      if (t.requires_grad(ia)) {
        Matrix da = matmul(g, transposed(t.node_value(ib)));
        Matrix& acc = t.grad_buffer(ia);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += da.data[i];
      }
      if (t.requires_grad(ib)) {
        Matrix db = matmul(transposed(t.node_value(ia)), g);
        Matrix& acc = t.grad_buffer(ib);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += db.data[i];
      }
    };
  }
  return wrap(tp, std::move(out), {ia, ib}, std::move(fn), rg, "matmul");
}

Tensor spmm(const CsrMatrix& a, Tensor h) {
  Tape& tp = *h.tape;
  const Matrix& hv = tp.value(h);
  require(a.cols == hv.rows, "spmm", shape_str(int(a.rows), int(a.cols)) + " * " + shape_str(hv.rows, hv.cols));
  Matrix out(int(a.rows), hv.cols);
  for (std::int64_t r = 0; r < a.rows; ++r) {
    double* orow = &out.data[std::size_t(r) * hv.cols];
    for (std::int64_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
      const double v = a.values[std::size_t(k)];
      const double* hrow = &hv.data[std::size_t(a.col_indices[std::size_t(k)]) * hv.cols];
      for (int j = 0; j < hv.cols; ++j) orow[j] += v * hrow[j];
    }
  }
  const int ih = h.id;
  const bool rg = tp.requires_grad(ih);
  Tape::BackFn fn;
  if (rg) {
    // grad_h = A^T * g, accumulated row-by-row off the CSR structure.
    const CsrMatrix* ap = &a;
    fn = [ih, ap](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      Matrix& acc = t.grad_buffer(ih);
      for (std::int64_t r = 0; r < ap->rows; ++r) {
        const double* grow = &g.data[std::size_t(r) * g.cols];
        for (std::int64_t k = ap->offsets[r]; k < ap->offsets[r + 1]; ++k) {
          const double v = ap->values[std::size_t(k)];
          double* arow = &acc.data[std::size_t(ap->col_indices[std::size_t(k)]) * acc.cols];
          for (int j = 0; j < g.cols; ++j) arow[j] += v * grow[j];
        }
      }
    };
  }
  return wrap(tp, std::move(out), {ih}, std::move(fn), rg, "spmm");
}

namespace {

Tensor elementwise_binary(Tensor a, Tensor b, double sign_b, const char* op) {
  check_same_tape(a, b);
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  const Matrix& bv = tp.value(b);
  require(av.same_shape(bv), op, shape_str(av.rows, av.cols) + " vs " + shape_str(bv.rows, bv.cols));
  Matrix out(av.rows, av.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = av.data[i] + sign_b * bv.data[i];
  const int ia = a.id, ib = b.id;
  const bool rg = tp.requires_grad(ia) || tp.requires_grad(ib);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, ib, sign_b](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      if (t.requires_grad(ia)) {
        Matrix& acc = t.grad_buffer(ia);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
      }
      if (t.requires_grad(ib)) {
        Matrix& acc = t.grad_buffer(ib);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += sign_b * g.data[i];
      }
    };
  }
  return wrap(tp, std::move(out), {ia, ib}, std::move(fn), rg, op);
}

// Elementwise unary with gradient expressed from input x and output y.
template <class F, class G>
Tensor elementwise_unary(Tensor a, F fwd, G dfn, const char* op) {
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  Matrix out(av.rows, av.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fwd(av.data[i]);
  const int ia = a.id;
  const bool rg = tp.requires_grad(ia);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, dfn](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      const Matrix& x = t.node_value(ia);
      const Matrix& y = t.node_value(self);
      Matrix& acc = t.grad_buffer(ia);
      for (std::size_t i = 0; i < acc.data.size(); ++i)
        acc.data[i] += dfn(x.data[i], y.data[i]) * g.data[i];
    };
  }
  return wrap(tp, std::move(out), {ia}, std::move(fn), rg, op);
}

}  // namespace

Tensor add(Tensor a, Tensor b) { return elementwise_binary(a, b, 1.0, "add"); }
Tensor sub(Tensor a, Tensor b) { return elementwise_binary(a, b, -1.0, "sub"); }

Tensor mul_scalar(Tensor a, double c) {
  return elementwise_unary(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; }, "mul_scalar");
}

Tensor hadamard(Tensor a, Tensor b) {
  check_same_tape(a, b);
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  const Matrix& bv = tp.value(b);
  require(av.same_shape(bv), "hadamard", shape_str(av.rows, av.cols) + " vs " + shape_str(bv.rows, bv.cols));
  Matrix out(av.rows, av.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = av.data[i] * bv.data[i];
  const int ia = a.id, ib = b.id;
  const bool rg = tp.requires_grad(ia) || tp.requires_grad(ib);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, ib](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      if (t.requires_grad(ia)) {
        const Matrix& bvv = t.node_value(ib);
        Matrix& acc = t.grad_buffer(ia);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += bvv.data[i] * g.data[i];
      }
      if (t.requires_grad(ib)) {
        const Matrix& avv = t.node_value(ia);
        Matrix& acc = t.grad_buffer(ib);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += avv.data[i] * g.data[i];
      }
    };
  }
  return wrap(tp, std::move(out), {ia, ib}, std::move(fn), rg, "hadamard");
}

Tensor transpose(Tensor a) {
  Tape& tp = *a.tape;
  Matrix out = transposed(tp.value(a));
  const int ia = a.id;
  const bool rg = tp.requires_grad(ia);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia](Tape& t, int self) {
      Matrix gt = transposed(t.grad_buffer(self));
      Matrix& acc = t.grad_buffer(ia);
      for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += gt.data[i];
    };
  }
  return wrap(tp, std::move(out), {ia}, std::move(fn), rg, "transpose");
}

Tensor row_select(Tensor a, int row) {
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  if (row < 0 || row >= av.rows) throw BoundsError("row_select: row out of range");
  Matrix out(1, av.cols);
  for (int j = 0; j < av.cols; ++j) out.at(0, j) = av.at(row, j);
  const int ia = a.id;
  const bool rg = tp.requires_grad(ia);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, row](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      Matrix& acc = t.grad_buffer(ia);
      for (int j = 0; j < g.cols; ++j) acc.at(row, j) += g.at(0, j);
    };
  }
  return wrap(tp, std::move(out), {ia}, std::move(fn), rg, "row_select");
}

Tensor row_mean_excluding(Tensor a, int row) {
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  if (row < 0 || row >= av.rows) throw BoundsError("row_mean_excluding: row out of range");
  if (av.rows < 2) throw ShapeError("row_mean_excluding needs at least 2 rows");
  Matrix out(1, av.cols);
  const double inv = 1.0 / double(av.rows - 1);
  for (int i = 0; i < av.rows; ++i) {
    if (i == row) continue;
    for (int j = 0; j < av.cols; ++j) out.at(0, j) += av.at(i, j) * inv;
  }
  const int ia = a.id;
  const bool rg = tp.requires_grad(ia);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, row, inv](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      Matrix& acc = t.grad_buffer(ia);
      for (int i = 0; i < acc.rows; ++i) {
        if (i == row) continue;
        for (int j = 0; j < g.cols; ++j) acc.at(i, j) += inv * g.at(0, j);
      }
    };
  }
  return wrap(tp, std::move(out), {ia}, std::move(fn), rg, "row_mean_excluding");
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape& tp = *parts[0].tape;
  const int cols = parts[0].cols;
  int total = 0;
  bool rg = false;
  std::vector<int> parents;
  parents.reserve(parts.size());
  for (Tensor p : parts) {
    check_same_tape(parts[0], p);
    if (p.cols != cols) throw ShapeError("concat_rows: column mismatch");
    total += p.rows;
    rg = rg || tp.requires_grad(p.id);
    parents.push_back(p.id);
  }
  Matrix out(total, cols);
  int r = 0;
  for (Tensor p : parts) {
    const Matrix& pv = tp.value(p);
    std::copy(pv.data.begin(), pv.data.end(), out.data.begin() + std::size_t(r) * cols);
    r += p.rows;
  }
  Tape::BackFn fn;
  if (rg) {
    std::vector<int> ids = parents;
    fn = [ids](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      int row = 0;
      for (int id : ids) {
        const int nrows = t.node_value(id).rows;
        if (t.requires_grad(id)) {
          Matrix& acc = t.grad_buffer(id);
          for (std::size_t i = 0; i < acc.data.size(); ++i)
            acc.data[i] += g.data[std::size_t(row) * g.cols + i];
        }
        row += nrows;
      }
    };
  }
  return wrap(tp, std::move(out), std::move(parents), std::move(fn), rg, "concat_rows");
}

namespace {

Tensor reduce_all(Tensor a, double scale, const char* op) {
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  double acc = 0.0;
  for (double v : av.data) acc += v;
  Matrix out(1, 1);
  out.at(0, 0) = acc * scale;
  const int ia = a.id;
  const bool rg = tp.requires_grad(ia);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, scale](Tape& t, int self) {
      const double g = t.grad_buffer(self).at(0, 0) * scale;
      Matrix& accm = t.grad_buffer(ia);
      for (double& v : accm.data) v += g;
    };
  }
  return wrap(tp, std::move(out), {ia}, std::move(fn), rg, op);
}

}  // namespace

Tensor sum(Tensor a) { return reduce_all(a, 1.0, "sum"); }

Tensor mean(Tensor a) {
  const std::size_t n = std::size_t(a.rows) * std::size_t(a.cols);
  if (n == 0) throw ShapeError("mean of empty tensor");
  return reduce_all(a, 1.0 / double(n), "mean");
}

Tensor sigmoid(Tensor a) {
  return elementwise_unary(
      a,
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor relu(Tensor a) {
  return elementwise_unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; }, "relu");
}

Tensor log(Tensor a) {
  const Matrix& av = a.tape->value(a);
  for (double v : av.data)
    if (v <= 0.0) throw NumericError("log of non-positive value");
  return elementwise_unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; }, "log");
}

Tensor exp(Tensor a) {
  return elementwise_unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; }, "exp");
}

Tensor softplus(Tensor a) {
  return elementwise_unary(
      a,
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); },
      [](double x, double) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      },
      "softplus");
}

Tensor clamp(Tensor a, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("clamp: lo must be < hi");
  return elementwise_unary(
      a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; }, "clamp");
}

Tensor l2_norm_sq_rows(Tensor a) {
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  Matrix out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += av.at(i, j) * av.at(i, j);
    out.at(i, 0) = s;
  }
  const int ia = a.id;
  const bool rg = tp.requires_grad(ia);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      const Matrix& x = t.node_value(ia);
      Matrix& acc = t.grad_buffer(ia);
      for (int i = 0; i < acc.rows; ++i)
        for (int j = 0; j < acc.cols; ++j) acc.at(i, j) += 2.0 * x.at(i, j) * g.at(i, 0);
    };
  }
  return wrap(tp, std::move(out), {ia}, std::move(fn), rg, "l2_norm_sq_rows");
}

Tensor dot_rows(Tensor a, Tensor b) {
  check_same_tape(a, b);
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  const Matrix& bv = tp.value(b);
  require(av.same_shape(bv), "dot_rows", shape_str(av.rows, av.cols) + " vs " + shape_str(bv.rows, bv.cols));
  Matrix out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += av.at(i, j) * bv.at(i, j);
    out.at(i, 0) = s;
  }
  const int ia = a.id, ib = b.id;
  const bool rg = tp.requires_grad(ia) || tp.requires_grad(ib);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, ib](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      if (t.requires_grad(ia)) {
        const Matrix& bvv = t.node_value(ib);
        Matrix& acc = t.grad_buffer(ia);
        for (int i = 0; i < acc.rows; ++i)
          for (int j = 0; j < acc.cols; ++j) acc.at(i, j) += bvv.at(i, j) * g.at(i, 0);
      }
      if (t.requires_grad(ib)) {
        const Matrix& avv = t.node_value(ia);
        Matrix& acc = t.grad_buffer(ib);
        for (int i = 0; i < acc.rows; ++i)
          for (int j = 0; j < acc.cols; ++j) acc.at(i, j) += avv.at(i, j) * g.at(i, 0);
      }
    };
  }
  return wrap(tp, std::move(out), {ia, ib}, std::move(fn), rg, "dot_rows");
}

Tensor row_l2_normalize(Tensor a) {
  constexpr double kFloor = 1e-12;
  Tape& tp = *a.tape;
  const Matrix& av = tp.value(a);
  Matrix out(av.rows, av.cols);
  std::vector<double> norms(std::size_t(av.rows));
  for (int i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += av.at(i, j) * av.at(i, j);
    const double n = std::max(std::sqrt(s), kFloor);
    norms[std::size_t(i)] = n;
    for (int j = 0; j < av.cols; ++j) out.at(i, j) = av.at(i, j) / n;
  }
  const int ia = a.id;
  const bool rg = tp.requires_grad(ia);
  Tape::BackFn fn;
  if (rg) {
    fn = [ia, norms](Tape& t, int self) {
      const Matrix& g = t.grad_buffer(self);
      const Matrix& y = t.node_value(self);
      Matrix& acc = t.grad_buffer(ia);
      for (int i = 0; i < acc.rows; ++i) {
        double ydotg = 0.0;
        for (int j = 0; j < acc.cols; ++j) ydotg += y.at(i, j) * g.at(i, j);
        const double inv = 1.0 / norms[std::size_t(i)];
        for (int j = 0; j < acc.cols; ++j)
          acc.at(i, j) += inv * (g.at(i, j) - y.at(i, j) * ydotg);
      }
    };
  }
  return wrap(tp, std::move(out), {ia}, std::move(fn), rg, "row_l2_normalize");
}

double scalar_value(Tensor t) {
  if (t.rows != 1 || t.cols != 1) throw ShapeError("scalar_value on non-scalar tensor");
  return t.tape->value(t).at(0, 0);
}

// --- optimizer / init ---

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    p->step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(p->step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(p->step_count));
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      const double g = p->grad.data[i];
      double& m = p->adam_m.data[i];
      double& v = p->adam_v.data[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
      p->value.data[i] -= cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
    }
    p->grad.fill(0.0);
  }
}

Matrix xavier_init(int rows, int cols, rng::Engine& eng) {
  const double bound = std::sqrt(6.0 / double(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng::uniform_real(eng, -bound, bound);
  return m;
}

}  // namespace dslad
