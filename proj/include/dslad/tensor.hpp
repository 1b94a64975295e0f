#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dslad/error.hpp"
#include "dslad/rng.hpp"

namespace dslad {

// Dense row-major matrix of 64-bit reals. All model math runs in double
// so the finite-difference checks stay tight.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(std::size_t(r) * c, 0.0) {}

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix full(int r, int c, double v) {
    Matrix m(r, c);
    std::fill(m.data.begin(), m.data.end(), v);
    return m;
  }
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  double& at(int r, int c) { return data[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return data[std::size_t(r) * cols + c]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& m);

// Sparse matrix in CSR form used for the constant whole-graph operator.
// Gradients never flow through the sparse operand.
struct CsrMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> offsets;
  std::vector<std::int64_t> col_indices;
  std::vector<double> values;
};

class Tape;

// Handle to a value recorded on a Tape.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;
  int rows = 0;
  int cols = 0;
};

// Trainable matrix plus its accumulated gradient and Adam moment buffers.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.rows, value.cols),
        adam_m(value.rows, value.cols),
        adam_v(value.rows, value.cols) {}
};

// Reverse-mode computation record. Nodes are appended in execution order,
// so walking them backwards is a valid topological sweep. A Tape belongs
// to one worker; it is not shared between threads.
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int)>;

  Tensor leaf(Matrix value, bool requires_grad = false);
  // Leaf bound to a Parameter; backward() accumulates into p.grad.
  Tensor param(Parameter& p);

  void backward(Tensor loss);

  const Matrix& value(Tensor t) const { return node_at(t).value; }
  // Gradient of the last backward() w.r.t. t; zero matrix if t was unused.
  Matrix gradient(Tensor t) const;

  std::size_t num_nodes() const { return nodes_.size(); }

  // Internal node construction used by the op free functions.
  Tensor emplace(Matrix value, std::vector<int> parents, BackFn fn, bool requires_grad,
                 const char* op_name);
  Matrix& grad_buffer(int id);
  bool has_grad(int id) const;
  const Matrix& node_value(int id) const { return nodes_[std::size_t(id)].value; }
  bool requires_grad(int id) const { return nodes_[std::size_t(id)].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily during backward
    std::vector<int> parents;
    BackFn backward;
    Parameter* bound = nullptr;
    bool requires_grad = false;
    bool grad_alloc = false;
  };

  const Node& node_at(Tensor t) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// --- primitive ops (forward value + recorded backward rule) ---

Tensor matmul(Tensor a, Tensor b);
Tensor spmm(const CsrMatrix& a, Tensor h);  // gradient w.r.t. h only
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul_scalar(Tensor a, double c);
Tensor hadamard(Tensor a, Tensor b);
Tensor transpose(Tensor a);
Tensor row_select(Tensor a, int row);
Tensor row_mean_excluding(Tensor a, int row);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor sum(Tensor a);
Tensor mean(Tensor a);
Tensor sigmoid(Tensor a);
Tensor relu(Tensor a);
Tensor log(Tensor a);
Tensor exp(Tensor a);
Tensor softplus(Tensor a);
Tensor clamp(Tensor a, double lo, double hi);
Tensor l2_norm_sq_rows(Tensor a);
Tensor dot_rows(Tensor a, Tensor b);
Tensor row_l2_normalize(Tensor a);

double scalar_value(Tensor t);

// --- optimizer / init ---

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam update with bias correction; zeroes grads afterwards.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg = {});

// Uniform in +/- sqrt(6 / (rows + cols)).
Matrix xavier_init(int rows, int cols, rng::Engine& eng);

}  // namespace dslad
