#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation executed on Tensors in order. backward()
// walks that record in reverse, accumulating gradients (+=) into each node.
// Parameters live outside any tape; when a tape finishes backward the node
// gradients of parameter leaves are added to Parameter::grad.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "congraph/matrix.hpp"
#include "json.hpp"

namespace congraph {

enum class Mode { train, eval };

/// Trainable tensor that outlives tapes.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value)
      : name(std::move(name)), value(std::move(value)), grad(this->value.rows(), this->value.cols()) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Matrix value;
  Matrix grad;
};

class Tape;

/// Handle to a node recorded on a Tape. Valid while the tape is alive.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  /// Accumulated gradient; a zero matrix when nothing flowed into this node.
  Matrix grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the gradient flowing into the node being processed.
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor variable(Matrix value);
  Tensor parameter(Parameter& p);

  /// Records a node computed from `parents`. `op` names the operation in
  /// error messages; non-finite values raise NumericError.
  Tensor record(std::string_view op, Matrix value, std::initializer_list<Tensor> parents,
                Backward backward);
  Tensor record(std::string_view op, Matrix value, std::span<const Tensor> parents,
                Backward backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates in reverse recording order.
  /// Parameter leaves add their gradient into Parameter::grad.
  void backward(const Tensor& loss);

  /// Adds `g` to the gradient buffer of `t` if it requires grad.
  void accumulate(const Tensor& t, const Matrix& g);
  /// Mutable gradient buffer of `t`, allocated as zeros on first use.
  Matrix& grad_buffer(const Tensor& t);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  friend class Tensor;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  Tensor push(Node node);
  void check_owner(const Tensor& t) const;

  std::deque<Node> nodes_;
};

// Kernels. All shape errors throw ShapeError naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
/// a (n x c) plus a 1 x c row broadcast over every row.
Tensor add_row(const Tensor& a, const Tensor& row);
/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
/// Sum of all entries, 1 x 1.
Tensor sum(const Tensor& a);
/// Row maxima, n x 1. Gradient goes to the first maximal entry of each row.
Tensor max_rowwise(const Tensor& a);

/// Batch normalisation over rows (items) with learnable scale and shift.
struct BatchNorm {
  BatchNorm() = default;
  BatchNorm(const std::string& name, std::size_t features, double eps = 1e-5);

  Parameter gamma;
  Parameter beta;
  Matrix running_mean;
  Matrix running_var;
  /// running <- momentum * running + (1 - momentum) * batch
  double momentum = 0.9;
  double eps = 1e-5;
};

/// Train mode normalises by batch statistics (biased variance) and updates the
/// running estimates (unbiased variance); eval mode uses the running estimates.
/// Train mode with fewer than two rows throws ArgumentError.
Tensor batch_norm(const Tensor& x, BatchNorm& bn, Mode mode);

/// Inverted dropout. Eval mode and rate 0 return `x` unchanged.
Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed);

/// Relative error used by the gradient checks: |a - b| / max(|a|, |b|, floor).
/// The floor keeps analytically-zero gradients from dividing round-off by zero.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Max componentwise relative error between the tape gradient of f at x and
/// central differences with step h.
double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Matrix& x,
                         double h = 1e-5);
/// Same check against every component of every parameter. Parameter grads are
/// left holding the analytic gradient.
double finite_diff_check(const std::function<Tensor(Tape&)>& f, std::span<Parameter* const> params,
                         double h = 1e-5);

// Checkpoints: {"header": {...}, "tensors": [{"name", "shape": [r, c], "values": [...]}]}.

struct NamedTensor {
  std::string name;
  Matrix value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
  nlohmann::json header;
  std::vector<NamedTensor> tensors;

  const Matrix& get(std::string_view name) const;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace congraph
