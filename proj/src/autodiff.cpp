#include "congraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "congraph/error.hpp"
#include "congraph/random.hpp"

namespace congraph {

namespace {

std::string shapes(std::string_view op, const Matrix& a, const Matrix& b) {
  return std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
         b.shape_string();
}

template <class F>
Matrix map(const Matrix& m, F f) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = f(m[i]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor / Tape

const Matrix& Tensor::value() const { return tape_->nodes_.at(id_).value; }

Matrix Tensor::grad() const {
  const auto& node = tape_->nodes_.at(id_);
  if (node.grad.size() == 0) return Matrix(node.value.rows(), node.value.cols());
  return node.grad;
}

bool Tensor::requires_grad() const { return tape_->nodes_.at(id_).requires_grad; }

double Tensor::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("item() on tensor of shape " + v.shape_string());
  return v[0];
}

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

void Tape::check_owner(const Tensor& t) const {
  if (t.tape_ != this) throw std::logic_error("tensor belongs to a different tape");
}

Tensor Tape::constant(Matrix value) { return push(Node{std::move(value), {}, false, {}, nullptr}); }

Tensor Tape::variable(Matrix value) { return push(Node{std::move(value), {}, true, {}, nullptr}); }

Tensor Tape::parameter(Parameter& p) { return push(Node{p.value, {}, true, {}, &p}); }

Tensor Tape::record(std::string_view op, Matrix value, std::initializer_list<Tensor> parents,
                    Backward backward) {
  return record(op, std::move(value), std::span<const Tensor>(parents.begin(), parents.size()),
                std::move(backward));
}

Tensor Tape::record(std::string_view op, Matrix value, std::span<const Tensor> parents,
                    Backward backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite value in output");
  bool needs = false;
  for (const auto& p : parents) {
    check_owner(p);
    needs = needs || nodes_[p.id_].requires_grad;
  }
  Node node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}, nullptr};
  return push(std::move(node));
}

Matrix& Tape::grad_buffer(const Tensor& t) {
  check_owner(t);
  auto& node = nodes_[t.id_];
  if (node.grad.size() != node.value.size() || node.grad.rows() != node.value.rows()) {
    node.grad = Matrix(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  check_owner(t);
  if (!nodes_[t.id_].requires_grad) return;
  auto& buf = grad_buffer(t);
  if (!buf.same_shape(g)) throw ShapeError(shapes("accumulate", buf, g));
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

void Tape::backward(const Tensor& loss) {
  check_owner(loss);
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + loss.value().shape_string());
  }
  grad_buffer(loss)[0] += 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || node.grad.size() == 0) continue;
    if (node.backward) node.backward(*this, node.grad);
    if (node.param != nullptr) {
      auto& pg = node.param->grad;
      if (!pg.same_shape(node.grad)) pg = Matrix(node.grad.rows(), node.grad.cols());
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += node.grad[k];
    }
  }
}

// ---------------------------------------------------------------------------
// Kernels

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) throw ShapeError(shapes("matmul", av, bv));
  Matrix out(av.rows(), bv.cols());
  gemm_acc(av, bv, out);
  return a.tape().record("matmul", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) {
      Matrix ga(a.rows(), a.cols());
      gemm_nt_acc(g, b.value(), ga);
      t.accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Matrix gb(b.rows(), b.cols());
      gemm_tn_acc(a.value(), g, gb);
      t.accumulate(b, gb);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (!av.same_shape(bv)) throw ShapeError(shapes("add", av, bv));
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape().record("add", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  const auto& av = a.value();
  const auto& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeError(shapes("add_row", av, rv));
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv[c];
  return a.tape().record("add_row", std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (row.requires_grad()) {
      Matrix gr(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
      t.accumulate(row, gr);
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (!av.same_shape(bv)) throw ShapeError(shapes("mul", av, bv));
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record("mul", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) {
      Matrix ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
      t.accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Matrix gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
      t.accumulate(b, gb);
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  Matrix out = map(a.value(), [s](double v) { return v * s; });
  return a.tape().record("scale", std::move(out), {a}, [a, s](Tape& t, const Matrix& g) {
    t.accumulate(a, map(g, [s](double v) { return v * s; }));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError(shapes("concat_cols", parts.front().value(), p.value()));
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const auto& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    off += v.cols();
  }
  std::vector<Tensor> saved(parts.begin(), parts.end());
  return parts.front().tape().record(
      "concat_cols", std::move(out), parts, [saved, offsets](Tape& t, const Matrix& g) {
        for (std::size_t k = 0; k < saved.size(); ++k) {
          const auto& p = saved[k];
          if (!p.requires_grad()) continue;
          Matrix gp(p.rows(), p.cols());
          for (std::size_t r = 0; r < gp.rows(); ++r)
            for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) = g(r, offsets[k] + c);
          t.accumulate(p, gp);
        }
      });
}

Tensor relu(const Tensor& a) {
  Matrix out = map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  return a.tape().record("relu", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga = g;
    const auto& av = a.value();
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (av[i] <= 0.0) ga[i] = 0.0;
    t.accumulate(a, ga);
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = map(a.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  Matrix s = out;
  return a.tape().record("sigmoid", std::move(out), {a}, [a, s](Tape& t, const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= s[i] * (1.0 - s[i]);
    t.accumulate(a, ga);
  });
}

Tensor log(const Tensor& a) {
  Matrix out = map(a.value(), [](double v) { return std::log(v); });
  return a.tape().record("log", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] /= a.value()[i];
    t.accumulate(a, ga);
  });
}

Tensor exp(const Tensor& a) {
  Matrix out = map(a.value(), [](double v) { return std::exp(v); });
  Matrix e = out;
  return a.tape().record("exp", std::move(out), {a}, [a, e](Tape& t, const Matrix& g) {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= e[i];
    t.accumulate(a, ga);
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record("sum", Matrix(1, 1, s), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix(a.rows(), a.cols(), g[0]));
  });
}

Tensor max_rowwise(const Tensor& a) {
  const auto& av = a.value();
  if (av.cols() == 0) throw ShapeError("max_rowwise: zero columns " + av.shape_string());
  Matrix out(av.rows(), 1);
  std::vector<std::size_t> arg(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto row = av.row(r);
    auto it = std::max_element(row.begin(), row.end());
    arg[r] = static_cast<std::size_t>(it - row.begin());
    out(r, 0) = *it;
  }
  return a.tape().record("max_rowwise", std::move(out), {a}, [a, arg](Tape& t, const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < arg.size(); ++r) ga(r, arg[r]) = g(r, 0);
    t.accumulate(a, ga);
  });
}

// ---------------------------------------------------------------------------
// Batch norm / dropout

BatchNorm::BatchNorm(const std::string& name, std::size_t features, double eps)
    : gamma(name + ".gamma", Matrix(1, features, 1.0)),
      beta(name + ".beta", Matrix(1, features, 0.0)),
      running_mean(1, features, 0.0),
      running_var(1, features, 1.0),
      eps(eps) {}

Tensor batch_norm(const Tensor& x, BatchNorm& bn, Mode mode) {
  Tape& tape = x.tape();
  const auto& xv = x.value();
  const std::size_t n = xv.rows(), c = xv.cols();
  if (bn.gamma.value.cols() != c) throw ShapeError(shapes("batch_norm", xv, bn.gamma.value));
  Tensor gamma = tape.parameter(bn.gamma);
  Tensor beta = tape.parameter(bn.beta);

  if (mode == Mode::eval) {
    Matrix inv_std(1, c);
    for (std::size_t k = 0; k < c; ++k) inv_std[k] = 1.0 / std::sqrt(bn.running_var[k] + bn.eps);
    Matrix xhat(n, c), out(n, c);
    const auto& gv = bn.gamma.value;
    const auto& bv = bn.beta.value;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < c; ++k) {
        xhat(r, k) = (xv(r, k) - bn.running_mean[k]) * inv_std[k];
        out(r, k) = gv[k] * xhat(r, k) + bv[k];
      }
    return tape.record("batch_norm", std::move(out), {x, gamma, beta},
                       [x, gamma, beta, xhat, inv_std](Tape& t, const Matrix& g) {
                         const std::size_t rows = g.rows(), cols = g.cols();
                         Matrix gx(rows, cols), gg(1, cols), gb(1, cols);
                         const auto& gv = gamma.value();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t k = 0; k < cols; ++k) {
                             gx(r, k) = g(r, k) * gv[k] * inv_std[k];
                             gg[k] += g(r, k) * xhat(r, k);
                             gb[k] += g(r, k);
                           }
                         t.accumulate(x, gx);
                         t.accumulate(gamma, gg);
                         t.accumulate(beta, gb);
                       });
  }

  if (n < 2) throw ArgumentError("batch_norm: train mode needs at least 2 items, got " +
                                 std::to_string(n));
  Matrix mean(1, c), var(1, c);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < c; ++k) mean[k] += xv(r, k);
  for (std::size_t k = 0; k < c; ++k) mean[k] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < c; ++k) {
      const double d = xv(r, k) - mean[k];
      var[k] += d * d;
    }
  for (std::size_t k = 0; k < c; ++k) var[k] /= static_cast<double>(n);

  Matrix inv_std(1, c);
  for (std::size_t k = 0; k < c; ++k) inv_std[k] = 1.0 / std::sqrt(var[k] + bn.eps);
  Matrix xhat(n, c), out(n, c);
  const auto& gv = bn.gamma.value;
  const auto& bv = bn.beta.value;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < c; ++k) {
      xhat(r, k) = (xv(r, k) - mean[k]) * inv_std[k];
      out(r, k) = gv[k] * xhat(r, k) + bv[k];
    }

  const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < c; ++k) {
    bn.running_mean[k] = bn.momentum * bn.running_mean[k] + (1.0 - bn.momentum) * mean[k];
    bn.running_var[k] = bn.momentum * bn.running_var[k] + (1.0 - bn.momentum) * var[k] * unbias;
  }

  return tape.record(
      "batch_norm", std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std](Tape& t, const Matrix& g) {
        const std::size_t rows = g.rows(), cols = g.cols();
        const double nn = static_cast<double>(rows);
        const auto& gv = gamma.value();
        Matrix gg(1, cols), gb(1, cols);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < cols; ++k) {
            gg[k] += g(r, k) * xhat(r, k);
            gb[k] += g(r, k);
          }
        if (x.requires_grad()) {
          // dx = inv_std / N * (N * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
          Matrix gx(rows, cols);
          for (std::size_t k = 0; k < cols; ++k) {
            const double sum_dxhat = gb[k] * gv[k];
            const double sum_dxhat_xhat = gg[k] * gv[k];
            for (std::size_t r = 0; r < rows; ++r) {
              const double dxhat = g(r, k) * gv[k];
              gx(r, k) = inv_std[k] / nn * (nn * dxhat - sum_dxhat - xhat(r, k) * sum_dxhat_xhat);
            }
          }
          t.accumulate(x, gx);
        }
        t.accumulate(gamma, gg);
        t.accumulate(beta, gb);
      });
}

Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw ArgumentError("dropout: rate must be in [0, 1)");
  if (mode == Mode::eval || rate == 0.0) return x;
  Rng rng(seed);
  const double s = 1.0 / (1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = uniform01(rng) < rate ? 0.0 : s;
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return x.tape().record("dropout", std::move(out), {x}, [x, mask](Tape& t, const Matrix& g) {
    Matrix gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask[i];
    t.accumulate(x, gx);
  });
}

// ---------------------------------------------------------------------------
// Finite differences

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Matrix& x,
                         double h) {
  Matrix analytic;
  {
    Tape tape;
    Tensor xt = tape.variable(x);
    Tensor y = f(tape, xt);
    tape.backward(y);
    analytic = xt.grad();
  }
  auto eval = [&](const Matrix& at) {
    Tape tape;
    return f(tape, tape.variable(at)).item();
  };
  double worst = 0.0;
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = eval(probe);
    probe[i] = x[i] - h;
    const double down = eval(probe);
    probe[i] = x[i];
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

double finite_diff_check(const std::function<Tensor(Tape&)>& f, std::span<Parameter* const> params,
                         double h) {
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    Tensor y = f(tape);
    tape.backward(y);
  }
  auto eval = [&] {
    Tape tape;
    return f(tape).item();
  };
  double worst = 0.0;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval();
      p->value[i] = orig - h;
      const double down = eval();
      p->value[i] = orig;
      worst = std::max(worst, relative_error(p->grad[i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints

const Matrix& Checkpoint::get(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw DataError("checkpoint has no tensor named '" + std::string(name) + "'");
}

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : ckpt.tensors) {
    tensors.push_back({{"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"values", t.value.data()}});
  }
  return {{"header", ckpt.header.is_null() ? nlohmann::json::object() : ckpt.header},
          {"tensors", tensors}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    Checkpoint ckpt;
    ckpt.header = j.at("header");
    for (const auto& t : j.at("tensors")) {
      const auto& shape = t.at("shape");
      if (!shape.is_array() || shape.size() != 2) throw DataError("tensor shape must be [rows, cols]");
      auto values = t.at("values").get<std::vector<double>>();
      ckpt.tensors.push_back(
          {t.at("name").get<std::string>(),
           Matrix(shape[0].get<std::size_t>(), shape[1].get<std::size_t>(), std::move(values))});
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace congraph
