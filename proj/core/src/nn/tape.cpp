// Copyright 2026 The Epiflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "epiflow/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "epiflow/errors.hpp"

namespace epiflow::nn {

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

Matrix apply_activation(const Matrix& x, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return x.cwiseMax(0.0);
    case Activation::kTanh:
      return x.array().tanh().matrix();
    case Activation::kSigmoid:
      return (1.0 / (1.0 + (-x.array()).exp())).matrix();
  }
  return x;
}

Tape::Id Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&, Id)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

void Tape::accumulate(Id id, Matrix g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = std::move(g);
  } else {
    n.grad += g;
  }
}

Tape::Id Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Tape::Id Tape::constant_ref(const Matrix& value) {
  const Id id = push(Matrix(), false, nullptr);
  nodes_[id].external = &value;
  return id;
}

Tape::Id Tape::input(Matrix value) { return push(std::move(value), true, nullptr); }

void Tape::freeze(const std::vector<Parameter*>& params) {
  frozen_.insert(params.begin(), params.end());
}

Tape::Id Tape::param(Parameter& p) {
  if (frozen_.count(&p) != 0) return constant_ref(p.value);
  const Id id = push(Matrix(), true, nullptr);
  nodes_[id].param = &p;
  nodes_[id].external = &p.value;
  return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
  if (value(a).cols() != value(b).rows()) throw DimensionError("matmul: inner dimensions differ");
  Matrix out;
  out.noalias() = value(a) * value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Tape::Id Tape::add(Id a, Id b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw DimensionError("add: shapes differ");
  }
  return push(value(a) + value(b), needs(a) || needs(b), [a, b](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tape::Id Tape::add_row(Id x, Id row) {
  if (value(row).rows() != 1 || value(row).cols() != value(x).cols()) {
    throw DimensionError("add_row: bias shape mismatch");
  }
  Matrix out = value(x);
  out.rowwise() += value(row).row(0);
  return push(std::move(out), needs(x) || needs(row), [x, row](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    t.accumulate(x, g);
    if (t.needs(row)) t.accumulate(row, g.colwise().sum());
  });
}

Tape::Id Tape::add_scalar(Id x, Id scalar) {
  if (value(scalar).size() != 1) throw DimensionError("add_scalar: expects 1x1");
  Matrix out = value(x).array() + value(scalar)(0, 0);
  return push(std::move(out), needs(x) || needs(scalar), [x, scalar](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    t.accumulate(x, g);
    if (t.needs(scalar)) t.accumulate(scalar, Matrix::Constant(1, 1, g.sum()));
  });
}

Tape::Id Tape::hadamard(Id a, Id b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw DimensionError("hadamard: shapes differ");
  }
  return push(value(a).cwiseProduct(value(b)), needs(a) || needs(b), [a, b](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
    if (t.needs(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Tape::Id Tape::activate(Id x, Activation act) {
  Matrix out = apply_activation(value(x), act);
  return push(std::move(out), needs(x), [x, act](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& y = t.value(self);
    switch (act) {
      case Activation::kIdentity:
        t.accumulate(x, g);
        break;
      case Activation::kRelu:
        t.accumulate(x, (t.value(x).array() > 0.0).select(g, 0.0));
        break;
      case Activation::kTanh:
        t.accumulate(x, (g.array() * (1.0 - y.array().square())).matrix());
        break;
      case Activation::kSigmoid:
        t.accumulate(x, (g.array() * y.array() * (1.0 - y.array())).matrix());
        break;
    }
  });
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.rows() != vb.rows()) throw DimensionError("concat_cols: row counts differ");
  Matrix out(va.rows(), va.cols() + vb.cols());
  out << va, vb;
  const Index ca = va.cols();
  const Index cb = vb.cols();
  return push(std::move(out), needs(a) || needs(b), [a, b, ca, cb](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(a)) t.accumulate(a, g.leftCols(ca));
    if (t.needs(b)) t.accumulate(b, g.rightCols(cb));
  });
}

Tape::Id Tape::scale(Id x, double s) {
  return push(s * value(x), needs(x), [x, s](Tape& t, Id self) {
    t.accumulate(x, s * t.nodes_[self].grad);
  });
}

namespace {

void check_blocks(const Matrix& features, const Matrix& edges, Index block, const char* op) {
  if (block <= 0 || features.rows() % block != 0 || edges.rows() != features.rows() ||
      edges.cols() != block) {
    throw DimensionError(std::string(op) + ": graph block shapes do not match");
  }
}

}  // namespace

Tape::Id Tape::flow_aggregate(Id features, Id transport, Index block) {
  const Matrix& f = value(features);
  const Matrix& tr = value(transport);
  check_blocks(f, tr, block, "flow_aggregate");
  const Index k = block;
  const Index nf = f.cols();
  const Index batches = f.rows() / k;
  Matrix out(f.rows(), 2 * nf);
  for (Index b = 0; b < batches; ++b) {
    const auto fb = f.middleRows(b * k, k);
    const auto tb = tr.middleRows(b * k, k);
    out.block(b * k, 0, k, nf).noalias() = tb.transpose() * fb;
    const Vector keep = Vector::Ones(k) - tb.rowwise().sum();
    out.block(b * k, nf, k, nf) = keep.asDiagonal() * fb;
  }
  return push(std::move(out), needs(features) || needs(transport),
              [features, transport, k, nf, batches](Tape& t, Id self) {
                const Matrix& g = t.nodes_[self].grad;
                const Matrix& f = t.value(features);
                const Matrix& tr = t.value(transport);
                Matrix df;
                Matrix dt;
                if (t.needs(features)) df.resize(f.rows(), nf);
                if (t.needs(transport)) dt.resize(tr.rows(), k);
                for (Index b = 0; b < batches; ++b) {
                  const auto fb = f.middleRows(b * k, k);
                  const auto tb = tr.middleRows(b * k, k);
                  const auto g_in = g.block(b * k, 0, k, nf);
                  const auto g_stay = g.block(b * k, nf, k, nf);
                  if (t.needs(features)) {
                    const Vector keep = Vector::Ones(k) - tb.rowwise().sum();
                    df.middleRows(b * k, k).noalias() = tb * g_in;
                    df.middleRows(b * k, k) += keep.asDiagonal() * g_stay;
                  }
                  if (t.needs(transport)) {
                    const Vector stay_dot = fb.cwiseProduct(g_stay).rowwise().sum();
                    dt.middleRows(b * k, k).noalias() = fb * g_in.transpose();
                    dt.middleRows(b * k, k).colwise() -= stay_dot;
                  }
                }
                if (t.needs(features)) t.accumulate(features, df);
                if (t.needs(transport)) t.accumulate(transport, dt);
              });
}

Tape::Id Tape::mean_aggregate(Id features, Id mask, Index block) {
  const Matrix& f = value(features);
  const Matrix& m = value(mask);
  check_blocks(f, m, block, "mean_aggregate");
  const Index k = block;
  const Index batches = f.rows() / k;
  // Column-normalized neighbor weights, zero for isolated nodes.
  Matrix weights(f.rows(), k);
  Matrix out(f.rows(), f.cols());
  for (Index b = 0; b < batches; ++b) {
    auto wb = weights.middleRows(b * k, k);
    for (Index i = 0; i < k; ++i) {
      double deg = 0.0;
      for (Index j = 0; j < k; ++j) deg += m(b * k + j, i) != 0.0 ? 1.0 : 0.0;
      for (Index j = 0; j < k; ++j) {
        wb(j, i) = (deg > 0.0 && m(b * k + j, i) != 0.0) ? 1.0 / deg : 0.0;
      }
    }
    out.middleRows(b * k, k).noalias() = wb.transpose() * f.middleRows(b * k, k);
  }
  return push(std::move(out), needs(features), [features, weights, k, batches](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix df(g.rows(), g.cols());
    for (Index b = 0; b < batches; ++b) {
      df.middleRows(b * k, k).noalias() = weights.middleRows(b * k, k) * g.middleRows(b * k, k);
    }
    t.accumulate(features, df);
  });
}

Tape::Id Tape::softmax_aggregate(Id features, Id weights, Id mask, Index block) {
  const Matrix& f = value(features);
  const Matrix& w = value(weights);
  const Matrix& m = value(mask);
  check_blocks(f, w, block, "softmax_aggregate");
  check_blocks(f, m, block, "softmax_aggregate");
  const Index k = block;
  const Index batches = f.rows() / k;
  Matrix alpha = Matrix::Zero(f.rows(), k);
  Matrix out(f.rows(), f.cols());
  for (Index b = 0; b < batches; ++b) {
    for (Index i = 0; i < k; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < k; ++j) {
        if (m(b * k + j, i) != 0.0) top = std::max(top, w(b * k + j, i));
      }
      if (!std::isfinite(top)) continue;
      double z = 0.0;
      for (Index j = 0; j < k; ++j) {
        if (m(b * k + j, i) != 0.0) {
          alpha(b * k + j, i) = std::exp(w(b * k + j, i) - top);
          z += alpha(b * k + j, i);
        }
      }
      for (Index j = 0; j < k; ++j) alpha(b * k + j, i) /= z;
    }
    out.middleRows(b * k, k).noalias() =
        alpha.middleRows(b * k, k).transpose() * f.middleRows(b * k, k);
  }
  return push(std::move(out), needs(features) || needs(weights),
              [features, weights, alpha, k, batches](Tape& t, Id self) {
                const Matrix& g = t.nodes_[self].grad;
                const Matrix& f = t.value(features);
                const Matrix& out = t.value(self);
                Matrix df;
                Matrix dw;
                if (t.needs(features)) df.resize(f.rows(), f.cols());
                if (t.needs(weights)) dw.resize(f.rows(), k);
                for (Index b = 0; b < batches; ++b) {
                  const auto ab = alpha.middleRows(b * k, k);
                  const auto gb = g.middleRows(b * k, k);
                  if (t.needs(features)) df.middleRows(b * k, k).noalias() = ab * gb;
                  if (t.needs(weights)) {
                    // d alpha[j,i] = g_i . f_j ; softmax Jacobian per column i.
                    const Matrix gf = f.middleRows(b * k, k) * gb.transpose();  // (j, i)
                    const Vector go = gb.cwiseProduct(out.middleRows(b * k, k)).rowwise().sum();
                    Matrix d = gf;
                    d.rowwise() -= go.transpose();
                    dw.middleRows(b * k, k) = ab.cwiseProduct(d);
                  }
                }
                if (t.needs(features)) t.accumulate(features, df);
                if (t.needs(weights)) t.accumulate(weights, dw);
              });
}

Tape::Id Tape::pairwise_sum(Id src, Id dst, Index block) {
  const Matrix& s = value(src);
  const Matrix& d = value(dst);
  if (s.cols() != 1 || d.cols() != 1 || s.rows() != d.rows() || s.rows() % block != 0) {
    throw DimensionError("pairwise_sum: expects equal-length column vectors");
  }
  const Index k = block;
  const Index batches = s.rows() / k;
  Matrix out(s.rows(), k);
  for (Index b = 0; b < batches; ++b) {
    for (Index i = 0; i < k; ++i) {
      out.row(b * k + i) = d.middleRows(b * k, k).transpose().array() + s(b * k + i, 0);
    }
  }
  return push(std::move(out), needs(src) || needs(dst), [src, dst, k, batches](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(src)) t.accumulate(src, g.rowwise().sum());
    if (t.needs(dst)) {
      Matrix dd(g.rows(), 1);
      for (Index b = 0; b < batches; ++b) {
        dd.middleRows(b * k, k) = g.middleRows(b * k, k).colwise().sum().transpose();
      }
      t.accumulate(dst, dd);
    }
  });
}

Tape::Id Tape::weighted_sum(const std::vector<Id>& terms, Id weights) {
  const Matrix& w = value(weights);
  if (terms.empty() || w.rows() != 1 || w.cols() != static_cast<Index>(terms.size())) {
    throw DimensionError("weighted_sum: weight row must match term count");
  }
  Matrix out = Matrix::Zero(value(terms[0]).rows(), value(terms[0]).cols());
  bool any = needs(weights);
  for (std::size_t c = 0; c < terms.size(); ++c) {
    if (value(terms[c]).rows() != out.rows() || value(terms[c]).cols() != out.cols()) {
      throw DimensionError("weighted_sum: term shapes differ");
    }
    out += w(0, static_cast<Index>(c)) * value(terms[c]);
    any = any || needs(terms[c]);
  }
  return push(std::move(out), any, [terms, weights](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& w = t.value(weights);
    if (t.needs(weights)) {
      Matrix dw(1, w.cols());
      for (std::size_t c = 0; c < terms.size(); ++c) {
        dw(0, static_cast<Index>(c)) = g.cwiseProduct(t.value(terms[c])).sum();
      }
      t.accumulate(weights, dw);
    }
    for (std::size_t c = 0; c < terms.size(); ++c) {
      if (t.needs(terms[c])) t.accumulate(terms[c], w(0, static_cast<Index>(c)) * g);
    }
  });
}

Tape::Id Tape::block_mean(Id x, Index block) {
  const Matrix& v = value(x);
  if (block <= 0 || v.rows() % block != 0) throw DimensionError("block_mean: bad block size");
  const Index batches = v.rows() / block;
  Matrix out(batches, v.cols());
  for (Index b = 0; b < batches; ++b) {
    out.row(b) = v.middleRows(b * block, block).colwise().mean();
  }
  return push(std::move(out), needs(x), [x, block, batches](Tape& t, Id self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix dx(batches * block, g.cols());
    for (Index b = 0; b < batches; ++b) {
      dx.middleRows(b * block, block).rowwise() = g.row(b) / static_cast<double>(block);
    }
    t.accumulate(x, dx);
  });
}

Tape::Id Tape::mean(Id x) {
  const Matrix& v = value(x);
  const double n = static_cast<double>(v.size());
  return push(Matrix::Constant(1, 1, v.mean()), needs(x), [x, n](Tape& t, Id self) {
    const double g = t.nodes_[self].grad(0, 0);
    t.accumulate(x, Matrix::Constant(t.value(x).rows(), t.value(x).cols(), g / n));
  });
}

Tape::Id Tape::mean_squared_error(Id pred, Id target) {
  const Matrix& p = value(pred);
  const Matrix& y = value(target);
  if (p.rows() != y.rows() || p.cols() != y.cols()) throw DimensionError("mse: shapes differ");
  const double n = static_cast<double>(p.size());
  const double loss = (p - y).squaredNorm() / n;
  return push(Matrix::Constant(1, 1, loss), needs(pred) || needs(target),
              [pred, target, n](Tape& t, Id self) {
                const double g = t.nodes_[self].grad(0, 0);
                const Matrix diff = (2.0 * g / n) * (t.value(pred) - t.value(target));
                t.accumulate(pred, diff);
                t.accumulate(target, -diff);
              });
}

void Tape::backward(Id root) {
  if (value(root).size() != 1) throw DimensionError("backward(root) needs a scalar root");
  backward(root, Matrix::Ones(1, 1));
}

void Tape::backward(Id root, const Matrix& seed) {
  if (seed.rows() != value(root).rows() || seed.cols() != value(root).cols()) {
    throw DimensionError("backward: seed shape mismatch");
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  accumulate(root, seed);
  for (Id id = root + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.back) n.back(*this, id);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

}  // namespace epiflow::nn
