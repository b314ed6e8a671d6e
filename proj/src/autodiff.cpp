#include "keat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "keat/error.hpp"

namespace keat::ad {

auto Tape::constant(Tensor value) -> Var {
  nodes_.push_back(Node{std::move(value), {}, {}, false, false});
  return Var(this, nodes_.size() - 1);
}

auto Tape::parameter(Tensor value) -> Var {
  nodes_.push_back(Node{std::move(value), {}, {}, true, false});
  return Var(this, nodes_.size() - 1);
}

auto Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) -> Var {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

auto Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) -> Var {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw DomainError("op mixes values from different tapes");
    needs = needs || nodes_[in.id()].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, needs, false});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw DomainError("backward: loss was recorded on another tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) throw DomainError("backward: loss must be scalar, got " + lv.shape_string());
  for (auto& n : nodes_) n.has_grad = false;
  Node& root = nodes_[loss.id()];
  if (!root.needs_grad) return;
  root.grad = Tensor(lv.shape(), 1.0);
  root.has_grad = true;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.has_grad && n.backward) n.backward(*this, n.grad);
  }
}

auto Tape::grad(Var v) const -> Tensor {
  const Node& n = nodes_[v.id()];
  if (!n.has_grad) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

auto Tape::grad_slot(Var v) -> Tensor* {
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Tensor* slot = grad_slot(v);
  if (slot == nullptr) return;
  for (std::size_t i = 0; i < g.size(); ++i) (*slot)[i] += g[i];
}

auto matmul(Var a, Var b) -> Var {
  Tensor out = keat::matmul(a.value(), b.value());
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const std::size_t m = av.rows();
    const std::size_t k = av.cols();
    const std::size_t n = bv.rank() == 1 ? 1 : bv.cols();
    if (Tensor* ga = t.grad_slot(a)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
          (*ga)[i * k + p] += s;
        }
      }
    }
    if (Tensor* gb = t.grad_slot(b)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += aip * g[i * n + j];
        }
      }
    }
  });
}

auto transpose(Var a) -> Var {
  Tensor out = keat::transpose(a.value());
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor back = keat::transpose(g);
    if (a.value().rank() == 1) back = Tensor(a.value().shape(), back.values());
    t.accumulate(a, back);
  });
}

auto add(Var a, Var b) -> Var {
  return a.tape()->record(keat::add(a.value(), b.value()), {a, b},
                          [a, b](Tape& t, const Tensor& g) {
                            t.accumulate(a, g);
                            t.accumulate(b, g);
                          });
}

auto sub(Var a, Var b) -> Var {
  return a.tape()->record(keat::sub(a.value(), b.value()), {a, b},
                          [a, b](Tape& t, const Tensor& g) {
                            t.accumulate(a, g);
                            t.accumulate(b, keat::scale(g, -1.0));
                          });
}

auto mul(Var a, Var b) -> Var {
  return a.tape()->record(keat::hadamard(a.value(), b.value()), {a, b},
                          [a, b](Tape& t, const Tensor& g) {
                            t.accumulate(a, keat::hadamard(g, b.value()));
                            t.accumulate(b, keat::hadamard(g, a.value()));
                          });
}

auto scale(Var a, double s) -> Var {
  return a.tape()->record(keat::scale(a.value(), s), {a}, [a, s](Tape& t, const Tensor& g) {
    t.accumulate(a, keat::scale(g, s));
  });
}

auto mul_scalar(Var a, Var s) -> Var {
  const double sv = s.value().item();
  return a.tape()->record(keat::scale(a.value(), sv), {a, s}, [a, s](Tape& t, const Tensor& g) {
    t.accumulate(a, keat::scale(g, s.value().item()));
    if (Tensor* gs = t.grad_slot(s)) (*gs)[0] += keat::dot(g.data(), a.value().data());
  });
}

auto add_row(Var m, Var b) -> Var {
  const Tensor& mv = m.value();
  const Tensor& bv = b.value();
  if (mv.rank() != 2 || bv.size() != mv.cols()) {
    throw DimensionError("add_row: cannot broadcast " + bv.shape_string() + " over " +
                         mv.shape_string());
  }
  Tensor out = mv;
  const std::size_t n = mv.cols();
  for (std::size_t i = 0; i < mv.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) += bv[j];
  }
  return m.tape()->record(std::move(out), {m, b}, [m, b, n](Tape& t, const Tensor& g) {
    t.accumulate(m, g);
    if (Tensor* gb = t.grad_slot(b)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g(i, j);
      }
    }
  });
}

auto scale_rows(Var m, Var s) -> Var {
  const Tensor& mv = m.value();
  const Tensor& sv = s.value();
  if (mv.rank() != 2 || sv.size() != mv.rows()) {
    throw DimensionError("scale_rows: " + sv.shape_string() + " does not index rows of " +
                         mv.shape_string());
  }
  Tensor out = mv;
  const std::size_t n = mv.cols();
  for (std::size_t i = 0; i < mv.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) *= sv[i];
  }
  return m.tape()->record(std::move(out), {m, s}, [m, s, n](Tape& t, const Tensor& g) {
    const Tensor& mv = m.value();
    const Tensor& sv = s.value();
    if (Tensor* gm = t.grad_slot(m)) {
      for (std::size_t i = 0; i < mv.rows(); ++i) {
        for (std::size_t j = 0; j < n; ++j) (*gm)(i, j) += g(i, j) * sv[i];
      }
    }
    if (Tensor* gs = t.grad_slot(s)) {
      for (std::size_t i = 0; i < mv.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += g(i, j) * mv(i, j);
        (*gs)[i] += acc;
      }
    }
  });
}

auto softmax(Var logits) -> Var {
  Tape* tape = logits.tape();
  Tensor y = keat::softmax(logits.value());
  const std::size_t out_id = tape->size();
  return tape->record(std::move(y), {logits}, [logits, out_id](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(out_id);
    const double gy = keat::dot(g.data(), y.data());
    Tensor gx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = y[i] * (g[i] - gy);
    t.accumulate(logits, gx);
  });
}

auto tanh(Var a) -> Var {
  Tensor y = a.value();
  for (auto& v : y.data()) v = std::tanh(v);
  const std::size_t out_id = a.tape()->size();
  return a.tape()->record(std::move(y), {a}, [a, out_id](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(out_id);
    Tensor gx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = g[i] * (1.0 - y[i] * y[i]);
    t.accumulate(a, gx);
  });
}

auto sigmoid(Var a) -> Var {
  Tensor y = a.value();
  for (auto& v : y.data()) v = 1.0 / (1.0 + std::exp(-v));
  const std::size_t out_id = a.tape()->size();
  return a.tape()->record(std::move(y), {a}, [a, out_id](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(out_id);
    Tensor gx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = g[i] * y[i] * (1.0 - y[i]);
    t.accumulate(a, gx);
  });
}

auto sum(Var a) -> Var {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape()->record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    t.accumulate(a, Tensor(a.value().shape(), g[0]));
  });
}

auto dot(Var a, Var b) -> Var {
  const double s = keat::dot(a.value().data(), b.value().data());
  return a.tape()->record(Tensor::scalar(s), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, keat::scale(b.value(), g[0]));
    t.accumulate(b, keat::scale(a.value(), g[0]));
  });
}

auto reshape(Var a, std::vector<std::size_t> shape) -> Var {
  Tensor out(std::move(shape), a.value().values());
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    t.accumulate(a, Tensor(a.value().shape(), g.values()));
  });
}

auto concat_cols(Var a, Var b) -> Var {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: cannot join " + av.shape_string() + " and " +
                         bv.shape_string());
  }
  const std::size_t rows = av.rows();
  const std::size_t m = av.cols();
  const std::size_t n = bv.cols();
  Tensor out({rows, m + n});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < m; ++j) out(i, j) = av(i, j);
    for (std::size_t j = 0; j < n; ++j) out(i, m + j) = bv(i, j);
  }
  return a.tape()->record(std::move(out), {a, b}, [a, b, rows, m, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < m; ++j) (*ga)(i, j) += g(i, j);
      }
    }
    if (Tensor* gb = t.grad_slot(b)) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < n; ++j) (*gb)(i, j) += g(i, m + j);
      }
    }
  });
}

auto gather_rows(Var table, std::span<const std::size_t> ids) -> Var {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("gather_rows: table must be rank 2");
  const std::size_t d = tv.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(ids[i]) + " out of range for " +
                           tv.shape_string());
    }
    for (std::size_t j = 0; j < d; ++j) out(i, j) = tv(ids[i], j);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return table.tape()->record(std::move(out), {table},
                              [table, idx = std::move(idx), d](Tape& t, const Tensor& g) {
                                Tensor* gt = t.grad_slot(table);
                                if (gt == nullptr) return;
                                for (std::size_t i = 0; i < idx.size(); ++i) {
                                  for (std::size_t j = 0; j < d; ++j) (*gt)(idx[i], j) += g(i, j);
                                }
                              });
}

auto row(Var table, std::size_t id) -> Var {
  const Tensor& tv = table.value();
  if (tv.rank() != 2 || id >= tv.rows()) {
    throw DimensionError("row: index " + std::to_string(id) + " out of range for " +
                         tv.shape_string());
  }
  const std::size_t d = tv.cols();
  auto r = tv.row(id);
  Tensor out({d}, std::vector<double>(r.begin(), r.end()));
  return table.tape()->record(std::move(out), {table}, [table, id, d](Tape& t, const Tensor& g) {
    Tensor* gt = t.grad_slot(table);
    if (gt == nullptr) return;
    for (std::size_t j = 0; j < d; ++j) (*gt)(id, j) += g[j];
  });
}

auto stack(std::span<const Var> scalars) -> Var {
  if (scalars.empty()) throw DomainError("stack: no values");
  Tensor out({scalars.size()});
  for (std::size_t i = 0; i < scalars.size(); ++i) out[i] = scalars[i].value().item();
  std::vector<Var> ins(scalars.begin(), scalars.end());
  return scalars[0].tape()->record(std::move(out), scalars, [ins](Tape& t, const Tensor& g) {
    for (std::size_t i = 0; i < ins.size(); ++i) {
      if (Tensor* gs = t.grad_slot(ins[i])) (*gs)[0] += g[i];
    }
  });
}

auto sinusoid(Var omega, std::span<const double> times) -> Var {
  const Tensor& w = omega.value();
  const std::size_t half = w.size();
  Tensor out({times.size(), 2 * half});
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t k = 0; k < half; ++k) {
      const double arg = w[k] * times[i];
      out(i, 2 * k) = std::cos(arg);
      out(i, 2 * k + 1) = std::sin(arg);
    }
  }
  std::vector<double> ts(times.begin(), times.end());
  return omega.tape()->record(std::move(out), {omega},
                              [omega, ts = std::move(ts), half](Tape& t, const Tensor& g) {
                                Tensor* gw = t.grad_slot(omega);
                                if (gw == nullptr) return;
                                const Tensor& w = omega.value();
                                for (std::size_t i = 0; i < ts.size(); ++i) {
                                  for (std::size_t k = 0; k < half; ++k) {
                                    const double arg = w[k] * ts[i];
                                    (*gw)[k] += ts[i] * (g(i, 2 * k + 1) * std::cos(arg) -
                                                         g(i, 2 * k) * std::sin(arg));
                                  }
                                }
                              });
}

auto bce_with_logits(Var logits, std::span<const double> labels) -> Var {
  const Tensor& x = logits.value();
  if (x.size() != labels.size() || x.size() == 0) {
    throw DimensionError("bce_with_logits: " + std::to_string(x.size()) + " logits vs " +
                         std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = x[i];
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  const double n = static_cast<double>(x.size());
  std::vector<double> ys(labels.begin(), labels.end());
  return logits.tape()->record(
      Tensor::scalar(total / n), {logits}, [logits, ys = std::move(ys), n](Tape& t, const Tensor& g) {
        const Tensor& x = logits.value();
        Tensor gx(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double p = 1.0 / (1.0 + std::exp(-x[i]));
          gx[i] = g[0] * (p - ys[i]) / n;
        }
        t.accumulate(logits, gx);
      });
}

}  // namespace keat::ad
