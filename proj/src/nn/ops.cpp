#include "affect/nn/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "affect/error.hpp"
#include "affect/kernels.hpp"

namespace affect::nn {
namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(std::string("shape mismatch: ") + what);
}

bool any_grad(const Tape& t, std::initializer_list<Var> vars) {
    for (Var v : vars) {
        if (t.requires_grad(v)) return true;
    }
    return false;
}

} // namespace

Var gather_rows(Tape& t, Var table, std::span<const int> ids) {
    const Tensor& tab = t.value(table);
    Tensor out(ids.size(), tab.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < tab.rows, "gather id out of range");
        const auto src = tab.row(static_cast<std::size_t>(ids[i]));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    std::vector<int> idx(ids.begin(), ids.end());
    return t.push(std::move(out), t.requires_grad(table), [table, idx = std::move(idx)](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gt = tp.grad(table);
        const auto& K = kernels::active();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            K.axpy(1.0, g.row(i).data(), gt.row(static_cast<std::size_t>(idx[i])).data(), g.cols);
        }
    });
}

Var leading_rows(Tape& t, Var table, std::size_t count) {
    require(count <= t.value(table).rows, "leading_rows count exceeds rows");
    std::vector<int> ids(count);
    for (std::size_t i = 0; i < count; ++i) ids[i] = static_cast<int>(i);
    return gather_rows(t, table, ids);
}

Var add(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(av.same_shape(bv), "add operands");
    Tensor out(av.rows, av.cols);
    kernels::active().add(av.data.data(), bv.data.data(), out.data.data(), out.size());
    return t.push(std::move(out), any_grad(t, {a, b}), [a, b](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const auto& K = kernels::active();
        if (tp.requires_grad(a)) K.axpy(1.0, g.data.data(), tp.grad(a).data.data(), g.size());
        if (tp.requires_grad(b)) K.axpy(1.0, g.data.data(), tp.grad(b).data.data(), g.size());
    });
}

Var scale(Tape& t, Var x, double factor) {
    Tensor out = t.value(x);
    for (double& d : out.data) d *= factor;
    return t.push(std::move(out), t.requires_grad(x), [x, factor](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        kernels::active().axpy(factor, g.data.data(), tp.grad(x).data.data(), g.size());
    });
}

Var matmul(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(av.cols == bv.rows, "matmul inner dimensions");
    const std::size_t m = av.rows, k = av.cols, n = bv.cols;
    Tensor out(m, n);
    kernels::active().gemm_nn(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    return t.push(std::move(out), any_grad(t, {a, b}), [a, b, m, k, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const auto& K = kernels::active();
        if (tp.requires_grad(a)) {
            K.gemm_nt(g.data.data(), tp.value(b).data.data(), tp.grad(a).data.data(), m, n, k);
        }
        if (tp.requires_grad(b)) {
            K.gemm_tn(tp.value(a).data.data(), g.data.data(), tp.grad(b).data.data(), k, m, n);
        }
    });
}

Var linear(Tape& t, Var x, Var weight, Var bias) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    const Tensor& bv = t.value(bias);
    require(xv.cols == wv.rows, "linear input width");
    require(bv.rows == 1 && bv.cols == wv.cols, "linear bias");
    const std::size_t m = xv.rows, k = xv.cols, n = wv.cols;
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i) std::copy(bv.data.begin(), bv.data.end(), out.row(i).begin());
    const auto& K = kernels::active();
    K.gemm_nn(xv.data.data(), wv.data.data(), out.data.data(), m, k, n);
    return t.push(std::move(out), any_grad(t, {x, weight, bias}), [x, weight, bias, m, k, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const auto& K = kernels::active();
        if (tp.requires_grad(x)) {
            K.gemm_nt(g.data.data(), tp.value(weight).data.data(), tp.grad(x).data.data(), m, n, k);
        }
        if (tp.requires_grad(weight)) {
            K.gemm_tn(tp.value(x).data.data(), g.data.data(), tp.grad(weight).data.data(), k, m, n);
        }
        if (tp.requires_grad(bias)) {
            Tensor& gb = tp.grad(bias);
            for (std::size_t i = 0; i < m; ++i) K.axpy(1.0, g.row(i).data(), gb.data.data(), n);
        }
    });
}

Var layer_norm(Tape& t, Var x, Var scale_v, Var offset_v, double eps) {
    const Tensor& xv = t.value(x);
    const Tensor& sv = t.value(scale_v);
    const Tensor& ov = t.value(offset_v);
    require(sv.rows == 1 && sv.cols == xv.cols && ov.same_shape(sv), "layer_norm affine parameters");
    const std::size_t m = xv.rows, n = xv.cols;
    Tensor normalized(m, n);
    std::vector<double> inv_std(m);
    Tensor out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = xv.row(i);
        double mean = 0.0;
        for (double d : r) mean += d;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double d : r) var += (d - mean) * (d - mean);
        var /= static_cast<double>(n);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            const double h = (r[j] - mean) * inv_std[i];
            normalized(i, j) = h;
            out(i, j) = h * sv.data[j] + ov.data[j];
        }
    }
    return t.push(std::move(out), any_grad(t, {x, scale_v, offset_v}),
                  [x, scale_v, offset_v, normalized = std::move(normalized), inv_std = std::move(inv_std)](
                      Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad(self);
                      const Tensor& sv = tp.value(scale_v);
                      const std::size_t m = g.rows, n = g.cols;
                      if (tp.requires_grad(scale_v) || tp.requires_grad(offset_v)) {
                          Tensor& gs = tp.grad(scale_v);
                          Tensor& go = tp.grad(offset_v);
                          for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t j = 0; j < n; ++j) {
                                  gs.data[j] += g(i, j) * normalized(i, j);
                                  go.data[j] += g(i, j);
                              }
                          }
                      }
                      if (tp.requires_grad(x)) {
                          Tensor& gx = tp.grad(x);
                          std::vector<double> dh(n);
                          for (std::size_t i = 0; i < m; ++i) {
                              double mean_dh = 0.0, mean_dh_h = 0.0;
                              for (std::size_t j = 0; j < n; ++j) {
                                  dh[j] = g(i, j) * sv.data[j];
                                  mean_dh += dh[j];
                                  mean_dh_h += dh[j] * normalized(i, j);
                              }
                              mean_dh /= static_cast<double>(n);
                              mean_dh_h /= static_cast<double>(n);
                              for (std::size_t j = 0; j < n; ++j) {
                                  gx(i, j) += inv_std[i] * (dh[j] - mean_dh - normalized(i, j) * mean_dh_h);
                              }
                          }
                      }
                  });
}

Var gelu(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    Tensor out(xv.rows, xv.cols);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double z = xv.data[i];
        out.data[i] = 0.5 * z * (1.0 + std::erf(z * std::numbers::sqrt2 / 2.0));
    }
    return t.push(std::move(out), t.requires_grad(x), [x](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.value(x);
        Tensor& gx = tp.grad(x);
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const double z = xv.data[i];
            const double cdf = 0.5 * (1.0 + std::erf(z * std::numbers::sqrt2 / 2.0));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * z * z);
            gx.data[i] += g.data[i] * (cdf + z * pdf);
        }
    });
}

Var dropout(Tape& t, Var x, double rate) {
    if (rate <= 0.0) {
        return x;
    }
    require(rate < 1.0, "dropout rate must be below 1");
    const Tensor& xv = t.value(x);
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(xv.size());
    Tensor out(xv.rows, xv.cols);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        mask[i] = t.rng().uniform01() >= rate ? keep_scale : 0.0;
        out.data[i] = xv.data[i] * mask[i];
    }
    return t.push(std::move(out), t.requires_grad(x), [x, mask = std::move(mask)](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i] * mask[i];
    });
}

Var self_attention(Tape& t, Var q, Var k, Var v, std::size_t n_heads, std::vector<Tensor>* probs_out) {
    const Tensor& qv = t.value(q);
    const Tensor& kv = t.value(k);
    const Tensor& vv = t.value(v);
    require(qv.same_shape(kv) && qv.same_shape(vv), "attention q/k/v");
    require(n_heads > 0 && qv.cols % n_heads == 0, "attention width divisible by heads");
    const std::size_t len = qv.rows, width = qv.cols, dh = width / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto& K = kernels::active();

    std::vector<Tensor> probs(n_heads, Tensor(len, len));
    Tensor out(len, width);
    for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t off = h * dh;
        Tensor& p = probs[h];
        for (std::size_t i = 0; i < len; ++i) {
            double mx = -INFINITY;
            for (std::size_t j = 0; j < len; ++j) {
                p(i, j) = K.dot(qv.row(i).data() + off, kv.row(j).data() + off, dh) * inv_sqrt;
                mx = std::max(mx, p(i, j));
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                p(i, j) = std::exp(p(i, j) - mx);
                sum += p(i, j);
            }
            for (std::size_t j = 0; j < len; ++j) {
                p(i, j) /= sum;
                K.axpy(p(i, j), vv.row(j).data() + off, out.row(i).data() + off, dh);
            }
        }
    }
    if (probs_out != nullptr) {
        probs_out->insert(probs_out->end(), probs.begin(), probs.end());
    }
    return t.push(std::move(out), any_grad(t, {q, k, v}),
                  [q, k, v, n_heads, dh, inv_sqrt, probs = std::move(probs)](Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad(self);
                      const Tensor& qv = tp.value(q);
                      const Tensor& kv = tp.value(k);
                      const Tensor& vv = tp.value(v);
                      Tensor& gq = tp.grad(q);
                      Tensor& gk = tp.grad(k);
                      Tensor& gv = tp.grad(v);
                      const auto& K = kernels::active();
                      const std::size_t len = g.rows;
                      std::vector<double> ds(len);
                      for (std::size_t h = 0; h < n_heads; ++h) {
                          const std::size_t off = h * dh;
                          const Tensor& p = probs[h];
                          for (std::size_t i = 0; i < len; ++i) {
                              const double* gi = g.row(i).data() + off;
                              double weighted = 0.0;
                              for (std::size_t j = 0; j < len; ++j) {
                                  ds[j] = K.dot(gi, vv.row(j).data() + off, dh);
                                  weighted += ds[j] * p(i, j);
                                  K.axpy(p(i, j), gi, gv.row(j).data() + off, dh);
                              }
                              for (std::size_t j = 0; j < len; ++j) {
                                  const double s = p(i, j) * (ds[j] - weighted) * inv_sqrt;
                                  K.axpy(s, kv.row(j).data() + off, gq.row(i).data() + off, dh);
                                  K.axpy(s, qv.row(i).data() + off, gk.row(j).data() + off, dh);
                              }
                          }
                      }
                  });
}

Var select_row(Tape& t, Var x, std::size_t row) {
    const Tensor& xv = t.value(x);
    require(row < xv.rows, "select_row index");
    Tensor out(1, xv.cols);
    const auto src = xv.row(row);
    std::copy(src.begin(), src.end(), out.data.begin());
    return t.push(std::move(out), t.requires_grad(x), [x, row](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        kernels::active().axpy(1.0, g.data.data(), tp.grad(x).row(row).data(), g.cols);
    });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
    require(!parts.empty(), "concat_rows needs input");
    const std::size_t cols = t.value(parts[0]).cols;
    std::size_t rows = 0;
    bool needs = false;
    for (Var p : parts) {
        require(t.value(p).cols == cols, "concat_rows widths");
        rows += t.value(p).rows;
        needs = needs || t.requires_grad(p);
    }
    Tensor out(rows, cols);
    std::size_t r = 0;
    for (Var p : parts) {
        const Tensor& pv = t.value(p);
        std::copy(pv.data.begin(), pv.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * cols));
        r += pv.rows;
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return t.push(std::move(out), needs, [inputs = std::move(inputs)](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        std::size_t r = 0;
        for (Var p : inputs) {
            const std::size_t n = tp.value(p).size();
            if (tp.requires_grad(p)) {
                kernels::active().axpy(1.0, g.data.data() + r * g.cols, tp.grad(p).data.data(), n);
            }
            r += tp.value(p).rows;
        }
    });
}

Var mse_loss(Tape& t, Var pred, std::span<const double> target) {
    const Tensor& pv = t.value(pred);
    require(pv.cols == 1 && pv.rows == target.size() && !target.empty(), "mse prediction column vs target");
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = pv.data[i] - target[i];
        s += d * d;
    }
    const double n = static_cast<double>(target.size());
    std::vector<double> tgt(target.begin(), target.end());
    return t.push(Tensor(1, 1, s / n), t.requires_grad(pred), [pred, tgt = std::move(tgt), n](Tape& tp, std::size_t self) {
        const double g = tp.grad(self).data[0];
        const Tensor& pv = tp.value(pred);
        Tensor& gp = tp.grad(pred);
        for (std::size_t i = 0; i < tgt.size(); ++i) gp.data[i] += g * 2.0 * (pv.data[i] - tgt[i]) / n;
    });
}

Var cross_entropy_loss(Tape& t, Var logits, std::span<const int> labels) {
    const Tensor& lv = t.value(logits);
    require(lv.rows == labels.size() && !labels.empty(), "cross_entropy batch vs labels");
    Tensor probs(lv.rows, lv.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < lv.rows; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= lv.cols) {
            throw Error("cross_entropy label out of range: " + std::to_string(labels[i]));
        }
        const auto r = lv.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < lv.cols; ++j) {
            probs(i, j) = std::exp(r[j] - mx);
            sum += probs(i, j);
        }
        for (std::size_t j = 0; j < lv.cols; ++j) probs(i, j) /= sum;
        total += mx + std::log(sum) - r[static_cast<std::size_t>(labels[i])];
    }
    const double n = static_cast<double>(labels.size());
    std::vector<int> gold(labels.begin(), labels.end());
    return t.push(Tensor(1, 1, total / n), t.requires_grad(logits),
                  [logits, gold = std::move(gold), probs = std::move(probs), n](Tape& tp, std::size_t self) {
                      const double g = tp.grad(self).data[0];
                      Tensor& gl = tp.grad(logits);
                      for (std::size_t i = 0; i < probs.rows; ++i) {
                          for (std::size_t j = 0; j < probs.cols; ++j) {
                              const double onehot = static_cast<int>(j) == gold[i] ? 1.0 : 0.0;
                              gl(i, j) += g * (probs(i, j) - onehot) / n;
                          }
                      }
                  });
}

} // namespace affect::nn
