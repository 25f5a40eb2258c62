#include "affect/nn/tape.hpp"

#include "affect/error.hpp"

namespace affect::nn {

Var Tape::constant(Tensor value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Tape::parameter(const Tensor& value, Tensor* grad_sink) {
    Node n;
    n.borrowed = &value;
    if (recording_ && grad_sink != nullptr) {
        if (!grad_sink->same_shape(value)) {
            throw Error("gradient buffer shape does not match parameter");
        }
        n.sink = grad_sink;
        n.requires_grad = true;
    }
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward) {
    Node n;
    n.owned = std::move(value);
    if (recording_ && requires_grad) {
        n.requires_grad = true;
        n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.borrowed != nullptr ? *n.borrowed : n.owned;
}

Tensor& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.sink != nullptr) {
        n.grad_ready = true;
        return *n.sink;
    }
    if (!n.grad_ready) {
        const Tensor& v = value(id);
        n.grad = Tensor(v.rows, v.cols);
        n.grad_ready = true;
    }
    return n.grad;
}

void Tape::backward(Var loss) {
    if (consumed_) {
        throw Error("tape already consumed by a previous backward pass");
    }
    if (!recording_) {
        throw Error("backward on a tape that does not record gradients");
    }
    const Tensor& lv = value(loss);
    if (lv.rows != 1 || lv.cols != 1) {
        throw Error("backward expects a scalar loss");
    }
    consumed_ = true;
    if (!nodes_[loss.id].requires_grad) {
        return;
    }
    grad(loss).data[0] += 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backward && n.grad_ready) {
            n.backward(*this, i);
            ++visits_;
        }
    }
}

} // namespace affect::nn
