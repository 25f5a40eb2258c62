#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>

#include "affect/nn/tensor.hpp"
#include "affect/rng.hpp"

namespace affect::nn {

/// Handle to a value recorded on a Tape.
struct Var {
    std::size_t id = 0;
};

/// Linear record of a forward computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the record is already a
/// topological order; backward() walks it once from the loss towards the
/// leaves. A tape built with `record_gradients = false` keeps values only.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    explicit Tape(bool record_gradients = true, std::uint64_t dropout_seed = 0)
        : recording_(record_gradients), rng_(dropout_seed) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Borrows `value` (must outlive the tape). Gradients accumulate into
    /// `grad_sink` when it is non-null and the tape is recording.
    Var parameter(const Tensor& value, Tensor* grad_sink);
    Var push(Tensor value, bool requires_grad, BackwardFn backward);

    const Tensor& value(Var v) const { return value(v.id); }
    const Tensor& value(std::size_t id) const;
    /// Gradient buffer of a node, allocated (zero) on first access.
    Tensor& grad(Var v) { return grad(v.id); }
    Tensor& grad(std::size_t id);
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    bool recording() const noexcept { return recording_; }

    Rng& rng() noexcept { return rng_; }

    /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward function once.
    /// Throws affect::Error on a second call or a non-scalar loss.
    void backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t backward_visits() const noexcept { return visits_; }

private:
    struct Node {
        Tensor owned;
        const Tensor* borrowed = nullptr;
        Tensor grad;
        Tensor* sink = nullptr;
        bool grad_ready = false;
        bool requires_grad = false;
        BackwardFn backward;
    };

    std::deque<Node> nodes_;
    bool recording_;
    bool consumed_ = false;
    std::size_t visits_ = 0;
    Rng rng_;
};

} // namespace affect::nn
