#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mlmn/numerics/tensor.hpp"

namespace mlmn {

    // A learnable tensor together with its accumulated gradient.
    struct Parameter {
        std::string name;
        Tensor value;
        Tensor grad;
        bool trainable = true;

        void zero_grad() {
            if (grad.shape() != value.shape()) {
                grad = Tensor(value.shape());
            } else {
                grad.fill(0.0);
            }
        }
    };

    class Tape;

    // Handle to one node recorded on a Tape.
    class Var {
    public:
        Var() = default;

        const Tensor& value() const;
        const Shape& shape() const { return value().shape(); }
        bool requires_grad() const;
        // gradient after Tape::backward; an empty tensor when nothing flowed here
        const Tensor& grad() const;

        Tape& tape() const { return *tape_; }
        std::size_t id() const { return id_; }
        bool valid() const { return tape_ != nullptr; }

    private:
        friend class Tape;
        Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

        Tape* tape_ = nullptr;
        std::size_t id_ = 0;
    };

    // Records primitive applications in topological order (inputs always precede
    // the nodes that consume them) and replays their backward rules in reverse.
    //
    // Parameter leaves read the parameter's value in place. Their gradients stay
    // local to the tape until flush_gradients, so several tapes may evaluate
    // shared read-only parameters concurrently.
    class Tape {
    public:
        using BackwardFn = std::function<void(Tape&, std::size_t)>;

        Tape() = default;
        Tape(const Tape&) = delete;
        Tape& operator=(const Tape&) = delete;

        Var constant(Tensor value) { return push(std::move(value), nullptr, false, {}, nullptr); }

        Var variable(Tensor value) { return push(std::move(value), nullptr, true, {}, nullptr); }

        Var parameter(Parameter& p) {
            auto it = param_nodes_.find(&p);
            if (it != param_nodes_.end()) return Var(this, it->second);
            Var v = push(Tensor(), &p.value, p.trainable, {}, &p);
            param_nodes_.emplace(&p, v.id_);
            return v;
        }

        Var parameter(const Parameter& p) { return push(Tensor(), &p.value, false, {}, nullptr); }

        Var record(Tensor value, bool requires_grad, BackwardFn backward) {
            require_finite(value, "tape node");
            return push(std::move(value), nullptr, requires_grad, std::move(backward), nullptr);
        }

        const Tensor& value(std::size_t id) const {
            const Node& n = nodes_[id];
            return n.ref ? *n.ref : n.owned;
        }

        bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

        const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }

        // zero-initialized on first access
        Tensor& grad_buffer(std::size_t id) {
            Node& n = nodes_[id];
            if (n.grad.empty()) n.grad = Tensor(value(id).shape());
            return n.grad;
        }

        std::size_t size() const { return nodes_.size(); }

        void backward(const Var& loss) {
            if (loss.tape_ != this) throw Error("backward: loss was not recorded on this tape");
            if (backward_done_) throw Error("backward: called twice on the same tape");
            if (value(loss.id_).size() != 1) {
                throw ShapeError("backward: loss must be scalar, got " + shape_string(value(loss.id_).shape()));
            }
            backward_done_ = true;
            if (!nodes_[loss.id_].requires_grad) return;
            grad_buffer(loss.id_)[0] = 1.0;
            for (std::size_t i = loss.id_ + 1; i-- > 0;) {
                Node& n = nodes_[i];
                if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
                n.backward(*this, i);
            }
        }

        // adds scale * (parameter-leaf gradients) into Parameter::grad
        void flush_gradients(double scale = 1.0) {
            for (auto& n : nodes_) {
                if (!n.param || n.grad.empty()) continue;
                Parameter& p = *n.param;
                if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
                auto dst = p.grad.data();
                auto src = n.grad.data();
                for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
            }
        }

    private:
        struct Node {
            Tensor owned;
            const Tensor* ref = nullptr;
            Tensor grad;
            bool requires_grad = false;
            BackwardFn backward;
            Parameter* param = nullptr;
        };

        Var push(Tensor value, const Tensor* ref, bool requires_grad, BackwardFn fn, Parameter* param) {
            Node n;
            n.owned = std::move(value);
            n.ref = ref;
            n.requires_grad = requires_grad;
            n.backward = std::move(fn);
            n.param = param;
            nodes_.push_back(std::move(n));
            return Var(this, nodes_.size() - 1);
        }

        // deque keeps references to node values valid while the tape grows
        std::deque<Node> nodes_;
        std::unordered_map<const Parameter*, std::size_t> param_nodes_;
        bool backward_done_ = false;
    };

    inline const Tensor& Var::value() const { return tape_->value(id_); }
    inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }
    inline const Tensor& Var::grad() const { return tape_->grad(id_); }

}  // namespace mlmn
