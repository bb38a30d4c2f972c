#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swde/errors.hpp"
#include "swde/numerics/tape.hpp"
#include "swde/numerics/tensor.hpp"

namespace swde {

/// Ordered, uniquely named collection of tensors. Used both for learnable
/// parameters and for gradients/optimizer state with the same layout.
class ParamSet {
public:
    void add(std::string name, Tensor t) {
        if (index_.count(name)) throw Error("duplicate parameter name " + name);
        index_.emplace(name, tensors_.size());
        names_.push_back(std::move(name));
        tensors_.push_back(std::move(t));
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Tensor& operator[](const std::string& name) { return tensors_[position(name)]; }
    const Tensor& operator[](const std::string& name) const { return tensors_[position(name)]; }

    std::size_t position(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw Error("unknown parameter " + name);
        return it->second;
    }

    std::size_t size() const { return tensors_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& t : tensors_) n += t.size();
        return n;
    }

    /// Same names and shapes, all zeros.
    ParamSet zeros_like() const {
        ParamSet z;
        for (std::size_t i = 0; i < size(); ++i) z.add(names_[i], Tensor(tensors_[i].shape(), 0.0));
        return z;
    }

    bool same_layout(const ParamSet& other) const {
        if (names_ != other.names_) return false;
        for (std::size_t i = 0; i < size(); ++i) {
            if (tensors_[i].shape() != other.tensors_[i].shape()) return false;
        }
        return true;
    }

    bool operator==(const ParamSet& other) const {
        return names_ == other.names_ && tensors_ == other.tensors_;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Tape leaves for every tensor of a ParamSet, in the same order.
class BoundParams {
public:
    BoundParams(Tape& tape, const ParamSet& params) : params_(&params) {
        for (const auto& t : params.tensors()) vars_.push_back(tape.parameter(t));
    }

    Var operator[](const std::string& name) const { return vars_[params_->position(name)]; }
    std::span<const Var> vars() const { return vars_; }

    /// Adds this tape's gradients into `grads` (same layout as the bound set).
    void accumulate_grads(const Tape& tape, ParamSet& grads) const {
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            const Tensor g = tape.grad(vars_[i]);
            auto dst = grads.tensors()[i].data();
            const auto src = g.data();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    }

private:
    const ParamSet* params_;
    std::vector<Var> vars_;
};

struct Dense {
    Var weight;
    Var bias;
};

inline Var affine(Var x, const Dense& layer) { return add(matmul(layer.weight, x), layer.bias); }

}  // namespace swde
