#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "axdg/tensor.hpp"

namespace axdg {

/// Named parameter registry shared by graphs. Entries keep a stable order
/// (insertion order) so optimizer sweeps and checkpoint layout are
/// deterministic. Gradients are accumulated here by Graph::backward; merging
/// gradients from several tapes is plain summation into the same buffers.
class ParamStore {
  public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
        bool trainable = true;  // running BN stats live here but are not optimized
    };

    int add(std::string name, Tensor init, bool trainable = true) {
        if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
        const int slot = static_cast<int>(entries_.size());
        Entry e;
        e.name = std::move(name);
        e.grad = Tensor::zeros(init.shape());
        e.value = std::move(init);
        e.trainable = trainable;
        entries_.push_back(std::move(e));
        index_.emplace(entries_.back().name, slot);
        return slot;
    }

    int find(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? -1 : it->second;
    }

    int require(const std::string& name) const {
        const int slot = find(name);
        if (slot < 0) throw std::invalid_argument("unknown parameter: " + name);
        return slot;
    }

    std::size_t size() const { return entries_.size(); }
    Entry& entry(int slot) { return entries_.at(slot); }
    const Entry& entry(int slot) const { return entries_.at(slot); }
    Tensor& value(int slot) { return entries_.at(slot).value; }
    const Tensor& value(int slot) const { return entries_.at(slot).value; }
    Tensor& grad(int slot) { return entries_.at(slot).grad; }

    void zero_grads() {
        for (Entry& e : entries_)
            for (double& g : e.grad.vec()) g = 0.0;
    }

    void accumulate_grad(int slot, const Tensor& g) {
        Tensor& dst = entries_.at(slot).grad;
        if (!dst.same_shape(g)) throw std::invalid_argument("gradient shape mismatch");
        for (std::size_t i = 0; i < g.numel(); ++i) dst.at(i) += g.at(i);
    }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (const Entry& e : entries_) n += e.value.numel();
        return n;
    }

  private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace axdg
