#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ooc/util/errors.hpp"

namespace ooc::nn {

// Flat parameter/gradient arena shared by all layers of a model. Layers
// register named ranges during model construction; registration order is the
// serialization order, so a checkpoint blob is just `values` written out.
template <class T>
class ParamStore {
public:
    struct Entry {
        std::string name;
        size_t count;
        size_t offset;
    };

    size_t add(std::string name, size_t count) {
        if (allocated_) throw ContractError("ParamStore::add after allocate");
        size_t off = total_;
        entries_.push_back({std::move(name), count, off});
        total_ += count;
        return off;
    }

    void allocate() {
        values.assign(total_, T(0));
        grads.assign(total_, T(0));
        allocated_ = true;
    }

    T* val(size_t offset) { return values.data() + offset; }
    T* grad(size_t offset) { return grads.data() + offset; }
    const T* val(size_t offset) const { return values.data() + offset; }

    void zero_grads() { std::fill(grads.begin(), grads.end(), T(0)); }

    size_t total() const { return total_; }
    const std::vector<Entry>& entries() const { return entries_; }
    bool allocated() const { return allocated_; }

    std::vector<T> values;
    std::vector<T> grads;

private:
    std::vector<Entry> entries_;
    size_t total_ = 0;
    bool allocated_ = false;
};

}  // namespace ooc::nn
