#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmt/tensor.hpp"

namespace mmt {

// Named, optionally trainable tensor. Gradients live in value.grad.
struct Parameter {
    std::string name;
    Tensor value;
    bool trainable = true;
};

// Owning container with unique names and stable addresses.
class ParameterSet {
public:
    ParameterSet() = default;
    ParameterSet(const ParameterSet&) = delete;
    ParameterSet& operator=(const ParameterSet&) = delete;
    ParameterSet(ParameterSet&&) = default;
    ParameterSet& operator=(ParameterSet&&) = default;

    Parameter& create(const std::string& name, Tensor value, bool trainable = true);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;

    std::size_t count() const { return items_.size(); }
    std::size_t value_count() const;           // total scalars
    std::size_t trainable_value_count() const;

    void zero_grads();
    void set_trainable(bool trainable);
    void set_trainable_prefix(const std::string& prefix, bool trainable);

private:
    std::vector<std::unique_ptr<Parameter>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Flattened view across several sets, e.g. for an optimizer or checkpoint.
std::vector<Parameter*> collect_params(std::initializer_list<ParameterSet*> sets);

}  // namespace mmt
