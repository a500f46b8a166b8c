#include "mmt/params.hpp"

namespace mmt {

Parameter& ParameterSet::create(const std::string& name, Tensor value, bool trainable) {
    if (index_.contains(name)) {
        throw ArgumentError("parameter '" + name + "' already exists");
    }
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = std::move(value);
    p->trainable = trainable;
    index_.emplace(name, items_.size());
    items_.push_back(std::move(p));
    return *items_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
    Parameter* p = find(name);
    if (!p) throw ArgumentError("parameter '" + name + "' not found");
    return *p;
}

const Parameter& ParameterSet::get(const std::string& name) const {
    const Parameter* p = find(name);
    if (!p) throw ArgumentError("parameter '" + name + "' not found");
    return *p;
}

Parameter* ParameterSet::find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
}

const Parameter* ParameterSet::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
}

std::vector<Parameter*> ParameterSet::all() {
    std::vector<Parameter*> out;
    out.reserve(items_.size());
    for (auto& p : items_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
    std::vector<const Parameter*> out;
    out.reserve(items_.size());
    for (const auto& p : items_) out.push_back(p.get());
    return out;
}

std::size_t ParameterSet::value_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p->value.size();
    return n;
}

std::size_t ParameterSet::trainable_value_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) {
        if (p->trainable) n += p->value.size();
    }
    return n;
}

void ParameterSet::zero_grads() {
    for (auto& p : items_) {
        p->value.ensure_grad();
        p->value.zero_grad();
    }
}

void ParameterSet::set_trainable(bool trainable) {
    for (auto& p : items_) p->trainable = trainable;
}

void ParameterSet::set_trainable_prefix(const std::string& prefix, bool trainable) {
    for (auto& p : items_) {
        if (p->name.starts_with(prefix)) p->trainable = trainable;
    }
}

std::vector<Parameter*> collect_params(std::initializer_list<ParameterSet*> sets) {
    std::vector<Parameter*> out;
    for (ParameterSet* set : sets) {
        for (Parameter* p : set->all()) out.push_back(p);
    }
    return out;
}

}  // namespace mmt
