#include "ooc/comb/combinatorics.hpp"

#include <algorithm>

namespace ooc::comb {

ElementVocabulary::ElementVocabulary(std::vector<std::string> elements)
    : elements_(std::move(elements)) {
    for (int i = 0; i < static_cast<int>(elements_.size()); ++i) {
        if (!index_.emplace(elements_[i], i).second)
            throw ContractError("vocabulary: duplicate element '" + elements_[i] + "'");
    }
}

int ElementVocabulary::index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ContractError("vocabulary: unknown element '" + id + "'");
    return it->second;
}

const std::string& ElementVocabulary::element(int i) const {
    if (i < 0 || i >= size())
        throw ContractError("vocabulary: element index " + std::to_string(i) + " out of range");
    return elements_[static_cast<size_t>(i)];
}

DiscreteSupport::DiscreteSupport(ElementVocabulary vocab, int n,
                                 const std::vector<LatentVector>& members)
    : vocab_(std::move(vocab)), n_(n) {
    if (n <= 0) throw ContractError("support: slot count must be positive");
    for (const auto& z : members) {
        if (static_cast<int>(z.size()) != n)
            throw ContractError("support: member length " + std::to_string(z.size()) +
                                " does not match n=" + std::to_string(n));
        for (int e : z)
            if (e < 0 || e >= vocab_.size())
                throw ContractError("support: member uses element index " + std::to_string(e) +
                                    " outside the vocabulary");
        members_.insert(z);
    }
}

const char* state_class_name(StateClass c) {
    switch (c) {
        case StateClass::IN_SUPPORT: return "in_support";
        case StateClass::OOC: return "ooc";
        case StateClass::UNSEEN_ELEMENT: return "unseen_element";
    }
    throw ContractError("unknown state class value");
}

std::set<int> marginal_support(const DiscreteSupport& support, int slot) {
    if (slot < 0 || slot >= support.n())
        throw ContractError("marginal_support: slot " + std::to_string(slot) +
                            " out of range for n=" + std::to_string(support.n()));
    std::set<int> out;
    for (const auto& z : support.members()) out.insert(z[static_cast<size_t>(slot)]);
    return out;
}

std::set<int> union_marginal_support(const DiscreteSupport& support) {
    std::set<int> out;
    for (const auto& z : support.members()) out.insert(z.begin(), z.end());
    return out;
}

bool check_combinatorial_support(const DiscreteSupport& train, const DiscreteSupport& test) {
    if (!(train.vocabulary() == test.vocabulary()))
        throw ContractError("check_combinatorial_support: vocabulary mismatch");
    if (train.n() != test.n())
        throw ContractError("check_combinatorial_support: slot count mismatch");
    auto tr = union_marginal_support(train);
    auto te = union_marginal_support(test);
    return std::includes(tr.begin(), tr.end(), te.begin(), te.end());
}

StateClass classify_state(const LatentVector& z, const DiscreteSupport& train) {
    if (static_cast<int>(z.size()) != train.n())
        throw ContractError("classify_state: latent length " + std::to_string(z.size()) +
                            " does not match n=" + std::to_string(train.n()));
    for (int e : z)
        if (e < 0 || e >= train.vocabulary().size())
            throw ContractError("classify_state: element index " + std::to_string(e) +
                                " outside the vocabulary");
    if (train.contains(z)) return StateClass::IN_SUPPORT;
    auto seen = union_marginal_support(train);
    for (int e : z)
        if (!seen.count(e)) return StateClass::UNSEEN_ELEMENT;
    return StateClass::OOC;
}

nlohmann::json support_to_json(const DiscreteSupport& support) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& z : support.members()) {
        nlohmann::json row = nlohmann::json::array();
        for (int e : z) row.push_back(support.vocabulary().element(e));
        members.push_back(std::move(row));
    }
    return {{"elements", support.vocabulary().elements()},
            {"n", support.n()},
            {"members", std::move(members)}};
}

DiscreteSupport support_from_json(const nlohmann::json& j) {
    try {
        ElementVocabulary vocab(j.at("elements").get<std::vector<std::string>>());
        int n = j.at("n").get<int>();
        std::vector<LatentVector> members;
        for (const auto& row : j.at("members")) {
            LatentVector z;
            for (const auto& id : row) z.push_back(vocab.index(id.get<std::string>()));
            members.push_back(std::move(z));
        }
        return DiscreteSupport(std::move(vocab), n, members);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("support: malformed document: ") + e.what());
    } catch (const ContractError& e) {
        throw LoadError(std::string("support: invalid document: ") + e.what());
    }
}

}  // namespace ooc::comb
