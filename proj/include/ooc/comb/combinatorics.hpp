#pragma once

#include <functional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::comb {

// Ordered set of base element identifiers; index() is the bijection onto
// 0..size()-1 that latent vectors are expressed in.
class ElementVocabulary {
public:
    ElementVocabulary() = default;
    explicit ElementVocabulary(std::vector<std::string> elements);

    int size() const { return static_cast<int>(elements_.size()); }
    int index(const std::string& id) const;
    const std::string& element(int i) const;
    const std::vector<std::string>& elements() const { return elements_; }

    friend bool operator==(const ElementVocabulary& a, const ElementVocabulary& b) {
        return a.elements_ == b.elements_;
    }

private:
    std::vector<std::string> elements_;
    std::unordered_map<std::string, int> index_;
};

// z = (z_1, ..., z_n) as element indices.
using LatentVector = std::vector<int>;

// The positive-probability set of a distribution over n-slot latent vectors.
// Masses are not stored; every operation below depends on positivity only.
class DiscreteSupport {
public:
    DiscreteSupport() = default;
    DiscreteSupport(ElementVocabulary vocab, int n, const std::vector<LatentVector>& members);

    const ElementVocabulary& vocabulary() const { return vocab_; }
    int n() const { return n_; }
    const std::set<LatentVector>& members() const { return members_; }
    bool contains(const LatentVector& z) const { return members_.count(z) > 0; }

private:
    ElementVocabulary vocab_;
    int n_ = 0;
    std::set<LatentVector> members_;
};

// Membership predicate plus a sampler whose draws always satisfy it; stands
// in for a density when the latent space is real-valued.
struct ContinuousSupportRegion {
    int n = 0;
    std::function<bool(const std::vector<double>&)> contains;
    std::function<std::vector<double>(Rng&)> sample;
};

enum class StateClass { IN_SUPPORT, OOC, UNSEEN_ELEMENT };

const char* state_class_name(StateClass c);

// Element indices appearing at one slot across the members.
std::set<int> marginal_support(const DiscreteSupport& support, int slot);

// Union of the per-slot marginal supports.
std::set<int> union_marginal_support(const DiscreteSupport& support);

// True iff every element reachable anywhere in `test` already appears
// somewhere in `train` (union of marginals inclusion).
bool check_combinatorial_support(const DiscreteSupport& train, const DiscreteSupport& test);

// IN_SUPPORT: z is a member. UNSEEN_ELEMENT: some slot uses an element no
// train member uses anywhere. OOC: all elements familiar, combination new.
StateClass classify_state(const LatentVector& z, const DiscreteSupport& train);

// Human-readable serialization: {"elements": [...], "n": k, "members":
// [[id, id, ...], ...]} with members spelled as element identifiers.
nlohmann::json support_to_json(const DiscreteSupport& support);
DiscreteSupport support_from_json(const nlohmann::json& j);

}  // namespace ooc::comb
