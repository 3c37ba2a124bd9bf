#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "ooc/comb/combinatorics.hpp"
#include "ooc/util/rng.hpp"

using namespace ooc;
using comb::DiscreteSupport;
using comb::ElementVocabulary;
using comb::LatentVector;
using comb::StateClass;

namespace {

// independent oracle working on element-id strings instead of indices
std::set<std::string> oracle_union(const DiscreteSupport& s) {
    std::set<std::string> out;
    for (const auto& z : s.members())
        for (int e : z) out.insert(s.vocabulary().element(e));
    return out;
}

bool oracle_check(const DiscreteSupport& train, const DiscreteSupport& test) {
    auto tr = oracle_union(train), te = oracle_union(test);
    for (const auto& id : te)
        if (!tr.count(id)) return false;
    return true;
}

DiscreteSupport random_support(const ElementVocabulary& vocab, int n, int count, Rng& rng) {
    std::vector<LatentVector> members;
    for (int i = 0; i < count; ++i) {
        LatentVector z(n);
        for (int j = 0; j < n; ++j) z[j] = static_cast<int>(rng.uniform_int(vocab.size()));
        members.push_back(std::move(z));
    }
    return DiscreteSupport(vocab, n, members);
}

}  // namespace

TEST_CASE("vocabulary indexing is a bijection and rejects duplicates") {
    ElementVocabulary v({"car", "bike", "truck"});
    CHECK(v.size() == 3);
    CHECK(v.index("car") == 0);
    CHECK(v.index("truck") == 2);
    CHECK(v.element(1) == "bike");
    CHECK_THROWS_AS(v.index("bus"), ContractError);
    CHECK_THROWS_AS(v.element(3), ContractError);
    CHECK_THROWS_AS(ElementVocabulary({"a", "b", "a"}), ContractError);
}

TEST_CASE("support construction validates members and deduplicates") {
    ElementVocabulary v({"a", "b"});
    DiscreteSupport s(v, 2, {{0, 1}, {0, 1}, {1, 1}});
    CHECK(s.members().size() == 2);
    CHECK(s.contains({0, 1}));
    CHECK(!s.contains({1, 0}));
    CHECK_THROWS_AS(DiscreteSupport(v, 2, {{0}}), ContractError);
    CHECK_THROWS_AS(DiscreteSupport(v, 2, {{0, 2}}), ContractError);
    CHECK_THROWS_AS(DiscreteSupport(v, 0, {}), ContractError);
}

TEST_CASE("marginal support is the slot-wise projection of the member set") {
    ElementVocabulary v({"car", "bike"});
    DiscreteSupport s(v, 2, {{0, 0}, {1, 1}});
    CHECK(comb::marginal_support(s, 0) == std::set<int>{0, 1});

    ElementVocabulary v3({"a", "b", "c"});
    DiscreteSupport single(v3, 3, {{0, 0, 0}});
    for (int slot = 0; slot < 3; ++slot)
        CHECK(comb::marginal_support(single, slot) == std::set<int>{0});

    // all 9 two-slot vectors
    std::vector<LatentVector> all;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) all.push_back({i, j});
    DiscreteSupport full(v3, 2, all);
    CHECK(comb::marginal_support(full, 1) == std::set<int>{0, 1, 2});

    CHECK_THROWS_AS(comb::marginal_support(s, 2), ContractError);
    CHECK_THROWS_AS(comb::marginal_support(s, -1), ContractError);

    // brute-force projection oracle on random supports
    Rng rng(101);
    for (int rep = 0; rep < 40; ++rep) {
        auto sup = random_support(v3, 4, 1 + static_cast<int>(rng.uniform_int(20)), rng);
        for (int slot = 0; slot < 4; ++slot) {
            std::set<int> expect;
            for (const auto& z : sup.members()) expect.insert(z[slot]);
            CHECK(comb::marginal_support(sup, slot) == expect);
        }
    }
}

TEST_CASE("combinatorial support check equals union-of-marginals inclusion") {
    ElementVocabulary v({"car", "bike", "truck"});
    int C = 0, B = 1, T = 2;
    DiscreteSupport train(v, 5, {{C, C, C, C, C}, {C, B, B, B, B}});
    DiscreteSupport test(v, 5, {{C, B, B, C, C}});
    CHECK(comb::check_combinatorial_support(train, test));
    CHECK(!comb::check_combinatorial_support(test, train) ==
          false);  // same union both ways here
    DiscreteSupport with_truck(v, 5, {{T, C, C, C, C}});
    CHECK(!comb::check_combinatorial_support(train, with_truck));

    ElementVocabulary other({"car", "bike"});
    DiscreteSupport mism(other, 5, {{0, 0, 0, 0, 0}});
    CHECK_THROWS_AS(comb::check_combinatorial_support(train, mism), ContractError);
    DiscreteSupport shorter(v, 3, {{0, 0, 0}});
    CHECK_THROWS_AS(comb::check_combinatorial_support(train, shorter), ContractError);

    // random pairs against the string-set oracle, plus reflexivity
    Rng rng(77);
    for (int rep = 0; rep < 50; ++rep) {
        auto a = random_support(v, 3, 1 + static_cast<int>(rng.uniform_int(10)), rng);
        auto b = random_support(v, 3, 1 + static_cast<int>(rng.uniform_int(10)), rng);
        CHECK(comb::check_combinatorial_support(a, b) == oracle_check(a, b));
        CHECK(comb::check_combinatorial_support(a, a));
        CHECK(comb::check_combinatorial_support(b, b));
    }
}

TEST_CASE("state classification matches the three-way brute-force taxonomy") {
    ElementVocabulary v({"car", "bike", "truck"});
    int C = 0, B = 1, T = 2;
    DiscreteSupport train(v, 5, {{C, C, C, C, C}, {B, B, B, B, B}});
    CHECK(comb::classify_state({C, C, C, C, C}, train) == StateClass::IN_SUPPORT);
    CHECK(comb::classify_state({C, B, B, C, C}, train) == StateClass::OOC);
    CHECK(comb::classify_state({T, C, C, C, C}, train) == StateClass::UNSEEN_ELEMENT);
    CHECK_THROWS_AS(comb::classify_state({C, C}, train), ContractError);
    CHECK_THROWS_AS(comb::classify_state({C, C, C, C, 9}, train), ContractError);

    // enumerate the whole latent space against an independent classifier
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        auto sup = random_support(v, 3, 1 + static_cast<int>(rng.uniform_int(6)), rng);
        auto seen = oracle_union(sup);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    LatentVector z{a, b, c};
                    StateClass expect;
                    if (sup.members().count(z))
                        expect = StateClass::IN_SUPPORT;
                    else if (seen.count(v.element(a)) && seen.count(v.element(b)) &&
                             seen.count(v.element(c)))
                        expect = StateClass::OOC;
                    else
                        expect = StateClass::UNSEEN_ELEMENT;
                    CHECK(comb::classify_state(z, sup) == expect);
                }
    }
}

TEST_CASE("support inclusion implies no test member is an unseen-element state") {
    ElementVocabulary v({"a", "b", "c", "d"});
    Rng rng(31);
    int satisfied = 0;
    for (int rep = 0; rep < 200; ++rep) {
        auto train = random_support(v, 3, 1 + static_cast<int>(rng.uniform_int(8)), rng);
        auto test = random_support(v, 3, 1 + static_cast<int>(rng.uniform_int(8)), rng);
        if (!comb::check_combinatorial_support(train, test)) continue;
        ++satisfied;
        for (const auto& z : test.members())
            CHECK(comb::classify_state(z, train) != StateClass::UNSEEN_ELEMENT);
    }
    CHECK(satisfied > 10);  // the property must actually get exercised
}

TEST_CASE("support serialization round trips through the text form") {
    ElementVocabulary v({"car", "bike"});
    DiscreteSupport s(v, 2, {{0, 0}, {1, 1}, {0, 1}});
    auto j = comb::support_to_json(s);
    CHECK(j.at("elements") == std::vector<std::string>{"car", "bike"});
    CHECK(j.at("n") == 2);
    CHECK(j.at("members").size() == 3);
    CHECK(j.at("members")[0][0].is_string());

    auto back = comb::support_from_json(j);
    CHECK(back.vocabulary() == s.vocabulary());
    CHECK(back.n() == s.n());
    CHECK(back.members() == s.members());

    auto bad = j;
    bad["members"][0][0] = "bus";
    CHECK_THROWS_AS(comb::support_from_json(bad), LoadError);
    auto missing = j;
    missing.erase("n");
    CHECK_THROWS_AS(comb::support_from_json(missing), LoadError);
}

TEST_CASE("continuous regions keep sampler draws inside the predicate") {
    comb::ContinuousSupportRegion region;
    region.n = 2;
    region.contains = [](const std::vector<double>& z) {
        return z.size() == 2 && z[0] >= 0.0 && z[0] <= 1.0 && z[1] >= -2.0 && z[1] <= 0.0;
    };
    region.sample = [](Rng& rng) {
        return std::vector<double>{rng.uniform(0.0, 1.0), rng.uniform(-2.0, 0.0)};
    };
    Rng rng(9);
    for (int i = 0; i < 500; ++i) CHECK(region.contains(region.sample(rng)));
    CHECK(!region.contains({2.0, -1.0}));
}
