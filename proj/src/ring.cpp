#include "sumfree/ring.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "sumfree/errors.hpp"

namespace sumfree {

RingContext::RingContext(std::uint64_t m) {
    if (m < 3) {
        throw InvalidModulus("modulus must be at least 3, got " + std::to_string(m));
    }
    if (m > std::numeric_limits<Element>::max() / 2) {
        throw InvalidModulus("modulus too large: " + std::to_string(m));
    }
    m_ = static_cast<Element>(m);
    if (m % 2 == 0) half_ = static_cast<Element>(m / 2);
}

std::vector<Element> RingContext::halves(Element v) const {
    std::vector<Element> out;
    if (half_) {
        if (v % 2 == 0) {
            out.push_back(v / 2);
            out.push_back(v / 2 + *half_);
        }
    } else {
        // 2^{-1} = (m+1)/2 for odd m
        Element q = (v % 2 == 0) ? v / 2 : static_cast<Element>((std::uint64_t{v} + m_) / 2);
        out.push_back(q);
    }
    return out;
}

bool EquationClass::contains(Element v) const {
    auto vs = vertices();
    return std::find(vs.begin(), vs.end(), v) != vs.end();
}

RoleSet EquationClass::roles_of(Element v) const {
    return RoleSet{v == lo || v == hi, v == right};
}

EquationClass canonical_class(Element a, Element b, const RingContext& ctx) {
    EquationClass e;
    e.lo = std::min(a, b);
    e.hi = std::max(a, b);
    e.right = ctx.add(a, b);
    auto push = [&](Element x) {
        for (std::uint8_t k = 0; k < e.vertex_count; ++k) {
            if (e.vertex_buf[k] == x) return;
        }
        e.vertex_buf[e.vertex_count++] = x;
    };
    // lo <= hi, so only the right side needs placing
    push(e.lo);
    push(e.hi);
    push(e.right);
    if (e.vertex_count == 3) {
        auto& v = e.vertex_buf;
        if (v[2] < v[1]) std::swap(v[1], v[2]);
        if (v[1] < v[0]) std::swap(v[0], v[1]);
    } else if (e.vertex_count == 2 && e.vertex_buf[1] < e.vertex_buf[0]) {
        std::swap(e.vertex_buf[0], e.vertex_buf[1]);
    }
    return e;
}

std::vector<EquationClass> enumerate_classes(const RingContext& ctx) {
    const Element m = ctx.modulus();
    std::vector<EquationClass> out;
    out.reserve(std::size_t{m} * (m + 1) / 2);
    for (Element a = 0; a < m; ++a) {
        for (Element b = a; b < m; ++b) out.push_back(canonical_class(a, b, ctx));
    }
    return out;
}

std::vector<ClassIncidence> classes_through(Element v, const RingContext& ctx) {
    const Element m = ctx.modulus();
    std::vector<ClassIncidence> out;
    // v on the left: pairs {v, b}; v on the right: pairs {a, v - a}.
    std::vector<std::pair<Element, Element>> pairs;
    pairs.reserve(m + m / 2 + 1);
    for (Element b = 0; b < m; ++b) pairs.emplace_back(std::min(v, b), std::max(v, b));
    for (Element a = 0; a < m; ++a) {
        Element b = ctx.sub(v, a);
        if (a <= b) pairs.emplace_back(a, b);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    out.reserve(pairs.size());
    for (auto [a, b] : pairs) {
        auto e = canonical_class(a, b, ctx);
        out.push_back({e, e.roles_of(v)});
    }
    return out;
}

bool is_sum_free_mask(std::span<const std::uint8_t> in_set, const RingContext& ctx) {
    const Element m = ctx.modulus();
    for (Element a = 0; a < m; ++a) {
        if (!in_set[a]) continue;
        for (Element b = a; b < m; ++b) {
            if (in_set[b] && in_set[ctx.add(a, b)]) return false;
        }
    }
    return true;
}

}  // namespace sumfree
