#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sumfree {

using Element = std::uint32_t;

// Z_m with m >= 3. The half-modulus n exists only for even m.
class RingContext {
public:
    explicit RingContext(std::uint64_t m);

    Element modulus() const { return m_; }
    std::optional<Element> half() const { return half_; }
    bool even() const { return half_.has_value(); }

    Element add(Element a, Element b) const {
        std::uint64_t s = std::uint64_t{a} + b;
        return static_cast<Element>(s >= m_ ? s - m_ : s);
    }
    Element sub(Element a, Element b) const { return a >= b ? a - b : a + (m_ - b); }
    Element negate(Element v) const { return v == 0 ? 0 : m_ - v; }

    // Solutions q of q + q = v; zero, one or two of them.
    std::vector<Element> halves(Element v) const;

    bool contains(Element v) const { return v < m_; }

    // Real-valued half-modulus used for time scaling (m/2 for odd m too).
    double time_scale_n() const { return static_cast<double>(m_) / 2.0; }

private:
    Element m_;
    std::optional<Element> half_;
};

enum class Role : std::uint8_t { Left = 1, Right = 2 };

struct RoleSet {
    bool left = false;
    bool right = false;

    bool has(Role r) const { return r == Role::Left ? left : right; }
    bool operator==(const RoleSet&) const = default;
};

// One solution class of a + b = c, identified by its unordered left pair.
// lo <= hi always; c is forced.
struct EquationClass {
    Element lo = 0;
    Element hi = 0;
    Element right = 0;
    std::array<Element, 3> vertex_buf{};
    std::uint8_t vertex_count = 0;

    std::span<const Element> vertices() const { return {vertex_buf.data(), vertex_count}; }
    bool contains(Element v) const;
    RoleSet roles_of(Element v) const;

    // Equality is on the left pair only.
    bool operator==(const EquationClass& o) const { return lo == o.lo && hi == o.hi; }
};

EquationClass canonical_class(Element a, Element b, const RingContext& ctx);

// All m(m+1)/2 classes, sorted by (min(a,b), max(a,b)).
std::vector<EquationClass> enumerate_classes(const RingContext& ctx);

struct ClassIncidence {
    EquationClass cls;
    RoleSet roles;
};

// Every class whose vertex set contains v, in canonical order.
std::vector<ClassIncidence> classes_through(Element v, const RingContext& ctx);

inline Element negate(Element v, const RingContext& ctx) { return ctx.negate(v); }

// Membership-vector form of the predicate: no class has its vertex set in S.
bool is_sum_free_mask(std::span<const std::uint8_t> in_set, const RingContext& ctx);

}  // namespace sumfree
