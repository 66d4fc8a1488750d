#include "sumfree/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sumfree/errors.hpp"

namespace sumfree {

namespace {

constexpr std::array<std::pair<Tracked, std::string_view>, 10> kTrackedNames{{
    {Tracked::Q, "Q"},       {Tracked::E2, "E2"},     {Tracked::E3, "E3"},
    {Tracked::D3L, "D3L"},   {Tracked::D3R, "D3R"},   {Tracked::D2L, "D2L"},
    {Tracked::D2R, "D2R"},   {Tracked::D3R0, "D3R0"}, {Tracked::D2R0, "D2R0"},
    {Tracked::D1R0, "D1R0"},
}};

constexpr std::array<std::pair<EnvelopeId, std::string_view>, 8> kEnvelopeNames{{
    {EnvelopeId::D2, "d2"}, {EnvelopeId::D2_0, "d2_0"}, {EnvelopeId::D3, "d3"},
    {EnvelopeId::D3_0, "d3_0"}, {EnvelopeId::E2, "e2"}, {EnvelopeId::E3, "e3"},
    {EnvelopeId::Q, "q"}, {EnvelopeId::D1_0, "d1_0"},
}};

constexpr std::array<std::pair<VariationId, std::string_view>, 8> kVariationNames{{
    {VariationId::D2, "VE_d2"}, {VariationId::D2R, "VE_d2r"}, {VariationId::D3, "VE_d3"},
    {VariationId::D3R, "VE_d3r"}, {VariationId::E2, "VE_e2"}, {VariationId::E3, "VE_e3"},
    {VariationId::Q, "VE_q"}, {VariationId::C0, "VE_c0"},
}};

template <typename Table, typename Key>
std::string_view lookup_name(const Table& table, Key key) {
    for (const auto& [k, name] : table) {
        if (k == key) return name;
    }
    throw UnknownVariable("unnamed identifier");
}

template <typename Table>
auto lookup_key(const Table& table, std::string_view name) {
    for (const auto& [k, n] : table) {
        if (n == name) return k;
    }
    throw UnknownVariable("unknown variable '" + std::string(name) + "'");
}

double check_n(double n) {
    if (!(n >= 3.0)) throw DomainError("n must be at least 3");
    return n;
}

// ---- numeric route --------------------------------------------------------

// One family member A n^a L^b p^c P(t), evaluated in plain doubles.
struct NumericShape {
    double n_exp;
    int log_exp;
    double p_exp;
    std::vector<double> poly;
};

double horner(const std::vector<double>& c, double t) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * t + *it;
    return r;
}

double horner_derivative(const std::vector<double>& c, double t) {
    double r = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) r = r * t + static_cast<double>(k) * c[k];
    return r;
}

double shape_value(const NumericShape& s, double n, double t) {
    return std::pow(n, s.n_exp) * std::pow(std::log(n), s.log_exp) *
           std::pow(p_of_t(t), s.p_exp) * horner(s.poly, t);
}

double shape_derivative(const NumericShape& s, double n, double t) {
    const double pre = std::pow(n, s.n_exp) * std::pow(std::log(n), s.log_exp) *
                       std::pow(p_of_t(t), s.p_exp);
    return pre * (horner_derivative(s.poly, t) - 1.5 * s.p_exp * t * horner(s.poly, t));
}

NumericShape f_shape(EnvelopeId id) {
    switch (id) {
        case EnvelopeId::D2: return {0.25, 3, 0.0, {1, 3, 2, 3}};
        case EnvelopeId::D2_0: return {0.25, 3, -2.0 / 3.0, {1, 2, 2, 2}};
        case EnvelopeId::D3: return {0.75, 3, 1.0, {1, 4, 7}};
        case EnvelopeId::D3_0: return {0.75, 3, 1.0 / 3.0, {1, 3, 5}};
        case EnvelopeId::E2: return {1.0, 6, 0.0, {1, 20, 70, 130, 100, 120}};
        case EnvelopeId::E3: return {1.5, 6, 1.0, {1, 20, 70, 160, 150}};
        case EnvelopeId::Q: return {0.5, 6, -1.0, {1, 2, 10, 35, 40}};
        case EnvelopeId::D1_0: return {-0.25, 3, -5.0 / 3.0, {2, 2, 2}};
    }
    throw UnknownVariable("unknown envelope");
}

// f - g; for D1_0 the second summand of f.
NumericShape width_shape(EnvelopeId id) {
    NumericShape s = f_shape(id);
    if (id == EnvelopeId::D1_0) return {0.0, 1, -1.0 / 3.0, {1}};
    s.poly = {1};
    return s;
}

}  // namespace

Tracked parse_tracked(std::string_view name) { return lookup_key(kTrackedNames, name); }
EnvelopeId parse_envelope(std::string_view name) { return lookup_key(kEnvelopeNames, name); }
VariationId parse_variation(std::string_view name) { return lookup_key(kVariationNames, name); }
std::string_view name_of(Tracked v) { return lookup_name(kTrackedNames, v); }
std::string_view name_of(EnvelopeId e) { return lookup_name(kEnvelopeNames, e); }
std::string_view name_of(VariationId id) { return lookup_name(kVariationNames, id); }

double p_of_t(double t) {
    if (t < 0.0 || std::isnan(t)) throw DomainError("t must be nonnegative");
    return std::exp(-0.75 * t * t);
}

double t_of_step(std::uint64_t step, double n) { return static_cast<double>(step) / std::sqrt(n); }

double predict(Tracked v, double n, double t) {
    const double p = p_of_t(t);
    const double rn = std::sqrt(n);
    switch (v) {
        case Tracked::Q: return 2.0 * n * p;
        case Tracked::E3: return 2.0 * n * n * p * p * p;
        case Tracked::E2: return 3.0 * n * rn * t * p * p;
        case Tracked::D3L: return 2.0 * n * p * p;
        case Tracked::D3R: return n * p * p;
        case Tracked::D2L: return 2.0 * rn * t * p;
        case Tracked::D2R: return rn * t * p;
        case Tracked::D3R0: return n * std::pow(p, 4.0 / 3.0);
        case Tracked::D2R0: return rn * t * std::cbrt(p);
        case Tracked::D1R0: return 0.5 * (std::pow(p, -2.0 / 3.0) - 1.0);
    }
    throw UnknownVariable("unknown tracked variable");
}

double h_d1_0(double n, double t) {
    check_n(n);
    return shape_value(f_shape(EnvelopeId::D1_0), n, t);
}

EnvelopePair envelope(EnvelopeId id, double n, double t) {
    check_n(n);
    const double width = shape_value(width_shape(id), n, t);
    if (id == EnvelopeId::D1_0) {
        const double h = h_d1_0(n, t);
        return {h + width, h};
    }
    const double f = shape_value(f_shape(id), n, t);
    return {f, f - width};
}

double envelope_derivative(EnvelopeId id, double n, double t) {
    check_n(n);
    double d = shape_derivative(f_shape(id), n, t);
    if (id == EnvelopeId::D1_0) d += shape_derivative(width_shape(id), n, t);
    return d;
}

EnvelopeBinding binding_of(Tracked v) {
    switch (v) {
        case Tracked::Q: return {EnvelopeId::Q, 1.0};
        case Tracked::E2: return {EnvelopeId::E2, 1.0};
        case Tracked::E3: return {EnvelopeId::E3, 1.0};
        case Tracked::D3L: return {EnvelopeId::D3, 2.0};
        case Tracked::D3R: return {EnvelopeId::D3, 1.0};
        case Tracked::D2L: return {EnvelopeId::D2, 2.0};
        case Tracked::D2R: return {EnvelopeId::D2, 1.0};
        case Tracked::D3R0: return {EnvelopeId::D3_0, 1.0};
        case Tracked::D2R0: return {EnvelopeId::D2_0, 1.0};
        case Tracked::D1R0: return {EnvelopeId::D1_0, 1.0};
    }
    throw UnknownVariable("unknown tracked variable");
}

double center_of(Tracked v, double n, double t, std::optional<double> observed_q) {
    if (v == Tracked::E2 || v == Tracked::E3) {
        if (!observed_q) throw DomainError("E2/E3 trackers need the observed Q");
        const double q = *observed_q;
        return v == Tracked::E2 ? 0.75 * q * q * t / std::sqrt(n) : q * q * q / (4.0 * n);
    }
    return predict(v, n, t);
}

Interval critical_interval(Tracked v, Side side, double n, double t,
                           std::optional<double> observed_q) {
    const double c = center_of(v, n, t, observed_q);
    const auto [id, k] = binding_of(v);
    const auto [f, g] = envelope(id, n, t);
    if (side == Side::Upper) return {c + k * g, c + k * f};
    return {c - k * f, c - k * g};
}

double normalized_deviation(Tracked v, double value, double n, double t,
                            std::optional<double> observed_q) {
    const auto [id, k] = binding_of(v);
    return (value - center_of(v, n, t, observed_q)) / (k * envelope(id, n, t).f);
}

std::uint64_t horizon(double n, double c) {
    check_n(n);
    if (!(c > 0.0)) throw DomainError("horizon coefficient must be positive");
    return static_cast<std::uint64_t>(std::llround(c * std::sqrt(n) * std::sqrt(std::log(n))));
}

double i0_asymptotic(double n) {
    check_n(n);
    const double ln = std::log(n);
    const double factor = 1.0 - 20.0 * std::log(ln) / ln;
    if (!(ln > 1.0) || !(factor > 0.0)) {
        throw AsymptoticHorizonUndefined("20 lnln n >= ln n; i0 is not defined for this n");
    }
    return factor * std::sqrt(n) * std::sqrt(ln) / std::sqrt(3.0);
}

double t_max_for(double n) { return std::sqrt(std::log(check_n(n)) / 3.0); }

// ---- symbolic family ------------------------------------------------------

Polynomial Polynomial::monomial(double coeff, int degree) {
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
}

void Polynomial::trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

double Polynomial::operator()(double t) const { return horner(c_, t); }

Polynomial Polynomial::derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial(std::move(d));
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
    trim();
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.c_.empty() || b.c_.empty()) return {};
    std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(r));
}

Polynomial operator*(Polynomial a, double s) {
    for (auto& x : a.c_) x *= s;
    a.trim();
    return a;
}

std::string Polynomial::to_string() const {
    if (c_.empty()) return "0";
    std::ostringstream os;
    os.precision(12);
    bool first = true;
    for (std::size_t k = 0; k < c_.size(); ++k) {
        const double x = c_[k];
        if (x == 0.0) continue;
        if (first) {
            os << x;
            first = false;
        } else {
            os << (x < 0 ? " - " : " + ") << std::abs(x);
        }
        if (k == 1) os << "t";
        if (k > 1) os << "t^" << k;
    }
    return os.str();
}

double PowerTerm::prefactor(double n, double t) const {
    auto as_double = [](Exponent e) {
        return static_cast<double>(e.numerator()) / static_cast<double>(e.denominator());
    };
    return std::pow(n, as_double(n_exp)) * std::pow(std::log(n), log_exp) *
           std::pow(p_of_t(t), as_double(p_exp));
}

PowerTerm PowerTerm::derivative() const {
    // d/dt [p^c P] = p^c (P' - (3/2) c t P)
    PowerTerm d = *this;
    const double c = static_cast<double>(p_exp.numerator()) / p_exp.denominator();
    d.poly = poly.derivative() + Polynomial::monomial(-1.5 * c, 1) * poly;
    return d;
}

PowerTerm operator*(const PowerTerm& a, const PowerTerm& b) {
    return PowerTerm{a.n_exp + b.n_exp, a.log_exp + b.log_exp, a.p_exp + b.p_exp, a.poly * b.poly};
}

PowerTerm operator*(PowerTerm a, double s) {
    a.poly = a.poly * s;
    return a;
}

void Expression::add(PowerTerm t) {
    for (auto& existing : terms_) {
        if (existing.same_prefactor(t)) {
            existing.poly += t.poly;
            std::erase_if(terms_, [](const PowerTerm& x) { return x.poly.size() == 0; });
            return;
        }
    }
    if (t.poly.size() != 0) terms_.push_back(std::move(t));
}

double Expression::operator()(double n, double t) const {
    double s = 0.0;
    for (const auto& term : terms_) s += term(n, t);
    return s;
}

Expression Expression::derivative() const {
    Expression d;
    for (const auto& term : terms_) d.add(term.derivative());
    return d;
}

Expression& Expression::operator+=(const Expression& o) {
    for (const auto& t : o.terms_) add(t);
    return *this;
}

Expression operator*(const Expression& a, const Expression& b) {
    Expression r;
    for (const auto& x : a.terms_)
        for (const auto& y : b.terms_) r.add(x * y);
    return r;
}

Expression operator*(Expression a, double s) {
    for (auto& t : a.terms_) t = t * s;
    return a;
}

PowerTerm n_pow(Exponent a) { return PowerTerm{a, 0, Exponent{0}, Polynomial{1}}; }
PowerTerm t_pow(int k, double coeff) {
    return PowerTerm{Exponent{0}, 0, Exponent{0}, Polynomial::monomial(coeff, k)};
}
PowerTerm p_pow(Exponent c) { return PowerTerm{Exponent{0}, 0, c, Polynomial{1}}; }

namespace {

PowerTerm term(Exponent n_exp, int log_exp, Exponent p_exp, Polynomial poly) {
    return PowerTerm{n_exp, log_exp, p_exp, std::move(poly)};
}

using E = Exponent;

}  // namespace

Expression envelope_f(EnvelopeId id) {
    switch (id) {
        case EnvelopeId::D2: return term(E(1, 4), 3, E(0), {1, 3, 2, 3});
        case EnvelopeId::D2_0: return term(E(1, 4), 3, E(-2, 3), {1, 2, 2, 2});
        case EnvelopeId::D3: return term(E(3, 4), 3, E(1), {1, 4, 7});
        case EnvelopeId::D3_0: return term(E(3, 4), 3, E(1, 3), {1, 3, 5});
        case EnvelopeId::E2: return term(E(1), 6, E(0), {1, 20, 70, 130, 100, 120});
        case EnvelopeId::E3: return term(E(3, 2), 6, E(1), {1, 20, 70, 160, 150});
        case EnvelopeId::Q: return term(E(1, 2), 6, E(-1), {1, 2, 10, 35, 40});
        case EnvelopeId::D1_0: {
            Expression f = term(E(-1, 4), 3, E(-5, 3), {2, 2, 2});
            f.add(term(E(0), 1, E(-1, 3), {1}));
            return f;
        }
    }
    throw UnknownVariable("unknown envelope");
}

Expression envelope_width(EnvelopeId id) {
    switch (id) {
        case EnvelopeId::D2: return term(E(1, 4), 3, E(0), {1});
        case EnvelopeId::D2_0: return term(E(1, 4), 3, E(-2, 3), {1});
        case EnvelopeId::D3: return term(E(3, 4), 3, E(1), {1});
        case EnvelopeId::D3_0: return term(E(3, 4), 3, E(1, 3), {1});
        case EnvelopeId::E2: return term(E(1), 6, E(0), {1});
        case EnvelopeId::E3: return term(E(3, 2), 6, E(1), {1});
        case EnvelopeId::Q: return term(E(1, 2), 6, E(-1), {1});
        case EnvelopeId::D1_0: return term(E(0), 1, E(-1, 3), {1});
    }
    throw UnknownVariable("unknown envelope");
}

Expression variation_lhs(VariationId id) {
    using I = EnvelopeId;
    const Expression f_d2 = envelope_f(I::D2);
    const Expression f_d3 = envelope_f(I::D3);
    auto sc = [](Exponent n_exp, int t_deg, double coeff, Exponent p_exp = Exponent{0}) {
        return Expression(PowerTerm{n_exp, 0, p_exp, Polynomial::monomial(coeff, t_deg)});
    };
    switch (id) {
        case VariationId::D2:
            return sc(E(-1), 0, 2.0, E(-1)) * f_d3 + sc(E(-1, 2), 1, 3.0) * envelope_width(I::D2) +
                   sc(E(-1, 2), 0, -2.0) * f_d2.derivative();
        case VariationId::D2R:
            return sc(E(-1, 2), 1, -0.5) * envelope_g(I::D2_0) +
                   sc(E(-1), 0, 1.0, E(-1)) * envelope_f(I::D3_0) +
                   sc(E(-1, 2), 1, 0.5, E(-2, 3)) * f_d2 +
                   sc(E(-1, 2), 0, -1.0) * envelope_f(I::D2_0).derivative();
        case VariationId::D3:
            return sc(E(-1, 2), 1, -6.0) * envelope_g(I::D3) + sc(E(0), 0, 6.0, E(1)) * f_d2 +
                   sc(E(-1, 2), 0, -2.0) * f_d3.derivative();
        case VariationId::D3R:
            return sc(E(-1, 2), 1, -2.0) * envelope_g(I::D3_0) +
                   sc(E(0), 0, 2.0, E(1, 3)) * f_d2 +
                   sc(E(-1, 2), 0, -1.0) * envelope_f(I::D3_0).derivative();
        case VariationId::E2:
            return sc(E(-1), 0, 1.5, E(-1)) * envelope_f(I::E3) +
                   sc(E(-1, 2), 1, -3.0) * envelope_g(I::E2) + f_d2 * f_d2 * 18.0 +
                   sc(E(-1, 2), 0, -1.0) * envelope_f(I::E2).derivative();
        case VariationId::E3:
            return sc(E(-1, 2), 1, -4.5) * envelope_g(I::E3) + f_d2 * f_d3 * 18.0 +
                   sc(E(-1, 2), 0, -1.0) * envelope_f(I::E3).derivative();
        case VariationId::Q:
            return sc(E(-1), 0, 1.0, E(-1)) * envelope_f(I::E2) +
                   sc(E(-1, 2), 1, -1.5) * envelope_g(I::Q) +
                   sc(E(-1, 2), 0, -1.0) * envelope_f(I::Q).derivative();
        case VariationId::C0:
            return sc(E(-1), 0, 0.5, E(-1)) * envelope_f(I::D2_0) +
                   sc(E(-1, 2), 0, -1.0) * envelope_g(I::D1_0).derivative();
    }
    throw UnknownVariable("unknown variation inequality");
}

Expression variation_rhs(VariationId id) {
    switch (id) {
        case VariationId::D2: return term(E(-1, 4), 3, E(0), {-1});
        case VariationId::D2R: return term(E(-1, 4), 3, E(-2, 3), {-1});
        case VariationId::D3: return term(E(1, 4), 3, E(1), {-2});
        case VariationId::D3R: return term(E(1, 4), 3, E(1, 3), {-1});
        case VariationId::E2: return term(E(1, 2), 6, E(0), {-0.5});
        case VariationId::E3: return term(E(1), 6, E(1), {-2});
        case VariationId::Q: return term(E(0), 6, E(-1), {-1});
        case VariationId::C0: return term(E(-3, 4), 3, E(-5, 3), {-1.5});
    }
    throw UnknownVariable("unknown variation inequality");
}

double variation_lhs_numeric(VariationId id, double n, double t) {
    using I = EnvelopeId;
    const double rn = std::sqrt(n);
    const double p = p_of_t(t);
    auto f = [&](I e) { return envelope(e, n, t).f; };
    auto g = [&](I e) { return envelope(e, n, t).g; };
    auto df = [&](I e) { return envelope_derivative(e, n, t); };
    switch (id) {
        case VariationId::D2:
            return 2.0 / (n * p) * f(I::D3) + 3.0 / rn * t * (f(I::D2) - g(I::D2)) -
                   2.0 / rn * df(I::D2);
        case VariationId::D2R:
            return -0.5 / rn * t * g(I::D2_0) + f(I::D3_0) / (n * p) +
                   0.5 / rn * t * std::pow(p, -2.0 / 3.0) * f(I::D2) - df(I::D2_0) / rn;
        case VariationId::D3:
            return -6.0 / rn * t * g(I::D3) + 6.0 * p * f(I::D2) - 2.0 / rn * df(I::D3);
        case VariationId::D3R:
            return -2.0 / rn * t * g(I::D3_0) + 2.0 * std::cbrt(p) * f(I::D2) - df(I::D3_0) / rn;
        case VariationId::E2:
            return 1.5 * f(I::E3) / (n * p) - 3.0 * t / rn * g(I::E2) +
                   18.0 * f(I::D2) * f(I::D2) - df(I::E2) / rn;
        case VariationId::E3:
            return -4.5 / rn * t * g(I::E3) + 18.0 * f(I::D2) * f(I::D3) - df(I::E3) / rn;
        case VariationId::Q:
            return f(I::E2) / (n * p) - 1.5 / rn * t * g(I::Q) - df(I::Q) / rn;
        case VariationId::C0: {
            // derivative of h alone: the first summand of f_{d1,0}
            const double dh = envelope_derivative(I::D1_0, n, t) -
                              shape_derivative(width_shape(I::D1_0), n, t);
            return 0.5 * f(I::D2_0) / (n * p) - dh / rn;
        }
    }
    throw UnknownVariable("unknown variation inequality");
}

double variation_rhs_numeric(VariationId id, double n, double t) {
    const double l = std::log(n);
    const double p = p_of_t(t);
    const double l3 = l * l * l, l6 = l3 * l3;
    switch (id) {
        case VariationId::D2: return -std::pow(n, -0.25) * l3;
        case VariationId::D2R: return -std::pow(p, -2.0 / 3.0) * std::pow(n, -0.25) * l3;
        case VariationId::D3: return -2.0 * p * std::pow(n, 0.25) * l3;
        case VariationId::D3R: return -std::cbrt(p) * std::pow(n, 0.25) * l3;
        case VariationId::E2: return -0.5 * std::sqrt(n) * l6;
        case VariationId::E3: return -2.0 * p * n * l6;
        case VariationId::Q: return -l6 / p;
        case VariationId::C0: return -1.5 * std::pow(n, -0.75) * l3 * std::pow(p, -5.0 / 3.0);
    }
    throw UnknownVariable("unknown variation inequality");
}

std::vector<double> uniform_grid(double t_max, double step) {
    if (!(step > 0.0) || t_max < 0.0) throw DomainError("grid needs step > 0 and t_max >= 0");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor(t_max / step + 1e-9));
    grid.reserve(count + 2);
    for (std::size_t k = 0; k <= count; ++k) grid.push_back(static_cast<double>(k) * step);
    if (grid.back() < t_max) grid.push_back(t_max);
    return grid;
}

VariationReport check_variation(VariationId id, double n, std::span<const double> t_grid) {
    check_n(n);
    const Expression lhs = variation_lhs(id);
    const Expression rhs = variation_rhs(id);
    if (lhs.terms().size() != 1 || rhs.terms().size() != 1 ||
        !lhs.terms()[0].same_prefactor(rhs.terms()[0])) {
        throw std::logic_error("variation inequality does not reduce to a single prefactor");
    }
    VariationReport rep;
    rep.id = id;
    rep.prefactor = lhs.terms()[0];
    rep.prefactor.poly = Polynomial{1};
    rep.reduced_polynomial = lhs.terms()[0].poly;
    rep.rhs_polynomial = rhs.terms()[0].poly;
    rep.grid_points = t_grid.size();
    rep.holds = true;
    rep.margin_min = std::numeric_limits<double>::infinity();
    // Equality at t = 0 is allowed; tolerate rounding in the numeric route.
    constexpr double kRelTol = 1e-12;
    for (double t : t_grid) {
        const double l = variation_lhs_numeric(id, n, t);
        const double r = variation_rhs_numeric(id, n, t);
        const double margin = (r - l) / std::abs(r);
        if (margin < rep.margin_min) {
            rep.margin_min = margin;
            rep.t_at_margin_min = t;
        }
        if (margin < -kRelTol) rep.holds = false;
        const double sym = lhs(n, t);
        const double scale = std::max(std::abs(l), std::abs(r));
        rep.max_route_disagreement = std::max(rep.max_route_disagreement, std::abs(sym - l) / scale);
    }
    return rep;
}

std::optional<std::uint64_t> minimal_n_holding(VariationId id, double grid_step,
                                               std::uint64_t n_cap) {
    for (std::uint64_t n = 3; n <= n_cap; ++n) {
        const auto nd = static_cast<double>(n);
        const auto grid = uniform_grid(t_max_for(nd), grid_step);
        if (check_variation(id, nd, grid).holds) return n;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

std::optional<std::uint64_t> stopping_time_T(const RunRecord& run, double n) {
    if (run.mode != Mode::FullLedger) {
        throw ModeUnsupported("stopping time needs a FULL_LEDGER run");
    }
    check_n(n);
    std::optional<double> i0;
    try {
        i0 = i0_asymptotic(n);
    } catch (const AsymptoticHorizonUndefined&) {
    }
    const double l = std::log(n);
    const double rn = std::sqrt(n);

    auto within = [](double lo_val, double hi_val, double center, double bound) {
        return std::abs(lo_val - center) <= bound && std::abs(hi_val - center) <= bound;
    };
    for (const auto& s : run.snapshots) {
        if (i0 && static_cast<double>(s.step) > *i0) break;
        const double t = t_of_step(s.step, n);
        const double p = p_of_t(t);
        const double q = static_cast<double>(s.q);
        bool ok = std::abs(q - 2.0 * n * p) <= envelope(EnvelopeId::Q, n, t).f;
        if (s.extremes) {
            const auto& x = *s.extremes;
            const double f3 = envelope(EnvelopeId::D3, n, t).f;
            const double f2 = envelope(EnvelopeId::D2, n, t).f;
            if (x.d3l_any) ok = ok && within(x.d3l_min, x.d3l_max, 2 * n * p * p, 2 * f3);
            if (x.d3r_any) ok = ok && within(x.d3r_min, x.d3r_max, n * p * p, f3);
            if (x.d2l_any) ok = ok && within(x.d2l_min, x.d2l_max, 2 * rn * t * p, 2 * f2);
            if (x.d2r_any) ok = ok && within(x.d2r_min, x.d2r_max, rn * t * p, f2);
        }
        if (s.d3r0) {
            ok = ok && std::abs(*s.d3r0 - predict(Tracked::D3R0, n, t)) <=
                           envelope(EnvelopeId::D3_0, n, t).f;
        }
        if (s.d2r0) {
            ok = ok && std::abs(*s.d2r0 - predict(Tracked::D2R0, n, t)) <=
                           envelope(EnvelopeId::D2_0, n, t).f;
        }
        if (s.e3) {
            ok = ok && std::abs(*s.e3 - center_of(Tracked::E3, n, t, q)) <=
                           envelope(EnvelopeId::E3, n, t).f;
        }
        if (s.e2) {
            ok = ok && std::abs(*s.e2 - center_of(Tracked::E2, n, t, q)) <=
                           envelope(EnvelopeId::E2, n, t).f;
        }
        if (s.max_d1_nonzero) ok = ok && static_cast<double>(*s.max_d1_nonzero) <= l * l;
        ok = ok && std::abs(static_cast<double>(s.d1r0) - predict(Tracked::D1R0, n, t)) <=
                       envelope(EnvelopeId::D1_0, n, t).f;
        if (!ok) return s.step;
    }
    return std::nullopt;
}

}  // namespace sumfree
