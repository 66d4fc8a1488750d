#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "sumfree/process.hpp"

namespace sumfree {

// Quantities with a deterministic trajectory. Natural logarithms throughout.
enum class Tracked { Q, E2, E3, D3L, D3R, D2L, D2R, D3R0, D2R0, D1R0 };

// Error-envelope families; each owns a pair (f, g) with g = f - width.
enum class EnvelopeId { D2, D2_0, D3, D3_0, E2, E3, Q, D1_0 };

Tracked parse_tracked(std::string_view name);
EnvelopeId parse_envelope(std::string_view name);
std::string_view name_of(Tracked v);
std::string_view name_of(EnvelopeId e);

// exp(-3t^2/4); throws DomainError for t < 0.
double p_of_t(double t);
double t_of_step(std::uint64_t step, double n);

// Heuristic trajectory of v at scaled time t.
double predict(Tracked v, double n, double t);

struct EnvelopePair {
    double f = 0.0;
    double g = 0.0;
};

EnvelopePair envelope(EnvelopeId id, double n, double t);
// Analytic d f / d t, using dp/dt = -(3/2) t p.
double envelope_derivative(EnvelopeId id, double n, double t);
// n^{-1/4} ln^3 n (2 + 2t + 2t^2) p^{-5/3}; the g of the D1_0 family.
double h_d1_0(double n, double t);

// Envelope family and multiplier (1 or 2) a tracked variable is bounded by.
struct EnvelopeBinding {
    EnvelopeId id;
    double multiplier;
};
EnvelopeBinding binding_of(Tracked v);

// The value a variable is compared against. E2 and E3 are compared with
// Q-relative trackers and need the observed Q.
double center_of(Tracked v, double n, double t, std::optional<double> observed_q = std::nullopt);

enum class Side { Upper, Lower };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Upper: [center + k g, center + k f]; lower mirrors it below the center.
Interval critical_interval(Tracked v, Side side, double n, double t,
                           std::optional<double> observed_q = std::nullopt);

// (value - center) / (k f).
double normalized_deviation(Tracked v, double value, double n, double t,
                            std::optional<double> observed_q = std::nullopt);

// round(c sqrt(n) sqrt(ln n)).
std::uint64_t horizon(double n, double c);

// (1/sqrt 3)(1 - 20 lnln n / ln n) sqrt(n ln n); throws
// AsymptoticHorizonUndefined when the correction factor is not positive.
double i0_asymptotic(double n);

// sqrt(ln n / 3).
double t_max_for(double n);

// ---------------------------------------------------------------------------
// Symbolic family n^a (ln n)^b p^c P(t), closed under products and d/dt.

using Exponent = boost::rational<int>;

class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial monomial(double coeff, int degree);

    double operator()(double t) const;
    Polynomial derivative() const;
    std::size_t size() const { return c_.size(); }
    double coeff(std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }
    const std::vector<double>& coeffs() const { return c_; }
    std::string to_string() const;

    Polynomial& operator+=(const Polynomial& o);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a += b * -1.0; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(Polynomial a, double s);

private:
    void trim();
    std::vector<double> c_;
};

struct PowerTerm {
    Exponent n_exp{0};
    int log_exp = 0;
    Exponent p_exp{0};
    Polynomial poly;

    double prefactor(double n, double t) const;
    double operator()(double n, double t) const { return prefactor(n, t) * poly(t); }
    PowerTerm derivative() const;
    bool same_prefactor(const PowerTerm& o) const {
        return n_exp == o.n_exp && log_exp == o.log_exp && p_exp == o.p_exp;
    }
};

PowerTerm operator*(const PowerTerm& a, const PowerTerm& b);
PowerTerm operator*(PowerTerm a, double s);

// Sum of PowerTerms; terms sharing a prefactor are merged.
class Expression {
public:
    Expression() = default;
    Expression(PowerTerm t) { add(std::move(t)); }

    void add(PowerTerm t);
    double operator()(double n, double t) const;
    Expression derivative() const;
    const std::vector<PowerTerm>& terms() const { return terms_; }

    Expression& operator+=(const Expression& o);
    friend Expression operator+(Expression a, const Expression& b) { return a += b; }
    friend Expression operator-(Expression a, const Expression& b) { return a += b * -1.0; }
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator*(Expression a, double s);

private:
    std::vector<PowerTerm> terms_;
};

// Building blocks: n^a, t^k, p^c.
PowerTerm n_pow(Exponent a);
PowerTerm t_pow(int k, double coeff = 1.0);
PowerTerm p_pow(Exponent c);

Expression envelope_f(EnvelopeId id);
Expression envelope_width(EnvelopeId id);
inline Expression envelope_g(EnvelopeId id) { return envelope_f(id) - envelope_width(id); }

// ---------------------------------------------------------------------------
// Variation inequalities lhs(n, t) <= rhs(n, t).

enum class VariationId { D2, D2R, D3, D3R, E2, E3, Q, C0 };

inline constexpr VariationId kAllVariations[] = {VariationId::D2, VariationId::D2R,
                                                 VariationId::D3, VariationId::D3R,
                                                 VariationId::E2, VariationId::E3,
                                                 VariationId::Q,  VariationId::C0};

std::string_view name_of(VariationId id);
VariationId parse_variation(std::string_view name);

Expression variation_lhs(VariationId id);
Expression variation_rhs(VariationId id);

// Same inequality evaluated directly from envelope() and
// envelope_derivative(); independent of the symbolic route.
double variation_lhs_numeric(VariationId id, double n, double t);
double variation_rhs_numeric(VariationId id, double n, double t);

struct VariationReport {
    VariationId id = VariationId::D2;
    bool holds = false;
    double margin_min = 0.0;  // min over the grid of (rhs - lhs) / |rhs|
    double t_at_margin_min = 0.0;
    PowerTerm prefactor;            // common n / ln n / p powers; poly is 1
    Polynomial reduced_polynomial;  // lhs / prefactor
    Polynomial rhs_polynomial;      // rhs / prefactor
    double max_route_disagreement = 0.0;  // relative, symbolic vs numeric
    std::size_t grid_points = 0;
};

VariationReport check_variation(VariationId id, double n, std::span<const double> t_grid);
std::vector<double> uniform_grid(double t_max, double step);

// Smallest n in {3, 4, ...} up to n_cap for which the inequality holds on
// [0, t_max(n)] with the given grid step; nullopt when none does.
std::optional<std::uint64_t> minimal_n_holding(VariationId id, double grid_step,
                                               std::uint64_t n_cap = 1000);

// ---------------------------------------------------------------------------

// First recorded step at which a stopping-list bound fails, or nullopt.
// Needs a FULL_LEDGER run; absent snapshot fields are not checked.
std::optional<std::uint64_t> stopping_time_T(const RunRecord& run, double n);

}  // namespace sumfree
